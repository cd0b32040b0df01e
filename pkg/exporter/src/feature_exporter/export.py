"""Orchestrates one backbone pass over an image tree into one FOCC file."""

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from hyperocc.focc import FeatureSet, validate, write_focc

from . import backbones, dataset
from .errors import ExportConfigError, ExportDataError

TASKS = ("occ", "ads")
# required per-sample (C, H, W) for each task
SHAPE_CONTRACT = {"occ": (2048, 1, 1), "ads": (1792, 56, 56)}
_HEADS = {"occ": backbones.pooled, "ads": backbones.multiscale}


@dataclass(frozen=True)
class ExportSpec:
    root: str
    task: str
    out: str
    backbone: str | None = None  # None picks the task default
    device: str = "cpu"
    pretrained: bool = True      # False gives a seeded random trunk (offline runs, tests)

    def __post_init__(self):
        if self.task not in TASKS:
            raise ExportConfigError(f"unknown task {self.task!r}; expected one of {TASKS}")


@dataclass(frozen=True)
class ExportReport:
    n_exported: int
    n_skipped: int
    out: str


def export(spec: ExportSpec) -> ExportReport:
    """Run the backbone over every readable image and write the feature file.

    Corrupt images are skipped with a warning and counted in the report.
    Inference runs per image in eval mode with no gradients, so repeat runs
    over the same tree produce byte-identical output.
    """
    samples, has_masks = dataset.scan_tree(spec.root)
    backbone_id = spec.backbone or backbones.DEFAULT_BACKBONE[spec.task]
    net = backbones.load_backbone(backbone_id, spec.device, spec.pretrained)
    head = _HEADS[spec.task]

    feats, labels, masks = [], [], []
    skipped = 0
    for s in samples:
        try:
            x = dataset.load_image(s.path)
        except OSError:
            warnings.warn(f"skipping unreadable image {s.path}")
            skipped += 1
            continue
        with torch.no_grad():
            z = head(net, x.unsqueeze(0).to(spec.device))
        feats.append(z.squeeze(0).cpu().numpy().astype(np.float32))
        labels.append(s.label)
        if has_masks:
            masks.append(dataset.load_mask(s.mask_path))
    if not feats:
        raise ExportDataError(f"no readable images under {spec.root}")

    data = np.stack(feats)
    want = SHAPE_CONTRACT[spec.task]
    if data.shape[1:] != want:
        raise ExportDataError(
            f"task {spec.task} requires per-sample shape {want}, got {data.shape[1:]}")
    fs = FeatureSet(
        data=data,
        labels=np.asarray(labels, dtype=np.uint8),
        meta=json.dumps({
            "task": spec.task,
            "backbone": backbone_id,
            "pretrained": spec.pretrained,
            "root": Path(spec.root).name,
            "imagenet_mean": dataset.IMAGENET_MEAN,
            "imagenet_std": dataset.IMAGENET_STD,
            "resize": dataset.RESIZE_TO,
            "crop": dataset.CROP_TO,
            "skipped": skipped,
        }, sort_keys=True),
        masks=np.stack(masks) if masks else None,
    )
    report = validate(fs)
    if not report.ok:
        raise ExportDataError("export violated the feature-file contract: "
                              + "; ".join(i.message for i in report.issues))
    write_focc(spec.out, fs)
    return ExportReport(len(feats), skipped, str(spec.out))
