"""Image-tree scanning and deterministic preprocessing.

The directory convention is one folder per class under the root:
``root/good/*`` holds normal samples (label 0), every other folder except
``ground_truth`` holds anomalies (label 1), and ``root/ground_truth/<defect>/``
may carry binary masks named ``<stem>_mask.png`` or ``<stem>.png``.

Preprocessing is the fixed evaluation pipeline: resize to 256x256, center-crop
to 224x224, scale to [0, 1], then per-channel ImageNet normalization.  No
augmentation is applied anywhere, so decoding the same file always yields the
same tensor.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from torchvision import transforms

from .errors import ExportConfigError

IMAGENET_MEAN = [0.485, 0.456, 0.406]
IMAGENET_STD = [0.229, 0.224, 0.225]
RESIZE_TO = 256
CROP_TO = 224

_image_tf = transforms.Compose([
    transforms.Resize((RESIZE_TO, RESIZE_TO)),
    transforms.CenterCrop(CROP_TO),
    transforms.ToTensor(),
    transforms.Normalize(IMAGENET_MEAN, IMAGENET_STD),
])


@dataclass(frozen=True)
class Sample:
    path: Path
    label: int
    mask_path: Path | None = None


def scan_tree(root) -> tuple[list[Sample], bool]:
    """Collect samples in sorted directory/file order.

    Returns the sample list and whether a ``ground_truth`` folder exists (which
    decides whether masks are exported at all).
    """
    root = Path(root)
    if not root.is_dir():
        raise ExportConfigError(f"image root {root} is not a directory")
    gt = root / "ground_truth"
    samples = []
    for class_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        if class_dir.name == "ground_truth" or class_dir.name.startswith("."):
            continue
        label = 0 if class_dir.name == "good" else 1
        for f in sorted(p for p in class_dir.iterdir() if p.is_file()):
            mask = _find_mask(gt, class_dir.name, f) if label == 1 else None
            samples.append(Sample(f, label, mask))
    return samples, gt.is_dir()


def _find_mask(gt: Path, class_name: str, image_path: Path):
    stem = image_path.stem
    for cand in (gt / class_name / f"{stem}_mask.png",
                 gt / class_name / f"{stem}.png"):
        if cand.is_file():
            return cand
    return None


def load_image(path):
    """Decode and preprocess one image; raises OSError on corrupt files."""
    with Image.open(path) as img:
        return _image_tf(img.convert("RGB"))


def load_mask(path, size: int = CROP_TO) -> np.ndarray:
    """Binary ground-truth mask aligned with the image preprocessing.

    A missing mask (normal samples, or an anomaly without ground truth) comes
    back as all zeros.  Nearest-neighbor resizing keeps the values binary.
    """
    if path is None:
        return np.zeros((size, size), dtype=np.uint8)
    with Image.open(path) as img:
        m = img.convert("L").resize((RESIZE_TO, RESIZE_TO), Image.NEAREST)
    top = (RESIZE_TO - size) // 2
    arr = np.asarray(m)[top:top + size, top:top + size]
    return (arr > 0).astype(np.uint8)
