"""Command-line entry point: ``export`` runs a backbone over an image tree."""

import argparse
import sys

from .backbones import backbone_ids
from .errors import ExportConfigError, ExportDataError
from .export import ExportSpec, TASKS, export


def build_parser():
    p = argparse.ArgumentParser(
        prog="feature-exporter",
        description="Export CNN features from an image tree to a FOCC feature file.")
    sub = p.add_subparsers(dest="cmd", required=True)
    e = sub.add_parser("export", help="run a pretrained backbone and write features")
    e.add_argument("--task", choices=list(TASKS), required=True,
                   help="occ pools one vector per image; ads keeps 56x56 maps")
    e.add_argument("--root", required=True,
                   help="image tree: root/good plus one folder per defect")
    e.add_argument("--out", required=True, help="output feature file")
    e.add_argument("--backbone", default=None,
                   help=f"trunk id, default per task; known: {', '.join(backbone_ids())}")
    e.add_argument("--device", default="cpu")
    e.add_argument("--random-weights", action="store_true",
                   help="seeded random trunk instead of ImageNet weights (offline runs, tests)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report = export(ExportSpec(root=args.root, task=args.task, out=args.out,
                                   backbone=args.backbone, device=args.device,
                                   pretrained=not args.random_weights))
    except ExportConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ExportDataError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 5
    print(f"wrote {report.out}: {report.n_exported} samples, {report.n_skipped} skipped")
    return 0


if __name__ == "__main__":
    sys.exit(main())
