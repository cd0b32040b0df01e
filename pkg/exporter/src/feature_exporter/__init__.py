"""Image-to-feature export: pretrained backbones in, FOCC feature files out."""

from .backbones import DEFAULT_BACKBONE, backbone_ids, load_backbone
from .dataset import Sample, load_image, load_mask, scan_tree
from .errors import ExportConfigError, ExportDataError, ExportError
from .export import SHAPE_CONTRACT, TASKS, ExportReport, ExportSpec, export

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_BACKBONE",
    "ExportConfigError",
    "ExportDataError",
    "ExportError",
    "ExportReport",
    "ExportSpec",
    "SHAPE_CONTRACT",
    "Sample",
    "TASKS",
    "backbone_ids",
    "export",
    "load_backbone",
    "load_image",
    "load_mask",
    "scan_tree",
]
