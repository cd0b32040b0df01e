"""Hypersphere one-class anomaly detection with a data-agnostic center.

A single affine projector is trained to pull normal feature vectors inside
a small hypersphere around a fixed center vector; anomaly scores are center
distances. The center can be drawn from essentially any distribution, and
only its norm influences detection quality.
"""

from .analysis import (
    FeasibleDomain,
    NormSweepReport,
    cross_cosine_stats,
    distribution_ablation,
    feasible_domain,
    norm_sweep,
    polar_decompose,
)
from .center import (
    Center,
    CenterKind,
    feature_mean_center,
    make_center,
    set_norm,
)
from .errors import (
    ConfigError,
    DataError,
    HyperOCCError,
    NumericError,
    UndefinedAUCError,
    ZeroCenterError,
)
from .estimator import HypersphereDetector
from .focc import (
    FeatureSet,
    ValidationReport,
    read_focc,
    split_by_label,
    validate,
    write_focc,
)
from .metrics import EvalReport, evaluate, roc_auc
from .projector import (
    ProjectorModel,
    adam_step,
    forward,
    forward_grid,
    grad_check,
    init_projector,
    load_model,
    loss,
    loss_grad,
    save_model,
)
from .scoring import (
    ScoreMap,
    decide,
    export_pgm,
    export_smap,
    score_map,
    score_sample,
    upsample_smooth,
)
from .synth import SynthSpec, gen_clusters, reference_tasks
from .training import (
    CollapseStatus,
    TrainConfig,
    TrainTrace,
    collapse_check,
    fit_offline,
    fit_online,
)

__version__ = "0.1.0"

__all__ = [
    "Center",
    "CenterKind",
    "CollapseStatus",
    "ConfigError",
    "DataError",
    "EvalReport",
    "FeasibleDomain",
    "FeatureSet",
    "HyperOCCError",
    "HypersphereDetector",
    "NormSweepReport",
    "NumericError",
    "ProjectorModel",
    "ScoreMap",
    "SynthSpec",
    "TrainConfig",
    "TrainTrace",
    "UndefinedAUCError",
    "ValidationReport",
    "ZeroCenterError",
    "adam_step",
    "collapse_check",
    "cross_cosine_stats",
    "decide",
    "distribution_ablation",
    "evaluate",
    "export_pgm",
    "export_smap",
    "feasible_domain",
    "feature_mean_center",
    "fit_offline",
    "fit_online",
    "forward",
    "forward_grid",
    "gen_clusters",
    "grad_check",
    "init_projector",
    "load_model",
    "loss",
    "loss_grad",
    "make_center",
    "norm_sweep",
    "polar_decompose",
    "read_focc",
    "reference_tasks",
    "roc_auc",
    "save_model",
    "score_map",
    "score_sample",
    "set_norm",
    "split_by_label",
    "upsample_smooth",
    "validate",
    "write_focc",
]
