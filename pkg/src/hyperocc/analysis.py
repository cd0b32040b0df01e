"""Polar diagnostics: radius/angle decomposition, cross-class cosines,
center-norm sweeps, feasible norm domains, and the center-distribution
ablation.

These tools quantify the geometry behind the detector: how far apart the
classes sit in angle before and after projection, and over which center
norms the detector keeps working.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .center import Center, CenterKind, feature_mean_center, make_center, set_norm
from .errors import ConfigError, DataError, ZeroCenterError
from .focc import FeatureSet, split_by_label
from .metrics import evaluate
from .projector import init_projector
from .rng import SplitMix64
from .training import TrainConfig, fit_offline

MAX_EXACT_PAIRS = 1_000_000


def _center_vector(center) -> np.ndarray:
    vec = center.vector if isinstance(center, Center) else np.asarray(center)
    vec = vec.astype(np.float64)
    if np.linalg.norm(vec) == 0.0:
        raise ZeroCenterError("polar decomposition needs a nonzero center")
    return vec


def polar_decompose(z: np.ndarray, center) -> tuple:
    """(r, cos_theta) of a projected vector relative to the center
    direction. The zero vector decomposes to (0, 0) by convention.
    """
    cvec = _center_vector(center)
    z = np.asarray(z, dtype=np.float64)
    r = float(np.linalg.norm(z))
    if r == 0.0:
        return 0.0, 0.0
    cos = float(np.dot(z, cvec) / (r * np.linalg.norm(cvec)))
    return r, float(np.clip(cos, -1.0, 1.0))


def _pooled_rows(x) -> np.ndarray:
    """FeatureSet -> (n, C) by mean-pooling grid locations; arrays pass
    through as 2-D float64."""
    if isinstance(x, FeatureSet):
        return x.data.astype(np.float64).mean(axis=(2, 3))
    rows = np.asarray(x, dtype=np.float64)
    if rows.ndim != 2:
        raise DataError(f"expected (n, dim) vectors, got shape {rows.shape}")
    return rows


def _drop_zero_rows(rows: np.ndarray, side: str) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=1)
    zero = norms == 0.0
    if zero.any():
        warnings.warn(
            f"cross_cosine_stats: skipped {int(zero.sum())} zero vectors in {side}",
            RuntimeWarning,
        )
    return rows[~zero]


def cross_cosine_stats(normals, anomalies, max_pairs: int = MAX_EXACT_PAIRS,
                       seed: int = 1024) -> float:
    """Mean cosine over normal x anomaly pairs.

    Grid features are mean-pooled per sample first. All pairs are used
    when there are at most ``max_pairs``; beyond that a seeded subsample
    of exactly ``max_pairs`` pairs is drawn.
    """
    a = _drop_zero_rows(_pooled_rows(normals), "normals")
    b = _drop_zero_rows(_pooled_rows(anomalies), "anomalies")
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise DataError("cross_cosine_stats needs nonempty sides")
    a = a / np.linalg.norm(a, axis=1, keepdims=True)
    b = b / np.linalg.norm(b, axis=1, keepdims=True)
    n_pairs = a.shape[0] * b.shape[0]
    if n_pairs <= max_pairs:
        return float(np.mean(a @ b.T, dtype=np.float64))
    rng = SplitMix64(seed)
    ia = (rng.raw(max_pairs) % np.uint64(a.shape[0])).astype(np.int64)
    ib = (rng.raw(max_pairs) % np.uint64(b.shape[0])).astype(np.int64)
    return float(np.mean(np.sum(a[ia] * b[ib], axis=1), dtype=np.float64))


@dataclass(frozen=True)
class SweepRow:
    norm: float
    image_auc: float
    cross_cos_projected: float
    anom_cos_to_center: float


@dataclass
class NormSweepReport:
    rows: list
    base_cross_cosine: float = float("nan")

    CSV_COLUMNS = "norm,image_auc,cross_cos_projected,anom_cos_to_center"

    def to_csv(self) -> str:
        lines = [self.CSV_COLUMNS]
        for r in self.rows:
            lines.append(
                f"{r.norm:g},{r.image_auc:.17g},"
                f"{r.cross_cos_projected:.17g},{r.anom_cos_to_center:.17g}"
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_auc_rows(cls, pairs):
        """Build a report from bare (norm, auc) pairs (angular columns NaN)."""
        rows = [SweepRow(float(n), float(a), float("nan"), float("nan"))
                for n, a in pairs]
        return cls(rows=sorted(rows, key=lambda r: r.norm))


def _projected_rows(model, rows: np.ndarray) -> np.ndarray:
    """Project pooled (n, C) rows; pooling and projection commute for an
    affine map, so this equals pooling the projected grid."""
    z = np.einsum("oc,nc->no", model.weight.astype(np.float64), rows,
                  optimize=False)
    return z + model.bias.astype(np.float64)


def norm_sweep(train: FeatureSet, test: FeatureSet, norms, cfg: TrainConfig,
               center_template: Center) -> NormSweepReport:
    """Retrain from the identical init at each center norm and record the
    AUC plus angular statistics. Rows come back sorted by norm.
    """
    if not norms:
        raise ConfigError("norm_sweep needs at least one norm")
    test_norm, test_anom = split_by_label(test)
    base = cross_cosine_stats(test_norm, test_anom)
    rows = []
    for norm in sorted(float(v) for v in norms):
        rows.append(_sweep_one(train, test, norm, cfg, center_template))
    return NormSweepReport(rows=rows, base_cross_cosine=base)


def _sweep_one(train, test, norm, cfg, center_template) -> SweepRow:
    center = set_norm(center_template, norm)
    model = init_projector(train.channels, center.dim, seed=cfg.seed)
    fit_offline(model, train, center, cfg)
    report = evaluate(model, test, center, cfg.radius)

    pooled = _pooled_rows(test)
    z = _projected_rows(model, pooled)
    z_norm = z[test.labels == 0]
    z_anom = z[test.labels == 1]
    cross = cross_cosine_stats(z_norm, z_anom)
    cos_vals = [polar_decompose(v, center)[1] for v in z_anom]
    return SweepRow(
        norm=float(norm),
        image_auc=report.image_auc,
        cross_cos_projected=cross,
        anom_cos_to_center=float(np.mean(cos_vals)),
    )


@dataclass(frozen=True)
class FeasibleDomain:
    """Norm interval [lo, hi] or [lo, hi) over which AUC stays above the
    threshold; ``empty`` when even the smallest norm fails."""

    lo: float | None
    hi: float | None
    hi_open: bool
    empty: bool

    def __str__(self):
        if self.empty:
            return "empty"
        close = ")" if self.hi_open else "]"
        return f"[{self.lo:g}, {self.hi:g}{close}"


def feasible_domain(report: NormSweepReport, auc_threshold: float) -> FeasibleDomain:
    """Maximal prefix of tested norms (ascending) whose AUC meets the
    threshold. The right end is open at the first failing norm and closed
    at the last tested norm when none fail.
    """
    if not 0.0 < auc_threshold < 1.0:
        raise ConfigError(f"auc_threshold must be in (0, 1), got {auc_threshold}")
    rows = sorted(report.rows, key=lambda r: r.norm)
    if not rows:
        raise ConfigError("feasible_domain needs at least one sweep row")
    if rows[0].image_auc < auc_threshold:
        return FeasibleDomain(lo=None, hi=None, hi_open=False, empty=True)
    lo = rows[0].norm
    for row in rows[1:]:
        if row.image_auc < auc_threshold:
            return FeasibleDomain(lo=lo, hi=row.norm, hi_open=True, empty=False)
    return FeasibleDomain(lo=lo, hi=rows[-1].norm, hi_open=False, empty=False)


@dataclass(frozen=True)
class AblationRow:
    kind: CenterKind
    image_auc: float


def distribution_ablation(train: FeatureSet, test: FeatureSet, kinds,
                          cfg: TrainConfig, norm: float = 1.0) -> list:
    """Image AUC per center kind at a fixed norm, with identical data and
    projector init. This is the data-agnosticism check: the spread across
    kinds should be small.
    """
    rows = []
    for kind in kinds:
        kind = CenterKind(kind)
        if kind is CenterKind.FEATURE_MEAN:
            center = feature_mean_center(train, seed=cfg.seed)
        else:
            center = make_center(train.channels, kind, seed=cfg.seed)
        if norm != 1.0:
            center = set_norm(center, norm)
        model = init_projector(train.channels, center.dim, seed=cfg.seed)
        fit_offline(model, train, center, cfg)
        report = evaluate(model, test, center, cfg.radius)
        rows.append(AblationRow(kind=kind, image_auc=report.image_auc))
    return rows
