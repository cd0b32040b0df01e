"""Hypersphere centers: fixed target vectors the projector is trained toward.

The working hypothesis of this package is that the center's distribution
barely matters as long as it is not zero; only its norm does. Centers are
therefore cheap value objects: a draw recipe (kind, seed), a norm, and the
materialized vector.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ZeroCenterError
from .focc import FeatureSet
from .rng import SplitMix64

DEFAULT_SEED = 1024
DEFAULT_NORM = 1.0

# Relative slack on the stored-vector norm; float32 storage stays well inside.
NORM_RTOL = 1e-5


class CenterKind(str, enum.Enum):
    STANDARD_NORMAL = "normal"
    UNIFORM01 = "uniform"
    ALL_ONES = "ones"
    FEATURE_MEAN = "feature_mean"


# Stable one-byte codes used by the model file format.
KIND_CODES = {
    CenterKind.STANDARD_NORMAL: 0,
    CenterKind.UNIFORM01: 1,
    CenterKind.ALL_ONES: 2,
    CenterKind.FEATURE_MEAN: 3,
}
CODE_KINDS = {v: k for k, v in KIND_CODES.items()}


@dataclass(frozen=True)
class Center:
    vector: np.ndarray  # float32, read-only
    kind: CenterKind
    seed: int
    norm: float

    def __post_init__(self):
        vec = np.ascontiguousarray(self.vector, dtype=np.float32)
        vec.setflags(write=False)
        object.__setattr__(self, "vector", vec)
        if not self.norm > 0:
            raise ZeroCenterError(f"center norm must be positive, got {self.norm}")
        actual = float(np.linalg.norm(vec.astype(np.float64)))
        if abs(actual - self.norm) > NORM_RTOL * self.norm:
            raise ZeroCenterError(
                f"stored vector norm {actual} inconsistent with declared {self.norm}"
            )

    @property
    def dim(self) -> int:
        return self.vector.shape[0]


def _draw(dim: int, kind: CenterKind, seed: int) -> np.ndarray:
    rng = SplitMix64(seed)
    if kind == CenterKind.STANDARD_NORMAL:
        return rng.normal(dim)
    if kind == CenterKind.UNIFORM01:
        return rng.uniform(dim)
    if kind == CenterKind.ALL_ONES:
        return np.ones(dim, dtype=np.float64)
    raise ValueError(f"make_center cannot draw kind {kind}")


def make_center(dim: int, kind: CenterKind = CenterKind.STANDARD_NORMAL,
                seed: int = DEFAULT_SEED) -> Center:
    """Draw a center of the given kind and L2-normalize it to norm 1.

    Same (dim, kind, seed) always yields the bitwise-identical vector.
    """
    kind = CenterKind(kind)
    raw = _draw(dim, kind, seed)
    nrm = float(np.linalg.norm(raw))
    if nrm == 0.0:
        raise ZeroCenterError("drawn center has zero norm")
    return Center(vector=(raw / nrm).astype(np.float32), kind=kind,
                  seed=seed, norm=1.0)


def feature_mean_center(features: FeatureSet, seed: int = DEFAULT_SEED) -> Center:
    """Center from the mean feature vector, normalized to norm 1.

    Grid features are averaged over samples and locations into one
    channel vector. A (near-)zero mean cannot be normalized.
    """
    if features.n_samples == 0:
        raise ZeroCenterError("cannot take the mean of an empty feature set")
    mean = features.data.astype(np.float64).mean(axis=(0, 2, 3))
    nrm = float(np.linalg.norm(mean))
    if nrm < 1e-12:
        raise ZeroCenterError("feature mean is zero; opposing features cancel")
    return Center(vector=(mean / nrm).astype(np.float32),
                  kind=CenterKind.FEATURE_MEAN, seed=seed, norm=1.0)


def set_norm(center: Center, target: float) -> Center:
    """Rescale to the target norm, preserving direction."""
    if not target > 0:
        raise ZeroCenterError(f"target norm must be positive, got {target}")
    vec = center.vector.astype(np.float64)
    vec = vec / np.linalg.norm(vec) * target
    return Center(vector=vec.astype(np.float32), kind=center.kind,
                  seed=center.seed, norm=float(target))
