"""Synthetic two-cluster tasks with an exactly controlled class angle.

Normal and anomaly clusters sit at radius 10 along unit directions u_n and
u_a whose inner product equals cos_target up to Gram-Schmidt rounding;
samples add isotropic Gaussian noise (std ``within_noise`` per component).
Construction runs in float64 and casts to float32 only when the feature
sets are materialized.

Draw order from one SplitMix64(seed) stream: u_n direction, helper
direction for u_a, training noise, test-normal noise, test-anomaly noise.
"""

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError
from .focc import LABEL_ANOMALY, LABEL_NORMAL, FeatureSet
from .rng import SplitMix64

CLUSTER_RADIUS = 10.0


@dataclass(frozen=True)
class SynthSpec:
    dim: int = 64
    cos_target: float = 0.2
    within_noise: float = 0.5
    n_train_normal: int = 512
    n_test_normal: int = 128
    n_test_anomaly: int = 128
    seed: int = 1024

    def __post_init__(self):
        if self.dim < 2:
            raise ConfigError("dim must be at least 2")
        if not -1.0 <= self.cos_target <= 1.0:
            raise ConfigError("cos_target must lie in [-1, 1]")
        if self.within_noise < 0:
            raise ConfigError("within_noise must be nonnegative")
        if min(self.n_train_normal, self.n_test_normal, self.n_test_anomaly) < 1:
            raise ConfigError("sample counts must be positive")


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _directions(spec: SynthSpec, rng: SplitMix64):
    """u_n and u_a with <u_n, u_a> = cos_target via Gram-Schmidt."""
    u_n = _unit(rng.normal(spec.dim))
    w = np.zeros(spec.dim)
    while np.linalg.norm(w) < 1e-12:
        helper = rng.normal(spec.dim)
        w = helper - np.dot(helper, u_n) * u_n
    w = _unit(w)
    return u_n, spec.cos_target * u_n + np.sqrt(1.0 - spec.cos_target**2) * w


def gen_clusters(spec: SynthSpec):
    """Generate (train, test) feature sets for the task.

    Train holds only normal samples; test holds normals then anomalies.
    Same spec -> bitwise-identical sets.
    """
    rng = SplitMix64(spec.seed)
    u_n, u_a = _directions(spec, rng)

    def _samples(n, direction):
        noise = rng.normal(n * spec.dim).reshape(n, spec.dim)
        return CLUSTER_RADIUS * direction + spec.within_noise * noise

    train_x = _samples(spec.n_train_normal, u_n)
    test_n = _samples(spec.n_test_normal, u_n)
    test_a = _samples(spec.n_test_anomaly, u_a)

    meta = json.dumps({"task": "two-cluster", **asdict(spec)}, sort_keys=True)
    train = FeatureSet(
        data=train_x.astype(np.float32)[:, :, None, None],
        labels=np.full(spec.n_train_normal, LABEL_NORMAL, dtype=np.uint8),
        meta=meta,
    )
    test = FeatureSet(
        data=np.concatenate([test_n, test_a]).astype(np.float32)[:, :, None, None],
        labels=np.concatenate([
            np.full(spec.n_test_normal, LABEL_NORMAL, dtype=np.uint8),
            np.full(spec.n_test_anomaly, LABEL_ANOMALY, dtype=np.uint8),
        ]),
        meta=meta,
    )
    return train, test


def reference_tasks() -> dict:
    """The two pinned desk-scale tasks: a low class-angle-similarity regime
    and a high one. Everything else about them is identical.
    """
    return {
        "LOWSIM": SynthSpec(cos_target=0.2),
        "HIGHSIM": SynthSpec(cos_target=0.6),
    }
