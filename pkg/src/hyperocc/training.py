"""Offline (epoch/batch) and online (one-pass streaming) training loops.

Both loops share the same per-batch math: project, hinge, average the
analytic gradients over the batch, one Adam step. Shuffling is a seeded
Fisher-Yates permutation; epoch e uses seed cfg.seed + e so every epoch
order is reproducible in isolation. The center is never touched.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .center import Center
from .errors import ConfigError, DataError, NumericError
from .focc import LABEL_NORMAL, FeatureSet
from .projector import Gradients, ProjectorModel, adam_step
from .rng import SplitMix64

# A batch has collapsed when the projected vectors are this tightly bunched
# while the inputs are not identical.
COLLAPSE_SPREAD_TOL = 1e-6

MODE_OFFLINE = "offline"
MODE_ONLINE = "online"


class CollapseStatus(enum.Enum):
    HEALTHY = "healthy"
    COLLAPSED = "collapsed"


@dataclass(frozen=True)
class TrainConfig:
    radius: float = 1e-5
    lr: float = 1e-4
    weight_decay: float = 5e-4
    epochs: int = 20
    batch_size: int = 64
    seed: int = 1024
    mode: str = MODE_OFFLINE

    def __post_init__(self):
        if self.mode not in (MODE_OFFLINE, MODE_ONLINE):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.radius < 0:
            raise ConfigError("radius must be nonnegative")
        if self.lr < 0:
            raise ConfigError("lr must be nonnegative")
        if self.epochs < 0:
            raise ConfigError("epochs must be nonnegative")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        if self.mode == MODE_ONLINE and (self.epochs != 1 or self.batch_size != 1):
            raise ConfigError("online mode requires epochs=1 and batch_size=1")


@dataclass
class TrainTrace:
    epoch_losses: list = field(default_factory=list)
    epoch_spreads: list = field(default_factory=list)
    collapse_events: list = field(default_factory=list)  # (epoch, batch) pairs
    samples_seen: int = 0
    prequential_scores: list = field(default_factory=list)

    def to_csv(self) -> str:
        flagged = {e for e, _ in self.collapse_events}
        lines = ["epoch,mean_loss,spread,collapse_flag"]
        for e, (lo, sp) in enumerate(zip(self.epoch_losses, self.epoch_spreads)):
            lines.append(f"{e},{lo:.17g},{sp:.17g},{1 if e in flagged else 0}")
        return "\n".join(lines) + "\n"


def collapse_check(z_batch: np.ndarray, f_batch: np.ndarray) -> CollapseStatus:
    """Collapsed iff the mean per-dimension std of z is below tolerance
    while the inputs are not all identical (identical inputs legitimately
    project to one point).
    """
    z = np.asarray(z_batch, dtype=np.float64)
    f = np.asarray(f_batch)
    if z.ndim != 2 or z.shape[0] < 2:
        raise ConfigError("collapse_check needs a batch of at least 2 vectors")
    spread = float(z.std(axis=0).mean())
    inputs_identical = bool((f == f[0]).all())
    if spread < COLLAPSE_SPREAD_TOL and not inputs_identical:
        return CollapseStatus.COLLAPSED
    return CollapseStatus.HEALTHY


def _project_batch(model: ProjectorModel, fb: np.ndarray) -> np.ndarray:
    """(n, C, H, W) -> (n, out, H, W) with the same einsum kernel as forward."""
    z = np.einsum("oc,nchw->nohw", model.weight, fb, optimize=False)
    return z + model.bias[None, :, None, None]


def _batch_losses_and_grads(model, fb, cvec, radius):
    """Per-sample hinge losses plus batch-averaged gradients (float64)."""
    n, _, hh, ww = fb.shape
    z = _project_batch(model, fb)
    diff = z.astype(np.float64) - cvec.astype(np.float64)[None, :, None, None]
    ssq = np.einsum("nchw,nchw->nhw", diff, diff, optimize=False)
    hinge = np.maximum(ssq - radius * radius, 0.0)
    losses = hinge.mean(axis=(1, 2))
    gz = (2.0 / (hh * ww)) * diff * (hinge > 0.0)[:, None, :, :]
    d_w = np.einsum("nohw,nchw->oc", gz, fb.astype(np.float64), optimize=False) / n
    d_b = gz.sum(axis=(0, 2, 3)) / n
    return z, losses, Gradients(d_w, d_b)


def _spread_of(z: np.ndarray) -> float:
    """Mean per-dimension std over a stack of projected grids (n, out, H, W)."""
    flat = np.moveaxis(z, 1, -1).reshape(-1, z.shape[1])
    return float(flat.astype(np.float64).std(axis=0).mean())


def _check_trainable(train: FeatureSet):
    if train.n_samples == 0:
        raise DataError("EmptySet: cannot train on an empty feature set")
    bad = np.flatnonzero(train.labels != LABEL_NORMAL)
    if bad.size:
        raise DataError(
            f"training data must be all-normal; sample {int(bad[0])} "
            f"has label {int(train.labels[bad[0]])}"
        )


def fit_offline(model: ProjectorModel, train: FeatureSet, center: Center,
                cfg: TrainConfig):
    """Epoch/batch training. Returns (model, TrainTrace); the model is
    updated in place. epochs=0 is a no-op with an empty trace.
    """
    if cfg.mode != MODE_OFFLINE:
        raise ConfigError("fit_offline requires cfg.mode='offline'")
    _check_trainable(train)
    if train.channels != model.in_dim:
        raise DataError(
            f"feature channels {train.channels} != projector in_dim {model.in_dim}"
        )
    trace = TrainTrace()
    data = train.data
    n = train.n_samples
    for epoch in range(cfg.epochs):
        order = SplitMix64(cfg.seed + epoch).shuffle_index(n)
        sample_losses = np.empty(n, dtype=np.float64)
        pos = 0
        for b_idx, start in enumerate(range(0, n, cfg.batch_size)):
            fb = data[order[start:start + cfg.batch_size]]
            z, losses, grads = _batch_losses_and_grads(
                model, fb, center.vector, cfg.radius)
            if not np.isfinite(losses).all():
                err = NumericError(f"non-finite loss in epoch {epoch}, batch {b_idx}")
                err.trace = trace
                raise err
            sample_losses[pos:pos + len(losses)] = losses
            pos += len(losses)
            if fb.shape[0] >= 2:
                zb = np.moveaxis(z, 1, -1).reshape(-1, z.shape[1])
                xb = np.moveaxis(fb, 1, -1).reshape(-1, fb.shape[1])
                if collapse_check(zb, xb) is CollapseStatus.COLLAPSED:
                    trace.collapse_events.append((epoch, b_idx))
            adam_step(model, grads, lr=cfg.lr, weight_decay=cfg.weight_decay)
        trace.epoch_losses.append(float(sample_losses.mean()))
        trace.epoch_spreads.append(_spread_of(_project_batch(model, data)))
        trace.samples_seen += n
    return model, trace


def _iter_stream(stream):
    """Yield (C, H, W) float32 grids from a FeatureSet or array iterable."""
    if isinstance(stream, FeatureSet):
        _check_trainable(stream)
        yield from stream.data
        return
    for x in stream:
        x = np.ascontiguousarray(x, dtype=np.float32)
        if x.ndim == 1:
            x = x[:, None, None]
        if x.ndim != 3:
            raise DataError(f"stream sample has shape {x.shape}, want (C,) or (C,H,W)")
        yield x


def fit_online(model: ProjectorModel, stream, center: Center, cfg: TrainConfig,
               prequential: bool = False):
    """Single pass over the stream in arrival order, one Adam step per
    sample. Works from a cold start; the model is scorable at any point.

    With ``prequential=True`` each sample's anomaly score is recorded
    *before* its update (not the standard protocol, but useful for
    stream monitoring).
    """
    if cfg.mode != MODE_ONLINE:
        raise ConfigError("fit_online requires cfg.mode='online'")
    trace = TrainTrace()
    losses = []
    zs = []
    for x in _iter_stream(stream):
        fb = x[None]
        z, sample_losses, grads = _batch_losses_and_grads(
            model, fb, center.vector, cfg.radius)
        if not np.isfinite(sample_losses).all():
            err = NumericError(f"non-finite loss at stream sample {len(losses)}")
            err.trace = trace
            raise err
        if prequential:
            diff = z[0].astype(np.float64) - center.vector.astype(np.float64)[:, None, None]
            ssq = np.einsum("chw,chw->hw", diff, diff, optimize=False)
            if x.shape[1] * x.shape[2] == 1:
                score = float(np.sqrt(ssq[0, 0]))
            else:
                score = float(np.maximum(ssq - cfg.radius**2, 0.0).max())
            trace.prequential_scores.append(score)
        losses.append(float(sample_losses[0]))
        zs.append(z[0])
        adam_step(model, grads, lr=cfg.lr, weight_decay=cfg.weight_decay)
    trace.samples_seen = len(losses)
    if losses:
        trace.epoch_losses.append(float(np.mean(losses)))
        trace.epoch_spreads.append(_spread_of(np.stack(zs)))
    return model, trace
