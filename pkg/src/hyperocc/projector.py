"""Linear projector, hinge loss, analytic gradients, Adam, and model files.

The model is a single affine map z = W f + b trained to pull normal features
inside a hypersphere of radius R around a fixed center. Everything here is
plain numpy; parameters are float32 (matching the file format), gradient and
optimizer arithmetic run in float64 and cast back.

All projections go through ``np.einsum(..., optimize=False)``: unlike BLAS
matmul, its accumulation order per output element does not depend on how many
locations are projected at once, so projecting a grid and projecting its
columns one by one give bit-identical results.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .center import CODE_KINDS, KIND_CODES, Center
from .errors import (
    BadMagicError,
    ConfigError,
    IOFailure,
    NumericError,
    UnsupportedVersionError,
)
from .focc import _Cursor
from .rng import SplitMix64

MODEL_MAGIC = b"HOCC"
MODEL_VERSION = 1

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def _zeros_like64(a):
    return np.zeros(a.shape, dtype=np.float64)


@dataclass
class AdamState:
    """First/second moment estimates and the step counter. Not persisted."""

    m_w: np.ndarray
    v_w: np.ndarray
    m_b: np.ndarray
    v_b: np.ndarray
    t: int = 0


@dataclass
class ProjectorModel:
    weight: np.ndarray  # [out_dim, in_dim] float32
    bias: np.ndarray    # [out_dim] float32
    adam: AdamState = None

    def __post_init__(self):
        self.weight = np.ascontiguousarray(self.weight, dtype=np.float32)
        self.bias = np.ascontiguousarray(self.bias, dtype=np.float32)
        if self.adam is None:
            self.adam = AdamState(
                m_w=_zeros_like64(self.weight), v_w=_zeros_like64(self.weight),
                m_b=_zeros_like64(self.bias), v_b=_zeros_like64(self.bias),
            )

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]


@dataclass
class LossValue:
    value: float
    active: bool


@dataclass
class Gradients:
    d_weight: np.ndarray  # float64 [out_dim, in_dim]
    d_bias: np.ndarray    # float64 [out_dim]


@dataclass
class GradCheckResult:
    max_rel_error: float
    skipped: bool = False


def init_projector(in_dim: int, out_dim: int, seed: int = 1024) -> ProjectorModel:
    """Uniform weight init in [-1/sqrt(in_dim), +1/sqrt(in_dim)], zero bias.

    Weights are drawn row-major from a SplitMix64 stream, so the same seed
    always produces the bitwise-identical model.
    """
    if in_dim < 1 or out_dim < 1:
        raise ConfigError("projector dimensions must be positive")
    bound = 1.0 / np.sqrt(in_dim)
    draws = SplitMix64(seed).uniform(out_dim * in_dim)
    weight = ((draws * 2.0 - 1.0) * bound).astype(np.float32).reshape(out_dim, in_dim)
    return ProjectorModel(weight=weight, bias=np.zeros(out_dim, dtype=np.float32))


def forward(model: ProjectorModel, f: np.ndarray) -> np.ndarray:
    """Project one feature vector (in_dim,) -> (out_dim,)."""
    f = np.asarray(f)
    if f.ndim != 1:
        raise ConfigError(f"forward expects a vector, got shape {f.shape}")
    if f.shape[0] != model.in_dim:
        raise ConfigError(f"feature dim {f.shape[0]} != in_dim {model.in_dim}")
    return np.einsum("oc,c->o", model.weight, f, optimize=False) + model.bias


def forward_grid(model: ProjectorModel, f: np.ndarray) -> np.ndarray:
    """Project a feature grid (in_dim, H, W) -> (out_dim, H, W).

    Per location identical (bitwise) to calling forward() on that column.
    """
    f = np.asarray(f)
    if f.ndim != 3:
        raise ConfigError(f"forward_grid expects (C, H, W), got shape {f.shape}")
    if f.shape[0] != model.in_dim:
        raise ConfigError(f"feature dim {f.shape[0]} != in_dim {model.in_dim}")
    z = np.einsum("oc,chw->ohw", model.weight, f, optimize=False)
    return z + model.bias[:, None, None]


def _hinge_terms(z: np.ndarray, cvec: np.ndarray, radius: float):
    """Squared distances to the center and hinge values, in float64.

    Returns (diff, hinge) where diff is z - c per location and hinge is
    max(||z - c||^2 - R^2, 0) per location.
    """
    z64 = z.astype(np.float64)
    c64 = cvec.astype(np.float64)
    if z64.ndim == 1:
        diff = z64 - c64
        ssq = np.dot(diff, diff)
    else:
        diff = z64 - c64[:, None, None]
        ssq = np.einsum("chw,chw->hw", diff, diff, optimize=False)
    return diff, np.maximum(ssq - radius * radius, 0.0)


def loss(z: np.ndarray, center: Center, radius: float) -> LossValue:
    """Hinge loss of a projected vector or grid.

    Grids average the per-location hinge over H*W. The hinge counts as
    active only when the value is strictly positive; sitting exactly on
    the boundary is inactive.
    """
    _, hinge = _hinge_terms(np.asarray(z), center.vector, radius)
    value = float(hinge) if hinge.ndim == 0 else float(hinge.mean())
    return LossValue(value=value, active=value > 0.0)


def loss_grad(model: ProjectorModel, f: np.ndarray, center: Center,
              radius: float) -> Gradients:
    """Analytic dL/dW and dL/db for one sample (vector or grid), float64.

    Inactive hinge terms contribute exactly zero (subgradient 0 at the
    boundary); grid gradients are averaged over locations to match loss().
    """
    f = np.asarray(f)
    if f.ndim == 1:
        z = forward(model, f)
        diff, hinge = _hinge_terms(z, center.vector, radius)
        if hinge > 0.0:
            gz = 2.0 * diff
            return Gradients(np.outer(gz, f.astype(np.float64)), gz)
        return Gradients(_zeros_like64(model.weight), _zeros_like64(model.bias))
    z = forward_grid(model, f)
    diff, hinge = _hinge_terms(z, center.vector, radius)
    n_loc = f.shape[1] * f.shape[2]
    gz = (2.0 / n_loc) * diff * (hinge > 0.0)
    d_w = np.einsum("ohw,chw->oc", gz, f.astype(np.float64), optimize=False)
    return Gradients(d_w, gz.sum(axis=(1, 2)))


def adam_step(model: ProjectorModel, grads: Gradients, lr: float = 1e-4,
              weight_decay: float = 5e-4, beta1: float = ADAM_BETA1,
              beta2: float = ADAM_BETA2, eps: float = ADAM_EPS) -> ProjectorModel:
    """One Adam update in place. Weight decay couples into the gradient
    (g + wd * w) and applies to the weight matrix only, never the bias.
    """
    if not (np.isfinite(grads.d_weight).all() and np.isfinite(grads.d_bias).all()):
        raise NumericError("non-finite gradients passed to adam_step")
    st = model.adam
    st.t += 1
    bc1 = 1.0 - beta1 ** st.t
    bc2 = 1.0 - beta2 ** st.t

    def _update(param32, g, m, v):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * np.square(g)
        step = lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
        return (param32.astype(np.float64) - step).astype(np.float32)

    g_w = grads.d_weight + weight_decay * model.weight.astype(np.float64)
    model.weight = _update(model.weight, g_w, st.m_w, st.v_w)
    model.bias = _update(model.bias, grads.d_bias, st.m_b, st.v_b)
    return model


def _loss_f64(w64, b64, f64, c64, radius):
    if f64.ndim == 1:
        z = w64 @ f64 + b64
        diff = z - c64
        return max(float(diff @ diff) - radius * radius, 0.0)
    z = np.einsum("oc,chw->ohw", w64, f64, optimize=False) + b64[:, None, None]
    diff = z - c64[:, None, None]
    ssq = np.einsum("chw,chw->hw", diff, diff, optimize=False)
    return float(np.maximum(ssq - radius * radius, 0.0).mean())


def grad_check(model: ProjectorModel, f: np.ndarray, center: Center,
               radius: float, h: float = 1e-5) -> GradCheckResult:
    """Central-difference check of the analytic gradients, all in float64.

    Instances sitting within 10h of the hinge boundary are reported as
    skipped (the loss is not differentiable there), not failed.
    """
    if not 1e-6 <= h <= 1e-4:
        raise ConfigError(f"step size h={h} outside [1e-6, 1e-4]")
    f64 = np.asarray(f, dtype=np.float64)
    w64 = model.weight.astype(np.float64)
    b64 = model.bias.astype(np.float64)
    c64 = center.vector.astype(np.float64)

    if f64.ndim == 1:
        z = w64 @ f64 + b64
        ssq = np.array(((z - c64) ** 2).sum())
    else:
        z = np.einsum("oc,chw->ohw", w64, f64, optimize=False) + b64[:, None, None]
        ssq = np.einsum("chw,chw->hw", z - c64[:, None, None], z - c64[:, None, None],
                        optimize=False)
    if np.any(np.abs(ssq - radius * radius) < 10.0 * h):
        return GradCheckResult(max_rel_error=float("nan"), skipped=True)

    # Analytic gradients evaluated on the float64 twin so both routes
    # see the same parameter values.
    if f64.ndim == 1:
        diff = z - c64
        gz = 2.0 * diff if float(diff @ diff) - radius * radius > 0 else np.zeros_like(diff)
        a_w, a_b = np.outer(gz, f64), gz
    else:
        n_loc = f64.shape[1] * f64.shape[2]
        diff = z - c64[:, None, None]
        gz = (2.0 / n_loc) * diff * (ssq - radius * radius > 0.0)
        a_w = np.einsum("ohw,chw->oc", gz, f64, optimize=False)
        a_b = gz.sum(axis=(1, 2))

    max_rel = 0.0
    for arr, grad in ((w64, a_w), (b64, a_b)):
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = arr[idx]
            arr[idx] = orig + h
            lp = _loss_f64(w64, b64, f64, c64, radius)
            arr[idx] = orig - h
            lm = _loss_f64(w64, b64, f64, c64, radius)
            arr[idx] = orig
            numeric = (lp - lm) / (2.0 * h)
            rel = abs(grad[idx] - numeric) / max(abs(numeric), 1e-12)
            max_rel = max(max_rel, rel)
    return GradCheckResult(max_rel_error=max_rel, skipped=False)


def save_model(path, model: ProjectorModel, center: Center, radius: float) -> None:
    """Write model + center + radius. Adam state is deliberately not
    persisted; a loaded model starts optimization fresh.
    """
    if center.dim != model.out_dim:
        raise ConfigError(
            f"center dim {center.dim} != projector out_dim {model.out_dim}"
        )
    parts = [
        struct.pack("<4sI", MODEL_MAGIC, MODEL_VERSION),
        struct.pack("<II", model.in_dim, model.out_dim),
        struct.pack("<BQd", KIND_CODES[center.kind], center.seed, center.norm),
        center.vector.astype("<f4", copy=False).tobytes(),
        struct.pack("<d", radius),
        model.weight.astype("<f4", copy=False).tobytes(),
        model.bias.astype("<f4", copy=False).tobytes(),
    ]
    try:
        with open(path, "wb") as fh:
            fh.write(b"".join(parts))
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def load_model(path):
    """Read a model file back as (model, center, radius)."""
    try:
        with open(path, "rb") as fh:
            buf = fh.read()
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from exc
    cur = _Cursor(buf)
    magic, version = cur.unpack("<4sI", "model header")
    if magic != MODEL_MAGIC:
        raise BadMagicError(f"bad model magic {magic!r}")
    if version != MODEL_VERSION:
        raise UnsupportedVersionError(f"unsupported model version {version}")
    in_dim, out_dim = cur.unpack("<II", "projector dimensions")
    kind_code, seed, norm = cur.unpack("<BQd", "center header")
    if kind_code not in CODE_KINDS:
        raise BadMagicError(f"unknown center kind code {kind_code}")
    cvec = np.frombuffer(cur.take(out_dim * 4, "center vector"), dtype="<f4")
    center = Center(vector=cvec.copy(), kind=CODE_KINDS[kind_code],
                    seed=seed, norm=norm)
    (radius,) = cur.unpack("<d", "radius")
    weight = np.frombuffer(cur.take(out_dim * in_dim * 4, "weight"), dtype="<f4")
    bias = np.frombuffer(cur.take(out_dim * 4, "bias"), dtype="<f4")
    model = ProjectorModel(weight=weight.reshape(out_dim, in_dim).copy(),
                           bias=bias.copy())
    return model, center, radius
