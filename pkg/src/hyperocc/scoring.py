"""Anomaly scores, decisions, pixel score maps, and map export.

Sample scores are center distances d = ||z - c||; a sample is anomalous
when d exceeds the radius strictly. Pixel maps apply the hinge
max(||z - c||^2 - R^2, 0) per location; the image-level score of a grid
sample is the max over its map. Maps upsample to image resolution with
corner-aligned bilinear interpolation followed by Gaussian smoothing.
"""

import struct
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .center import Center
from .errors import (
    BadMagicError,
    ConfigError,
    IOFailure,
    TruncatedError,
)
from .focc import _Cursor
from .projector import ProjectorModel, _hinge_terms, forward, forward_grid

SMAP_MAGIC = b"SMAP"

SCALE_FEATURE = "feature"
SCALE_IMAGE = "image"

DEFAULT_SIGMA = 4.0  # tuned for 224x224 output maps


@dataclass
class ScoreMap:
    values: np.ndarray  # float64 [h, w], nonnegative
    scale: str = SCALE_FEATURE

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class Decision:
    score: float
    radius: float
    is_anomaly: bool


def score_sample(model: ProjectorModel, f: np.ndarray, center: Center,
                 radius: float = 0.0) -> float:
    """Anomaly score of one sample.

    Vectors score as the center distance; grids score as the max over the
    per-location hinge map (the radius only matters for grids).
    """
    f = np.asarray(f)
    if f.ndim == 1 or (f.ndim == 3 and f.shape[1] * f.shape[2] == 1):
        z = forward(model, f if f.ndim == 1 else f[:, 0, 0])
        diff = z.astype(np.float64) - center.vector.astype(np.float64)
        return float(np.sqrt(diff @ diff))
    return float(score_map(model, f, center, radius).values.max())


def decide(score: float, radius: float) -> Decision:
    """Anomalous iff score > radius, strictly; the boundary is normal."""
    return Decision(score=float(score), radius=float(radius),
                    is_anomaly=bool(score > radius))


def score_map(model: ProjectorModel, f: np.ndarray, center: Center,
              radius: float) -> ScoreMap:
    """Per-location hinge map of a feature grid, at feature resolution."""
    f = np.asarray(f)
    if f.ndim != 3:
        raise ConfigError(f"score_map expects (C, H, W), got {f.shape}")
    z = forward_grid(model, f)
    _, hinge = _hinge_terms(z, center.vector, radius)
    return ScoreMap(values=hinge, scale=SCALE_FEATURE)


def _resize_bilinear(a: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Corner-aligned separable bilinear resize of a 2-D array."""

    def _axis_coords(n_in, n_out):
        if n_in == 1:
            return np.zeros(n_out, dtype=np.int64), np.zeros(n_out, dtype=np.int64), \
                np.zeros(n_out, dtype=np.float64)
        x = np.linspace(0.0, n_in - 1.0, n_out)
        i0 = np.floor(x).astype(np.int64)
        i0 = np.minimum(i0, n_in - 2)
        return i0, i0 + 1, x - i0

    r0, r1, tr = _axis_coords(a.shape[0], out_h)
    c0, c1, tc = _axis_coords(a.shape[1], out_w)
    rows = a[r0] * (1.0 - tr)[:, None] + a[r1] * tr[:, None]
    return rows[:, c0] * (1.0 - tc) + rows[:, c1] * tc


def upsample_smooth(smap: ScoreMap, out_h: int, out_w: int,
                    sigma: float = DEFAULT_SIGMA) -> ScoreMap:
    """Bilinear upsample to (out_h, out_w), then Gaussian blur with the
    given sigma (sigma=0 skips the blur). Constant maps stay constant and
    values stay nonnegative.
    """
    if out_h < 1 or out_w < 1 or sigma < 0:
        raise ConfigError("output size must be positive and sigma nonnegative")
    in_h, in_w = smap.values.shape
    if out_h < in_h or out_w < in_w:
        raise ConfigError(f"cannot shrink {in_h}x{in_w} map to {out_h}x{out_w}")
    vals = _resize_bilinear(smap.values.astype(np.float64), out_h, out_w)
    if sigma > 0:
        vals = gaussian_filter(vals, sigma=sigma, mode="nearest")
    return ScoreMap(values=np.maximum(vals, 0.0), scale=SCALE_IMAGE)


def export_pgm(smap: ScoreMap, path) -> None:
    """8-bit binary PGM, min-max normalized (flat maps export as black)."""
    v = smap.values.astype(np.float64)
    lo, hi = float(v.min()), float(v.max())
    if hi > lo:
        pix = np.rint((v - lo) / (hi - lo) * 255.0).astype(np.uint8)
    else:
        pix = np.zeros_like(v, dtype=np.uint8)
    h, w = v.shape
    try:
        with open(path, "wb") as fh:
            fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
            fh.write(pix.tobytes())
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def export_smap(smap: ScoreMap, path) -> None:
    """Raw float32 map with a 16-byte header (magic, h, w, reserved)."""
    h, w = smap.values.shape
    try:
        with open(path, "wb") as fh:
            fh.write(struct.pack("<4sIII", SMAP_MAGIC, h, w, 0))
            fh.write(smap.values.astype("<f4").tobytes())
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def read_smap(path) -> ScoreMap:
    """Parse a raw score-map file (inverse of export_smap, up to float32)."""
    try:
        with open(path, "rb") as fh:
            buf = fh.read()
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from exc
    cur = _Cursor(buf)
    magic, h, w, _ = cur.unpack("<4sIII", "map header")
    if magic != SMAP_MAGIC:
        raise BadMagicError(f"bad map magic {magic!r}")
    vals = np.frombuffer(cur.take(h * w * 4, "map values"), dtype="<f4")
    if cur.pos != len(buf):
        raise TruncatedError("trailing bytes after map payload")
    return ScoreMap(values=vals.reshape(h, w).astype(np.float64),
                    scale=SCALE_IMAGE)
