"""Feature container and its binary on-disk format.

A feature set holds backbone activations for n samples as a float32
``[n, channels, height, width]`` block, a per-sample label byte
(0 normal, 1 anomaly, 255 unknown), an optional stack of binary
ground-truth masks at image resolution, and a mandatory JSON metadata
string describing provenance.

File layout (FOCC v1, everything little-endian):

    magic      4 bytes  b"FOCC"
    version    u32      1
    n_samples  u64
    channels   u32
    height     u32
    width      u32
    flags      u8       bit0 = labels present, bit1 = masks present
    meta_len   u32
    meta       meta_len bytes of UTF-8 JSON
    data       n*C*H*W float32
    labels     n bytes            (if bit0)
    mask_h     u32                (if bit1)
    mask_w     u32                (if bit1)
    masks      n*mask_h*mask_w bytes in {0,1}   (if bit1)
"""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadLabelError,
    BadMagicError,
    BadMaskError,
    FormatError,
    InvalidFeatureSetError,
    IOFailure,
    TruncatedError,
    UnsupportedVersionError,
)

MAGIC = b"FOCC"
VERSION = 1
FLAG_LABELS = 0x01
FLAG_MASKS = 0x02

LABEL_NORMAL = 0
LABEL_ANOMALY = 1
LABEL_UNKNOWN = 255

_VALID_LABELS = (LABEL_NORMAL, LABEL_ANOMALY, LABEL_UNKNOWN)


@dataclass
class FeatureSet:
    """In-memory feature block plus labels, optional masks, and metadata."""

    data: np.ndarray
    labels: np.ndarray
    meta: str = "{}"
    masks: np.ndarray | None = None

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        if self.data.ndim != 4:
            raise ValueError("data must be [n, channels, height, width]")
        self.labels = np.ascontiguousarray(self.labels, dtype=np.uint8)
        if self.masks is not None:
            self.masks = np.ascontiguousarray(self.masks, dtype=np.uint8)

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[2]

    @property
    def width(self) -> int:
        return self.data.shape[3]


@dataclass
class Issue:
    code: str
    message: str

    def __str__(self):
        return f"{self.code}: {self.message}"


@dataclass
class ValidationReport:
    issues: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def codes(self):
        return [i.code for i in self.issues]


def validate(fs: FeatureSet) -> ValidationReport:
    """Check the structural invariants; ok is True iff no issues."""
    issues = []
    n = fs.n_samples
    if n == 0:
        issues.append(Issue("EmptySet", "feature set has no samples"))
    if fs.labels.shape != (n,):
        issues.append(
            Issue("BadShape", f"labels shape {fs.labels.shape} != ({n},)")
        )
    else:
        bad = np.flatnonzero(~np.isin(fs.labels, _VALID_LABELS))
        for i in bad:
            issues.append(
                Issue("BadLabel", f"sample={i} label={int(fs.labels[i])}")
            )
    if not np.all(np.isfinite(fs.data)):
        issues.append(Issue("NonFiniteData", "data contains NaN or Inf"))
    if fs.masks is not None:
        if fs.masks.ndim != 3 or fs.masks.shape[0] != n:
            issues.append(
                Issue("BadMaskShape", f"masks shape {fs.masks.shape} not [n, h, w]")
            )
        elif not np.isin(fs.masks, (0, 1)).all():
            issues.append(Issue("NonBinaryMask", "mask values outside {0, 1}"))
    try:
        json.loads(fs.meta)
    except (TypeError, ValueError):
        issues.append(Issue("BadMeta", "meta is not a JSON string"))
    return ValidationReport(issues)


def write_focc(path, fs: FeatureSet) -> None:
    """Serialize to FOCC v1. Refuses sets that fail validate()."""
    report = validate(fs)
    if not report.ok:
        raise InvalidFeatureSetError(report.issues)
    meta_bytes = fs.meta.encode("utf-8")
    flags = FLAG_LABELS | (FLAG_MASKS if fs.masks is not None else 0)
    parts = [
        struct.pack("<4sI", MAGIC, VERSION),
        struct.pack(
            "<QIIIBI",
            fs.n_samples,
            fs.channels,
            fs.height,
            fs.width,
            flags,
            len(meta_bytes),
        ),
        meta_bytes,
        fs.data.astype("<f4", copy=False).tobytes(),
        fs.labels.tobytes(),
    ]
    if fs.masks is not None:
        parts.append(struct.pack("<II", fs.masks.shape[1], fs.masks.shape[2]))
        parts.append(fs.masks.tobytes())
    try:
        with open(path, "wb") as fh:
            fh.write(b"".join(parts))
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


class _Cursor:
    """Bounds-checked reader over a bytes buffer."""

    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.buf):
            raise TruncatedError(
                f"truncated while reading {what}: need {n} bytes at offset {self.pos}"
            )
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def read_focc(path) -> FeatureSet:
    """Parse a FOCC v1 file, checking magic, version, sizes, and label bytes."""
    try:
        with open(path, "rb") as fh:
            buf = fh.read()
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from exc

    cur = _Cursor(buf)
    magic, version = cur.unpack("<4sI", "header")
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported version {version}")
    n, c, h, w, flags, meta_len = cur.unpack("<QIIIBI", "dimensions")
    meta = cur.take(meta_len, "meta").decode("utf-8")
    data = np.frombuffer(
        cur.take(n * c * h * w * 4, "data"), dtype="<f4"
    ).reshape(n, c, h, w)
    if flags & FLAG_LABELS:
        labels = np.frombuffer(cur.take(n, "labels"), dtype=np.uint8)
        bad = np.flatnonzero(~np.isin(labels, _VALID_LABELS))
        if bad.size:
            raise BadLabelError(
                f"sample={bad[0]} label={int(labels[bad[0]])} outside {{0,1,255}}"
            )
    else:
        labels = np.full(n, LABEL_UNKNOWN, dtype=np.uint8)
    masks = None
    if flags & FLAG_MASKS:
        mh, mw = cur.unpack("<II", "mask dimensions")
        masks = np.frombuffer(cur.take(n * mh * mw, "masks"), dtype=np.uint8)
        if not np.isin(masks, (0, 1)).all():
            raise BadMaskError("mask values outside {0, 1}")
        masks = masks.reshape(n, mh, mw).copy()
    if cur.pos != len(buf):
        raise FormatError(f"{len(buf) - cur.pos} trailing bytes after payload")
    return FeatureSet(data=data.copy(), labels=labels.copy(), meta=meta, masks=masks)


def split_by_label(fs: FeatureSet):
    """Split into (normals, anomalies); unknown (255) samples go to neither.

    Sample order within each split is preserved.
    """
    def _pick(mask):
        return FeatureSet(
            data=fs.data[mask].copy(),
            labels=fs.labels[mask].copy(),
            meta=fs.meta,
            masks=fs.masks[mask].copy() if fs.masks is not None else None,
        )

    return _pick(fs.labels == LABEL_NORMAL), _pick(fs.labels == LABEL_ANOMALY)
