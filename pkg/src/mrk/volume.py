"""Core grid types: volumes, label masks, probability masks.

Canonical array layout is channel-major then z-major: ``data[c, z, y, x]``.
This matches NIfTI's on-disk order (x fastest) when the raw buffer is
reshaped C-style, so I/O never transposes. ``dims`` is always reported as
``(nx, ny, nz)`` and ``spacing`` as ``(sx, sy, sz)`` in millimeters.

All types are immutable after construction (arrays are write-locked);
operations return new objects and are safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateInputError, GridMismatchError, ValidationError


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


def _check_affine(affine: Optional[np.ndarray], spacing: tuple) -> np.ndarray:
    if affine is None:
        affine = np.diag([spacing[0], spacing[1], spacing[2], 1.0])
    affine = np.asarray(affine, dtype=np.float64)
    if affine.shape != (4, 4):
        raise ValidationError(f"affine must be 4x4, got {affine.shape}")
    if abs(np.linalg.det(affine[:3, :3])) < 1e-12:
        raise ValidationError("affine upper-left 3x3 block is singular")
    return affine


def _check_spacing(spacing) -> tuple[float, float, float]:
    spacing = tuple(float(s) for s in spacing)
    if len(spacing) != 3 or any(s <= 0 for s in spacing):
        raise ValidationError(f"spacing must be three positive values, got {spacing}")
    return spacing


@dataclass(frozen=True)
class Volume:
    """A scalar image grid with physical spacing and world orientation.

    ``data`` has shape ``(channels, nz, ny, nx)``, float32. A 3-D array is
    promoted to a single channel.
    """

    data: np.ndarray
    spacing: tuple[float, float, float]
    affine: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim == 3:
            data = data[None]
        if data.ndim != 4:
            raise ValidationError(f"volume data must be 3-D or 4-D, got ndim={data.ndim}")
        if min(data.shape) < 1:
            raise ValidationError(f"volume has an empty axis: shape {data.shape}")
        if not np.isfinite(data).all():
            bad = np.unravel_index(int(np.argmin(np.isfinite(data))), data.shape)
            c, z, y, x = bad
            raise ValidationError(f"non-finite voxel at (x={x}, y={y}, z={z}, channel={c})")
        object.__setattr__(self, "data", _freeze(data))
        object.__setattr__(self, "spacing", _check_spacing(self.spacing))
        object.__setattr__(self, "affine", _freeze(_check_affine(self.affine, self.spacing)))

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def dims(self) -> tuple[int, int, int]:
        c, nz, ny, nx = self.data.shape
        return (nx, ny, nz)

    def with_data(self, data: np.ndarray) -> "Volume":
        """Same grid, new voxel values."""
        return Volume(data, self.spacing, self.affine)

    def channel_min(self) -> np.ndarray:
        """Per-channel minimum, shaped for broadcasting."""
        return self.data.min(axis=(1, 2, 3))


@dataclass(frozen=True)
class LabelMask:
    """Integer segmentation mask on the same grid as a companion Volume."""

    labels: np.ndarray
    num_classes: int
    spacing: tuple[float, float, float]
    affine: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if not np.issubdtype(labels.dtype, np.integer):
            raise ValidationError(f"labels must be integer-typed, got {labels.dtype}")
        labels = labels.astype(np.int32, copy=False)
        if labels.ndim != 3:
            raise ValidationError(f"labels must be 3-D, got ndim={labels.ndim}")
        if self.num_classes < 2:
            raise ValidationError("num_classes must be at least 2")
        if labels.size and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise ValidationError(
                f"labels must lie in [0, {self.num_classes}), "
                f"found range [{labels.min()}, {labels.max()}]"
            )
        object.__setattr__(self, "labels", _freeze(labels))
        object.__setattr__(self, "spacing", _check_spacing(self.spacing))
        object.__setattr__(self, "affine", _freeze(_check_affine(self.affine, self.spacing)))

    @property
    def dims(self) -> tuple[int, int, int]:
        nz, ny, nx = self.labels.shape
        return (nx, ny, nz)

    def matches_grid(self, other) -> bool:
        return self.dims == other.dims and np.allclose(self.spacing, other.spacing)


@dataclass(frozen=True)
class ProbMask:
    """Per-class probability mask; ``probs[c, z, y, x]`` sums to 1 over c."""

    probs: np.ndarray
    spacing: tuple[float, float, float]
    affine: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float32)
        if probs.ndim != 4:
            raise ValidationError(f"probs must be 4-D (classes first), got ndim={probs.ndim}")
        if probs.shape[0] < 2:
            raise ValidationError("probability mask needs at least 2 classes")
        if probs.min() < -1e-6 or probs.max() > 1 + 1e-6:
            raise ValidationError("class probabilities must lie in [0, 1]")
        sums = probs.sum(axis=0, dtype=np.float64)
        if np.abs(sums - 1.0).max() > 1e-6:
            raise ValidationError("per-voxel class probabilities must sum to 1 within 1e-6")
        object.__setattr__(self, "probs", _freeze(probs))
        object.__setattr__(self, "spacing", _check_spacing(self.spacing))
        object.__setattr__(self, "affine", _freeze(_check_affine(self.affine, self.spacing)))

    @property
    def num_classes(self) -> int:
        return self.probs.shape[0]

    @property
    def dims(self) -> tuple[int, int, int]:
        c, nz, ny, nx = self.probs.shape
        return (nx, ny, nz)


def one_hot(mask: LabelMask) -> ProbMask:
    """One-hot encode a label mask into a probability mask."""
    classes = np.arange(mask.num_classes, dtype=np.int32)
    probs = (mask.labels[None] == classes[:, None, None, None]).astype(np.float32)
    return ProbMask(probs, mask.spacing, mask.affine)


def argmax_labels(probs: ProbMask) -> LabelMask:
    """Collapse a probability mask to hard labels (inverse of one_hot)."""
    labels = np.argmax(probs.probs, axis=0).astype(np.int32)
    return LabelMask(labels, probs.num_classes, probs.spacing, probs.affine)


def normalize_zscore(v: Volume) -> Volume:
    """Per-channel z-score normalization (population std).

    Raises DegenerateInputError on a zero-variance channel.
    """
    out = np.empty_like(v.data)
    for c in range(v.channels):
        chan = v.data[c].astype(np.float64)
        mean = chan.mean()
        std = chan.std()
        if std == 0.0:
            raise DegenerateInputError(f"channel {c} has zero variance")
        out[c] = ((chan - mean) / std).astype(np.float32)
    return v.with_data(out)


def intensity_range(data: np.ndarray, lo: float = 1.0, hi: float = 99.0) -> np.ndarray:
    """Per-channel (p_lo, p_hi) percentile bounds of a (C, z, y, x) array."""
    flat = data.reshape(data.shape[0], -1)
    return np.percentile(flat, [lo, hi], axis=1).T  # (C, 2)


def require_same_grid(a, b) -> None:
    """Raise GridMismatchError unless a and b share dims and spacing."""
    if a.dims != b.dims or not np.allclose(a.spacing, b.spacing):
        raise GridMismatchError(
            f"grids differ: dims {a.dims} vs {b.dims}, spacing {a.spacing} vs {b.spacing}"
        )
