"""Discrete Fourier transforms over volumes and k-space manipulation.

Convention: unnormalized forward transform, 1/N inverse (numpy's default).
Transforms run at the exact grid sizes (mixed-radix), so spectra and images
stay voxel-aligned. In-plane 2-D transforms are the default; full 3-D is
selectable. Spectra are stored as complex64; arithmetic runs in double
precision internally.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import ValidationError
from .volume import Volume, _freeze

log = logging.getLogger(__name__)

INPLANE_AXES = (-2, -1)
FULL_AXES = (-3, -2, -1)


def _resolve_axes(axes: Union[str, tuple[int, ...]]) -> tuple[int, ...]:
    if axes == "inplane":
        return INPLANE_AXES
    if axes == "full":
        return FULL_AXES
    axes = tuple(int(a) for a in axes)
    if not axes or any(a not in (-3, -2, -1) for a in axes):
        raise ValidationError(f"axes must be spatial (-3..-1), got {axes}")
    return axes


@dataclass(frozen=True)
class KSpace:
    """Complex spectrum of a volume over a declared set of spatial axes.

    ``centered`` is False when DC sits at index 0 (unshifted layout) and
    True after :func:`shift_center`. Grid metadata rides along so the
    inverse transform can rebuild a Volume.
    """

    data: np.ndarray
    axes: tuple[int, ...]
    centered: bool
    spacing: tuple[float, float, float]
    affine: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.dtype != np.complex64:
            data = data.astype(np.complex64)
        if data.ndim != 4:
            raise ValidationError(f"k-space data must be 4-D, got ndim={data.ndim}")
        object.__setattr__(self, "data", _freeze(data))
        object.__setattr__(self, "axes", tuple(self.axes))

    @property
    def dims(self) -> tuple[int, int, int]:
        c, nz, ny, nx = self.data.shape
        return (nx, ny, nz)


def fft_forward(v: Volume, axes: Union[str, tuple[int, ...]] = "inplane") -> KSpace:
    """Unnormalized forward DFT of a volume; DC at index 0."""
    ax = _resolve_axes(axes)
    for a in ax:
        if v.data.shape[a] < 2:
            raise ValidationError(f"axis {a} has length {v.data.shape[a]} < 2")
    spec = np.fft.fftn(v.data.astype(np.float64), axes=ax)
    return KSpace(spec.astype(np.complex64), ax, False, v.spacing, v.affine)


def fft_inverse(k: KSpace, return_residue: bool = False):
    """1/N-normalized inverse DFT; returns the real part as a Volume.

    The magnitude of the discarded imaginary residue (relative to the real
    peak) is logged, and returned when ``return_residue`` is set.
    """
    data = k.data.astype(np.complex128)
    if k.centered:
        data = np.fft.ifftshift(data, axes=k.axes)
    out = np.fft.ifftn(data, axes=k.axes)
    scale = np.abs(out.real).max()
    residue = float(np.abs(out.imag).max() / (scale if scale > 0 else 1.0))
    log.debug("fft_inverse imaginary residue: %.3e", residue)
    vol = Volume(out.real.astype(np.float32), k.spacing, k.affine)
    if return_residue:
        return vol, residue
    return vol


def shift_center(k: KSpace) -> KSpace:
    """Move DC from index 0 to the grid center (cyclic shift by n//2)."""
    if k.centered:
        raise ValidationError("k-space is already centered")
    return KSpace(np.fft.fftshift(k.data, axes=k.axes), k.axes, True, k.spacing, k.affine)


def unshift_center(k: KSpace) -> KSpace:
    """Inverse of shift_center; bit-exact involution."""
    if not k.centered:
        raise ValidationError("k-space is not centered")
    return KSpace(np.fft.ifftshift(k.data, axes=k.axes), k.axes, False, k.spacing, k.affine)


def hermitian_mirror(index: tuple[int, ...], shape: tuple[int, ...]) -> tuple[int, ...]:
    """Index of the conjugate-symmetric bin in unshifted layout."""
    return tuple((-i) % n for i, n in zip(index, shape))
