"""Shared resampling primitives: rigid in-plane maps, axis resizing,
elastic fields, Gaussian smoothing. Used by both the corruption and the
augmentation kernels so that image and mask always see identical geometry.

Conventions: arrays are (C, nz, ny, nx); in-plane means the (y, x) axes;
rotation is about the slice center ((n-1)/2); axis resizing uses the
pixel-center mapping t = (i + 0.5) * n_in / n_out - 0.5 (identity when
n_in == n_out).
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage


def rigid_inplane_coords(ny: int, nx: int, angle_deg: float, shift_yx: tuple[float, float] = (0.0, 0.0)) -> np.ndarray:
    """Inverse-map sampling coordinates for rotate-then-translate.

    Returns (2, ny, nx): input-space (y, x) to sample for each output voxel.
    ``shift_yx`` is in voxels.
    """
    cy, cx = (ny - 1) / 2.0, (nx - 1) / 2.0
    theta = np.deg2rad(angle_deg)
    cos, sin = np.cos(theta), np.sin(theta)
    yy, xx = np.meshgrid(np.arange(ny, dtype=np.float64), np.arange(nx, dtype=np.float64), indexing="ij")
    y0 = yy - cy - shift_yx[0]
    x0 = xx - cx - shift_yx[1]
    # inverse rotation of the translated output grid
    ys = cos * y0 + sin * x0 + cy
    xs = -sin * y0 + cos * x0 + cx
    return np.stack([ys, xs])


def scale_inplane_coords(ny: int, nx: int, factor: float) -> np.ndarray:
    """Inverse-map coordinates for zoom about the slice center."""
    cy, cx = (ny - 1) / 2.0, (nx - 1) / 2.0
    yy, xx = np.meshgrid(np.arange(ny, dtype=np.float64), np.arange(nx, dtype=np.float64), indexing="ij")
    ys = (yy - cy) / factor + cy
    xs = (xx - cx) / factor + cx
    return np.stack([ys, xs])


def warp_inplane(data: np.ndarray, coords: np.ndarray, order: int, fill) -> np.ndarray:
    """Apply an in-plane coordinate map to every channel and slice.

    ``fill`` is a scalar or per-channel sequence for out-of-field voxels.
    """
    nc, nz = data.shape[:2]
    fills = np.broadcast_to(np.asarray(fill, dtype=np.float64), (nc,))
    out = np.empty_like(data)
    for c in range(nc):
        for z in range(nz):
            out[c, z] = ndimage.map_coordinates(
                data[c, z], coords, order=order, mode="grid-constant", cval=fills[c], prefilter=False
            ).astype(data.dtype)
    return out


def warp_labels_inplane(labels: np.ndarray, coords: np.ndarray, fill: int = 0) -> np.ndarray:
    """Nearest-neighbor in-plane warp of a (nz, ny, nx) integer mask."""
    out = np.empty_like(labels)
    for z in range(labels.shape[0]):
        out[z] = ndimage.map_coordinates(
            labels[z], coords, order=0, mode="grid-constant", cval=fill, prefilter=False
        )
    return out


def _axis_resize_coords(n_in: int, n_out: int) -> np.ndarray:
    t = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    return np.clip(t, 0.0, n_in - 1)


def resize_axis(data: np.ndarray, axis: int, n_out: int) -> np.ndarray:
    """Linear resampling along one axis with pixel-center alignment."""
    n_in = data.shape[axis]
    if n_out == n_in:
        return data
    t = _axis_resize_coords(n_in, n_out)
    lo = np.floor(t).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    w = (t - lo).astype(data.dtype if np.issubdtype(data.dtype, np.floating) else np.float64)
    a = np.take(data, lo, axis=axis)
    b = np.take(data, hi, axis=axis)
    shape = [1] * data.ndim
    shape[axis] = n_out
    w = w.reshape(shape)
    return (a * (1 - w) + b * w).astype(data.dtype, copy=False)


def downsample_roundtrip(data: np.ndarray, factors: dict[int, float]) -> np.ndarray:
    """Resolution loss: shrink by per-axis factors, then resize back."""
    shrunk = data
    sizes = {}
    for axis, f in factors.items():
        n = data.shape[axis]
        sizes[axis] = n
        shrunk = resize_axis(shrunk, axis, max(1, int(round(n / f))))
    out = shrunk
    for axis, n in sizes.items():
        out = resize_axis(out, axis, n)
    return out


def control_point_field(shape_zyx: tuple[int, int, int], ctrl: np.ndarray) -> np.ndarray:
    """Trilinearly interpolate a (3, g, g, g) control lattice to a dense field.

    Control points span the volume extent inclusively; returns
    (3, nz, ny, nx) displacement components in voxel units.
    """
    g = ctrl.shape[1]
    coords = np.meshgrid(
        *[np.arange(n, dtype=np.float64) * ((g - 1) / (n - 1) if n > 1 else 0.0) for n in shape_zyx],
        indexing="ij",
    )
    coords = np.stack(coords)
    field = np.empty((3,) + tuple(shape_zyx), dtype=np.float64)
    for i in range(3):
        field[i] = ndimage.map_coordinates(ctrl[i], coords, order=1, mode="nearest", prefilter=False)
    return field


def warp_dense(data: np.ndarray, field: np.ndarray, order: int = 1) -> np.ndarray:
    """Resample (C, nz, ny, nx) data through a dense displacement field
    with edge clamping."""
    shape = data.shape[1:]
    base = np.stack(np.meshgrid(*[np.arange(n, dtype=np.float64) for n in shape], indexing="ij"))
    coords = base + field
    out = np.empty_like(data)
    for c in range(data.shape[0]):
        out[c] = ndimage.map_coordinates(
            data[c], coords, order=order, mode="nearest", prefilter=False
        ).astype(data.dtype)
    return out


def warp_labels_dense(labels: np.ndarray, field: np.ndarray) -> np.ndarray:
    """Nearest-neighbor dense warp of a (nz, ny, nx) integer mask."""
    shape = labels.shape
    base = np.stack(np.meshgrid(*[np.arange(n, dtype=np.float64) for n in shape], indexing="ij"))
    return ndimage.map_coordinates(labels, base + field, order=0, mode="nearest", prefilter=False)


def gaussian_smooth(data: np.ndarray, sigma_vox_zyx: tuple[float, float, float]) -> np.ndarray:
    """Per-channel Gaussian smoothing, truncated at 4 sigma, edge-replicated."""
    out = np.empty_like(data)
    for c in range(data.shape[0]):
        out[c] = ndimage.gaussian_filter(
            data[c].astype(np.float64), sigma=sigma_vox_zyx, truncate=4.0, mode="nearest"
        ).astype(data.dtype)
    return out
