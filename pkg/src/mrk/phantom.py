"""Deterministic synthetic phantoms for tests, demos, and benchmarks."""

from __future__ import annotations

import numpy as np

from .volume import LabelMask, Volume


def make_phantom(
    dims: tuple[int, int, int] = (96, 96, 8),
    channels: int = 1,
    spacing: tuple[float, float, float] = (1.5, 1.5, 5.0),
) -> Volume:
    """Smooth, asymmetric blob phantom with a background gradient.

    Intensities span roughly [0, 1000]; structure is off-center so every
    geometric transform produces a measurable change.
    """
    nx, ny, nz = dims
    zz, yy, xx = np.meshgrid(
        np.linspace(-1, 1, nz) if nz > 1 else np.zeros(1),
        np.linspace(-1, 1, ny),
        np.linspace(-1, 1, nx),
        indexing="ij",
    )
    base = 100.0 + 60.0 * xx + 40.0 * yy

    def blob(cx, cy, cz, rx, ry, rz, amp):
        d2 = ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2 + ((zz - cz) / rz) ** 2
        return amp * np.exp(-3.0 * d2)

    img = (
        base
        + blob(-0.15, 0.05, 0.0, 0.55, 0.6, 1.2, 600.0)
        + blob(0.3, -0.25, 0.2, 0.25, 0.2, 0.8, 350.0)
        + blob(-0.45, -0.4, -0.3, 0.15, 0.18, 0.9, 250.0)
        - blob(-0.15, 0.05, 0.0, 0.22, 0.25, 1.0, 280.0)
    )
    data = np.stack([img * (1.0 + 0.1 * c) for c in range(channels)]).astype(np.float32)
    return Volume(data, spacing)


def make_label_phantom(
    dims: tuple[int, int, int] = (96, 96, 8),
    spacing: tuple[float, float, float] = (1.5, 1.5, 5.0),
    num_classes: int = 3,
) -> LabelMask:
    """Nested-ellipsoid label mask aligned with :func:`make_phantom`."""
    nx, ny, nz = dims
    zz, yy, xx = np.meshgrid(
        np.linspace(-1, 1, nz) if nz > 1 else np.zeros(1),
        np.linspace(-1, 1, ny),
        np.linspace(-1, 1, nx),
        indexing="ij",
    )
    labels = np.zeros((nz, ny, nx), dtype=np.int32)
    d_outer = ((xx + 0.15) / 0.5) ** 2 + ((yy - 0.05) / 0.55) ** 2 + (zz / 1.2) ** 2
    labels[d_outer < 1.0] = 1
    if num_classes > 2:
        d_inner = ((xx + 0.15) / 0.22) ** 2 + ((yy - 0.05) / 0.25) ** 2 + (zz / 1.0) ** 2
        labels[d_inner < 1.0] = 2
    return LabelMask(labels, num_classes, spacing)
