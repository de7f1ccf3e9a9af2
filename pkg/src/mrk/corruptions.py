"""Test-time MRI corruption transforms: 14 kinds, five severity levels.

Every transform is a pure function of (volume, parameters, rng stream):
the output grid always equals the input grid, outputs are finite, and
identical inputs reproduce identical bytes. K-space transforms operate
slice-wise in-plane (thick-slice data); geometric transforms resample back
to the source grid with the channel minimum as out-of-field fill.

Severity parameters are toolkit defaults, documented per transform below
and overridable through a JSON config file ( :class:`SeverityConfig` ).
Multi-channel volumes share geometric/random parameters across channels
while noise draws stay independent per channel.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from . import resample
from .errors import ConfigError, DegenerateInputError, ValidationError
from .rng import RngStream, as_generator
from .volume import LabelMask, Volume, intensity_range, require_same_grid

Rng = Union[RngStream, np.random.Generator]


class TransformKind(enum.Enum):
    """The closed set of corruption transforms; names are stable and used
    verbatim in output directories and CSV schemas."""

    ElasticDeformation = "ElasticDeformation"
    IsoDownsample = "IsoDownsample"
    AnisoDownsample = "AnisoDownsample"
    BiasField = "BiasField"
    ContrastCompression = "ContrastCompression"
    ContrastExpansion = "ContrastExpansion"
    Ghosting = "Ghosting"
    RandomMotion = "RandomMotion"
    RicianNoise = "RicianNoise"
    Smoothing = "Smoothing"
    Rotation = "Rotation"
    Scaling = "Scaling"
    SpikeNoise = "SpikeNoise"
    KSpaceSubsampling = "KSpaceSubsampling"

    @classmethod
    def parse(cls, name: str) -> "TransformKind":
        """Accept the canonical CamelCase name or a snake_case alias."""
        for kind in cls:
            if name == kind.value or name == _snake(kind.value):
                return kind
        raise ConfigError(f"unknown transform name: {name!r}")


def _snake(name: str) -> str:
    out = [name[0].lower()]
    for ch in name[1:]:
        if ch.isupper():
            out.append("_")
            out.append(ch.lower())
        else:
            out.append(ch)
    return "".join(out)


# transforms whose geometry can also be applied to a ground-truth mask
GEOMETRIC_KINDS = frozenset(
    {TransformKind.Rotation, TransformKind.Scaling, TransformKind.ElasticDeformation}
)

# Default severity ladders (1 mild .. 5 severe). Units: mm for physical
# distances, degrees for angles, fractions elsewhere.
_DEFAULT_PARAMS: dict[str, list[dict]] = {
    "RicianNoise": [{"sigma": s} for s in (0.02, 0.04, 0.07, 0.10, 0.15)],
    "Smoothing": [{"sigma_mm": s} for s in (0.5, 1.0, 1.5, 2.0, 3.0)],
    "BiasField": [{"magnitude": m, "order": 3} for m in (0.1, 0.2, 0.35, 0.5, 0.7)],
    # ghost count is fixed: the attenuated-line comb starts at frequency
    # num_ghosts, so escalating the count moves energy off the comb faster
    # than intensity adds it and severity stops being monotone
    "Ghosting": [
        {"num_ghosts": n, "intensity": i}
        for n, i in ((4, 0.2), (4, 0.35), (4, 0.5), (4, 0.65), (4, 0.8))
    ],
    "SpikeNoise": [{"num_spikes": 1, "amplitude": a} for a in (0.10, 0.20, 0.35, 0.50, 0.75)],
    "KSpaceSubsampling": [{"keep_fraction": f} for f in (0.9, 0.75, 0.6, 0.45, 0.3)],
    "IsoDownsample": [{"factor": f} for f in (1.25, 1.5, 2.0, 2.5, 3.0)],
    "AnisoDownsample": [{"factor": f} for f in (1.5, 2.0, 3.0, 4.0, 5.0)],
    "ContrastCompression": [{"gamma": g} for g in (0.8, 0.65, 0.5, 0.4, 0.3)],
    "ContrastExpansion": [{"gamma": g} for g in (1.25, 1.5, 2.0, 2.5, 3.3)],
    "ElasticDeformation": [{"max_disp_mm": d, "grid": 7} for d in (2.0, 4.0, 6.0, 9.0, 12.0)],
    "Rotation": [{"angle_deg": a} for a in (3.0, 7.0, 12.0, 20.0, 30.0)],
    "Scaling": [{"magnitude": m} for m in (0.05, 0.10, 0.15, 0.22, 0.30)],
    "RandomMotion": [
        {"num_movements": n, "max_rot_deg": r, "max_trans_mm": t}
        for n, r, t in ((1, 2, 2), (2, 4, 3), (2, 6, 5), (3, 8, 7), (3, 10, 10))
    ],
}

# per transform: (parameter that controls distortion, +1 if it grows with
# severity / -1 if it shrinks)
_MONOTONE_KEY: dict[str, tuple[str, int]] = {
    "RicianNoise": ("sigma", +1),
    "Smoothing": ("sigma_mm", +1),
    "BiasField": ("magnitude", +1),
    "Ghosting": ("intensity", +1),
    "SpikeNoise": ("amplitude", +1),
    "KSpaceSubsampling": ("keep_fraction", -1),
    "IsoDownsample": ("factor", +1),
    "AnisoDownsample": ("factor", +1),
    "ContrastCompression": ("gamma", -1),
    "ContrastExpansion": ("gamma", +1),
    "ElasticDeformation": ("max_disp_mm", +1),
    "Rotation": ("angle_deg", +1),
    "Scaling": ("magnitude", +1),
    "RandomMotion": ("max_rot_deg", +1),
}

CONFIG_VERSION = 1


@dataclass(frozen=True)
class SeverityConfig:
    """Per-transform parameter table for severity levels 1..5."""

    params: Mapping[str, tuple[dict, ...]]
    version: int = CONFIG_VERSION

    def __post_init__(self):
        table = {}
        for name, entries in self.params.items():
            TransformKind.parse(name)
            entries = tuple(dict(e) for e in entries)
            if len(entries) != 5:
                raise ConfigError(f"{name}: expected 5 severity entries, got {len(entries)}")
            key, direction = _MONOTONE_KEY[name]
            values = []
            for e in entries:
                if key not in e:
                    raise ConfigError(f"{name}: severity entry missing {key!r}")
                values.append(direction * float(e[key]))
            if any(b < a for a, b in zip(values, values[1:])):
                raise ConfigError(f"{name}: {key!r} must be monotone across severities")
            table[name] = entries
        object.__setattr__(self, "params", table)

    @classmethod
    def default(cls) -> "SeverityConfig":
        return cls(_DEFAULT_PARAMS)

    def get(self, kind: TransformKind, severity: int) -> dict:
        if not (1 <= int(severity) <= 5 and int(severity) == severity):
            raise ValidationError(f"severity must be in 1..5, got {severity}")
        if kind.value not in self.params:
            raise ConfigError(f"severity config has no entry for {kind.value}")
        return self.params[kind.value][int(severity) - 1]

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "SeverityConfig":
        doc = json.loads(Path(path).read_text())
        if doc.get("version") != CONFIG_VERSION:
            raise ConfigError(f"unsupported severity config version: {doc.get('version')!r}")
        if "transforms" not in doc:
            raise ConfigError("severity config is missing the 'transforms' object")
        return cls(doc["transforms"], version=doc["version"])

    def to_json(self, path: Union[str, Path]) -> None:
        doc = {"version": self.version, "transforms": {k: list(v) for k, v in self.params.items()}}
        Path(path).write_text(json.dumps(doc, indent=2) + "\n")

    def sha256(self) -> str:
        import hashlib

        canon = json.dumps(
            {"version": self.version, "transforms": {k: list(v) for k, v in sorted(self.params.items())}},
            sort_keys=True,
        )
        return hashlib.sha256(canon.encode()).hexdigest()


# ---------------------------------------------------------------------------
# k-space helpers (slice-wise in-plane, double precision internally)

def _fft2(data: np.ndarray) -> np.ndarray:
    return np.fft.fftn(data.astype(np.float64), axes=(-2, -1))


def _ifft2_real(spec: np.ndarray) -> np.ndarray:
    return np.fft.ifftn(spec, axes=(-2, -1)).real.astype(np.float32)


def _inplane_axis(index: int) -> int:
    # 0 -> y (axis -2), 1 -> x (axis -1)
    return -2 + index


# ---------------------------------------------------------------------------
# noise and intensity transforms

def rician_noise(v: Volume, sigma: float, rng: Rng) -> Volume:
    """Magnitude-image Rician noise: out = sqrt((x + n1)^2 + n2^2).

    ``sigma`` is a fraction of each channel's 1st-99th percentile intensity
    range; on a constant channel (zero range) it is taken as the absolute
    Gaussian standard deviation instead.
    """
    if sigma < 0:
        raise ValidationError("sigma must be >= 0")
    if sigma == 0:
        return v
    g = as_generator(rng)
    n1 = g.standard_normal(v.data.shape)
    n2 = g.standard_normal(v.data.shape)
    bounds = intensity_range(v.data)
    span = bounds[:, 1] - bounds[:, 0]
    std = np.where(span > 0, sigma * span, sigma).reshape(-1, 1, 1, 1)
    out = np.sqrt((v.data + n1 * std) ** 2 + (n2 * std) ** 2)
    return v.with_data(out.astype(np.float32))


def _bias_exponents(order: int) -> list[tuple[int, int, int]]:
    return [
        (a, b, c)
        for a in range(order + 1)
        for b in range(order + 1 - a)
        for c in range(order + 1 - a - b)
    ]


def bias_field(v: Volume, magnitude: float, order: int, rng: Rng) -> Volume:
    """Multiplicative smooth field exp(P(u)) with a random polynomial P of
    total degree <= order over normalized coordinates u in [-1, 1]^3."""
    if order < 1:
        raise ValidationError("polynomial order must be >= 1")
    g = as_generator(rng)
    exponents = _bias_exponents(order)
    coeffs = g.uniform(-magnitude, magnitude, len(exponents))
    nz, ny, nx = v.data.shape[1:]
    axes = [np.linspace(-1.0, 1.0, n) if n > 1 else np.zeros(1) for n in (nz, ny, nx)]
    uz = axes[0][:, None, None]
    uy = axes[1][None, :, None]
    ux = axes[2][None, None, :]
    poly = np.zeros((nz, ny, nx))
    for (a, b, c), coef in zip(exponents, coeffs):
        poly += coef * (ux**a) * (uy**b) * (uz**c)
    field = np.exp(poly).astype(np.float32)
    return v.with_data(v.data * field)


def intensity_map(v: Volume, mode: str, param: float) -> Volume:
    """Contrast gamma mapping on the percentile-normalized intensities, or
    Gaussian smoothing (sigma in mm, truncated at 4 sigma)."""
    if mode in ("gamma-compress", "gamma-expand"):
        gamma = float(param)
        if gamma <= 0:
            raise ValidationError("gamma must be > 0")
        if gamma == 1.0:
            return v  # exact identity; the mapping below would still clamp outliers
        bounds = intensity_range(v.data)
        out = np.empty_like(v.data)
        for c in range(v.channels):
            p1, p99 = bounds[c]
            if p99 <= p1:
                raise DegenerateInputError(f"channel {c} has a degenerate intensity range")
            u = np.clip((v.data[c].astype(np.float64) - p1) / (p99 - p1), 0.0, 1.0)
            out[c] = (p1 + (u**gamma) * (p99 - p1)).astype(np.float32)
        return v.with_data(out)
    if mode == "smooth":
        sigma_mm = float(param)
        if sigma_mm < 0:
            raise ValidationError("smoothing sigma must be >= 0")
        if sigma_mm == 0:
            return v
        sx, sy, sz = v.spacing
        sigma_vox = (sigma_mm / sz, sigma_mm / sy, sigma_mm / sx)
        return v.with_data(resample.gaussian_smooth(v.data, sigma_vox))
    raise ValidationError(f"unknown intensity mode: {mode!r}")


# ---------------------------------------------------------------------------
# k-space transforms

def ghosting(v: Volume, num_ghosts: int, intensity: float, axis: int, rng: Rng = None) -> Volume:
    """Attenuate every num_ghosts-th in-plane k-space line (DC excluded) by
    (1 - intensity), producing num_ghosts replicas along the phase axis.

    The transform itself draws nothing; ``rng`` is accepted so all kernels
    share a signature (the dispatcher draws the phase axis).
    """
    if not (0 <= intensity <= 1):
        raise ValidationError("ghosting intensity must be in [0, 1]")
    if num_ghosts < 1:
        raise ValidationError("num_ghosts must be >= 1")
    ax = _inplane_axis(axis) if axis in (0, 1) else int(axis)
    n = v.data.shape[ax]
    if num_ghosts >= n:
        raise ValidationError(f"num_ghosts {num_ghosts} exceeds phase-axis length {n}")
    weights = np.ones(n)
    weights[::num_ghosts] = 1.0 - intensity
    weights[0] = 1.0  # DC line untouched
    shape = [1, 1, 1, 1]
    shape[ax] = n
    spec = _fft2(v.data) * weights.reshape(shape)
    return v.with_data(_ifft2_real(spec))


def spike_noise(v: Volume, num_spikes: int, amplitude: float, rng: Rng) -> Volume:
    """Add high-magnitude samples at mid-band k-space coordinates
    (Hermitian-mirrored), producing global stripes.

    Spike magnitude is ``amplitude * max|X|`` per channel; a zero spectrum
    falls back to the in-plane grid size as the reference magnitude.
    """
    if amplitude < 0:
        raise ValidationError("spike amplitude must be >= 0")
    g = as_generator(rng)
    ny, nx = v.data.shape[-2:]
    cy, cx = ny // 2, nx // 2
    coords = []
    for _ in range(num_spikes):
        radius = g.uniform(0.1, 0.6)
        theta = g.uniform(0.0, 2.0 * math.pi)
        ky = (int(round(cy + radius * (ny / 2) * math.sin(theta))) - cy) % ny
        kx = (int(round(cx + radius * (nx / 2) * math.cos(theta))) - cx) % nx
        if ky == 0 and kx == 0:
            kx = 1
        coords.append((ky, kx))
    if amplitude == 0:
        return v
    spec = _fft2(v.data)
    for c in range(v.channels):
        peak = np.abs(spec[c]).max()
        if peak == 0:
            peak = float(ny * nx)
        add = amplitude * peak
        for ky, kx in coords:
            spec[c, :, ky, kx] += add
            my, mx = (-ky) % ny, (-kx) % nx
            if (my, mx) != (ky, kx):
                spec[c, :, my, mx] += add
    return v.with_data(_ifft2_real(spec))


def kspace_subsample(v: Volume, keep_fraction: float, axis: int) -> Volume:
    """Keep only the ceil(keep_fraction * n) k-space lines nearest DC along
    the phase axis (centered layout); zero the rest."""
    if not (0 < keep_fraction <= 1):
        raise ValidationError("keep_fraction must be in (0, 1]")
    ax = _inplane_axis(axis) if axis in (0, 1) else int(axis)
    n = v.data.shape[ax]
    keep = int(math.ceil(keep_fraction * n))
    center = n // 2
    dist = np.abs(np.arange(n) - center)
    order = np.lexsort((np.arange(n), dist))
    mask_centered = np.zeros(n)
    mask_centered[order[:keep]] = 1.0
    mask = np.fft.ifftshift(mask_centered)
    shape = [1, 1, 1, 1]
    shape[ax] = n
    spec = _fft2(v.data) * mask.reshape(shape)
    return v.with_data(_ifft2_real(spec))


def _rigid_copy(v: Volume, angle_deg: float, shift_yx_vox: tuple[float, float]) -> np.ndarray:
    coords = resample.rigid_inplane_coords(v.data.shape[-2], v.data.shape[-1], angle_deg, shift_yx_vox)
    return resample.warp_inplane(v.data, coords, order=1, fill=v.channel_min())


def motion_compose(
    v: Volume,
    transforms: Sequence[tuple[float, tuple[float, float]]],
    breakpoints: Sequence[int],
    axis: int,
) -> Volume:
    """Deterministic core of the motion artifact: k-space of the original
    and of each rigidly moved copy, stitched along the phase axis in
    centered layout at the given breakpoints.

    ``transforms`` lists (angle_deg, (ty_mm, tx_mm)) for copies 1..M; copy 0
    is the unmoved volume. ``breakpoints`` are M sorted cut positions.
    """
    ax = _inplane_axis(axis) if axis in (0, 1) else int(axis)
    n = v.data.shape[ax]
    cuts = [0] + [int(b) for b in breakpoints] + [n]
    if any(b < 0 or b > n for b in breakpoints) or any(
        a > b for a, b in zip(cuts, cuts[1:])
    ):
        raise ValidationError(f"breakpoints must be sorted within [0, {n}]")
    sx, sy, _ = v.spacing
    copies = [v.data]
    for angle, (ty_mm, tx_mm) in transforms:
        copies.append(_rigid_copy(v, angle, (ty_mm / sy, tx_mm / sx)))
    out_spec = None
    for j, data in enumerate(copies):
        lo, hi = cuts[j], cuts[j + 1]
        if lo == hi:
            continue
        spec = np.fft.fftshift(_fft2(data), axes=ax)
        if out_spec is None:
            out_spec = np.zeros_like(spec)
        sl = [slice(None)] * 4
        sl[ax] = slice(lo, hi)
        out_spec[tuple(sl)] = spec[tuple(sl)]
    out_spec = np.fft.ifftshift(out_spec, axes=ax)
    return v.with_data(_ifft2_real(out_spec))


def random_motion(
    v: Volume, num_movements: int, max_rot_deg: float, max_trans_mm: float, rng: Rng
) -> Volume:
    """Random rigid motion during acquisition: the phase axis is filled from
    successive rigidly moved copies of the volume at random breakpoints.

    Magnitudes are drawn from the upper half of the configured bounds
    (U(0.5, 1) * max) with random sign/direction, so severity ladders
    separate cleanly.
    """
    if num_movements < 1:
        raise ValidationError("num_movements must be >= 1")
    g = as_generator(rng)
    axis = int(g.integers(0, 2))
    n = v.data.shape[_inplane_axis(axis)]
    transforms = []
    for _ in range(num_movements):
        angle = max_rot_deg * g.uniform(0.5, 1.0) * (1 if g.integers(0, 2) == 0 else -1)
        mag = max_trans_mm * g.uniform(0.5, 1.0)
        phi = g.uniform(0.0, 2.0 * math.pi)
        transforms.append((angle, (mag * math.sin(phi), mag * math.cos(phi))))
    breakpoints = np.sort(g.integers(1, n, size=num_movements))
    return motion_compose(v, transforms, breakpoints.tolist(), axis)


# ---------------------------------------------------------------------------
# geometric transforms

def rotate_inplane(v: Volume, angle_deg: float) -> Volume:
    """Rotate in-plane about the slice center; out-of-field voxels take the
    channel minimum."""
    coords = resample.rigid_inplane_coords(v.data.shape[-2], v.data.shape[-1], angle_deg)
    return v.with_data(resample.warp_inplane(v.data, coords, order=1, fill=v.channel_min()))


def scale_inplane(v: Volume, factor: float) -> Volume:
    """Zoom in-plane about the slice center."""
    if factor <= 0:
        raise ValidationError("scale factor must be > 0")
    coords = resample.scale_inplane_coords(v.data.shape[-2], v.data.shape[-1], factor)
    return v.with_data(resample.warp_inplane(v.data, coords, order=1, fill=v.channel_min()))


def elastic_deform(v: Volume, max_disp_mm: float, grid: int, rng: Rng) -> Volume:
    """Random smooth deformation from a coarse lattice of displacement
    vectors (uniform in [-max_disp, max_disp] mm per axis)."""
    vol, _ = _elastic_with_field(v, max_disp_mm, grid, rng)
    return vol


def _elastic_with_field(v: Volume, max_disp_mm: float, grid: int, rng: Rng):
    if max_disp_mm < 0:
        raise ValidationError("max displacement must be >= 0")
    if grid < 2:
        raise ValidationError("control grid needs at least 2 points per axis")
    g = as_generator(rng)
    ctrl_mm = g.uniform(-max_disp_mm, max_disp_mm, size=(3, grid, grid, grid))
    sx, sy, sz = v.spacing
    ctrl_vox = ctrl_mm / np.array([sz, sy, sx]).reshape(3, 1, 1, 1)
    field = resample.control_point_field(v.data.shape[1:], ctrl_vox)
    out = resample.warp_dense(v.data, field, order=1)
    return v.with_data(out), field


def resample_geometric(v: Volume, mode: str, param: float, rng: Rng) -> Volume:
    """Grid-preserving geometric corruption.

    iso-down / aniso-down: trilinear downsample by ``param`` then upsample
    back (aniso picks one random in-plane axis). rotate: in-plane rotation
    by ``param`` degrees with random sign. scale: zoom about center by
    1 + param (direction random: in or out).
    """
    g = as_generator(rng)
    if mode == "iso-down":
        if param < 1:
            raise ValidationError("downsample factor must be >= 1")
        return v.with_data(
            resample.downsample_roundtrip(v.data, {1: param, 2: param, 3: param})
        )
    if mode == "aniso-down":
        if param < 1:
            raise ValidationError("downsample factor must be >= 1")
        axis = _inplane_axis(int(g.integers(0, 2)))
        return v.with_data(resample.downsample_roundtrip(v.data, {axis % 4: param}))
    if mode == "rotate":
        if abs(param) > 90:
            raise ValidationError("rotation magnitude must be <= 90 degrees")
        sign = 1.0 if g.integers(0, 2) == 0 else -1.0
        return rotate_inplane(v, sign * param)
    if mode == "scale":
        if param < 0:
            raise ValidationError("scale magnitude must be >= 0")
        factor = 1.0 + param if g.integers(0, 2) == 0 else 1.0 / (1.0 + param)
        return scale_inplane(v, factor)
    raise ValidationError(f"unknown geometric mode: {mode!r}")


# ---------------------------------------------------------------------------
# dispatch

def nrmse(corrupted: Volume, original: Volume) -> float:
    """Root-mean-square difference normalized by the reference range."""
    require_same_grid(corrupted, original)
    diff = corrupted.data.astype(np.float64) - original.data.astype(np.float64)
    span = float(original.data.max() - original.data.min())
    if span == 0:
        span = 1.0
    return float(np.sqrt(np.mean(diff**2)) / span)


def apply_corruption(
    v: Volume,
    kind: TransformKind,
    severity: int,
    cfg: Optional[SeverityConfig] = None,
    rng: Rng = None,
) -> Volume:
    """Apply one transform at the given severity. Deterministic in
    (volume, kind, severity, config, rng path)."""
    out, _ = apply_corruption_with_mask(v, None, kind, severity, cfg, rng)
    return out


def apply_corruption_with_mask(
    v: Volume,
    mask: Optional[LabelMask],
    kind: TransformKind,
    severity: int,
    cfg: Optional[SeverityConfig] = None,
    rng: Rng = None,
) -> tuple[Volume, Optional[LabelMask]]:
    """Like :func:`apply_corruption`, and for geometry-changing transforms
    (rotation, scaling, elastic deformation) also returns the identically
    transformed label mask (nearest-neighbor). Other kinds return None for
    the mask: their ground truth is unchanged."""
    cfg = cfg or SeverityConfig.default()
    if rng is None:
        raise ValidationError("an rng stream is required")
    if mask is not None:
        require_same_grid(v, mask)
    p = cfg.get(kind, severity)
    g = as_generator(rng)

    out_mask = None
    if kind is TransformKind.RicianNoise:
        out = rician_noise(v, p["sigma"], g)
    elif kind is TransformKind.Smoothing:
        out = intensity_map(v, "smooth", p["sigma_mm"])
    elif kind is TransformKind.BiasField:
        out = bias_field(v, p["magnitude"], p["order"], g)
    elif kind is TransformKind.ContrastCompression:
        out = intensity_map(v, "gamma-compress", p["gamma"])
    elif kind is TransformKind.ContrastExpansion:
        out = intensity_map(v, "gamma-expand", p["gamma"])
    elif kind is TransformKind.Ghosting:
        axis = int(g.integers(0, 2))
        out = ghosting(v, int(p["num_ghosts"]), p["intensity"], axis)
    elif kind is TransformKind.SpikeNoise:
        out = spike_noise(v, int(p["num_spikes"]), p["amplitude"], g)
    elif kind is TransformKind.KSpaceSubsampling:
        axis = int(g.integers(0, 2))
        out = kspace_subsample(v, p["keep_fraction"], axis)
    elif kind is TransformKind.RandomMotion:
        out = random_motion(v, int(p["num_movements"]), p["max_rot_deg"], p["max_trans_mm"], g)
    elif kind is TransformKind.IsoDownsample:
        out = resample_geometric(v, "iso-down", p["factor"], g)
    elif kind is TransformKind.AnisoDownsample:
        out = resample_geometric(v, "aniso-down", p["factor"], g)
    elif kind is TransformKind.Rotation:
        sign = 1.0 if g.integers(0, 2) == 0 else -1.0
        angle = sign * p["angle_deg"]
        out = rotate_inplane(v, angle)
        if mask is not None:
            coords = resample.rigid_inplane_coords(v.data.shape[-2], v.data.shape[-1], angle)
            out_mask = LabelMask(
                resample.warp_labels_inplane(mask.labels, coords),
                mask.num_classes, mask.spacing, mask.affine,
            )
    elif kind is TransformKind.Scaling:
        factor = 1.0 + p["magnitude"] if g.integers(0, 2) == 0 else 1.0 / (1.0 + p["magnitude"])
        out = scale_inplane(v, factor)
        if mask is not None:
            coords = resample.scale_inplane_coords(v.data.shape[-2], v.data.shape[-1], factor)
            out_mask = LabelMask(
                resample.warp_labels_inplane(mask.labels, coords),
                mask.num_classes, mask.spacing, mask.affine,
            )
    elif kind is TransformKind.ElasticDeformation:
        out, field = _elastic_with_field(v, p["max_disp_mm"], int(p["grid"]), g)
        if mask is not None:
            out_mask = LabelMask(
                resample.warp_labels_dense(mask.labels, field),
                mask.num_classes, mask.spacing, mask.affine,
            )
    else:  # pragma: no cover - closed enum
        raise ConfigError(f"unhandled transform kind: {kind}")
    return out, out_mask
