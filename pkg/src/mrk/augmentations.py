"""Training-time augmentation kernels.

MixUp forms voxelwise convex combinations of two samples and their
probability masks with a single Beta-distributed weight. CutMix pastes an
axis-aligned box from one sample into the other (image and mask). The
Fourier-domain kernel adds a random-amplitude coefficient at a random
non-DC frequency (and its Hermitian mirror) per slice, which appears as a
planar wave in image space; the label is left unchanged and the paired
clean/augmented sample contract is provided for joint-loss training.

The base set mirrors the usual segmentation-training augmentations:
rotation, scaling, additive Gaussian noise, Gaussian blur, brightness,
contrast, low-resolution simulation, gamma correction, and mirroring.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import resample
from .errors import ConfigError, GridMismatchError
from .rng import RngStream, as_generator
from .volume import ProbMask, Volume, intensity_range

Rng = Union[RngStream, np.random.Generator]
Sample = tuple[Volume, ProbMask]


@dataclass(frozen=True)
class MixupParams:
    """Beta(alpha, alpha) concentration for the mixing weight."""

    beta_alpha: float = 0.2

    def __post_init__(self):
        if self.beta_alpha <= 0:
            raise ConfigError("beta_alpha must be > 0")


@dataclass(frozen=True)
class AfaParams:
    """Fourier-augmentation parameters.

    ``mu`` is the mean of the exponential amplitude law. With
    ``relative_to_range`` (default) it is a fraction of each channel's
    1st-99th percentile range, so the default 0.05 yields planar waves
    whose peak-to-center amplitude averages 10% of the intensity range.
    Spectral additions are scaled by the transformed grid size, so the
    image-space wave amplitude is resolution-invariant.
    """

    mu: float = 0.05
    relative_to_range: bool = True
    coords_per_sample: int = 1
    sign_symmetric: bool = True

    def __post_init__(self):
        if self.mu <= 0:
            raise ConfigError("mu must be > 0")
        if self.coords_per_sample < 1:
            raise ConfigError("coords_per_sample must be >= 1")


@dataclass(frozen=True)
class AugmentedPair:
    """A clean sample and its Fourier-augmented twin sharing one mask."""

    clean: Sample
    afa: Sample


def _check_pair(a: Sample, b: Sample) -> None:
    va, ma = a
    vb, mb = b
    if va.dims != vb.dims or not np.allclose(va.spacing, vb.spacing):
        raise GridMismatchError(f"sample grids differ: {va.dims} vs {vb.dims}")
    if va.channels != vb.channels:
        raise GridMismatchError("sample channel counts differ")
    if ma.num_classes != mb.num_classes or ma.dims != mb.dims:
        raise GridMismatchError("mask grids or class counts differ")
    if ma.dims != va.dims:
        raise GridMismatchError("mask grid does not match its volume")


def mixup(
    a: Sample, b: Sample, params: MixupParams = MixupParams(), rng: Rng = None, lam: Optional[float] = None
) -> tuple[Volume, ProbMask, float]:
    """Convex combination of two samples; returns the drawn weight too.

    ``lam`` overrides the Beta draw (endpoint checks, loss bookkeeping).
    """
    _check_pair(a, b)
    if lam is None:
        lam = float(as_generator(rng).beta(params.beta_alpha, params.beta_alpha))
    if not (0.0 <= lam <= 1.0):
        raise ConfigError("lam must lie in [0, 1]")
    va, ma = a
    vb, mb = b
    w = np.float32(lam)
    img = va.with_data(w * va.data + (1 - w) * vb.data)
    probs = ProbMask(w * ma.probs + (1 - w) * mb.probs, ma.spacing, ma.affine)
    return img, probs, lam


def cutmix(
    a: Sample, b: Sample, rng: Rng = None, params: MixupParams = MixupParams(), lam: Optional[float] = None
) -> tuple[Volume, ProbMask]:
    """Paste an axis-aligned box of volume fraction (1 - lam) from b into a,
    at a uniform-random position (image and probability mask together)."""
    _check_pair(a, b)
    g = as_generator(rng) if rng is not None else None
    if lam is None:
        if g is None:
            raise ConfigError("cutmix needs an rng when lam is not given")
        lam = float(g.beta(params.beta_alpha, params.beta_alpha))
    if not (0.0 <= lam <= 1.0):
        raise ConfigError("lam must lie in [0, 1]")
    va, ma = a
    vb, mb = b
    shape_zyx = va.data.shape[1:]
    frac = (1.0 - lam) ** (1.0 / 3.0)
    sides = [min(n, int(round(n * frac))) for n in shape_zyx]
    los = []
    for n, s in zip(shape_zyx, sides):
        hi = n - s
        if s > 0 and hi > 0:
            if g is None:
                raise ConfigError("cutmix needs an rng to place the box")
            los.append(int(g.integers(0, hi + 1)))
        else:
            los.append(0)
    box = tuple(slice(lo, lo + s) for lo, s in zip(los, sides))

    img = np.array(va.data)
    img[(slice(None),) + box] = vb.data[(slice(None),) + box]
    probs = np.array(ma.probs)
    probs[(slice(None),) + box] = mb.probs[(slice(None),) + box]
    return va.with_data(img), ProbMask(probs, ma.spacing, ma.affine)


def _draw_slice_perturbations(g, channels: int, nz: int, ny: int, nx: int, params: AfaParams, mu_eff):
    """Fixed draw order: per channel, per slice, per coordinate:
    flat non-DC bin, amplitude, optional sign."""
    draws = []
    for c in range(channels):
        for z in range(nz):
            for _ in range(params.coords_per_sample):
                flat = int(g.integers(1, ny * nx))
                ky, kx = divmod(flat, nx)
                alpha = float(g.exponential(mu_eff[c]))
                if params.sign_symmetric and g.integers(0, 2) == 1:
                    alpha = -alpha
                draws.append((c, z, ky, kx, alpha))
    return draws


def afa_augment(v: Volume, params: AfaParams = AfaParams(), rng: Rng = None) -> Volume:
    """Perturb each slice's spectrum at one (or more) random non-DC
    coordinates by an Exp-distributed amplitude, Hermitian-mirrored.

    The image-space effect is an additive planar cosine of amplitude
    2*alpha (alpha for self-conjugate bins); DC is never touched, so the
    slice mean is preserved.
    """
    g = as_generator(rng)
    channels, nz, ny, nx = v.data.shape
    bounds = intensity_range(v.data)
    span = bounds[:, 1] - bounds[:, 0]
    if params.relative_to_range:
        mu_eff = np.where(span > 0, params.mu * span, params.mu)
    else:
        mu_eff = np.full(channels, params.mu)
    draws = _draw_slice_perturbations(g, channels, nz, ny, nx, params, mu_eff)

    spec = np.fft.fftn(v.data.astype(np.float64), axes=(-2, -1))
    scale = float(ny * nx)  # grid-size scaling keeps wave amplitude invariant
    for c, z, ky, kx, alpha in draws:
        add = alpha * scale
        spec[c, z, ky, kx] += add
        my, mx = (-ky) % ny, (-kx) % nx
        if (my, mx) != (ky, kx):
            spec[c, z, my, mx] += add
    out = np.fft.ifftn(spec, axes=(-2, -1)).real.astype(np.float32)
    return v.with_data(out)


def make_afa_pair(sample: Sample, params: AfaParams = AfaParams(), rng: Rng = None) -> AugmentedPair:
    """Build the joint-loss training pair: the clean sample untouched and a
    Fourier-augmented volume sharing the identical mask object."""
    vol, mask = sample
    return AugmentedPair(clean=(vol, mask), afa=(afa_augment(vol, params, rng), mask))


# ---------------------------------------------------------------------------
# base augmentation set

@dataclass(frozen=True)
class BaseAugmentConfig:
    """Per-op probabilities and parameter ranges for the base set."""

    p_rotation: float = 0.2
    rotation_deg: float = 15.0
    p_scaling: float = 0.2
    scale_range: tuple[float, float] = (0.85, 1.25)
    p_noise: float = 0.1
    noise_sigma: float = 0.1  # fraction of intensity range
    p_blur: float = 0.2
    blur_sigma_mm: tuple[float, float] = (0.5, 1.5)
    p_brightness: float = 0.15
    brightness_range: tuple[float, float] = (0.75, 1.25)
    p_contrast: float = 0.15
    contrast_range: tuple[float, float] = (0.75, 1.25)
    p_lowres: float = 0.25
    lowres_factor: tuple[float, float] = (1.0, 2.0)
    p_gamma: float = 0.3
    gamma_range: tuple[float, float] = (0.7, 1.5)
    p_mirror: float = 0.5


def _renormalize(probs: np.ndarray) -> np.ndarray:
    sums = probs.sum(axis=0, keepdims=True)
    safe = np.where(sums > 1e-6, sums, 1.0)
    out = probs / safe
    background = np.zeros_like(probs)
    background[0] = 1.0
    return np.where(sums > 1e-6, out, background).astype(np.float32)


def _warp_sample(vol: Volume, probs: ProbMask, coords) -> tuple[Volume, ProbMask]:
    img = resample.warp_inplane(vol.data, coords, order=1, fill=vol.channel_min())
    # background plane fills with 1 so out-of-field stays valid probability
    planes = np.empty_like(probs.probs)
    for c in range(probs.num_classes):
        fill = 1.0 if c == 0 else 0.0
        planes[c] = resample.warp_inplane(probs.probs[c][None], coords, order=1, fill=fill)[0]
    return vol.with_data(img), ProbMask(_renormalize(planes), probs.spacing, probs.affine)


def base_augment(
    sample: Sample, rng: Rng = None, config: BaseAugmentConfig = BaseAugmentConfig()
) -> Sample:
    """Apply the eight base augmentations, each independently with its
    configured probability. Geometric ops transform image and mask with the
    same draw; intensity ops leave the mask untouched."""
    vol, probs = sample
    g = as_generator(rng)
    ny, nx = vol.data.shape[-2:]

    if g.uniform() < config.p_rotation:
        angle = g.uniform(-config.rotation_deg, config.rotation_deg)
        vol, probs = _warp_sample(vol, probs, resample.rigid_inplane_coords(ny, nx, angle))
    if g.uniform() < config.p_scaling:
        factor = g.uniform(*config.scale_range)
        vol, probs = _warp_sample(vol, probs, resample.scale_inplane_coords(ny, nx, factor))
    if g.uniform() < config.p_noise:
        bounds = intensity_range(vol.data)
        span = bounds[:, 1] - bounds[:, 0]
        sigma = g.uniform(0, config.noise_sigma)
        std = np.where(span > 0, sigma * span, sigma).reshape(-1, 1, 1, 1)
        vol = vol.with_data(vol.data + (g.standard_normal(vol.data.shape) * std).astype(np.float32))
    if g.uniform() < config.p_blur:
        sigma_mm = g.uniform(*config.blur_sigma_mm)
        sx, sy, sz = vol.spacing
        vol = vol.with_data(resample.gaussian_smooth(vol.data, (sigma_mm / sz, sigma_mm / sy, sigma_mm / sx)))
    if g.uniform() < config.p_brightness:
        vol = vol.with_data(vol.data * np.float32(g.uniform(*config.brightness_range)))
    if g.uniform() < config.p_contrast:
        factor = np.float32(g.uniform(*config.contrast_range))
        means = vol.data.mean(axis=(1, 2, 3), keepdims=True)
        vol = vol.with_data((vol.data - means) * factor + means)
    if g.uniform() < config.p_lowres:
        factor = g.uniform(*config.lowres_factor)
        vol = vol.with_data(resample.downsample_roundtrip(vol.data, {2: factor, 3: factor}))
    if g.uniform() < config.p_gamma:
        gamma = g.uniform(*config.gamma_range)
        bounds = intensity_range(vol.data)
        data = np.array(vol.data)
        for c in range(vol.channels):
            p1, p99 = bounds[c]
            if p99 > p1:
                u = np.clip((data[c].astype(np.float64) - p1) / (p99 - p1), 0.0, 1.0)
                data[c] = (p1 + (u**gamma) * (p99 - p1)).astype(np.float32)
        vol = vol.with_data(data)
    if g.uniform() < config.p_mirror:
        axis = int(g.integers(0, 2))  # 0 -> y, 1 -> x
        arr_axis = -2 + axis
        vol = vol.with_data(np.flip(vol.data, axis=arr_axis))
        probs = ProbMask(np.flip(probs.probs, axis=arr_axis), probs.spacing, probs.affine)
    return vol, probs


def load_config(path: Union[str, Path]) -> tuple[BaseAugmentConfig, MixupParams, AfaParams]:
    """Read the augmentation config JSON: {"base": ..., "mixup": ..., "afa": ...}."""
    doc = json.loads(Path(path).read_text())
    base_kwargs = doc.get("base", {})
    for key in ("scale_range", "blur_sigma_mm", "brightness_range", "contrast_range", "lowres_factor", "gamma_range"):
        if key in base_kwargs:
            base_kwargs[key] = tuple(base_kwargs[key])
    try:
        return (
            BaseAugmentConfig(**base_kwargs),
            MixupParams(**doc.get("mixup", {})),
            AfaParams(**doc.get("afa", {})),
        )
    except TypeError as exc:
        raise ConfigError(f"bad augmentation config: {exc}") from exc


def save_config(
    path: Union[str, Path],
    base: BaseAugmentConfig = BaseAugmentConfig(),
    mix: MixupParams = MixupParams(),
    afa: AfaParams = AfaParams(),
) -> None:
    doc = {"base": asdict(base), "mixup": asdict(mix), "afa": asdict(afa)}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")
