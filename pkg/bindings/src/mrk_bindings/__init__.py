"""In-process bindings for the mrk corruption and augmentation kernels.

Host training loops hand in contiguous float32 numpy arrays and get new
arrays back: no file I/O, no CLI, no buffer retention. Inputs are borrowed
for the call only; every function validates contiguity/dtype/shape before
any computation and returns freshly allocated, writable arrays. Heavy work
happens inside vectorized numpy/scipy kernels, which release the GIL, so
the functions are safe to call from multiple host threads.

Under equal seeds results are bit-exact with the primary package: the
random stream is derived as ``RngStream(seed).child(*path)``. Corruption
defaults to ``path = (kind, severity)``; pass the case id first, i.e.
``path=(case_id, kind, severity)``, to reproduce a file generated by
``mrk corrupt`` exactly.
"""

from __future__ import annotations

from typing import Optional, Sequence, Union

import numpy as np

from mrk import __version__ as _mrk_version
from mrk import augmentations as _aug
from mrk.corruptions import SeverityConfig, TransformKind, apply_corruption as _apply
from mrk.errors import MrkError
from mrk.rng import RngStream
from mrk.volume import ProbMask, Volume

__version__ = _mrk_version

__all__ = [
    "__version__",
    "apply_corruption",
    "mixup",
    "cutmix",
    "afa",
    "make_afa_pair",
    "base_augment",
]

Spacing = Sequence[float]
PathTokens = Sequence[Union[str, int]]


def _check(arr: np.ndarray, ndim: int, name: str) -> np.ndarray:
    if not isinstance(arr, np.ndarray):
        raise TypeError(f"{name} must be a numpy array, got {type(arr).__name__}")
    if arr.dtype != np.float32:
        raise ValueError(f"{name} must be float32, got {arr.dtype}")
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-D, got {arr.ndim}-D")
    if not arr.flags.c_contiguous:
        raise ValueError(f"{name} must be C-contiguous")
    return arr


def _volume(arr: np.ndarray, spacing: Spacing) -> Volume:
    # copy so the borrowed host buffer is never write-locked or retained
    return Volume(np.array(arr), tuple(spacing))


def _probs(arr: np.ndarray, spacing: Spacing) -> ProbMask:
    return ProbMask(np.array(arr), tuple(spacing))


def _out(arr: np.ndarray) -> np.ndarray:
    return np.array(arr)


def apply_corruption(
    arr: np.ndarray,
    spacing: Spacing,
    kind: str,
    severity: int,
    seed: int,
    path: Optional[PathTokens] = None,
    config: Optional[dict] = None,
) -> np.ndarray:
    """Apply one corruption transform to a (channels, z, y, x) array.

    ``kind`` is a transform name (CamelCase or snake_case). ``config`` is
    an optional severity table as in the severity config JSON. Equal
    (inputs, seed, path) reproduce equal bytes along the primary path.
    """
    _check(arr, 4, "arr")
    try:
        kind_parsed = TransformKind.parse(kind)
        cfg = SeverityConfig(config) if config is not None else SeverityConfig.default()
        tokens = tuple(path) if path is not None else (kind_parsed.value, int(severity))
        rng = RngStream(int(seed)).child(*tokens)
        out = _apply(_volume(arr, spacing), kind_parsed, severity, cfg, rng)
    except MrkError as exc:
        raise ValueError(str(exc)) from exc
    return _out(out.data)


def _check_batch_pair(a_imgs, a_masks, b_imgs, b_masks):
    for name, arr in (("a_imgs", a_imgs), ("a_masks", a_masks), ("b_imgs", b_imgs), ("b_masks", b_masks)):
        _check(arr, 5, name)
    if not (a_imgs.shape == b_imgs.shape and a_masks.shape == b_masks.shape):
        raise ValueError("paired batches must have identical shapes")
    if a_imgs.shape[0] != a_masks.shape[0]:
        raise ValueError("image and mask batches must have equal length")
    if a_imgs.shape[2:] != a_masks.shape[2:]:
        raise ValueError("image and mask grids differ")


def mixup(
    a_imgs: np.ndarray,
    a_masks: np.ndarray,
    b_imgs: np.ndarray,
    b_masks: np.ndarray,
    beta_alpha: float = 0.2,
    seed: int = 0,
    lam: Optional[float] = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched convex combination of sample pairs; returns the weights too.

    Batches are (B, channels, z, y, x) images and (B, classes, z, y, x)
    probability masks; element i uses the substream (mixup, i). B = 0
    yields empty outputs.
    """
    _check_batch_pair(a_imgs, a_masks, b_imgs, b_masks)
    out_imgs = np.empty_like(a_imgs)
    out_masks = np.empty_like(a_masks)
    lams = np.empty(a_imgs.shape[0], dtype=np.float64)
    root = RngStream(int(seed))
    try:
        params = _aug.MixupParams(beta_alpha)
        for i in range(a_imgs.shape[0]):
            img, probs, lam_i = _aug.mixup(
                (_volume(a_imgs[i], (1, 1, 1)), _probs(a_masks[i], (1, 1, 1))),
                (_volume(b_imgs[i], (1, 1, 1)), _probs(b_masks[i], (1, 1, 1))),
                params,
                root.child("mixup", i),
                lam=lam,
            )
            out_imgs[i] = img.data
            out_masks[i] = probs.probs
            lams[i] = lam_i
    except MrkError as exc:
        raise ValueError(str(exc)) from exc
    return out_imgs, out_masks, lams


def cutmix(
    a_imgs: np.ndarray,
    a_masks: np.ndarray,
    b_imgs: np.ndarray,
    b_masks: np.ndarray,
    beta_alpha: float = 0.2,
    seed: int = 0,
    lam: Optional[float] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Batched box replacement; element i uses the substream (cutmix, i)."""
    _check_batch_pair(a_imgs, a_masks, b_imgs, b_masks)
    out_imgs = np.empty_like(a_imgs)
    out_masks = np.empty_like(a_masks)
    root = RngStream(int(seed))
    try:
        params = _aug.MixupParams(beta_alpha)
        for i in range(a_imgs.shape[0]):
            img, probs = _aug.cutmix(
                (_volume(a_imgs[i], (1, 1, 1)), _probs(a_masks[i], (1, 1, 1))),
                (_volume(b_imgs[i], (1, 1, 1)), _probs(b_masks[i], (1, 1, 1))),
                root.child("cutmix", i),
                params,
                lam=lam,
            )
            out_imgs[i] = img.data
            out_masks[i] = probs.probs
    except MrkError as exc:
        raise ValueError(str(exc)) from exc
    return out_imgs, out_masks


def afa(
    arrs: np.ndarray,
    mu: float = 0.05,
    relative_to_range: bool = True,
    coords_per_sample: int = 1,
    sign_symmetric: bool = True,
    seed: int = 0,
) -> np.ndarray:
    """Batched Fourier-coefficient perturbation of (B, C, z, y, x) images.

    Element i uses the substream (afa, i).
    """
    _check(arrs, 5, "arrs")
    out = np.empty_like(arrs)
    root = RngStream(int(seed))
    try:
        params = _aug.AfaParams(mu, relative_to_range, coords_per_sample, sign_symmetric)
        for i in range(arrs.shape[0]):
            out[i] = _aug.afa_augment(_volume(arrs[i], (1, 1, 1)), params, root.child("afa", i)).data
    except MrkError as exc:
        raise ValueError(str(exc)) from exc
    return out


def make_afa_pair(
    img: np.ndarray,
    mask: np.ndarray,
    mu: float = 0.05,
    relative_to_range: bool = True,
    coords_per_sample: int = 1,
    sign_symmetric: bool = True,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Joint-loss pair for one sample: (clean image, augmented image, mask).

    The clean image and mask are returned as fresh copies of the inputs.
    """
    _check(img, 4, "img")
    _check(mask, 4, "mask")
    try:
        params = _aug.AfaParams(mu, relative_to_range, coords_per_sample, sign_symmetric)
        pair = _aug.make_afa_pair(
            (_volume(img, (1, 1, 1)), _probs(mask, (1, 1, 1))),
            params,
            RngStream(int(seed)).child("afa-pair"),
        )
    except MrkError as exc:
        raise ValueError(str(exc)) from exc
    return _out(pair.clean[0].data), _out(pair.afa[0].data), _out(pair.clean[1].probs)


def base_augment(
    img: np.ndarray,
    mask: np.ndarray,
    spacing: Spacing = (1.0, 1.0, 1.0),
    seed: int = 0,
    config: Optional[dict] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Base augmentation set on one sample; geometric draws move image and
    mask together. ``config`` overrides probability/range fields."""
    _check(img, 4, "img")
    _check(mask, 4, "mask")
    try:
        cfg = _aug.BaseAugmentConfig(**config) if config else _aug.BaseAugmentConfig()
    except TypeError as exc:
        raise ValueError(f"bad base-augmentation config: {exc}") from exc
    try:
        vol, probs = _aug.base_augment(
            (_volume(img, spacing), _probs(mask, spacing)),
            RngStream(int(seed)).child("base"),
            cfg,
        )
    except MrkError as exc:
        raise ValueError(str(exc)) from exc
    return _out(vol.data), _out(probs.probs)
