"""Buffer contracts: every violation is rejected before any computation."""

import numpy as np
import pytest

import mrk_bindings as mb


def good_image():
    return np.random.default_rng(0).normal(0, 1, (1, 2, 8, 8)).astype(np.float32)


def good_probs():
    labels = np.random.default_rng(1).integers(0, 2, (2, 8, 8))
    return np.ascontiguousarray((labels[None] == np.arange(2)[:, None, None, None]).astype(np.float32))


def test_non_contiguous_rejected():
    arr = good_image()[:, :, ::2, :]
    assert not arr.flags.c_contiguous
    with pytest.raises(ValueError, match="contiguous"):
        mb.apply_corruption(arr, (1, 1, 1), "RicianNoise", 1, 0)


def test_wrong_dtype_rejected():
    arr = good_image().astype(np.float64)
    with pytest.raises(ValueError, match="float32"):
        mb.apply_corruption(arr, (1, 1, 1), "RicianNoise", 1, 0)


def test_wrong_rank_rejected():
    with pytest.raises(ValueError, match="4-D"):
        mb.apply_corruption(good_image()[0], (1, 1, 1), "RicianNoise", 1, 0)


def test_non_array_rejected():
    with pytest.raises(TypeError):
        mb.apply_corruption([[1.0]], (1, 1, 1), "RicianNoise", 1, 0)


def test_unknown_kind_mapped():
    with pytest.raises(ValueError, match="unknown transform"):
        mb.apply_corruption(good_image(), (1, 1, 1), "NotATransform", 1, 0)


def test_bad_severity_mapped():
    with pytest.raises(ValueError, match="severity"):
        mb.apply_corruption(good_image(), (1, 1, 1), "RicianNoise", 9, 0)


def test_input_buffer_untouched():
    arr = good_image()
    before = arr.tobytes()
    mb.apply_corruption(arr, (1, 1, 1), "SpikeNoise", 3, 1)
    assert arr.tobytes() == before
    assert arr.flags.writeable


def test_mixup_shape_mismatch_mapped():
    a = np.stack([good_image()])
    b = np.stack([good_image()])[:, :, :, :4, :]
    masks = np.stack([good_probs()])
    with pytest.raises(ValueError, match="identical shapes"):
        mb.mixup(a, masks, np.ascontiguousarray(b), masks, seed=0)


def test_empty_batch_gives_empty_result():
    empty_imgs = np.empty((0, 1, 2, 4, 4), dtype=np.float32)
    empty_masks = np.empty((0, 2, 2, 4, 4), dtype=np.float32)
    imgs, masks, lams = mb.mixup(empty_imgs, empty_masks, empty_imgs, empty_masks, seed=0)
    assert imgs.shape[0] == 0 and masks.shape[0] == 0 and lams.shape == (0,)
    imgs, masks = mb.cutmix(empty_imgs, empty_masks, empty_imgs, empty_masks, seed=0)
    assert imgs.shape[0] == 0
    out = mb.afa(empty_imgs, seed=0)
    assert out.shape[0] == 0


def test_invalid_prob_mask_mapped():
    img = good_image()
    bad = np.full((2, 2, 8, 8), 0.4, dtype=np.float32)  # sums to 0.8
    with pytest.raises(ValueError, match="sum to 1"):
        mb.make_afa_pair(img, bad, seed=0)


def test_bad_config_mapped():
    with pytest.raises(ValueError, match="config"):
        mb.base_augment(good_image(), good_probs(), config={"bogus_field": 1})
