"""Bit-exact parity between the bindings and the primary package."""

import numpy as np
import pytest

import mrk
import mrk_bindings as mb
from mrk import RngStream
from mrk.augmentations import AfaParams, MixupParams, afa_augment, base_augment, cutmix, make_afa_pair, mixup
from mrk.corruptions import SeverityConfig, TransformKind, apply_corruption
from mrk.volume import ProbMask, Volume

KINDS = list(TransformKind)


def rand_image(seed, shape=(1, 3, 12, 14)):
    return np.random.default_rng(seed).normal(50, 20, shape).astype(np.float32)


def rand_probs(seed, classes=3, shape=(3, 12, 14)):
    g = np.random.default_rng(seed)
    labels = g.integers(0, classes, shape)
    return np.ascontiguousarray(
        (labels[None] == np.arange(classes)[:, None, None, None]).astype(np.float32)
    )


def test_version_mirrors_primary():
    assert mb.__version__ == mrk.__version__


def golden_cases():
    """20 cases spanning every transform kind, varied shapes/severities."""
    cases = []
    shapes = [(1, 2, 12, 12), (2, 3, 16, 10), (1, 4, 9, 15)]
    for i in range(20):
        kind = KINDS[i % len(KINDS)]
        cases.append(
            dict(
                kind=kind.value,
                severity=1 + (i % 5),
                seed=1000 + i,
                shape=shapes[i % len(shapes)],
                spacing=(1.5, 1.5, 5.0) if i % 2 else (1.0, 1.2, 3.0),
            )
        )
    return cases


@pytest.mark.parametrize("case", golden_cases(), ids=lambda c: f"{c['kind']}-s{c['severity']}")
def test_corruption_parity_golden(case):
    arr = rand_image(case["seed"], case["shape"])
    bound = mb.apply_corruption(arr, case["spacing"], case["kind"], case["severity"], case["seed"])
    kind = TransformKind.parse(case["kind"])
    rng = RngStream(case["seed"]).child(kind.value, case["severity"])
    direct = apply_corruption(
        Volume(arr.copy(), case["spacing"]), kind, case["severity"], SeverityConfig.default(), rng
    )
    assert bound.tobytes() == direct.data.tobytes()
    assert bound.flags.writeable


def test_corruption_parity_with_cli_path(tmp_path):
    from mrk.cli import main as cli_main
    from mrk.nifti import read_nifti, write_nifti
    from mrk.phantom import make_phantom

    in_dir = tmp_path / "in"
    in_dir.mkdir()
    v = make_phantom((16, 16, 3))
    write_nifti(v, in_dir / "caseZ.nii.gz")
    assert cli_main([
        "corrupt", "--in", str(in_dir), "--out", str(tmp_path / "out"),
        "--transforms", "spike_noise", "--severities", "4", "--seed", "99",
    ]) == 0
    produced, _ = read_nifti(tmp_path / "out" / "SpikeNoise" / "4" / "caseZ.nii.gz")
    bound = mb.apply_corruption(
        np.array(v.data), v.spacing, "SpikeNoise", 4, 99, path=("caseZ", "SpikeNoise", 4)
    )
    assert bound.tobytes() == produced.data.tobytes()


def test_snake_case_kind_accepted():
    arr = rand_image(0)
    a = mb.apply_corruption(arr, (1, 1, 1), "rician_noise", 2, 7)
    b = mb.apply_corruption(arr, (1, 1, 1), "RicianNoise", 2, 7)
    assert a.tobytes() == b.tobytes()


def test_mixup_parity_and_lambda():
    B = 4
    a_imgs = np.stack([rand_image(i) for i in range(B)])
    b_imgs = np.stack([rand_image(100 + i) for i in range(B)])
    a_masks = np.stack([rand_probs(200 + i) for i in range(B)])
    b_masks = np.stack([rand_probs(300 + i) for i in range(B)])
    out_imgs, out_masks, lams = mb.mixup(a_imgs, a_masks, b_imgs, b_masks, beta_alpha=0.3, seed=5)
    root = RngStream(5)
    for i in range(B):
        img, probs, lam = mixup(
            (Volume(a_imgs[i].copy(), (1, 1, 1)), ProbMask(a_masks[i].copy(), (1, 1, 1))),
            (Volume(b_imgs[i].copy(), (1, 1, 1)), ProbMask(b_masks[i].copy(), (1, 1, 1))),
            MixupParams(0.3),
            root.child("mixup", i),
        )
        assert out_imgs[i].tobytes() == img.data.tobytes()
        assert out_masks[i].tobytes() == probs.probs.tobytes()
        assert lams[i] == lam


def test_mixup_lambda_one_endpoint():
    a_imgs = np.stack([rand_image(1)])
    b_imgs = np.stack([rand_image(2)])
    a_masks = np.stack([rand_probs(3)])
    b_masks = np.stack([rand_probs(4)])
    out_imgs, out_masks, lams = mb.mixup(a_imgs, a_masks, b_imgs, b_masks, seed=0, lam=1.0)
    assert np.array_equal(out_imgs, a_imgs)
    assert np.array_equal(out_masks, a_masks)
    assert lams[0] == 1.0


def test_cutmix_parity():
    B = 3
    a_imgs = np.stack([rand_image(i) for i in range(B)])
    b_imgs = np.stack([rand_image(50 + i) for i in range(B)])
    a_masks = np.stack([rand_probs(60 + i) for i in range(B)])
    b_masks = np.stack([rand_probs(70 + i) for i in range(B)])
    out_imgs, out_masks = mb.cutmix(a_imgs, a_masks, b_imgs, b_masks, seed=11)
    root = RngStream(11)
    for i in range(B):
        img, probs = cutmix(
            (Volume(a_imgs[i].copy(), (1, 1, 1)), ProbMask(a_masks[i].copy(), (1, 1, 1))),
            (Volume(b_imgs[i].copy(), (1, 1, 1)), ProbMask(b_masks[i].copy(), (1, 1, 1))),
            root.child("cutmix", i),
        )
        assert out_imgs[i].tobytes() == img.data.tobytes()
        assert out_masks[i].tobytes() == probs.probs.tobytes()


def test_afa_parity():
    arrs = np.stack([rand_image(i) for i in range(3)])
    out = mb.afa(arrs, mu=0.08, seed=21)
    root = RngStream(21)
    for i in range(3):
        direct = afa_augment(Volume(arrs[i].copy(), (1, 1, 1)), AfaParams(mu=0.08), root.child("afa", i))
        assert out[i].tobytes() == direct.data.tobytes()


def test_make_afa_pair_parity():
    img = rand_image(9)
    mask = rand_probs(10)
    clean, augd, mask_out = mb.make_afa_pair(img, mask, mu=0.1, seed=33)
    assert np.array_equal(clean, img)
    assert np.array_equal(mask_out, mask)
    direct = make_afa_pair(
        (Volume(img.copy(), (1, 1, 1)), ProbMask(mask.copy(), (1, 1, 1))),
        AfaParams(mu=0.1),
        RngStream(33).child("afa-pair"),
    )
    assert augd.tobytes() == direct.afa[0].data.tobytes()


def test_base_augment_parity():
    img = rand_image(12)
    mask = rand_probs(13)
    out_img, out_mask = mb.base_augment(img, mask, spacing=(1.5, 1.5, 5.0), seed=77)
    direct_img, direct_mask = base_augment(
        (Volume(img.copy(), (1.5, 1.5, 5.0)), ProbMask(mask.copy(), (1.5, 1.5, 5.0))),
        RngStream(77).child("base"),
    )
    assert out_img.tobytes() == direct_img.data.tobytes()
    assert out_mask.tobytes() == direct_mask.probs.tobytes()


def test_parity_under_threads():
    arr = rand_image(40)
    expected = mb.apply_corruption(arr, (1, 1, 1), "Ghosting", 3, 8)
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=4) as pool:
        results = list(
            pool.map(lambda _: mb.apply_corruption(arr, (1, 1, 1), "Ghosting", 3, 8), range(16))
        )
    assert all(r.tobytes() == expected.tobytes() for r in results)
