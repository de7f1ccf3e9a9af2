import struct

import numpy as np
import pytest

from mrk import RngStream
from mrk.phantom import make_label_phantom, make_phantom
from mrk.volume import LabelMask, Volume, one_hot


@pytest.fixture
def small_volume():
    return make_phantom((24, 20, 3))


@pytest.fixture
def small_sample():
    vol = make_phantom((24, 20, 3))
    mask = make_label_phantom((24, 20, 3))
    return vol, one_hot(mask)


@pytest.fixture
def stream():
    return RngStream(1234)


def random_volume(seed: int, dims=(12, 10, 3), channels=1, spacing=(1.0, 1.0, 1.0)) -> Volume:
    g = np.random.default_rng(seed)
    nx, ny, nz = dims
    data = g.normal(0, 1, size=(channels, nz, ny, nx)).astype(np.float32)
    return Volume(data, spacing)


def random_mask(seed: int, dims=(12, 10, 3), num_classes=3, spacing=(1.0, 1.0, 1.0)) -> LabelMask:
    g = np.random.default_rng(seed)
    nx, ny, nz = dims
    labels = g.integers(0, num_classes, size=(nz, ny, nx), dtype=np.int32)
    return LabelMask(labels, num_classes, spacing)


def build_raw_nifti(
    data: np.ndarray,
    datatype_code: int,
    pixdim=(1.0, 1.0, 1.0),
    scl=(0.0, 0.0),
    sform=None,
    qform=None,
    magic=b"n+1\x00",
) -> bytes:
    """Independent minimal NIfTI-1 writer used as the read-path oracle.

    ``data`` is (channels, nz, ny, nx); bytes are emitted x-fastest.
    """
    c, nz, ny, nx = data.shape
    hdr = bytearray(348)
    struct.pack_into("<i", hdr, 0, 348)
    ndim = 4 if c > 1 else 3
    struct.pack_into("<8h", hdr, 40, ndim, nx, ny, nz, c, 1, 1, 1)
    struct.pack_into("<h", hdr, 70, datatype_code)
    struct.pack_into("<8f", hdr, 76, 1.0, *pixdim, 1.0, 1.0, 1.0, 1.0)
    struct.pack_into("<f", hdr, 108, 352.0)
    struct.pack_into("<2f", hdr, 112, *scl)
    if qform is not None:
        struct.pack_into("<h", hdr, 252, 1)
        struct.pack_into("<3f", hdr, 256, *qform["bcd"])
        struct.pack_into("<3f", hdr, 268, *qform["offset"])
    if sform is not None:
        struct.pack_into("<h", hdr, 254, 1)
        struct.pack_into("<4f", hdr, 280, *sform[0])
        struct.pack_into("<4f", hdr, 296, *sform[1])
        struct.pack_into("<4f", hdr, 312, *sform[2])
    hdr[344:348] = magic
    return bytes(hdr) + b"\x00" * 4 + data.tobytes()
