"""Minimal NIfTI-1 reader/writer (little-endian, single-file .nii / .nii.gz).

Consumed header fields: dim, datatype, pixdim, scl_slope/scl_inter (applied
on read), qform/sform codes and matrices. Volumes are written as float32
with sform = affine; label masks as int16. Gzip members are written with
mtime=0 so identical content produces identical bytes.
"""

from __future__ import annotations

import gzip
import struct
import warnings
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import FormatError, UnsupportedDataError, ValidationError
from .volume import LabelMask, Volume

HEADER_SIZE = 348
VOX_OFFSET = 352
MAGIC_SINGLE = b"n+1\x00"
MAGIC_PAIR = b"ni1\x00"

# NIfTI datatype code -> numpy dtype (little-endian)
_DTYPES = {
    2: np.dtype("<u1"),
    4: np.dtype("<i2"),
    8: np.dtype("<i4"),
    16: np.dtype("<f4"),
    64: np.dtype("<f8"),
}
_CODE_FLOAT32 = 16
_CODE_INT16 = 4


def _read_bytes(path: Path) -> bytes:
    raw = path.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        try:
            return gzip.decompress(raw)
        except (OSError, EOFError) as exc:
            raise FormatError(f"{path.name}: corrupt gzip stream ({exc})") from exc
    return raw


def _qform_affine(hdr: dict) -> np.ndarray:
    b, c, d = hdr["quatern_b"], hdr["quatern_c"], hdr["quatern_d"]
    a2 = 1.0 - (b * b + c * c + d * d)
    a = np.sqrt(a2) if a2 > 0 else 0.0
    R = np.array(
        [
            [a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)],
            [2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)],
            [2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - b * b - c * c],
        ]
    )
    qfac = -1.0 if hdr["pixdim"][0] < 0 else 1.0
    sx, sy, sz = hdr["pixdim"][1:4]
    affine = np.eye(4)
    affine[:3, :3] = R @ np.diag([sx, sy, qfac * sz])
    affine[:3, 3] = (hdr["qoffset_x"], hdr["qoffset_y"], hdr["qoffset_z"])
    return affine


def _parse_header(buf: bytes) -> dict:
    if len(buf) < HEADER_SIZE:
        raise FormatError(f"file too short for a NIfTI-1 header ({len(buf)} bytes)")
    magic = buf[344:348]
    if magic == MAGIC_PAIR:
        raise FormatError("detached .hdr/.img pairs are not supported")
    if magic != MAGIC_SINGLE:
        raise FormatError(f"bad NIfTI-1 magic bytes: {magic!r}")
    sizeof_hdr = struct.unpack_from("<i", buf, 0)[0]
    if sizeof_hdr != HEADER_SIZE:
        raise FormatError(
            f"sizeof_hdr is {sizeof_hdr}, expected 348 (big-endian files are not supported)"
        )
    hdr = {
        "dim": struct.unpack_from("<8h", buf, 40),
        "datatype": struct.unpack_from("<h", buf, 70)[0],
        "pixdim": struct.unpack_from("<8f", buf, 76),
        "vox_offset": struct.unpack_from("<f", buf, 108)[0],
        "scl_slope": struct.unpack_from("<f", buf, 112)[0],
        "scl_inter": struct.unpack_from("<f", buf, 116)[0],
        "qform_code": struct.unpack_from("<h", buf, 252)[0],
        "sform_code": struct.unpack_from("<h", buf, 254)[0],
        "quatern_b": struct.unpack_from("<f", buf, 256)[0],
        "quatern_c": struct.unpack_from("<f", buf, 260)[0],
        "quatern_d": struct.unpack_from("<f", buf, 264)[0],
        "qoffset_x": struct.unpack_from("<f", buf, 268)[0],
        "qoffset_y": struct.unpack_from("<f", buf, 272)[0],
        "qoffset_z": struct.unpack_from("<f", buf, 276)[0],
        "srow_x": struct.unpack_from("<4f", buf, 280),
        "srow_y": struct.unpack_from("<4f", buf, 296),
        "srow_z": struct.unpack_from("<4f", buf, 312),
    }
    return hdr


def read_nifti(
    path: Union[str, Path], read_labels: bool = False
) -> tuple[Volume, Optional[LabelMask]]:
    """Read a NIfTI-1 file into a canonical float32 Volume.

    When ``read_labels`` is true and the file stores an integral datatype
    with identity scaling, a LabelMask built from the raw integers is
    returned alongside; otherwise the second element is None.
    """
    path = Path(path)
    buf = _read_bytes(path)
    hdr = _parse_header(buf)

    code = hdr["datatype"]
    if code not in _DTYPES:
        raise UnsupportedDataError(f"unsupported NIfTI datatype code {code}")
    dtype = _DTYPES[code]

    dim = hdr["dim"]
    ndim = dim[0]
    if ndim < 1 or ndim > 7:
        raise FormatError(f"dim[0] must be 1..7, got {ndim}")
    sizes = [max(1, dim[i]) for i in range(1, 8)]
    nx, ny, nz = sizes[0], sizes[1], sizes[2]
    channels = sizes[3]
    if any(s > 1 for s in sizes[4:]):
        raise UnsupportedDataError("more than 4 non-trivial dimensions are not supported")

    offset = int(round(hdr["vox_offset"]))
    if offset < HEADER_SIZE:
        raise FormatError(f"vox_offset {offset} overlaps the header")
    count = nx * ny * nz * channels
    need = offset + count * dtype.itemsize
    if len(buf) < need:
        raise FormatError(f"truncated data section: need {need} bytes, have {len(buf)}")
    raw = np.frombuffer(buf, dtype=dtype, count=count, offset=offset)
    # disk order is x-fastest; C reshape to (channels, z, y, x) preserves it
    raw = raw.reshape(channels, nz, ny, nx)

    slope, inter = hdr["scl_slope"], hdr["scl_inter"]
    scaled = not (slope == 0.0 or np.isnan(slope) or (slope == 1.0 and inter in (0.0,)))
    data = raw.astype(np.float32)
    if scaled:
        inter = 0.0 if np.isnan(inter) else inter
        data = (data * np.float32(slope) + np.float32(inter)).astype(np.float32)

    finite = np.isfinite(data)
    if not finite.all():
        c, z, y, x = np.unravel_index(int(np.argmin(finite)), data.shape)
        raise ValidationError(f"non-finite voxel at (x={x}, y={y}, z={z}, channel={c})")

    spacing = tuple(float(p) for p in hdr["pixdim"][1:4])
    if any(s <= 0 for s in spacing):
        raise ValidationError(f"non-positive pixdim spacing {spacing}")

    if hdr["sform_code"] > 0:
        affine = np.array([hdr["srow_x"], hdr["srow_y"], hdr["srow_z"], [0, 0, 0, 1]], dtype=np.float64)
    elif hdr["qform_code"] > 0:
        affine = _qform_affine(hdr)
    else:
        warnings.warn(f"{path.name}: no qform/sform, falling back to diagonal spacing affine")
        affine = np.diag([spacing[0], spacing[1], spacing[2], 1.0])

    volume = Volume(data, spacing, affine)

    mask = None
    if read_labels:
        if not np.issubdtype(dtype, np.integer):
            raise UnsupportedDataError(f"label read requires an integral datatype, file has {dtype}")
        if scaled:
            raise UnsupportedDataError("label read requires identity intensity scaling")
        if channels != 1:
            raise UnsupportedDataError("label masks must be single-channel")
        ints = raw[0].astype(np.int32)
        if ints.min() < 0:
            raise ValidationError("label file contains negative values")
        mask = LabelMask(ints, max(2, int(ints.max()) + 1), spacing, affine)
    return volume, mask


def _pack_header(dims: tuple[int, int, int], channels: int, spacing, affine, code: int) -> bytes:
    nx, ny, nz = dims
    hdr = bytearray(HEADER_SIZE)
    struct.pack_into("<i", hdr, 0, HEADER_SIZE)
    ndim = 4 if channels > 1 else 3
    struct.pack_into("<8h", hdr, 40, ndim, nx, ny, nz, channels, 1, 1, 1)
    struct.pack_into("<h", hdr, 70, code)
    bitpix = _DTYPES[code].itemsize * 8
    struct.pack_into("<h", hdr, 72, bitpix)
    struct.pack_into("<8f", hdr, 76, 1.0, spacing[0], spacing[1], spacing[2], 1.0, 1.0, 1.0, 1.0)
    struct.pack_into("<f", hdr, 108, float(VOX_OFFSET))
    struct.pack_into("<f", hdr, 112, 1.0)  # scl_slope
    struct.pack_into("<f", hdr, 116, 0.0)  # scl_inter
    descrip = b"mrk toolkit"
    hdr[148 : 148 + len(descrip)] = descrip
    struct.pack_into("<h", hdr, 252, 0)  # qform_code
    struct.pack_into("<h", hdr, 254, 1)  # sform_code
    affine = np.asarray(affine, dtype=np.float64)
    struct.pack_into("<4f", hdr, 280, *affine[0])
    struct.pack_into("<4f", hdr, 296, *affine[1])
    struct.pack_into("<4f", hdr, 312, *affine[2])
    hdr[344:348] = MAGIC_SINGLE
    return bytes(hdr)


def write_nifti(obj: Union[Volume, LabelMask], path: Union[str, Path]) -> None:
    """Write a Volume (float32) or LabelMask (int16) as single-file NIfTI-1.

    The path decides compression: ``.gz`` suffixes produce a gzip stream.
    """
    path = Path(path)
    if isinstance(obj, Volume):
        code = _CODE_FLOAT32
        payload = obj.data.astype("<f4", copy=False)
        channels = obj.channels
    elif isinstance(obj, LabelMask):
        labels = obj.labels
        if labels.max(initial=0) > np.iinfo(np.int16).max or labels.min(initial=0) < np.iinfo(np.int16).min:
            raise ValidationError(
                f"label value {int(labels.max())} overflows int16 storage"
            )
        code = _CODE_INT16
        payload = labels.astype("<i2")[None]
        channels = 1
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")

    hdr = _pack_header(obj.dims, channels, obj.spacing, obj.affine, code)
    body = hdr + b"\x00" * (VOX_OFFSET - HEADER_SIZE) + payload.tobytes()

    if path.suffix == ".gz":
        with open(path, "wb") as f:
            with gzip.GzipFile(filename="", mode="wb", fileobj=f, mtime=0) as gz:
                gz.write(body)
    else:
        path.write_bytes(body)
