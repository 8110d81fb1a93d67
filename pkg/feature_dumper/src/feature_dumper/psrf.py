"""PSRF feature-file writer/reader.

Implements the toolkit's on-disk interface independently so dumped files
are consumable by `psr-kit` without this package importing it:

    magic ``PSRF`` | version u16 (=1) | dtype u8 (=1, float32)
    | ndim u8 (1..3) | ndim x u32 shape | row-major float32 payload

all little-endian.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"PSRF"
FORMAT_VERSION = 1
DTYPE_FLOAT32 = 1

_HEADER = struct.Struct("<4sHBB")


def write_feature(path, tensor) -> None:
    arr = np.asarray(tensor)
    if not 1 <= arr.ndim <= 3:
        raise ValueError(f"feature tensor must be 1-3 dimensional, got {arr.ndim}")
    if any(d < 1 for d in arr.shape):
        raise ValueError(f"feature tensor has an empty dimension: {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("refusing to write non-finite feature values")
    data = np.ascontiguousarray(arr, dtype="<f4")
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, FORMAT_VERSION, DTYPE_FLOAT32, arr.ndim))
        f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        f.write(data.tobytes())


def read_feature(path) -> np.ndarray:
    with open(path, "rb") as f:
        blob = f.read()
    magic, version, dtype_code, ndim = _HEADER.unpack_from(blob)
    if magic != MAGIC or version != FORMAT_VERSION or dtype_code != DTYPE_FLOAT32:
        raise ValueError(f"{path}: not a readable PSRF v{FORMAT_VERSION} file")
    shape = struct.unpack_from(f"<{ndim}I", blob, _HEADER.size)
    offset = _HEADER.size + 4 * ndim
    count = int(np.prod(shape))
    if len(blob) != offset + 4 * count:
        raise ValueError(f"{path}: payload size does not match shape {shape}")
    return np.frombuffer(blob, dtype="<f4", count=count, offset=offset).reshape(shape)
