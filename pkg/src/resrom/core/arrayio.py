"""Binary array container used for datasets and model parameter blobs.

Every array is stored as a fixed 64-byte header followed by the raw
little-endian row-major payload:

    bytes  0..7    magic  b"RSROMARR"
    bytes  8..11   format version (u32, currently 1)
    bytes 12..15   dtype code (u32: 0 = float32, 1 = float64)
    bytes 16..19   channel count (u32, informational; 3 for state tensors)
    bytes 20..23   ndim (u32, <= 8)
    bytes 24..55   dims (8 x u32, unused entries zero)
    bytes 56..63   reserved (zero)

Dataset arrays are float32 (training precision); model parameter blobs use
float64 so that a saved and reloaded model reproduces encodings bitwise.
"""
from __future__ import annotations

import hashlib
import struct
from typing import BinaryIO, Optional

import numpy as np

from .errors import IntegrityError

MAGIC = b"RSROMARR"
VERSION = 1
HEADER_SIZE = 64
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_DTYPE_CODES = {np.dtype("float32"): 0, np.dtype("float64"): 1}
MAX_NDIM = 8


def write_array(f: BinaryIO, arr: np.ndarray, channels: int = 1) -> None:
    """Append one array (header + payload) to an open binary stream."""
    arr = np.ascontiguousarray(arr)
    if arr.dtype not in _DTYPE_CODES:
        raise IntegrityError(f"unsupported dtype {arr.dtype}")
    if arr.ndim > MAX_NDIM:
        raise IntegrityError(f"ndim {arr.ndim} exceeds {MAX_NDIM}")
    code = _DTYPE_CODES[arr.dtype]
    dims = list(arr.shape) + [0] * (MAX_NDIM - arr.ndim)
    header = MAGIC + struct.pack(
        "<4I8I", VERSION, code, channels, arr.ndim, *dims
    )
    header += b"\x00" * (HEADER_SIZE - len(header))
    f.write(header)
    f.write(arr.astype(_DTYPES[code], copy=False).tobytes(order="C"))


def read_array(f: BinaryIO) -> tuple[np.ndarray, int]:
    """Read one array from an open stream; returns (array, channels)."""
    header = f.read(HEADER_SIZE)
    if len(header) != HEADER_SIZE:
        raise IntegrityError("truncated array header")
    if header[:8] != MAGIC:
        raise IntegrityError("bad magic; not a resrom array")
    version, code, channels, ndim, *dims = struct.unpack(
        "<4I8I", header[8:56]
    )
    if version != VERSION:
        raise IntegrityError(f"unsupported array format version {version}")
    if code not in _DTYPES or ndim > MAX_NDIM:
        raise IntegrityError("corrupt array header")
    shape = tuple(dims[:ndim])
    count = int(np.prod(shape)) if shape else 1
    payload = f.read(count * _DTYPES[code].itemsize)
    if len(payload) != count * _DTYPES[code].itemsize:
        raise IntegrityError("truncated array payload")
    arr = np.frombuffer(payload, dtype=_DTYPES[code]).reshape(shape)
    return arr.astype(arr.dtype.newbyteorder("="), copy=False), channels


def save_arrays(path, arrays, channels=None) -> None:
    """Write a sequence of arrays to one file (order is significant)."""
    channels = channels or [1] * len(arrays)
    with open(path, "wb") as f:
        for arr, ch in zip(arrays, channels):
            write_array(f, arr, ch)


def load_arrays(path, expect: Optional[int] = None) -> list[np.ndarray]:
    """Read all arrays of a file written by :func:`save_arrays`."""
    out = []
    with open(path, "rb") as f:
        while not _at_eof(f):
            arr, _ = read_array(f)
            out.append(arr)
    if expect is not None and len(out) != expect:
        raise IntegrityError(f"expected {expect} arrays, found {len(out)}")
    return out


def _at_eof(f) -> bool:
    pos = f.tell()
    if f.read(1) == b"":
        return True
    f.seek(pos)
    return False


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
