"""Tensor container, the FRST binary tensor format, PNG helpers, and seeded RNG.

Tensors are plain numpy arrays throughout the library.  The FRST container
is the on-disk interchange format for every persisted array (images,
embeddings, model parameters):

    magic   4 bytes  b"FRST"
    version 1 byte   0x01
    dtype   1 byte   0=real32, 1=real64, 2=complex64, 3=complex128
    rank    1 byte
    dims    rank * 8 bytes, little-endian unsigned
    payload row-major little-endian IEEE-754, complex interleaved (re, im)
"""

from __future__ import annotations

import os
import struct

import numpy as np
from PIL import Image

MAGIC = b"FRST"
VERSION = 1

_DTYPE_CODES = {
    np.dtype("<f4"): 0,
    np.dtype("<f8"): 1,
    np.dtype("<c8"): 2,
    np.dtype("<c16"): 3,
}
_CODE_DTYPES = {v: k for k, v in _DTYPE_CODES.items()}


class FormatError(ValueError):
    """Raised on a malformed or truncated FRST file."""


def tensor_write(t: np.ndarray, path) -> None:
    """Write an array to ``path`` in the FRST container format."""
    t = np.asarray(t)
    dt = t.dtype.newbyteorder("<")
    if dt not in _DTYPE_CODES:
        raise FormatError(f"unsupported dtype {t.dtype}")
    if t.ndim > 255:
        raise FormatError("rank > 255")
    if any(d == 0 for d in t.shape):
        raise FormatError("zero-sized dimension")
    header = MAGIC + bytes([VERSION, _DTYPE_CODES[dt], t.ndim])
    header += b"".join(struct.pack("<Q", d) for d in t.shape)
    payload = np.ascontiguousarray(t, dtype=dt).tobytes()
    with open(path, "wb") as f:
        f.write(header)
        f.write(payload)


def tensor_read(path) -> np.ndarray:
    """Read an FRST file written by :func:`tensor_write`."""
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 7:
        raise FormatError("truncated header")
    if raw[:4] != MAGIC:
        raise FormatError(f"bad magic {raw[:4]!r}")
    if raw[4] != VERSION:
        raise FormatError(f"unknown version {raw[4]}")
    if raw[5] not in _CODE_DTYPES:
        raise FormatError(f"unknown dtype code {raw[5]}")
    dt = _CODE_DTYPES[raw[5]]
    rank = raw[6]
    off = 7 + 8 * rank
    if len(raw) < off:
        raise FormatError("truncated dimension list")
    shape = struct.unpack(f"<{rank}Q", raw[7:off])
    n = int(np.prod(shape, dtype=np.int64)) if rank else 1
    nbytes = n * dt.itemsize
    if len(raw) != off + nbytes:
        raise FormatError(
            f"payload size mismatch: expected {nbytes} bytes, got {len(raw) - off}"
        )
    data = np.frombuffer(raw[off:], dtype=dt).reshape(shape)
    return data.copy()


def png_write(img: np.ndarray, path) -> None:
    """Save a 2-D image with values in [0, 1] as an 8-bit grayscale PNG."""
    arr = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    Image.fromarray(np.round(arr * 255.0).astype(np.uint8), mode="L").save(path)


def png_read(path) -> np.ndarray:
    """Load an 8-bit grayscale PNG as a float64 image in [0, 1] (pixel/255)."""
    img = Image.open(path)
    if img.mode != "L":
        img = img.convert("L")
    return np.asarray(img, dtype=np.float64) / 255.0


class SeededRng:
    """Deterministic random source keyed by a 64-bit seed.

    Backed by numpy's PCG64 counter-based generator, whose streams are
    identical across platforms for a given seed.  Parallel workers derive
    independent children via ``child(worker_index)``
    (seed = parent_seed XOR worker_index).
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, lo: float, hi: float, n: int) -> np.ndarray:
        if not lo < hi:
            raise ValueError("require lo < hi")
        return self._gen.uniform(lo, hi, size=n)

    def normal(self, n: int) -> np.ndarray:
        return self._gen.standard_normal(n)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def child(self, worker_index: int) -> "SeededRng":
        return SeededRng(self.seed ^ (worker_index & 0xFFFFFFFFFFFFFFFF))


def rng_uniform(rng: SeededRng, lo: float, hi: float, n: int) -> np.ndarray:
    """Functional alias for ``rng.uniform`` (n values in [lo, hi))."""
    return rng.uniform(lo, hi, n)


def ensure_dir(path) -> None:
    os.makedirs(path, exist_ok=True)
