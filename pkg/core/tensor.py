#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Tensor4 - Dense 4-D Feature Maps

The currency of every kernel in this repo:
- float64 data, row-major n -> c -> h -> w (NCHW)
- read-only after construction
- reproducible random fill from an explicit seed
- flat little-endian blob dump/load for cross-implementation comparisons

Random generator: numpy's PCG64 bit generator wrapped in numpy.random.Generator.
PCG64 streams are specified bit-for-bit by numpy and are identical across platforms,
so the same seed always yields the same tensor.

Blob layout (see docs/BLOB_FORMAT.md):
    bytes 0..31   four uint64 little-endian dims (n, c, h, w)
    bytes 32..    n*c*h*w float64 little-endian values in NCHW order
"""

import struct
from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np
from logzero import logger

from utils.file_io import atomic_write_bytes
from utils.validation import ValidationError

Dims = Tuple[int, int, int, int]

BLOB_HEADER = struct.Struct("<4Q")
BLOB_DTYPE = np.dtype("<f8")


class TensorError(ValidationError):
    """Raised on invalid dims or mismatched shapes"""
    pass


def _check_dims(dims) -> Dims:
    if len(dims) != 4:
        raise TensorError(f"Tensor4 needs 4 dims, got {len(dims)}")
    out = []
    for d in dims:
        if isinstance(d, bool) or int(d) != d:
            raise TensorError(f"dims must be integers, got {dims}")
        if d < 1:
            raise TensorError(f"all dims must be >= 1, got {tuple(dims)}")
        out.append(int(d))
    return tuple(out)


class Tensor4:
    """
    Immutable NCHW float64 tensor

    Wraps a read-only numpy array; `array` exposes it for the kernels.
    """

    __slots__ = ("_data",)

    def __init__(self, array: np.ndarray):
        arr = np.array(array, dtype=np.float64, order="C", copy=True)
        if arr.ndim != 4:
            raise TensorError(f"Tensor4 needs a 4-D array, got ndim={arr.ndim}")
        _check_dims(arr.shape)
        arr.flags.writeable = False
        self._data = arr

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "Tensor4":
        # Takes ownership of a freshly computed array without copying
        t = cls.__new__(cls)
        arr = np.ascontiguousarray(arr, dtype=np.float64)
        _check_dims(arr.shape)
        arr.flags.writeable = False
        t._data = arr
        return t

    @property
    def dims(self) -> Dims:
        return tuple(int(d) for d in self._data.shape)

    @property
    def array(self) -> np.ndarray:
        return self._data

    @property
    def data(self) -> np.ndarray:
        """Flat view in row-major NCHW order"""
        return self._data.reshape(-1)

    def flat_index(self, n: int, c: int, h: int, w: int) -> int:
        _, C, H, W = self.dims
        return ((n * C + c) * H + h) * W + w

    def get(self, n: int, c: int, h: int, w: int) -> float:
        return float(self.data[self.flat_index(n, c, h, w)])

    def with_value(self, index: Tuple[int, int, int, int], value: float) -> "Tensor4":
        """Copy with one element replaced"""
        arr = self._data.copy()
        arr[index] = value
        return Tensor4._wrap(arr)

    def scaled(self, factor: float) -> "Tensor4":
        return Tensor4._wrap(self._data * factor)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tensor4):
            return NotImplemented
        return self.dims == other.dims and bool(np.array_equal(self._data, other._data))

    __hash__ = None

    def __repr__(self) -> str:
        return f"Tensor4(dims={self.dims})"


def from_array(array: np.ndarray) -> Tensor4:
    return Tensor4(array)


def zeros(dims) -> Tensor4:
    return Tensor4._wrap(np.zeros(_check_dims(dims), dtype=np.float64))


def ones(dims) -> Tensor4:
    return Tensor4._wrap(np.ones(_check_dims(dims), dtype=np.float64))


@dataclass
class Rng:
    """
    Seeded generator (PCG64). One instance yields one reproducible stream.
    """

    seed: int
    algorithm: str = field(default="PCG64", init=False)

    def __post_init__(self):
        if isinstance(self.seed, bool) or int(self.seed) != self.seed or not 0 <= self.seed < (1 << 64):
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        self.seed = int(self.seed)
        self._generator = np.random.Generator(np.random.PCG64(self.seed))

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def uniform_array(self, shape, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
        if not lo < hi:
            raise ValidationError(f"lo must be < hi, got lo={lo}, hi={hi}")
        # Generator.uniform draws in [lo, hi); rounding can touch hi for wide ranges
        values = self._generator.uniform(lo, hi, size=shape)
        return np.where(values >= hi, np.nextafter(hi, lo), values)

    def normal_array(self, shape, scale: float = 1.0) -> np.ndarray:
        return self._generator.normal(0.0, scale, size=shape)

    def permutation(self, n: int) -> np.ndarray:
        return self._generator.permutation(n)

    def integers(self, low: int, high: int, size=None):
        return self._generator.integers(low, high, size=size)

    def spawn(self, offset: int) -> "Rng":
        """Independent child stream derived from this seed"""
        return Rng((self.seed * 1_000_003 + offset) % (1 << 64))


def random_uniform(dims, rng: Rng, lo: float = -1.0, hi: float = 1.0) -> Tensor4:
    dims = _check_dims(dims)
    return Tensor4._wrap(rng.uniform_array(dims, lo, hi))


def random_normal(dims, rng: Rng, scale: float = 1.0) -> Tensor4:
    dims = _check_dims(dims)
    return Tensor4._wrap(rng.normal_array(dims, scale))


def max_abs_diff(a: Tensor4, b: Tensor4) -> float:
    if a.dims != b.dims:
        raise TensorError(f"dim mismatch: {a.dims} vs {b.dims}")
    if a.array.size == 0:
        return 0.0
    return float(np.max(np.abs(a.array - b.array)))


def dumps(t: Union[Tensor4, np.ndarray]) -> bytes:
    arr = t.array if isinstance(t, Tensor4) else np.asarray(t, dtype=np.float64)
    dims = _check_dims(arr.shape)
    return BLOB_HEADER.pack(*dims) + np.ascontiguousarray(arr, dtype=BLOB_DTYPE).tobytes()


def loads(blob: bytes, offset: int = 0) -> Tuple[Tensor4, int]:
    """
    Decode one tensor blob starting at `offset`

    Returns:
        (tensor, offset just past the blob)
    """
    if len(blob) - offset < BLOB_HEADER.size:
        raise TensorError("blob too short for header")
    dims = _check_dims(BLOB_HEADER.unpack_from(blob, offset))
    count = dims[0] * dims[1] * dims[2] * dims[3]
    start = offset + BLOB_HEADER.size
    end = start + count * BLOB_DTYPE.itemsize
    if len(blob) < end:
        raise TensorError(f"blob truncated: need {end - offset} bytes, have {len(blob) - offset}")
    arr = np.frombuffer(blob, dtype=BLOB_DTYPE, count=count, offset=start).reshape(dims)
    return Tensor4._wrap(arr.astype(np.float64)), end


def dump(t: Tensor4, path: str) -> None:
    atomic_write_bytes(path, dumps(t))
    logger.debug(f"Dumped tensor {t.dims} to {path}")


def load(path: str) -> Tensor4:
    with open(path, "rb") as f:
        blob = f.read()
    tensor, end = loads(blob)
    if end != len(blob):
        raise TensorError(f"{path}: {len(blob) - end} trailing bytes after tensor")
    return tensor
