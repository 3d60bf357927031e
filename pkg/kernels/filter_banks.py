# kernels/filter_banks.py
"""
Weight containers for dense and heterogeneous (HetConv) filter banks.

Shifted layout: output filter n carries K x K kernels on input channels
{c : c mod P == n mod P} (M/P channels strided by P, offset n mod P) and 1 x 1 kernels
on the remaining M - M/P channels, both in ascending channel order. P == 1 has no
1 x 1 group and is a plain dense bank.
"""

import json
import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from contracts.arch_spec_v1 import BANK_LAYOUT_VERSION, FilterBankHeader
from core.tensor import Rng, dumps, loads
from kernels.geometry import ConvGeometry, GeometryError
from utils.file_io import atomic_write_bytes, atomic_write_text
from utils.validation import Sanitizer, ValidationError

logger = logging.getLogger("ConvKernels")


def kxk_channels(part: int, in_channels: int, filter_index: int) -> np.ndarray:
    return np.arange(filter_index % part, in_channels, part)


def one_channels(part: int, in_channels: int, filter_index: int) -> np.ndarray:
    mask = np.ones(in_channels, dtype=bool)
    mask[filter_index % part::part] = False
    return np.flatnonzero(mask)


def _as_weights(array, shape, name: str) -> np.ndarray:
    arr = np.array(array, dtype=np.float64, copy=True)
    if arr.shape != tuple(shape):
        raise GeometryError(f"{name} has shape {arr.shape}, expected {tuple(shape)}")
    return arr


@dataclass
class DenseFilterBank:
    geometry: ConvGeometry
    weights: np.ndarray
    bias: Optional[np.ndarray] = None

    def __post_init__(self):
        g = self.geometry
        self.weights = _as_weights(
            self.weights, (g.out_channels, g.in_channels, g.kernel, g.kernel), "weights")
        if self.bias is None:
            self.bias = np.zeros(g.out_channels)
        self.bias = _as_weights(self.bias, (g.out_channels,), "bias")

    @classmethod
    def random(cls, geometry: ConvGeometry, rng: Rng, scale: Optional[float] = None,
               with_bias: bool = False) -> "DenseFilterBank":
        g = geometry
        fan_in = g.in_channels * g.kernel * g.kernel
        scale = np.sqrt(2.0 / fan_in) if scale is None else scale
        weights = rng.normal_array((g.out_channels, g.in_channels, g.kernel, g.kernel), scale)
        bias = rng.uniform_array((g.out_channels,), -0.1, 0.1) if with_bias else None
        return cls(geometry, weights, bias)

    @property
    def param_count(self) -> int:
        return int(self.weights.size)


@dataclass
class HetConvFilterBank:
    """
    HetConv weights: kxk_weights [N][M/P][K][K], one_weights [N][M - M/P], bias [N].
    """

    geometry: ConvGeometry
    part: int
    kxk_weights: np.ndarray
    one_weights: np.ndarray
    bias: Optional[np.ndarray] = None

    def __post_init__(self):
        g = self.geometry
        try:
            self.part = Sanitizer.sanitize_part(self.part, in_channels=g.in_channels)
        except ValidationError as e:
            raise GeometryError(str(e)) from e
        per_filter = g.in_channels // self.part
        self.kxk_weights = _as_weights(
            self.kxk_weights, (g.out_channels, per_filter, g.kernel, g.kernel), "kxk_weights")
        self.one_weights = _as_weights(
            self.one_weights, (g.out_channels, g.in_channels - per_filter), "one_weights")
        if self.bias is None:
            self.bias = np.zeros(g.out_channels)
        self.bias = _as_weights(self.bias, (g.out_channels,), "bias")

    @property
    def kxk_per_filter(self) -> int:
        return self.geometry.in_channels // self.part

    @property
    def param_count(self) -> int:
        return int(self.kxk_weights.size + self.one_weights.size)

    def kxk_channels(self, filter_index: int) -> np.ndarray:
        return kxk_channels(self.part, self.geometry.in_channels, filter_index)

    def one_channels(self, filter_index: int) -> np.ndarray:
        return one_channels(self.part, self.geometry.in_channels, filter_index)

    @classmethod
    def zeros_like(cls, other: "HetConvFilterBank") -> "HetConvFilterBank":
        return cls(other.geometry, other.part,
                   np.zeros_like(other.kxk_weights), np.zeros_like(other.one_weights),
                   np.zeros_like(other.bias))

    @classmethod
    def random(cls, geometry: ConvGeometry, part: int, rng: Rng,
               scale: Optional[float] = None, with_bias: bool = False) -> "HetConvFilterBank":
        """He-style init scaled by the true fan-in of a HetConv filter"""
        g = geometry
        if part < 1 or g.in_channels % part != 0:
            raise GeometryError(f"{part} does not divide {g.in_channels}")
        per_filter = g.in_channels // part
        fan_in = per_filter * g.kernel * g.kernel + (g.in_channels - per_filter)
        scale = np.sqrt(2.0 / fan_in) if scale is None else scale
        kxk = rng.normal_array((g.out_channels, per_filter, g.kernel, g.kernel), scale)
        one = rng.normal_array((g.out_channels, g.in_channels - per_filter), scale)
        bias = rng.uniform_array((g.out_channels,), -0.1, 0.1) if with_bias else None
        return cls(geometry, part, kxk, one, bias)


def embed_as_dense(bank: HetConvFilterBank) -> DenseFilterBank:
    """
    Dense [N][M][K][K] bank with the same response: K x K group kernels copied verbatim,
    1 x 1 weights placed at the centre (K//2, K//2), zeros elsewhere.
    """
    g = bank.geometry
    centre = g.kernel // 2
    dense = np.zeros((g.out_channels, g.in_channels, g.kernel, g.kernel))
    for n in range(g.out_channels):
        dense[n, bank.kxk_channels(n)] = bank.kxk_weights[n]
        dense[n, bank.one_channels(n), centre, centre] = bank.one_weights[n]
    return DenseFilterBank(g, dense, bank.bias.copy())


# ---------------------------------------------------------------------------
# Serialization: <path>.json header + <path>.bin concatenated tensor blobs
# ---------------------------------------------------------------------------

def _bank_arrays(bank) -> List[tuple]:
    g = bank.geometry
    if isinstance(bank, HetConvFilterBank):
        arrays = [("kxk_weights", bank.kxk_weights)]
        if bank.one_weights.size:
            arrays.append(("one_weights", bank.one_weights.reshape(g.out_channels, -1, 1, 1)))
    else:
        arrays = [("weights", bank.weights)]
    arrays.append(("bias", bank.bias.reshape(1, g.out_channels, 1, 1)))
    return arrays


def save_filter_bank(bank, path: str) -> None:
    """Write `path`.json (header) and `path`.bin (tensor blobs in header order)"""
    g = bank.geometry
    arrays = _bank_arrays(bank)
    header: FilterBankHeader = {
        "layout_version": BANK_LAYOUT_VERSION,
        "kind": "hetconv" if isinstance(bank, HetConvFilterBank) else "dense",
        "geometry": {
            "in_channels": g.in_channels,
            "out_channels": g.out_channels,
            "kernel": g.kernel,
            "stride": g.stride,
            "padding": g.padding,
        },
        "part": bank.part if isinstance(bank, HetConvFilterBank) else 1,
        "arrays": [{"name": name, "dims": list(arr.shape)} for name, arr in arrays],
    }
    blob = b"".join(dumps(arr) for _, arr in arrays)
    atomic_write_bytes(path + ".bin", blob)
    atomic_write_text(path + ".json", json.dumps(header, indent=2) + "\n")
    logger.info(f"Saved {header['kind']} bank ({len(blob)} bytes) to {path}")


def load_filter_bank(path: str):
    with open(path + ".json", "r", encoding="utf-8") as f:
        header = json.load(f)
    if header.get("layout_version") != BANK_LAYOUT_VERSION:
        raise ValidationError(
            f"unsupported bank layout version {header.get('layout_version')!r}")
    with open(path + ".bin", "rb") as f:
        blob = f.read()

    arrays = {}
    offset = 0
    for entry in header["arrays"]:
        tensor, offset = loads(blob, offset)
        if list(tensor.dims) != list(entry["dims"]):
            raise ValidationError(f"{entry['name']}: blob dims {tensor.dims} != header {entry['dims']}")
        arrays[entry["name"]] = tensor.array.copy()
    if offset != len(blob):
        raise ValidationError(f"{path}.bin has {len(blob) - offset} trailing bytes")

    geometry = ConvGeometry(**header["geometry"])
    bias = arrays["bias"].reshape(-1)
    if header["kind"] == "dense":
        return DenseFilterBank(geometry, arrays["weights"], bias)
    part = header["part"]
    per_filter = geometry.in_channels // part
    one = arrays.get("one_weights")
    one = np.zeros((geometry.out_channels, geometry.in_channels - per_filter)) if one is None \
        else one.reshape(geometry.out_channels, -1)
    return HetConvFilterBank(geometry, part, arrays["kxk_weights"], one, bias)
