# contracts/arch_spec_v1.py
"""Version 1 architecture document and filter-bank header - DO NOT MODIFY"""
from typing import List, TypedDict

ARCH_FORMAT = "hetconv-arch"
ARCH_FORMAT_VERSION = 1
BANK_LAYOUT_VERSION = 1

LAYER_KINDS = (
    "standard_conv",
    "hetconv",
    "dwc",
    "pwc",
    "gwc",
    "pool",
    "fc",
    "add_residual",
)

CONV_KINDS = ("standard_conv", "hetconv", "dwc", "pwc", "gwc")


class ArchHeader(TypedDict):
    """First line of an architecture document"""
    format: str
    version: int
    name: str
    input: List[int]          # [channels, height, width]
    layers: int               # number of layer lines that follow


class _LayerRequired(TypedDict):
    name: str
    kind: str


class LayerRecord(_LayerRequired, total=False):
    """One line per layer, in execution order"""
    in_channels: int
    out_channels: int
    kernel: int
    stride: int
    padding: int
    part: int                 # hetconv only
    groups: int               # gwc only
    bias: bool
    pool: str                 # "max" | "avg" | "global_avg"
    input_from: int           # index of the feeding layer, -1 = network input
    residual_from: int        # add_residual: index of the skip operand, -1 = network input
    block: str                # latency block label


class GeometryRecord(TypedDict):
    in_channels: int
    out_channels: int
    kernel: int
    stride: int
    padding: int


class ArrayRecord(TypedDict):
    name: str
    dims: List[int]


class FilterBankHeader(TypedDict):
    layout_version: int
    kind: str                 # "dense" | "hetconv"
    geometry: GeometryRecord
    part: int
    arrays: List[ArrayRecord]
