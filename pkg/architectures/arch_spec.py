# architectures/arch_spec.py
"""
Declarative network descriptions shared by the cost model and the kernel executor.

Layers run in list order. Each layer reads the output of `input_from` (default: the
previous layer, -1: the network input); `add_residual` also reads `residual_from`.
Shapes are resolved once at construction and every chaining rule is checked there.
"""

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import List, Optional, Tuple

from contracts.arch_spec_v1 import CONV_KINDS, LAYER_KINDS
from utils.validation import Sanitizer, ValidationError

logger = logging.getLogger("ArchSpec")

Shape = Tuple[int, int, int]          # (channels, height, width)

NETWORK_INPUT = -1
POOL_MODES = ("max", "avg", "global_avg")


class ArchSpecError(ValidationError):
    """Invalid layer or chaining inconsistency; `index` locates the layer when known"""

    def __init__(self, message: str, index: Optional[int] = None, field_name: Optional[str] = None):
        super().__init__(message)
        self.index = index
        self.field_name = field_name


@dataclass(frozen=True)
class LayerSpec:
    """
    One layer. Pool layers ignore the channel fields (pass-through, stored as 0).
    FC layers flatten their input: in_channels == C * H * W of the incoming map.
    """

    name: str
    kind: str
    in_channels: int = 0
    out_channels: int = 0
    kernel: int = 1
    stride: int = 1
    padding: int = 0
    part: int = 1
    groups: int = 1
    bias: bool = False
    pool: Optional[str] = None
    input_from: Optional[int] = None
    residual_from: Optional[int] = None
    block: Optional[str] = None

    def __post_init__(self):
        if not self.name:
            raise ArchSpecError("layer name must not be empty", field_name="name")
        if self.kind not in LAYER_KINDS:
            raise ArchSpecError(f"unknown layer kind '{self.kind}' at layer {self.name}",
                                field_name="kind")
        try:
            self._validate()
        except ValidationError as e:
            raise ArchSpecError(f"{e} at layer {self.name}") from e

    def _validate(self) -> None:
        if self.kind in CONV_KINDS:
            Sanitizer.sanitize_count(self.in_channels, "in_channels")
            Sanitizer.sanitize_count(self.out_channels, "out_channels")
            Sanitizer.sanitize_kernel(self.kernel)
            Sanitizer.sanitize_count(self.stride, "stride")
            Sanitizer.sanitize_count(self.padding, "padding", minimum=0)
            if self.kind == "hetconv":
                Sanitizer.sanitize_part(self.part, in_channels=self.in_channels)
            elif self.part != 1:
                raise ValidationError(f"part only applies to hetconv, got {self.part}")
            if self.kind == "gwc":
                Sanitizer.sanitize_groups(self.groups, self.in_channels, self.out_channels)
            elif self.groups != 1:
                raise ValidationError(f"groups only applies to gwc, got {self.groups}")
            if self.kind == "dwc" and self.in_channels != self.out_channels:
                raise ValidationError(
                    f"dwc needs in_channels == out_channels, got {self.in_channels}->{self.out_channels}")
            if self.kind == "pwc" and (self.kernel != 1 or self.padding != 0):
                raise ValidationError("pwc needs kernel 1 and padding 0")
        elif self.kind == "pool":
            if self.pool not in POOL_MODES:
                raise ValidationError(f"pool must be one of {POOL_MODES}, got {self.pool!r}")
            if self.pool != "global_avg":
                Sanitizer.sanitize_count(self.kernel, "kernel")
                Sanitizer.sanitize_count(self.stride, "stride")
                Sanitizer.sanitize_count(self.padding, "padding", minimum=0)
        elif self.kind == "fc":
            Sanitizer.sanitize_count(self.in_channels, "in_channels")
            Sanitizer.sanitize_count(self.out_channels, "out_channels")
        elif self.kind == "add_residual":
            if self.residual_from is None:
                raise ValidationError("add_residual needs residual_from")

        if self.kind != "pool" and self.pool is not None:
            raise ValidationError("pool mode only applies to pool layers")
        if self.kind != "add_residual" and self.residual_from is not None:
            raise ValidationError("residual_from only applies to add_residual layers")

    @property
    def is_conv(self) -> bool:
        return self.kind in CONV_KINDS


@dataclass(frozen=True)
class ResolvedLayer:
    index: int
    layer: LayerSpec
    in_shape: Shape
    out_shape: Shape


def _spatial_out(d: int, layer: LayerSpec) -> int:
    span = d + 2 * layer.padding - layer.kernel
    if span < 0:
        raise ValidationError(
            f"input {d}px too small for kernel {layer.kernel} with padding {layer.padding}")
    return span // layer.stride + 1


@dataclass(frozen=True)
class ArchSpec:
    name: str
    input: Shape
    layers: Tuple[LayerSpec, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "input", tuple(int(v) for v in self.input))
        object.__setattr__(self, "layers", tuple(self.layers))
        if len(self.input) != 3:
            raise ArchSpecError(f"input must be (channels, height, width), got {self.input}")
        try:
            for v in self.input:
                Sanitizer.sanitize_count(v, "input")
        except ValidationError as e:
            raise ArchSpecError(str(e), field_name="input") from e
        names = [layer.name for layer in self.layers]
        if len(set(names)) != len(names):
            dup = next(n for n in names if names.count(n) > 1)
            raise ArchSpecError(f"duplicate layer name '{dup}'", index=names.index(dup))
        _ = self.resolved

    @cached_property
    def resolved(self) -> List[ResolvedLayer]:
        """Input/output shape of every layer, checking channel and spatial chaining"""
        outputs: List[Shape] = []
        resolved = []
        for i, layer in enumerate(self.layers):
            src = self._source(i, layer.input_from, "input_from")
            in_shape = self.input if src == NETWORK_INPUT else outputs[src]
            try:
                out_shape = self._out_shape(i, layer, in_shape, outputs)
            except ArchSpecError:
                raise
            except ValidationError as e:
                raise ArchSpecError(f"{e} at layer {layer.name}", index=i) from e
            outputs.append(out_shape)
            resolved.append(ResolvedLayer(i, layer, in_shape, out_shape))
        return resolved

    def _source(self, i: int, ref: Optional[int], field_name: str) -> int:
        if ref is None:
            return i - 1
        if not NETWORK_INPUT <= ref < i:
            raise ArchSpecError(
                f"{field_name} {ref} must reference an earlier layer at layer {self.layers[i].name}",
                index=i, field_name=field_name)
        return ref

    def _out_shape(self, i: int, layer: LayerSpec, in_shape: Shape, outputs: List[Shape]) -> Shape:
        c, h, w = in_shape
        if layer.is_conv:
            if c != layer.in_channels:
                raise ArchSpecError(
                    f"channel mismatch: layer {layer.name} expects {layer.in_channels} channels, got {c}",
                    index=i, field_name="in_channels")
            return layer.out_channels, _spatial_out(h, layer), _spatial_out(w, layer)
        if layer.kind == "pool":
            if layer.pool == "global_avg":
                return c, 1, 1
            return c, _spatial_out(h, layer), _spatial_out(w, layer)
        if layer.kind == "fc":
            if c * h * w != layer.in_channels:
                raise ArchSpecError(
                    f"channel mismatch: layer {layer.name} expects {layer.in_channels} features, "
                    f"got {c}x{h}x{w}", index=i, field_name="in_channels")
            return layer.out_channels, 1, 1
        # add_residual
        src = self._source(i, layer.residual_from, "residual_from")
        other = self.input if src == NETWORK_INPUT else outputs[src]
        if other != in_shape:
            raise ArchSpecError(
                f"residual shape {other} does not match {in_shape} at layer {layer.name}",
                index=i, field_name="residual_from")
        return in_shape

    @property
    def output_shape(self) -> Shape:
        return self.resolved[-1].out_shape if self.layers else self.input

    def layer_index(self, name: str) -> int:
        for i, layer in enumerate(self.layers):
            if layer.name == name:
                return i
        raise KeyError(name)

    def conv_layers(self) -> List[LayerSpec]:
        return [layer for layer in self.layers if layer.is_conv]

    def renamed(self, name: str) -> "ArchSpec":
        return replace(self, name=name)
