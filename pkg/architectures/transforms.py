# architectures/transforms.py
"""
Architecture rewriters. Each returns a new ArchSpec and leaves the argument untouched.

Eligible layers for hetconvify / substitute_*: standard convs with K > 1, except the
first conv of the network when skip_first is set. 1x1 convs (ResNet shortcuts, bottleneck
projections) are never rewritten.
"""

import logging
from dataclasses import replace
from typing import Callable, Dict, List, Optional, Sequence, Union

from architectures.arch_spec import ArchSpec, ArchSpecError, LayerSpec
from utils.validation import Sanitizer, ValidationError

logger = logging.getLogger("ArchSpec")

PartPolicy = Union[int, str]
PER_CHANNEL = "pc"


def resolve_part(part: PartPolicy, in_channels: int) -> int:
    """P for a layer with M input channels; the "pc" policy sets P = M"""
    if isinstance(part, str) and part.strip().lower() == PER_CHANNEL:
        return in_channels
    return Sanitizer.sanitize_count(part, "part")


def parse_part_policy(text: PartPolicy) -> PartPolicy:
    if isinstance(text, str) and text.strip().lower() == PER_CHANNEL:
        return PER_CHANNEL
    return Sanitizer.sanitize_count(text, "part")


def part_suffix(policy: PartPolicy) -> str:
    """Name suffix: "_PC" for the per-channel policy, "_P<P>" otherwise"""
    return "_PC" if policy == PER_CHANNEL else f"_P{policy}"


def _eligible(a: ArchSpec, skip_first: bool) -> List[bool]:
    first_conv = next((i for i, layer in enumerate(a.layers) if layer.is_conv), None)
    flags = []
    for i, layer in enumerate(a.layers):
        flags.append(layer.kind == "standard_conv" and layer.kernel > 1
                     and not (skip_first and i == first_conv))
    return flags


def _checked(build: Callable, index: int):
    try:
        return build()
    except ValidationError as e:
        raise ArchSpecError(str(e), index=index) from e


def hetconvify(a: ArchSpec, part: PartPolicy, skip_first: bool = True) -> ArchSpec:
    """
    Replace every eligible standard conv by HetConv_P with the same filter count.

    Raises:
        ArchSpecError: naming the first layer whose M is not divisible by P
    """
    policy = parse_part_policy(part)
    flags = _eligible(a, skip_first)
    layers = []
    for i, (layer, eligible) in enumerate(zip(a.layers, flags)):
        if not eligible:
            layers.append(layer)
            continue
        p = resolve_part(policy, layer.in_channels)
        layers.append(_checked(lambda: replace(layer, kind="hetconv", part=p), i))
    suffix = part_suffix(policy)
    out = ArchSpec(f"{a.name}{suffix}", a.input, tuple(layers))
    logger.info(f"hetconvify {a.name}: {sum(flags)} layers -> {suffix}")
    return out


def _expand(a: ArchSpec, rewrite: Callable[[int, LayerSpec], Optional[Sequence[LayerSpec]]],
            name: str) -> ArchSpec:
    """
    Replace layers by sequences, remapping index references.

    A reference to an expanded layer points at the last layer of its replacement; the
    first replacement inherits the original's input_from.
    """
    groups: List[Sequence[LayerSpec]] = []
    for i, layer in enumerate(a.layers):
        produced = rewrite(i, layer)
        groups.append([layer] if produced is None else list(produced))

    last_index: Dict[int, int] = {-1: -1}
    position = 0
    for i, group in enumerate(groups):
        position += len(group)
        last_index[i] = position - 1

    def remap(ref: Optional[int]) -> Optional[int]:
        return None if ref is None else last_index[ref]

    layers: List[LayerSpec] = []
    for i, group in enumerate(groups):
        for j, layer in enumerate(group):
            if j == 0:
                layer = replace(layer, input_from=remap(layer.input_from),
                                residual_from=remap(layer.residual_from))
            layers.append(layer)
    return ArchSpec(name, a.input, tuple(layers))


def substitute_gwc_pwc(a: ArchSpec, groups: int, skip_first: bool = True) -> ArchSpec:
    """Each eligible conv becomes GWC M->M (G groups, same K/stride/padding) then PWC M->N"""
    g = Sanitizer.sanitize_count(groups, "groups")
    flags = _eligible(a, skip_first)

    def rewrite(i: int, layer: LayerSpec):
        if not flags[i]:
            return None
        block = layer.block or layer.name
        return _checked(lambda: (
            LayerSpec(f"{layer.name}_gwc", "gwc", layer.in_channels, layer.in_channels,
                      layer.kernel, layer.stride, layer.padding, groups=g, bias=layer.bias,
                      input_from=layer.input_from, block=block),
            LayerSpec(f"{layer.name}_pwc", "pwc", layer.in_channels, layer.out_channels,
                      bias=layer.bias, block=block),
        ), i)

    out = _expand(a, rewrite, f"{a.name}_GWC{g}_PWC")
    logger.info(f"substitute_gwc_pwc {a.name}: {sum(flags)} layers, G={g}")
    return out


def substitute_dwc_pwc(a: ArchSpec, skip_first: bool = True) -> ArchSpec:
    """Each eligible conv becomes DWC M->M (same K/stride/padding) then PWC M->N"""
    flags = _eligible(a, skip_first)

    def rewrite(i: int, layer: LayerSpec):
        if not flags[i]:
            return None
        block = layer.block or layer.name
        return (
            LayerSpec(f"{layer.name}_dwc", "dwc", layer.in_channels, layer.in_channels,
                      layer.kernel, layer.stride, layer.padding, bias=layer.bias,
                      input_from=layer.input_from, block=block),
            LayerSpec(f"{layer.name}_pwc", "pwc", layer.in_channels, layer.out_channels,
                      bias=layer.bias, block=block),
        )

    out = _expand(a, rewrite, f"{a.name}_DWC_PWC")
    logger.info(f"substitute_dwc_pwc {a.name}: {sum(flags)} layers")
    return out


def merge_separable(a: ArchSpec, part: PartPolicy) -> ArchSpec:
    """
    Replace each DWC immediately followed by a PWC of the same block by one HetConv M->N
    with the DWC's kernel, stride and padding.
    """
    policy = parse_part_policy(part)
    layers = a.layers
    merged_into: Dict[int, LayerSpec] = {}
    dropped = set()
    for i in range(len(layers) - 1):
        dw, pw = layers[i], layers[i + 1]
        if (dw.kind == "dwc" and pw.kind == "pwc" and pw.input_from is None
                and dw.block is not None and dw.block == pw.block):
            p = resolve_part(policy, dw.in_channels)
            merged_into[i + 1] = _checked(lambda: LayerSpec(
                dw.block, "hetconv", dw.in_channels, pw.out_channels, dw.kernel, dw.stride,
                dw.padding, part=p, bias=pw.bias, input_from=dw.input_from, block=dw.block),
                i + 1)
            dropped.add(i)

    if not merged_into:
        raise ArchSpecError(f"{a.name} has no depthwise + pointwise pairs to merge")

    # index i (dropped) disappears; references to it only ever come from i + 1
    new_index: Dict[int, int] = {-1: -1}
    position = 0
    for i in range(len(layers)):
        if i in dropped:
            continue
        new_index[i] = position
        position += 1

    def remap(ref: Optional[int]) -> Optional[int]:
        if ref is None:
            return None
        if ref in dropped:
            raise ArchSpecError(f"layer {layers[ref].name} feeds a layer outside its pair")
        return new_index[ref]

    out_layers = []
    for i, layer in enumerate(layers):
        if i in dropped:
            continue
        layer = merged_into.get(i, layer)
        out_layers.append(replace(layer, input_from=remap(layer.input_from),
                                  residual_from=remap(layer.residual_from)))

    suffix = part_suffix(policy)
    logger.info(f"merge_separable {a.name}: {len(merged_into)} pairs -> {suffix}")
    return ArchSpec(f"{a.name}{suffix}", a.input, tuple(out_layers))
