# architectures/executor.py
"""
Run a desk-scale ArchSpec through the kernels with seeded random weights.

Layer i draws its weights from rng.spawn(i), so a given (spec, seed) always executes the
same network. The executor applies layers exactly as listed: activations and batch norm
are not part of an ArchSpec and cost nothing.
"""

import logging
from typing import List, Optional

import numpy as np

from architectures.arch_spec import NETWORK_INPUT, ArchSpec, ArchSpecError, LayerSpec
from core.tensor import Rng, Tensor4
from kernels import conv, layers as ops
from kernels.filter_banks import DenseFilterBank, HetConvFilterBank
from kernels.geometry import ConvGeometry, MulCounter

logger = logging.getLogger("ArchSpec")


def _geometry(layer: LayerSpec) -> ConvGeometry:
    return ConvGeometry(layer.in_channels, layer.out_channels, layer.kernel,
                        layer.stride, layer.padding)


def _run_layer(layer: LayerSpec, x: Tensor4, outputs: List[Tensor4], network_input: Tensor4,
               rng: Rng, counter: Optional[MulCounter]) -> Tensor4:
    kind = layer.kind
    if kind == "standard_conv":
        bank = DenseFilterBank.random(_geometry(layer), rng, with_bias=layer.bias)
        return conv.conv2d_forward(x, bank, counter)
    if kind == "hetconv":
        bank = HetConvFilterBank.random(_geometry(layer), layer.part, rng, with_bias=layer.bias)
        return conv.hetconv_forward(x, bank, counter)
    if kind in ("dwc", "pwc", "gwc"):
        k, m, n = layer.kernel, layer.in_channels, layer.out_channels
        bias = rng.uniform_array((n,), -0.1, 0.1) if layer.bias else None
        if kind == "dwc":
            w = rng.normal_array((m, k, k), np.sqrt(2.0 / (k * k)))
            return conv.dwc_forward(x, w, counter, layer.stride, layer.padding, bias)
        if kind == "pwc":
            w = rng.normal_array((n, m), np.sqrt(2.0 / m))
            return conv.pwc_forward(x, w, counter, layer.stride, bias)
        per_group = m // layer.groups
        w = rng.normal_array((n, per_group, k, k), np.sqrt(2.0 / (per_group * k * k)))
        return conv.gwc_forward(x, layer.groups, w, counter, layer.stride, layer.padding, bias)
    if kind == "pool":
        if layer.pool == "global_avg":
            return ops.global_avg_pool(x)
        if layer.pool == "max":
            return ops.max_pool2d(x, layer.kernel, layer.stride, layer.padding)
        return ops.avg_pool2d(x, layer.kernel, layer.stride, layer.padding)
    if kind == "fc":
        w = rng.normal_array((layer.out_channels, layer.in_channels), np.sqrt(1.0 / layer.in_channels))
        bias = rng.uniform_array((layer.out_channels,), -0.1, 0.1) if layer.bias else None
        return ops.fc_forward(x, w, bias, counter)
    # add_residual
    skip = network_input if layer.residual_from == NETWORK_INPUT else outputs[layer.residual_from]
    return ops.add(x, skip)


def execute_arch(a: ArchSpec, x: Tensor4, rng: Rng,
                 counter: Optional[MulCounter] = None) -> Tensor4:
    """
    Forward pass of the whole spec. The counter accrues the MACs of every conv and FC
    layer, so for a batch of B items it reads B times the cost report total.

    Raises:
        ArchSpecError: If x does not match the architecture's input shape
    """
    if tuple(x.dims[1:]) != tuple(a.input):
        raise ArchSpecError(f"input dims {x.dims[1:]} do not match {a.name} input {a.input}")
    outputs: List[Tensor4] = []
    for r in a.resolved:
        layer = r.layer
        src = r.index - 1 if layer.input_from is None else layer.input_from
        inp = x if src == NETWORK_INPUT else outputs[src]
        out = _run_layer(layer, inp, outputs, x, rng.spawn(r.index), counter)
        logger.debug(f"{layer.name}: {inp.dims} -> {out.dims}")
        outputs.append(out)
    return outputs[-1] if outputs else x
