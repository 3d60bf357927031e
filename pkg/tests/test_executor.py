"""
Tests for architectures.executor: measured multiplications match the cost report.
Run: pytest tests/test_executor.py
"""

import pytest

from analyzer.cost_report import cost_report
from architectures.arch_spec import NETWORK_INPUT, ArchSpec, ArchSpecError, LayerSpec
from architectures.executor import execute_arch
from architectures.transforms import hetconvify, merge_separable, substitute_dwc_pwc, substitute_gwc_pwc
from core.tensor import Rng, random_uniform
from kernels.geometry import MulCounter


def mini_vgg():
    return ArchSpec("mini-vgg", (3, 8, 8), (
        LayerSpec("conv1", "standard_conv", 3, 8, 3, 1, 1),
        LayerSpec("conv2", "standard_conv", 8, 8, 3, 1, 1),
        LayerSpec("pool1", "pool", kernel=2, stride=2, pool="max"),
        LayerSpec("conv3", "standard_conv", 8, 16, 3, 1, 1),
        LayerSpec("pool2", "pool", kernel=2, stride=2, pool="avg"),
        LayerSpec("fc", "fc", 16 * 2 * 2, 10, bias=True),
    ))


def mini_resnet():
    return ArchSpec("mini-resnet", (4, 6, 6), (
        LayerSpec("conv1", "standard_conv", 4, 8, 3, 1, 1),
        LayerSpec("b_conv1", "standard_conv", 8, 8, 3, 2, 1),
        LayerSpec("b_conv2", "standard_conv", 8, 8, 3, 1, 1),
        LayerSpec("b_shortcut", "standard_conv", 8, 8, 1, 2, 0, input_from=0),
        LayerSpec("b_add", "add_residual", input_from=2, residual_from=3),
        LayerSpec("gap", "pool", pool="global_avg"),
        LayerSpec("fc", "fc", 8, 5, bias=True),
    ))


def mini_mobilenet():
    return ArchSpec("mini-mobilenet", (3, 8, 8), (
        LayerSpec("conv1", "standard_conv", 3, 8, 3, 1, 1),
        LayerSpec("block1_dw", "dwc", 8, 8, 3, 2, 1, block="block1"),
        LayerSpec("block1_pw", "pwc", 8, 16, block="block1"),
        LayerSpec("gap", "pool", pool="global_avg"),
        LayerSpec("fc", "fc", 16, 10, bias=True),
    ))


SPECS = {
    "vgg": mini_vgg,
    "vgg_p4": lambda: hetconvify(mini_vgg(), 4),
    "vgg_gwc": lambda: substitute_gwc_pwc(mini_vgg(), 2),
    "vgg_dwc": lambda: substitute_dwc_pwc(mini_vgg()),
    "resnet": mini_resnet,
    "resnet_pc": lambda: hetconvify(mini_resnet(), "pc"),
    "mobilenet": mini_mobilenet,
    "mobilenet_p8": lambda: merge_separable(mini_mobilenet(), 8),
}


@pytest.mark.parametrize("batch", [1, 3])
@pytest.mark.parametrize("key", sorted(SPECS))
def test_counted_macs_equal_report_total(key, batch):
    a = SPECS[key]()
    x = random_uniform((batch,) + a.input, Rng(4))
    counter = MulCounter()
    out = execute_arch(a, x, Rng(9), counter)
    assert out.dims == (batch,) + a.output_shape
    assert counter.count == batch * cost_report(a).total_flops


def test_same_seed_same_output():
    a = mini_resnet()
    x = random_uniform((2,) + a.input, Rng(1))
    assert execute_arch(a, x, Rng(5)) == execute_arch(a, x, Rng(5))
    assert execute_arch(a, x, Rng(5)) != execute_arch(a, x, Rng(6))


def test_input_shape_checked():
    with pytest.raises(ArchSpecError, match="do not match"):
        execute_arch(mini_vgg(), random_uniform((1, 3, 9, 9), Rng(0)), Rng(0))


def test_residual_from_network_input():
    a = ArchSpec("skip", (2, 4, 4), (
        LayerSpec("c", "standard_conv", 2, 2, 3, 1, 1),
        LayerSpec("add", "add_residual", residual_from=NETWORK_INPUT),
    ))
    x = random_uniform((1, 2, 4, 4), Rng(2))
    assert execute_arch(a, x, Rng(3)).dims == (1, 2, 4, 4)
