"""
Tests for architectures.transforms.
Run: pytest tests/test_transforms.py
"""

import pytest

from analyzer.cost_report import cost_report, latency_chain
from architectures.arch_spec import ArchSpec, ArchSpecError, LayerSpec
from architectures.builders import builtin_arch
from architectures.transforms import (PER_CHANNEL, hetconvify, merge_separable, parse_part_policy,
                                      resolve_part, substitute_dwc_pwc, substitute_gwc_pwc)
from utils.validation import ValidationError


@pytest.fixture(scope="module")
def vgg16():
    return builtin_arch("vgg16-cifar")


@pytest.fixture(scope="module")
def resnet56():
    return builtin_arch("resnet56-cifar")


def test_part_policy():
    assert parse_part_policy("PC") == PER_CHANNEL
    assert parse_part_policy("8") == 8
    assert resolve_part(PER_CHANNEL, 128) == 128
    with pytest.raises(ValidationError):
        parse_part_policy("zero")


class TestHetconvify:
    def test_naming(self, vgg16):
        assert hetconvify(vgg16, 4).name == "vgg16-cifar_P4"
        assert hetconvify(vgg16, "pc").name == "vgg16-cifar_PC"

    def test_first_conv_skipped(self, vgg16):
        het = hetconvify(vgg16, 4)
        kinds = [layer.kind for layer in het.conv_layers()]
        assert kinds[0] == "standard_conv"
        assert set(kinds[1:]) == {"hetconv"}
        assert all(layer.part == 4 for layer in het.conv_layers()[1:])

    def test_first_conv_included_when_requested(self):
        a = ArchSpec("tiny", (4, 8, 8), (LayerSpec("c1", "standard_conv", 4, 4, 3, 1, 1),))
        assert hetconvify(a, 2, skip_first=False).layers[0].kind == "hetconv"
        assert hetconvify(a, 2).layers[0].kind == "standard_conv"

    def test_indivisible_part_names_layer(self, vgg16):
        with pytest.raises(ArchSpecError, match="3 does not divide 64 at layer conv2"):
            hetconvify(vgg16, 3)

    def test_per_channel_sets_p_to_m(self, vgg16):
        het = hetconvify(vgg16, "pc")
        conv5 = het.layers[het.layer_index("conv5")]
        assert conv5.part == conv5.in_channels == 128

    def test_original_untouched(self, vgg16):
        hetconvify(vgg16, 2)
        assert all(layer.kind == "standard_conv" for layer in vgg16.conv_layers())

    def test_latency_stays_zero(self, resnet56):
        assert latency_chain(hetconvify(resnet56, 4)).max_latency == 0

    def test_residual_wiring_preserved(self, resnet56):
        het = hetconvify(resnet56, 2)
        for old, new in zip(resnet56.layers, het.layers):
            assert (old.input_from, old.residual_from) == (new.input_from, new.residual_from)


class TestSubstitutions:
    def test_gwc_pwc_layers(self, vgg16):
        sub = substitute_gwc_pwc(vgg16, 4)
        assert sub.name == "vgg16-cifar_GWC4_PWC"
        gwc = sub.layers[sub.layer_index("conv2_gwc")]
        pwc = sub.layers[sub.layer_index("conv2_pwc")]
        assert (gwc.kind, gwc.groups, gwc.out_channels) == ("gwc", 4, 64)
        assert (pwc.kind, pwc.kernel) == ("pwc", 1)
        assert gwc.block == pwc.block == "conv2"

    def test_dwc_pwc_layers(self, vgg16):
        sub = substitute_dwc_pwc(vgg16)
        assert sub.name == "vgg16-cifar_DWC_PWC"
        assert len(sub.layers) == len(vgg16.layers) + 12

    def test_substitution_latency_is_one(self, vgg16):
        chain = latency_chain(substitute_dwc_pwc(vgg16))
        assert chain.max_latency == 1
        assert chain.blocks["conv1"] == 0
        assert chain.blocks["conv2"] == 1

    def test_gwc_groups_must_divide(self):
        a = ArchSpec("tiny", (3, 8, 8), (
            LayerSpec("c1", "standard_conv", 3, 6, 3, 1, 1),
            LayerSpec("c2", "standard_conv", 6, 6, 3, 1, 1),
        ))
        with pytest.raises(ArchSpecError, match="4 does not divide 6"):
            substitute_gwc_pwc(a, 4)

    def test_residual_references_remapped(self, resnet56):
        sub = substitute_dwc_pwc(resnet56)
        add = sub.layers[sub.layer_index("s1b1_add")]
        assert sub.layers[add.input_from].name == "s1b1_conv2_pwc"
        assert sub.output_shape == resnet56.output_shape

    def test_reports_drop_cost(self, vgg16):
        base = cost_report(vgg16)
        assert cost_report(substitute_gwc_pwc(vgg16, 4)).total_flops < base.total_flops
        assert cost_report(substitute_dwc_pwc(vgg16)).total_flops < base.total_flops


class TestMergeSeparable:
    def test_merges_every_block(self):
        mobilenet = builtin_arch("mobilenet-cifar")
        merged = merge_separable(mobilenet, 32)
        assert merged.name == "mobilenet-cifar_P32"
        het = [layer for layer in merged.layers if layer.kind == "hetconv"]
        assert [layer.name for layer in het] == [f"block{i}" for i in range(1, 14)]
        assert not any(layer.kind in ("dwc", "pwc") for layer in merged.layers)
        assert merged.output_shape == mobilenet.output_shape
        assert latency_chain(merged).max_latency == 0

    def test_keeps_stride(self):
        merged = merge_separable(builtin_arch("mobilenet-cifar"), 4)
        block2 = merged.layers[merged.layer_index("block2")]
        assert (block2.stride, block2.in_channels, block2.out_channels) == (2, 64, 128)

    def test_per_channel_naming(self):
        merged = merge_separable(builtin_arch("mobilenet-cifar"), "pc")
        assert merged.name == "mobilenet-cifar_PC"
        block2 = merged.layers[merged.layer_index("block2")]
        assert block2.part == 64

    def test_no_pairs(self, vgg16):
        with pytest.raises(ArchSpecError, match="no depthwise"):
            merge_separable(vgg16, 4)
