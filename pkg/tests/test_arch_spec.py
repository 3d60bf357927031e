"""
Tests for architectures.arch_spec: layer validation and shape chaining.
Run: pytest tests/test_arch_spec.py
"""

import pytest

from architectures.arch_spec import NETWORK_INPUT, ArchSpec, ArchSpecError, LayerSpec


def small_arch(**conv2_overrides):
    conv2 = dict(name="conv2", kind="standard_conv", in_channels=8, out_channels=8,
                 kernel=3, stride=2, padding=1)
    conv2.update(conv2_overrides)
    return ArchSpec("small", (3, 16, 16), (
        LayerSpec("conv1", "standard_conv", 3, 8, 3, 1, 1),
        LayerSpec(**conv2),
        LayerSpec("gap", "pool", pool="global_avg"),
        LayerSpec("fc", "fc", 8, 10, bias=True),
    ))


class TestLayerSpec:
    def test_unknown_kind(self):
        with pytest.raises(ArchSpecError, match="unknown layer kind 'conv3d' at layer x"):
            LayerSpec("x", "conv3d")

    def test_part_must_divide(self):
        with pytest.raises(ArchSpecError, match="3 does not divide 64 at layer conv2"):
            LayerSpec("conv2", "hetconv", 64, 64, 3, part=3)

    def test_part_only_for_hetconv(self):
        with pytest.raises(ArchSpecError, match="part only applies"):
            LayerSpec("c", "standard_conv", 4, 4, 3, part=2)

    def test_even_kernel_rejected(self):
        with pytest.raises(ArchSpecError, match="kernel must be odd"):
            LayerSpec("c", "standard_conv", 4, 4, 2)

    def test_dwc_needs_equal_channels(self):
        with pytest.raises(ArchSpecError, match="dwc needs"):
            LayerSpec("d", "dwc", 4, 8, 3)

    def test_pwc_needs_one_by_one(self):
        with pytest.raises(ArchSpecError, match="pwc needs"):
            LayerSpec("p", "pwc", 4, 8, 3)

    def test_gwc_groups(self):
        LayerSpec("g", "gwc", 8, 8, 3, groups=4)
        with pytest.raises(ArchSpecError, match="3 does not divide 8"):
            LayerSpec("g", "gwc", 8, 8, 3, groups=3)

    def test_pool_mode(self):
        with pytest.raises(ArchSpecError, match="pool must be one of"):
            LayerSpec("p", "pool", pool="median")

    def test_add_residual_needs_source(self):
        with pytest.raises(ArchSpecError, match="residual_from"):
            LayerSpec("a", "add_residual")


class TestChaining:
    def test_shapes_resolve(self):
        a = small_arch()
        shapes = [r.out_shape for r in a.resolved]
        assert shapes == [(8, 16, 16), (8, 8, 8), (8, 1, 1), (10, 1, 1)]
        assert a.output_shape == (10, 1, 1)

    def test_channel_mismatch(self):
        with pytest.raises(ArchSpecError, match="channel mismatch: layer conv2 expects 16"):
            small_arch(in_channels=16)

    def test_fc_features_must_match(self):
        with pytest.raises(ArchSpecError, match="layer fc expects 32 features"):
            ArchSpec("bad", (2, 4, 2), (LayerSpec("fc", "fc", 32, 10),))

    def test_kernel_larger_than_input(self):
        with pytest.raises(ArchSpecError, match="too small"):
            ArchSpec("bad", (1, 2, 2), (LayerSpec("c", "standard_conv", 1, 1, 5),))

    def test_duplicate_names(self):
        conv = LayerSpec("c", "standard_conv", 3, 3, 1)
        with pytest.raises(ArchSpecError, match="duplicate layer name 'c'"):
            ArchSpec("dup", (3, 4, 4), (conv, conv))

    def test_residual_shape_mismatch(self):
        layers = (
            LayerSpec("c1", "standard_conv", 3, 4, 3, 1, 1),
            LayerSpec("add", "add_residual", residual_from=NETWORK_INPUT),
        )
        with pytest.raises(ArchSpecError, match="residual shape"):
            ArchSpec("res", (3, 8, 8), layers)

    def test_residual_from_network_input(self):
        layers = (
            LayerSpec("c1", "standard_conv", 3, 3, 3, 1, 1),
            LayerSpec("add", "add_residual", residual_from=NETWORK_INPUT),
        )
        assert ArchSpec("res", (3, 8, 8), layers).output_shape == (3, 8, 8)

    def test_forward_reference_rejected(self):
        layers = (LayerSpec("c1", "standard_conv", 3, 3, 1, input_from=0),)
        with pytest.raises(ArchSpecError, match="earlier layer"):
            ArchSpec("fwd", (3, 4, 4), layers)

    def test_bad_input_shape(self):
        with pytest.raises(ArchSpecError):
            ArchSpec("bad", (3, 0, 4), ())

    def test_lookup_helpers(self):
        a = small_arch()
        assert a.layer_index("gap") == 2
        assert [layer.name for layer in a.conv_layers()] == ["conv1", "conv2"]
        assert a.renamed("other").name == "other"
        with pytest.raises(KeyError):
            a.layer_index("missing")
