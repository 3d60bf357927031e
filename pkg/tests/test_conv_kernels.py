"""
Tests for kernels.conv and kernels.layers: oracle equivalence, multiplication counts,
shifted-layout coverage, linearity and backward passes.
Run: pytest tests/test_conv_kernels.py
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy import signal

from analyzer import cost_model as cm
from core.tensor import Rng, Tensor4, max_abs_diff, random_uniform
from kernels import conv, layers
from kernels.filter_banks import DenseFilterBank, HetConvFilterBank, embed_as_dense
from kernels.geometry import ConvGeometry, GeometryError, MulCounter, counted_einsum
from training.gradcheck import check_hetconv_layer


def reference_conv(x: np.ndarray, weights: np.ndarray, bias: np.ndarray, stride: int, padding: int):
    """Independent cross-correlation through scipy.signal, strided afterwards"""
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    b, n = x.shape[0], weights.shape[0]
    full = np.stack([
        np.stack([
            sum(signal.correlate(xp[i, c], weights[o, c], mode="valid") for c in range(x.shape[1]))
            for o in range(n)])
        for i in range(b)])
    return full[:, :, ::stride, ::stride] + bias[None, :, None, None]


@st.composite
def layer_configs(draw):
    m = draw(st.integers(2, 12))
    part = draw(st.sampled_from([d for d in range(1, m + 1) if m % d == 0]))
    n = draw(st.integers(1, 10))
    k = draw(st.sampled_from([1, 3, 5]))
    stride = draw(st.integers(1, 2))
    padding = draw(st.integers(0, 2))
    size = draw(st.integers(max(1, k - 2 * padding), 7))
    seed = draw(st.integers(0, 2 ** 32))
    return ConvGeometry(m, n, k, stride, padding), part, size, seed


class TestStandardConv:
    @settings(max_examples=30, deadline=None)
    @given(layer_configs())
    def test_matches_scipy(self, cfg):
        g, _, size, seed = cfg
        rng = Rng(seed)
        x = random_uniform((2, g.in_channels, size, size), rng)
        bank = DenseFilterBank.random(g, rng, with_bias=True)
        out = conv.conv2d_forward(x, bank)
        expected = reference_conv(x.array, bank.weights, bank.bias, g.stride, g.padding)
        assert_allclose(out.array, expected, atol=1e-12)

    def test_count_matches_closed_form(self):
        g = ConvGeometry(4, 6, 3, 2, 1)
        counter = MulCounter()
        x = random_uniform((3, 4, 9, 9), Rng(0))
        out = conv.conv2d_forward(x, DenseFilterBank.random(g, Rng(1)), counter)
        d = out.dims[2]
        assert counter.count == 3 * cm.flops_standard(cm.LayerCostInput(d, 4, 6, 3))

    def test_channel_mismatch(self):
        g = ConvGeometry(4, 2, 3)
        with pytest.raises(GeometryError, match="channel mismatch"):
            conv.conv2d_forward(random_uniform((1, 3, 5, 5), Rng(0)), DenseFilterBank.random(g, Rng(0)))

    def test_input_too_small(self):
        g = ConvGeometry(1, 1, 5)
        with pytest.raises(GeometryError):
            conv.conv2d_forward(random_uniform((1, 1, 3, 3), Rng(0)), DenseFilterBank.random(g, Rng(0)))


class TestHetConv:
    @settings(max_examples=60, deadline=None)
    @given(layer_configs())
    def test_equals_dense_embedding(self, cfg):
        g, part, size, seed = cfg
        rng = Rng(seed)
        x = random_uniform((2, g.in_channels, size, size), rng)
        bank = HetConvFilterBank.random(g, part, rng, with_bias=True)
        assert max_abs_diff(conv.hetconv_forward(x, bank),
                            conv.conv2d_forward(x, embed_as_dense(bank))) < 1e-10

    @settings(max_examples=40, deadline=None)
    @given(layer_configs())
    def test_count_equals_closed_form(self, cfg):
        g, part, size, seed = cfg
        rng = Rng(seed)
        x = random_uniform((2, g.in_channels, size, size), rng)
        counter = MulCounter()
        out = conv.hetconv_forward(x, HetConvFilterBank.random(g, part, rng), counter)
        inp = cm.LayerCostInput(out.dims[2], g.in_channels, g.out_channels, g.kernel,
                                part=part, d_out_w=out.dims[3])
        assert counter.count == 2 * cm.flops_hetconv(inp)

    def test_p1_is_plain_dense(self):
        g = ConvGeometry(4, 3, 3, 1, 1)
        rng = Rng(2)
        bank = HetConvFilterBank.random(g, 1, rng)
        assert bank.one_weights.shape == (3, 0)
        dense = embed_as_dense(bank)
        assert_allclose(dense.weights, bank.kxk_weights)

    def test_known_small_case(self):
        # M=2, N=2, P=2, K=3: filter 0 is K x K on channel 0, 1 x 1 on channel 1
        g = ConvGeometry(2, 2, 3, 1, 1)
        kxk = np.zeros((2, 1, 3, 3))
        kxk[0, 0, 1, 1] = 2.0
        kxk[1, 0, 0, 0] = 1.0
        one = np.array([[3.0], [5.0]])
        bank = HetConvFilterBank(g, 2, kxk, one)
        x = np.zeros((1, 2, 3, 3))
        x[0, 0, 1, 1] = 1.0
        x[0, 1, 1, 1] = 10.0
        out = conv.hetconv_forward(Tensor4(x), bank).array
        assert out[0, 0, 1, 1] == 2.0 + 30.0
        # filter 1: K x K on channel 1 (top-left tap), 1 x 1 on channel 0
        assert out[0, 1, 2, 2] == 10.0
        assert out[0, 1, 1, 1] == 5.0

    @pytest.mark.parametrize("m,n,part", [(8, 8, 4), (6, 3, 3), (12, 16, 12)])
    def test_shifted_layout_covers_all_channels(self, m, n, part):
        bank = HetConvFilterBank.random(ConvGeometry(m, n, 3), part, Rng(0))
        covered = set()
        for f in range(n):
            kxk, one = set(bank.kxk_channels(f)), set(bank.one_channels(f))
            assert not kxk & one and kxk | one == set(range(m))
            assert len(kxk) == m // part
            covered |= kxk
        assert covered == set(range(m))

    def test_bad_part(self):
        with pytest.raises(GeometryError, match="3 does not divide 8"):
            HetConvFilterBank.random(ConvGeometry(8, 4, 3), 3, Rng(0))
        with pytest.raises(GeometryError, match="exceeds"):
            HetConvFilterBank(ConvGeometry(4, 4, 3), 8, np.zeros((4, 0, 3, 3)), np.zeros((4, 4)))

    @settings(max_examples=20, deadline=None)
    @given(layer_configs(), st.floats(-3, 3))
    def test_linear_in_input(self, cfg, a):
        g, part, size, seed = cfg
        rng = Rng(seed)
        x = random_uniform((1, g.in_channels, size, size), rng)
        bank = HetConvFilterBank.random(g, part, rng)
        assert_allclose(conv.hetconv_forward(x.scaled(a), bank).array,
                        a * conv.hetconv_forward(x, bank).array, atol=1e-12)


class TestBackward:
    @pytest.mark.parametrize("m,n,part,stride", [(4, 3, 1, 1), (4, 3, 4, 2), (6, 5, 3, 1), (4, 4, 2, 2)])
    def test_hetconv_gradients(self, m, n, part, stride):
        rng = Rng(m * 100 + part)
        bank = HetConvFilterBank.random(ConvGeometry(m, n, 3, stride, 1), part, rng, with_bias=True)
        x = random_uniform((2, m, 5, 5), rng)
        results = check_hetconv_layer(bank, x, rng)
        for name, result in results.items():
            assert result.passed(1e-4), f"{name}: {result.max_rel_error}"

    def test_hetconv_backward_matches_dense_on_existing_weights(self):
        g = ConvGeometry(4, 4, 3, 1, 1)
        rng = Rng(9)
        bank = HetConvFilterBank.random(g, 2, rng)
        x = random_uniform((1, 4, 6, 6), rng)
        grad_out = random_uniform((1, 4, 6, 6), rng)
        gx_h, gf, gb_h = conv.hetconv_backward(x, bank, grad_out)
        gx_d, gw_d, gb_d = conv.conv2d_backward(x, embed_as_dense(bank), grad_out)
        assert_allclose(gx_h.array, gx_d.array, atol=1e-12)
        assert_allclose(gb_h, gb_d)
        for f in range(4):
            assert_allclose(gf.kxk_weights[f], gw_d[f, bank.kxk_channels(f)], atol=1e-12)
            assert_allclose(gf.one_weights[f], gw_d[f, bank.one_channels(f), 1, 1], atol=1e-12)

    def test_grad_out_shape_checked(self):
        g = ConvGeometry(2, 2, 3, 1, 1)
        bank = HetConvFilterBank.random(g, 2, Rng(0))
        x = random_uniform((1, 2, 4, 4), Rng(1))
        with pytest.raises(GeometryError):
            conv.hetconv_backward(x, bank, random_uniform((1, 2, 3, 3), Rng(2)))


class TestSeparableKernels:
    def test_dwc_count(self):
        counter = MulCounter()
        out = conv.dwc_forward(random_uniform((1, 4, 8, 8), Rng(0)), Rng(1).normal_array((4, 3, 3)),
                               counter, stride=1, padding=1)
        assert out.dims == (1, 4, 8, 8)
        assert counter.count == cm.flops_dwc(cm.LayerCostInput(8, 4, 4, 3))

    def test_dwc_is_per_channel(self):
        x = random_uniform((1, 3, 5, 5), Rng(0))
        w = Rng(1).normal_array((3, 3, 3))
        out = conv.dwc_forward(x, w, padding=1).array
        for c in range(3):
            expected = signal.correlate(np.pad(x.array[0, c], 1), w[c], mode="valid")
            assert_allclose(out[0, c], expected, atol=1e-12)

    def test_pwc_count_and_values(self):
        x = random_uniform((2, 4, 3, 3), Rng(0))
        w = Rng(1).normal_array((5, 4))
        counter = MulCounter()
        out = conv.pwc_forward(x, w, counter)
        assert counter.count == 2 * cm.flops_pwc(cm.LayerCostInput(3, 4, 5, 1))
        assert_allclose(out.array[1, :, 2, 0], w @ x.array[1, :, 2, 0])

    @pytest.mark.parametrize("groups", [1, 2, 4])
    def test_gwc_count_and_group_one_is_dense(self, groups):
        g = ConvGeometry(4, 8, 3, 1, 1)
        x = random_uniform((1, 4, 5, 5), Rng(0))
        w = Rng(1).normal_array((8, 4 // groups, 3, 3))
        counter = MulCounter()
        out = conv.gwc_forward(x, groups, w, counter, 1, 1)
        inp = cm.LayerCostInput(5, 4, 8, 3, groups=groups)
        assert counter.count == cm.flops_gwc(inp)
        if groups == 1:
            dense = conv.conv2d_forward(x, DenseFilterBank(g, w))
            assert max_abs_diff(out, dense) < 1e-12

    def test_gwc_divisibility(self):
        with pytest.raises(GeometryError, match="does not divide"):
            conv.gwc_forward(random_uniform((1, 4, 5, 5), Rng(0)), 3, np.zeros((6, 1, 3, 3)))


class TestLayers:
    def test_counted_einsum_counts_joint_index_space(self):
        counter = MulCounter()
        counted_einsum('ij,jk->ik', np.ones((2, 3)), np.ones((3, 4)), counter)
        assert counter.count == 24

    def test_counted_einsum_extent_mismatch(self):
        with pytest.raises(GeometryError):
            counted_einsum('ij,jk->ik', np.ones((2, 3)), np.ones((4, 4)))

    def test_max_pool(self):
        x = Tensor4(np.arange(16, dtype=np.float64).reshape(1, 1, 4, 4))
        assert layers.max_pool2d(x, 2, 2).array.reshape(-1).tolist() == [5, 7, 13, 15]

    def test_global_avg_pool_and_backward(self):
        x = random_uniform((2, 3, 4, 4), Rng(0))
        pooled = layers.global_avg_pool(x)
        assert pooled.dims == (2, 3, 1, 1)
        grad = layers.global_avg_pool_backward(x.dims, np.ones((2, 3)))
        assert_allclose(grad.array, np.full((2, 3, 4, 4), 1 / 16))

    def test_fc_forward_count(self):
        counter = MulCounter()
        out = layers.fc_forward(random_uniform((3, 2, 2, 2), Rng(0)), np.ones((5, 8)), counter=counter)
        assert out.dims == (3, 5, 1, 1)
        assert counter.count == 3 * 8 * 5

    def test_relu_backward_masks(self):
        x = Tensor4(np.array([-1.0, 2.0]).reshape(1, 1, 1, 2))
        g = layers.relu_backward(x, Tensor4(np.ones((1, 1, 1, 2))))
        assert g.array.reshape(-1).tolist() == [0.0, 1.0]

    def test_add_shape_mismatch(self):
        with pytest.raises(GeometryError):
            layers.add(random_uniform((1, 1, 2, 2), Rng(0)), random_uniform((1, 2, 2, 2), Rng(0)))
