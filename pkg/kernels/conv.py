# kernels/conv.py
"""
Convolution kernels over NCHW Tensor4 inputs: standard, HetConv, depthwise, pointwise
and groupwise, with forward passes, backward passes for the trainable kinds, and an
optional MulCounter that accrues every scalar multiplication executed.

All kernels are cross-correlations (no kernel flip). Each output element is accumulated
in a fixed order: K x K group, then 1 x 1 group, then bias.
"""

import logging
from typing import Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from core.tensor import Tensor4
from kernels.filter_banks import DenseFilterBank, HetConvFilterBank
from kernels.geometry import ConvGeometry, GeometryError, MulCounter, counted_einsum

logger = logging.getLogger("ConvKernels")


# ---------------------------------------------------------------------------
# Patch helpers
# ---------------------------------------------------------------------------

def _check_channels(x: Tensor4, geometry: ConvGeometry) -> None:
    if x.dims[1] != geometry.in_channels:
        raise GeometryError(
            f"channel mismatch: input has {x.dims[1]} channels, layer expects {geometry.in_channels}")


def _pad(arr: np.ndarray, padding: int) -> np.ndarray:
    if padding == 0:
        return arr
    return np.pad(arr, ((0, 0), (0, 0), (padding, padding), (padding, padding)))


def _patches(arr: np.ndarray, geometry: ConvGeometry) -> np.ndarray:
    """Read-only view (B, C, Ho, Wo, K, K) of the padded input"""
    k, s = geometry.kernel, geometry.stride
    ho, wo = geometry.output_size(arr.shape[2], arr.shape[3])
    xp = _pad(arr, geometry.padding)
    windows = sliding_window_view(xp, (k, k), axis=(2, 3))
    return windows[:, :, :(ho - 1) * s + 1:s, :(wo - 1) * s + 1:s]


def _col2im(dpatches: np.ndarray, input_shape, geometry: ConvGeometry) -> np.ndarray:
    """Scatter-add patch gradients (B, C, Ho, Wo, K, K) back onto the input grid"""
    b, c, h, w = input_shape
    k, s, p = geometry.kernel, geometry.stride, geometry.padding
    ho, wo = dpatches.shape[2], dpatches.shape[3]
    dxp = np.zeros((b, c, h + 2 * p, w + 2 * p))
    for kh in range(k):
        for kw in range(k):
            dxp[:, :, kh:kh + (ho - 1) * s + 1:s, kw:kw + (wo - 1) * s + 1:s] += dpatches[..., kh, kw]
    return dxp[:, :, p:p + h, p:p + w]


def _check_grad_out(grad_out: Tensor4, x: Tensor4, geometry: ConvGeometry) -> None:
    ho, wo = geometry.output_size(x.dims[2], x.dims[3])
    expected = (x.dims[0], geometry.out_channels, ho, wo)
    if grad_out.dims != expected:
        raise GeometryError(f"grad_out has dims {grad_out.dims}, expected {expected}")


# ---------------------------------------------------------------------------
# Standard convolution
# ---------------------------------------------------------------------------

def conv2d_forward(x: Tensor4, f: DenseFilterBank,
                   counter: Optional[MulCounter] = None) -> Tensor4:
    """Dense cross-correlation; accrues D_o^2 * M * N * K^2 per batch item"""
    _check_channels(x, f.geometry)
    patches = _patches(x.array, f.geometry)
    out = counted_einsum('bchwkl,nckl->bnhw', patches, f.weights, counter)
    out += f.bias[None, :, None, None]
    return Tensor4._wrap(out)


def conv2d_backward(x: Tensor4, f: DenseFilterBank,
                    grad_out: Tensor4) -> Tuple[Tensor4, np.ndarray, np.ndarray]:
    """
    Gradients of sum(grad_out * conv2d_forward(x, f))

    Returns:
        (grad_x, grad_weights [N][M][K][K], grad_bias [N])
    """
    _check_channels(x, f.geometry)
    _check_grad_out(grad_out, x, f.geometry)
    g = grad_out.array
    patches = _patches(x.array, f.geometry)
    grad_w = np.einsum('bchwkl,bnhw->nckl', patches, g, optimize=True)
    dpatches = np.einsum('bnhw,nckl->bchwkl', g, f.weights, optimize=True)
    grad_x = _col2im(dpatches, x.dims, f.geometry)
    return Tensor4._wrap(grad_x), grad_w, g.sum(axis=(0, 2, 3))


# ---------------------------------------------------------------------------
# HetConv
# ---------------------------------------------------------------------------

def _residue_groups(bank: HetConvFilterBank):
    """Filters sharing n mod P share their channel split; yields (filters, kxk ch, 1x1 ch)"""
    g = bank.geometry
    for r in range(min(bank.part, g.out_channels)):
        filters = np.arange(r, g.out_channels, bank.part)
        yield filters, bank.kxk_channels(r), bank.one_channels(r)


def _centre_pixels(patches: np.ndarray, kernel: int) -> np.ndarray:
    c = kernel // 2
    return patches[..., c, c]


def hetconv_forward(x: Tensor4, f: HetConvFilterBank,
                    counter: Optional[MulCounter] = None) -> Tensor4:
    """
    HetConv response. Accrues D_o^2 * N * (M/P * K^2 + M - M/P) per batch item.

    Raises:
        GeometryError: channel mismatch (P range and divisibility are bank invariants)
    """
    g = f.geometry
    _check_channels(x, g)
    patches = _patches(x.array, g)
    centre = _centre_pixels(patches, g.kernel)
    b, _, ho, wo = centre.shape
    out = np.zeros((b, g.out_channels, ho, wo))

    for filters, kxk_ch, one_ch in _residue_groups(f):
        part_out = counted_einsum('bchwkl,nckl->bnhw',
                                  patches[:, kxk_ch], f.kxk_weights[filters], counter)
        if one_ch.size:
            part_out += counted_einsum('bchw,nc->bnhw',
                                       centre[:, one_ch], f.one_weights[filters], counter)
        out[:, filters] = part_out

    out += f.bias[None, :, None, None]
    logger.debug(f"hetconv_forward M={g.in_channels} N={g.out_channels} P={f.part} -> {out.shape}")
    return Tensor4._wrap(out)


def hetconv_backward(x: Tensor4, f: HetConvFilterBank,
                     grad_out: Tensor4) -> Tuple[Tensor4, HetConvFilterBank, np.ndarray]:
    """
    Gradients of sum(grad_out * hetconv_forward(x, f)).

    Only the weights that exist in the bank get a gradient; the structurally absent
    positions of the equivalent dense filter are never formed.

    Returns:
        (grad_x, grad_f with kxk/one/bias gradients, grad_bias)
    """
    g = f.geometry
    _check_channels(x, g)
    _check_grad_out(grad_out, x, g)
    go = grad_out.array
    patches = _patches(x.array, g)
    centre = _centre_pixels(patches, g.kernel)

    grad_kxk = np.zeros_like(f.kxk_weights)
    grad_one = np.zeros_like(f.one_weights)
    dpatches = np.zeros(patches.shape)
    dcentre = np.zeros(centre.shape)

    for filters, kxk_ch, one_ch in _residue_groups(f):
        g_r = go[:, filters]
        grad_kxk[filters] = np.einsum('bchwkl,bnhw->nckl', patches[:, kxk_ch], g_r, optimize=True)
        dpatches[:, kxk_ch] += np.einsum('bnhw,nckl->bchwkl', g_r, f.kxk_weights[filters],
                                         optimize=True)
        if one_ch.size:
            grad_one[filters] = np.einsum('bchw,bnhw->nc', centre[:, one_ch], g_r, optimize=True)
            dcentre[:, one_ch] += np.einsum('bnhw,nc->bchw', g_r, f.one_weights[filters],
                                            optimize=True)

    c = g.kernel // 2
    dpatches[..., c, c] += dcentre
    grad_x = _col2im(dpatches, x.dims, g)
    grad_bias = go.sum(axis=(0, 2, 3))
    grad_f = HetConvFilterBank(g, f.part, grad_kxk, grad_one, grad_bias)
    return Tensor4._wrap(grad_x), grad_f, grad_bias


# ---------------------------------------------------------------------------
# Depthwise / pointwise / groupwise
# ---------------------------------------------------------------------------

def dwc_forward(x: Tensor4, weights: np.ndarray, counter: Optional[MulCounter] = None,
                stride: int = 1, padding: int = 0,
                bias: Optional[np.ndarray] = None) -> Tensor4:
    """Depthwise: one K x K kernel per channel, weights [M][K][K]; D_o^2 * M * K^2"""
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 3 or weights.shape[1] != weights.shape[2]:
        raise GeometryError(f"depthwise weights must be [M][K][K], got {weights.shape}")
    m, k = weights.shape[0], weights.shape[1]
    geometry = ConvGeometry(m, m, k, stride, padding)
    _check_channels(x, geometry)
    out = counted_einsum('bchwkl,ckl->bchw', _patches(x.array, geometry), weights, counter)
    if bias is not None:
        out += np.asarray(bias)[None, :, None, None]
    return Tensor4._wrap(out)


def pwc_forward(x: Tensor4, weights: np.ndarray, counter: Optional[MulCounter] = None,
                stride: int = 1, bias: Optional[np.ndarray] = None) -> Tensor4:
    """Pointwise: 1 x 1 weights [N][M]; D_o^2 * M * N"""
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 2:
        raise GeometryError(f"pointwise weights must be [N][M], got {weights.shape}")
    geometry = ConvGeometry(weights.shape[1], weights.shape[0], 1, stride, 0)
    _check_channels(x, geometry)
    xs = x.array[:, :, ::stride, ::stride]
    out = counted_einsum('bchw,nc->bnhw', xs, weights, counter)
    if bias is not None:
        out += np.asarray(bias)[None, :, None, None]
    return Tensor4._wrap(out)


def gwc_forward(x: Tensor4, groups: int, weights: np.ndarray,
                counter: Optional[MulCounter] = None, stride: int = 1, padding: int = 0,
                bias: Optional[np.ndarray] = None) -> Tensor4:
    """
    Groupwise: G dense convolutions on disjoint channel groups, weights [N][M/G][K][K];
    D_o^2 * M * N * K^2 / G

    Raises:
        GeometryError: If G does not divide M or N
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 4:
        raise GeometryError(f"groupwise weights must be [N][M/G][K][K], got {weights.shape}")
    n, m_per_group, k = weights.shape[0], weights.shape[1], weights.shape[2]
    if groups < 1 or n % groups != 0:
        raise GeometryError(f"{groups} does not divide {n}")
    m = x.dims[1]
    if m % groups != 0:
        raise GeometryError(f"{groups} does not divide {m}")
    if m // groups != m_per_group:
        raise GeometryError(
            f"channel mismatch: input has {m} channels, weights expect {m_per_group * groups}")
    geometry = ConvGeometry(m, n, k, stride, padding)
    patches = _patches(x.array, geometry)
    n_per_group = n // groups
    ho, wo = patches.shape[2], patches.shape[3]
    out = np.zeros((x.dims[0], n, ho, wo))
    for gi in range(groups):
        ch = slice(gi * m_per_group, (gi + 1) * m_per_group)
        fl = slice(gi * n_per_group, (gi + 1) * n_per_group)
        out[:, fl] = counted_einsum('bchwkl,nckl->bnhw', patches[:, ch], weights[fl], counter)
    if bias is not None:
        out += np.asarray(bias)[None, :, None, None]
    return Tensor4._wrap(out)
