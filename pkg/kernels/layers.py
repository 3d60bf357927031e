# kernels/layers.py
"""Non-convolution layers: pooling, fully connected, ReLU and residual add."""

import logging
from typing import Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from core.tensor import Tensor4
from kernels.geometry import GeometryError, MulCounter, counted_einsum

logger = logging.getLogger("ConvKernels")


def _pool_windows(arr: np.ndarray, kernel: int, stride: int, padding: int, fill: float) -> np.ndarray:
    if padding:
        arr = np.pad(arr, ((0, 0), (0, 0), (padding, padding), (padding, padding)),
                     constant_values=fill)
    if arr.shape[2] < kernel or arr.shape[3] < kernel:
        raise GeometryError(f"input {arr.shape[2:]} too small for pool kernel {kernel}")
    windows = sliding_window_view(arr, (kernel, kernel), axis=(2, 3))
    return windows[:, :, ::stride, ::stride]


def max_pool2d(x: Tensor4, kernel: int, stride: int, padding: int = 0) -> Tensor4:
    windows = _pool_windows(x.array, kernel, stride, padding, -np.inf)
    return Tensor4._wrap(windows.max(axis=(4, 5)))


def avg_pool2d(x: Tensor4, kernel: int, stride: int, padding: int = 0) -> Tensor4:
    """Padded positions count as zeros in the average"""
    windows = _pool_windows(x.array, kernel, stride, padding, 0.0)
    return Tensor4._wrap(windows.mean(axis=(4, 5)))


def global_avg_pool(x: Tensor4) -> Tensor4:
    return Tensor4._wrap(x.array.mean(axis=(2, 3), keepdims=True))


def global_avg_pool_backward(x_dims, grad_out: np.ndarray) -> Tensor4:
    """grad_out [B][C] (or [B][C][1][1]) spread evenly over each H x W map"""
    b, c, h, w = x_dims
    g = np.asarray(grad_out).reshape(b, c, 1, 1) / (h * w)
    return Tensor4._wrap(np.broadcast_to(g, (b, c, h, w)))


def fc_forward(x: Tensor4, weights: np.ndarray, bias: Optional[np.ndarray] = None,
               counter: Optional[MulCounter] = None) -> Tensor4:
    """
    Flatten each item to C*H*W features and apply weights [out][features].
    Accrues features * out multiplications per batch item. Output dims (B, out, 1, 1).
    """
    b = x.dims[0]
    flat = x.array.reshape(b, -1)
    if weights.shape[1] != flat.shape[1]:
        raise GeometryError(f"fc expects {weights.shape[1]} features, got {flat.shape[1]}")
    out = counted_einsum('bf,of->bo', flat, weights, counter)
    if bias is not None:
        out = out + bias[None, :]
    return Tensor4._wrap(out.reshape(b, -1, 1, 1))


def fc_backward(features: np.ndarray, weights: np.ndarray,
                grad_out: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Args:
        features: [B][F] flattened input
        grad_out: [B][O]

    Returns:
        (grad_features [B][F], grad_weights [O][F], grad_bias [O])
    """
    return grad_out @ weights, grad_out.T @ features, grad_out.sum(axis=0)


def relu(x: Tensor4) -> Tensor4:
    return Tensor4._wrap(np.maximum(x.array, 0.0))


def relu_backward(x: Tensor4, grad_out: Tensor4) -> Tensor4:
    return Tensor4._wrap(np.where(x.array > 0.0, grad_out.array, 0.0))


def add(a: Tensor4, b: Tensor4) -> Tensor4:
    if a.dims != b.dims:
        raise GeometryError(f"residual add needs equal dims, got {a.dims} and {b.dims}")
    return Tensor4._wrap(a.array + b.array)
