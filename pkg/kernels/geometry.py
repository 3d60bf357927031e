# kernels/geometry.py
"""
Convolution geometry and the multiply counter shared by all kernels.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from utils.validation import Sanitizer, ValidationError

logger = logging.getLogger("ConvKernels")


class GeometryError(ValidationError):
    """Invalid geometry, channel mismatch or divisibility violation"""
    pass


@dataclass(frozen=True)
class ConvGeometry:
    """
    Layer shape: M input channels, N output channels, odd kernel K, stride, padding.
    """

    in_channels: int
    out_channels: int
    kernel: int
    stride: int = 1
    padding: int = 0

    def __post_init__(self):
        try:
            Sanitizer.sanitize_count(self.in_channels, "in_channels")
            Sanitizer.sanitize_count(self.out_channels, "out_channels")
            Sanitizer.sanitize_kernel(self.kernel)
            Sanitizer.sanitize_count(self.stride, "stride")
            Sanitizer.sanitize_count(self.padding, "padding", minimum=0)
        except ValidationError as e:
            raise GeometryError(str(e)) from e

    def output_size(self, height: int, width: Optional[int] = None) -> Tuple[int, int]:
        """
        D_o = floor((D_i + 2*padding - K) / stride) + 1, per spatial axis

        Raises:
            GeometryError: If the output would be empty
        """
        width = height if width is None else width
        out = []
        for d in (height, width):
            span = d + 2 * self.padding - self.kernel
            if span < 0:
                raise GeometryError(
                    f"input {d}px too small for kernel {self.kernel} with padding {self.padding}"
                )
            out.append(span // self.stride + 1)
        return out[0], out[1]


@dataclass
class MulCounter:
    """Accumulates the scalar multiplications executed by instrumented kernels"""

    count: int = 0

    def add(self, n: int) -> None:
        if n < 0:
            raise ValueError("multiplication count cannot decrease")
        self.count += int(n)

    def reset(self) -> None:
        self.count = 0


def counted_einsum(subscripts: str, a: np.ndarray, b: np.ndarray,
                   counter: Optional[MulCounter] = None) -> np.ndarray:
    """
    Two-operand einsum that reports its scalar multiplications.

    A pairwise contraction multiplies once per point of the joint index space, so the
    count is the product of every distinct index extent.
    """
    inputs, _ = subscripts.split("->")
    left, right = inputs.split(",")
    extents: Dict[str, int] = {}
    for labels, arr in ((left, a), (right, b)):
        for label, extent in zip(labels, arr.shape):
            if extents.setdefault(label, extent) != extent:
                raise GeometryError(
                    f"extent mismatch on index '{label}': {extents[label]} vs {extent}"
                )
    result = np.einsum(subscripts, a, b, optimize=True)
    if counter is not None:
        count = 1
        for extent in extents.values():
            count *= extent
        counter.add(count)
    return result
