# training/gradcheck.py
"""Central-difference gradient checks for single HetConv layers and whole ToyNets."""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from core.tensor import Rng, Tensor4, random_uniform
from kernels.conv import hetconv_backward, hetconv_forward
from kernels.filter_banks import HetConvFilterBank
from training.toy_net import ToyNet

logger = logging.getLogger("Trainer")

DEFAULT_STEP = 1e-5
# Below this magnitude the relative error is measured against the floor instead
REL_FLOOR = 1e-6


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), REL_FLOOR)


def central_difference(f: Callable[[], float], array: np.ndarray, index, h: float = DEFAULT_STEP) -> float:
    """(f(w + h) - f(w - h)) / 2h, perturbing `array[index]` in place and restoring it"""
    original = array[index]
    array[index] = original + h
    plus = f()
    array[index] = original - h
    minus = f()
    array[index] = original
    return (plus - minus) / (2 * h)


@dataclass
class GradCheckResult:
    target: str
    checked: int = 0
    max_rel_error: float = 0.0
    worst: Optional[Tuple] = None
    errors: List[float] = field(default_factory=list, repr=False)

    def record(self, index, analytic: float, numeric: float) -> None:
        err = relative_error(analytic, numeric)
        self.errors.append(err)
        self.checked += 1
        if err >= self.max_rel_error:
            self.max_rel_error = err
            self.worst = (index, analytic, numeric)

    def passed(self, tolerance: float) -> bool:
        return self.max_rel_error < tolerance


def _sample_indices(shape, rng: Rng, samples: Optional[int]) -> List[Tuple]:
    total = int(np.prod(shape))
    flat = range(total) if samples is None or samples >= total else \
        sorted(int(i) for i in rng.permutation(total)[:samples])
    return [np.unravel_index(i, shape) for i in flat]


def check_hetconv_layer(bank: HetConvFilterBank, x: Tensor4, rng: Rng,
                        samples: Optional[int] = None,
                        h: float = DEFAULT_STEP) -> Dict[str, GradCheckResult]:
    """
    Compare hetconv_backward with central differences of L = sum(g * hetconv_forward(x, f))
    for a random g. Targets: input, kxk_weights, one_weights, bias.

    samples=None checks every coordinate.
    """
    ho, wo = bank.geometry.output_size(x.dims[2], x.dims[3])
    grad_out = random_uniform((x.dims[0], bank.geometry.out_channels, ho, wo), rng)
    grad_x, grad_f, grad_bias = hetconv_backward(x, bank, grad_out)

    x_arr = x.array.copy()
    work = HetConvFilterBank(bank.geometry, bank.part, bank.kxk_weights, bank.one_weights, bank.bias)

    def objective() -> float:
        return float(np.sum(grad_out.array * hetconv_forward(Tensor4(x_arr), work).array))

    targets = {
        "input": (x_arr, grad_x.array),
        "kxk_weights": (work.kxk_weights, grad_f.kxk_weights),
        "one_weights": (work.one_weights, grad_f.one_weights),
        "bias": (work.bias, grad_bias),
    }
    results = {}
    for name, (param, analytic) in targets.items():
        result = GradCheckResult(name)
        if param.size:
            for idx in _sample_indices(param.shape, rng, samples):
                result.record(idx, float(analytic[idx]), central_difference(objective, param, idx, h))
        results[name] = result
    logger.debug("hetconv gradcheck: " + ", ".join(
        f"{k}={v.max_rel_error:.2e}" for k, v in results.items()))
    return results


def check_network(net: ToyNet, x: np.ndarray, y: np.ndarray, rng: Rng,
                  samples_per_param: int = 5, h: float = DEFAULT_STEP) -> Dict[str, GradCheckResult]:
    """Sampled central differences of the full cross-entropy loss for every parameter"""
    _, grads = net.loss_and_grads(x, y)
    params = net.parameters()

    def objective() -> float:
        return net.loss(x, y)

    results = {}
    for name, param in params.items():
        result = GradCheckResult(name)
        for idx in _sample_indices(param.shape, rng, samples_per_param):
            result.record(idx, float(grads[name][idx]), central_difference(objective, param, idx, h))
        results[name] = result
    return results
