# training/toy_net.py
"""
Small trainable CNN over the kernels: N conv layers (standard or HetConv) each followed by
ReLU, then global average pooling and a linear classifier, with softmax cross-entropy.
"""

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.special import log_softmax, softmax

from analyzer.cost_report import CostReport, cost_report
from architectures.arch_spec import ArchSpec, LayerSpec
from architectures.transforms import PartPolicy, hetconvify
from core.tensor import Rng, Tensor4
from kernels import conv, layers as ops
from kernels.filter_banks import DenseFilterBank, HetConvFilterBank
from kernels.geometry import ConvGeometry
from training.toy_dataset import IMAGE_SHAPE, NUM_CLASSES
from utils.validation import ValidationError

logger = logging.getLogger("Trainer")


def build_toy_arch(width: int = 16) -> ArchSpec:
    """conv1 3->w, conv2 w->w /2, conv3 w->2w, conv4 2w->2w /2, global pool, FC 2w->10"""
    c, h, w = IMAGE_SHAPE
    layers = [
        LayerSpec("conv1", "standard_conv", c, width, 3, 1, 1, bias=True),
        LayerSpec("conv2", "standard_conv", width, width, 3, 2, 1, bias=True),
        LayerSpec("conv3", "standard_conv", width, 2 * width, 3, 1, 1, bias=True),
        LayerSpec("conv4", "standard_conv", 2 * width, 2 * width, 3, 2, 1, bias=True),
        LayerSpec("gap", "pool", pool="global_avg"),
        LayerSpec("fc", "fc", 2 * width, NUM_CLASSES, bias=True),
    ]
    return ArchSpec(f"toynet-w{width}", (c, h, w), tuple(layers))


def toy_arch(part: PartPolicy = 1, width: int = 16) -> ArchSpec:
    """Standard toy net for P=1, otherwise its HetConv twin (conv1 stays standard)"""
    arch = build_toy_arch(width)
    return arch if part == 1 else hetconvify(arch, part)


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean softmax cross-entropy and its gradient w.r.t. the logits"""
    b = logits.shape[0]
    logp = log_softmax(logits, axis=1)
    loss = -float(np.mean(logp[np.arange(b), labels]))
    grad = softmax(logits, axis=1)
    grad[np.arange(b), labels] -= 1.0
    return loss, grad / b


class ToyNet:
    """
    Trainable network built from an ArchSpec of conv layers, one global_avg pool and one FC.

    Usage:
        net = ToyNet(toy_arch(part=4), seed=1)
        loss, grads = net.loss_and_grads(x, y)
        for name, w in net.parameters().items(): w -= lr * grads[name]
    """

    def __init__(self, arch: ArchSpec, seed: int = 0):
        self.arch = arch
        self.seed = seed
        self._check_arch(arch)
        rng = Rng(seed)
        self.banks: Dict[str, object] = {}
        for r in arch.resolved:
            layer = r.layer
            layer_rng = rng.spawn(r.index)
            if layer.kind == "standard_conv":
                self.banks[layer.name] = DenseFilterBank.random(self._geometry(layer), layer_rng)
            elif layer.kind == "hetconv":
                self.banks[layer.name] = HetConvFilterBank.random(
                    self._geometry(layer), layer.part, layer_rng)
            elif layer.kind == "fc":
                self.fc_name = layer.name
                self.fc_weights = layer_rng.normal_array(
                    (layer.out_channels, layer.in_channels), np.sqrt(1.0 / layer.in_channels))
                self.fc_bias = np.zeros(layer.out_channels)

    @staticmethod
    def _check_arch(arch: ArchSpec) -> None:
        kinds = [layer.kind for layer in arch.layers]
        n_conv = len(kinds) - 2
        if (n_conv < 1 or kinds[-2:] != ["pool", "fc"] or arch.layers[-2].pool != "global_avg"
                or any(k not in ("standard_conv", "hetconv") for k in kinds[:n_conv])
                or any(layer.input_from is not None for layer in arch.layers)):
            raise ValidationError(
                f"{arch.name}: ToyNet needs sequential standard/hetconv layers, global_avg pool, fc")

    @staticmethod
    def _geometry(layer: LayerSpec) -> ConvGeometry:
        return ConvGeometry(layer.in_channels, layer.out_channels, layer.kernel,
                            layer.stride, layer.padding)

    # -----------------------------------------------------------------------
    # Parameters
    # -----------------------------------------------------------------------

    def parameters(self) -> Dict[str, np.ndarray]:
        """Live references; in-place updates change the network"""
        params = {}
        for name, bank in self.banks.items():
            if isinstance(bank, HetConvFilterBank):
                params[f"{name}.kxk_weights"] = bank.kxk_weights
                if bank.one_weights.size:
                    params[f"{name}.one_weights"] = bank.one_weights
            else:
                params[f"{name}.weights"] = bank.weights
            params[f"{name}.bias"] = bank.bias
        params[f"{self.fc_name}.weights"] = self.fc_weights
        params[f"{self.fc_name}.bias"] = self.fc_bias
        return params

    def param_count(self) -> int:
        return int(sum(p.size for p in self.parameters().values()))

    def cost_report(self, baseline: Optional[ArchSpec] = None) -> CostReport:
        return cost_report(self.arch, baseline)

    # -----------------------------------------------------------------------
    # Forward / backward
    # -----------------------------------------------------------------------

    def _conv(self, name: str, x: Tensor4) -> Tensor4:
        bank = self.banks[name]
        if isinstance(bank, HetConvFilterBank):
            return conv.hetconv_forward(x, bank)
        return conv.conv2d_forward(x, bank)

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, List]:
        """Logits [B][10] and the activations needed by backward"""
        h = Tensor4(x)
        cache = []
        for name in self.banks:
            pre = self._conv(name, h)
            cache.append((name, h, pre))
            h = ops.relu(pre)
        pooled = ops.global_avg_pool(h)
        logits = ops.fc_forward(pooled, self.fc_weights, self.fc_bias).array.reshape(x.shape[0], -1)
        cache.append((h, pooled))
        return logits, cache

    def predict(self, x: np.ndarray) -> np.ndarray:
        logits, _ = self.forward(x)
        return np.argmax(logits, axis=1)

    def loss(self, x: np.ndarray, y: np.ndarray) -> float:
        logits, _ = self.forward(x)
        return cross_entropy(logits, y)[0]

    def loss_and_grads(self, x: np.ndarray, y: np.ndarray) -> Tuple[float, Dict[str, np.ndarray]]:
        logits, cache = self.forward(x)
        loss, dlogits = cross_entropy(logits, y)
        grads: Dict[str, np.ndarray] = {}

        h_last, pooled = cache[-1]
        features = pooled.array.reshape(x.shape[0], -1)
        dfeat, grads[f"{self.fc_name}.weights"], grads[f"{self.fc_name}.bias"] = \
            ops.fc_backward(features, self.fc_weights, dlogits)
        dh = ops.global_avg_pool_backward(h_last.dims, dfeat)

        for name, h_in, pre in reversed(cache[:-1]):
            dpre = ops.relu_backward(pre, dh)
            bank = self.banks[name]
            if isinstance(bank, HetConvFilterBank):
                dh, gbank, gbias = conv.hetconv_backward(h_in, bank, dpre)
                grads[f"{name}.kxk_weights"] = gbank.kxk_weights
                if bank.one_weights.size:
                    grads[f"{name}.one_weights"] = gbank.one_weights
            else:
                dh, gweights, gbias = conv.conv2d_backward(h_in, bank, dpre)
                grads[f"{name}.weights"] = gweights
            grads[f"{name}.bias"] = gbias
        return loss, grads

    def accuracy(self, x: np.ndarray, y: np.ndarray, batch_size: int = 256) -> float:
        correct = 0
        for start in range(0, len(y), batch_size):
            correct += int(np.sum(self.predict(x[start:start + batch_size]) == y[start:start + batch_size]))
        return correct / len(y)
