# architectures/builders.py
"""
Built-in networks: VGG-16 / ResNet-56 / MobileNet at CIFAR scale and ResNet-34 / ResNet-50 /
VGG-16 at ImageNet scale (cost-model level).

Shared conventions:
- convs carry no bias (batch norm follows them); FC layers carry a bias
- every conv is its own latency block, labelled with the conv's name, except depthwise +
  pointwise pairs which share one label
- ResNet transitions use 1x1 projection shortcuts
"""

import logging
from typing import Callable, Dict, List, Optional

from architectures.arch_spec import ArchSpec, LayerSpec

logger = logging.getLogger("ArchSpec")

VGG16_CFG = [64, 64, "M", 128, 128, "M", 256, 256, 256, "M",
             512, 512, 512, "M", 512, 512, 512, "M"]

# (out_channels, stride) per depthwise-separable block
MOBILENET_CIFAR_CFG = [64, (128, 2), 128, (256, 2), 256, (512, 2),
                       512, 512, 512, 512, 512, (1024, 2), 1024]


class _Builder:
    """Appends layers and tracks the index of the last output for residual wiring"""

    def __init__(self):
        self.layers: List[LayerSpec] = []

    @property
    def last(self) -> int:
        return len(self.layers) - 1

    def conv(self, name: str, m: int, n: int, k: int, stride: int = 1, padding: Optional[int] = None,
             input_from: Optional[int] = None, block: Optional[str] = None) -> int:
        padding = k // 2 if padding is None else padding
        self.layers.append(LayerSpec(name, "standard_conv", m, n, k, stride, padding,
                                     input_from=input_from, block=block or name))
        return self.last

    def separable(self, name: str, m: int, n: int, stride: int) -> int:
        self.layers.append(LayerSpec(f"{name}_dw", "dwc", m, m, 3, stride, 1, block=name))
        self.layers.append(LayerSpec(f"{name}_pw", "pwc", m, n, 1, 1, 0, block=name))
        return self.last

    def pool(self, name: str, mode: str, kernel: int = 1, stride: int = 1, padding: int = 0) -> int:
        self.layers.append(LayerSpec(name, "pool", kernel=kernel, stride=stride,
                                     padding=padding, pool=mode))
        return self.last

    def fc(self, name: str, features: int, out: int) -> int:
        self.layers.append(LayerSpec(name, "fc", features, out, bias=True))
        return self.last

    def add(self, name: str, main: int, skip: int) -> int:
        self.layers.append(LayerSpec(name, "add_residual", input_from=main, residual_from=skip))
        return self.last

    def build(self, name: str, input_shape) -> ArchSpec:
        spec = ArchSpec(name, tuple(input_shape), tuple(self.layers))
        logger.info(f"Built {name}: {len(spec.layers)} layers, {len(spec.conv_layers())} convs")
        return spec


# ---------------------------------------------------------------------------
# VGG-16
# ---------------------------------------------------------------------------

def _vgg16_features(b: _Builder) -> int:
    channels, conv_i, pool_i = 3, 0, 0
    for v in VGG16_CFG:
        if v == "M":
            pool_i += 1
            b.pool(f"pool{pool_i}", "max", 2, 2)
        else:
            conv_i += 1
            b.conv(f"conv{conv_i}", channels, v, 3)
            channels = v
    return channels


def build_vgg16_cifar() -> ArchSpec:
    """13 convs conv1..conv13 on 32x32, classifier FC 512->512->10"""
    b = _Builder()
    channels = _vgg16_features(b)
    b.fc("fc1", channels, 512)
    b.fc("fc2", 512, 10)
    return b.build("vgg16-cifar", (3, 32, 32))


def build_vgg16_imagenet() -> ArchSpec:
    """13 convs on 224x224, classifier FC 25088->4096->4096->1000"""
    b = _Builder()
    channels = _vgg16_features(b)
    b.fc("fc1", channels * 7 * 7, 4096)
    b.fc("fc2", 4096, 4096)
    b.fc("fc3", 4096, 1000)
    return b.build("vgg16-imagenet", (3, 224, 224))


# ---------------------------------------------------------------------------
# ResNets
# ---------------------------------------------------------------------------

def _basic_block(b: _Builder, prefix: str, m: int, n: int, stride: int) -> int:
    block_in = b.last
    b.conv(f"{prefix}_conv1", m, n, 3, stride)
    main = b.conv(f"{prefix}_conv2", n, n, 3)
    skip = block_in
    if stride != 1 or m != n:
        skip = b.conv(f"{prefix}_shortcut", m, n, 1, stride, input_from=block_in)
    return b.add(f"{prefix}_add", main, skip)


def _bottleneck_block(b: _Builder, prefix: str, m: int, width: int, stride: int) -> int:
    n = width * 4
    block_in = b.last
    b.conv(f"{prefix}_conv1", m, width, 1)
    b.conv(f"{prefix}_conv2", width, width, 3, stride)
    main = b.conv(f"{prefix}_conv3", width, n, 1)
    skip = block_in
    if stride != 1 or m != n:
        skip = b.conv(f"{prefix}_shortcut", m, n, 1, stride, input_from=block_in)
    return b.add(f"{prefix}_add", main, skip)


def build_resnet56_cifar() -> ArchSpec:
    """3 stages of 9 basic blocks, widths 16-32-64, FC 64->10"""
    b = _Builder()
    b.conv("conv1", 3, 16, 3)
    channels = 16
    for s, width in enumerate((16, 32, 64), start=1):
        for blk in range(1, 10):
            stride = 2 if s > 1 and blk == 1 else 1
            _basic_block(b, f"s{s}b{blk}", channels, width, stride)
            channels = width
    b.pool("avgpool", "global_avg")
    b.fc("fc", channels, 10)
    return b.build("resnet56-cifar", (3, 32, 32))


def _imagenet_stem(b: _Builder) -> None:
    b.conv("conv1", 3, 64, 7, 2, 3)
    b.pool("maxpool", "max", 3, 2, 1)


def build_resnet34_imagenet() -> ArchSpec:
    """Basic blocks [3, 4, 6, 3], widths 64-128-256-512, FC 512->1000"""
    b = _Builder()
    _imagenet_stem(b)
    channels = 64
    for s, (blocks, width) in enumerate(zip((3, 4, 6, 3), (64, 128, 256, 512)), start=1):
        for blk in range(1, blocks + 1):
            stride = 2 if s > 1 and blk == 1 else 1
            _basic_block(b, f"s{s}b{blk}", channels, width, stride)
            channels = width
    b.pool("avgpool", "global_avg")
    b.fc("fc", channels, 1000)
    return b.build("resnet34-imagenet", (3, 224, 224))


def build_resnet50_imagenet() -> ArchSpec:
    """Bottleneck blocks [3, 4, 6, 3], stride on the 3x3 conv, FC 2048->1000"""
    b = _Builder()
    _imagenet_stem(b)
    channels = 64
    for s, (blocks, width) in enumerate(zip((3, 4, 6, 3), (64, 128, 256, 512)), start=1):
        for blk in range(1, blocks + 1):
            stride = 2 if s > 1 and blk == 1 else 1
            _bottleneck_block(b, f"s{s}b{blk}", channels, width, stride)
            channels = width * 4
    b.pool("avgpool", "global_avg")
    b.fc("fc", channels, 1000)
    return b.build("resnet50-imagenet", (3, 224, 224))


# ---------------------------------------------------------------------------
# MobileNet
# ---------------------------------------------------------------------------

def build_mobilenet_cifar() -> ArchSpec:
    """conv1 3->32 then 13 depthwise-separable blocks, global pool, FC 1024->10"""
    b = _Builder()
    b.conv("conv1", 3, 32, 3)
    channels = 32
    for i, entry in enumerate(MOBILENET_CIFAR_CFG, start=1):
        out, stride = (entry, 1) if isinstance(entry, int) else entry
        b.separable(f"block{i}", channels, out, stride)
        channels = out
    b.pool("avgpool", "global_avg")
    b.fc("fc", channels, 10)
    return b.build("mobilenet-cifar", (3, 32, 32))


BUILTIN_ARCHS: Dict[str, Callable[[], ArchSpec]] = {
    "vgg16-cifar": build_vgg16_cifar,
    "resnet56-cifar": build_resnet56_cifar,
    "mobilenet-cifar": build_mobilenet_cifar,
    "resnet34-imagenet": build_resnet34_imagenet,
    "resnet50-imagenet": build_resnet50_imagenet,
    "vgg16-imagenet": build_vgg16_imagenet,
}


def builtin_arch(name: str) -> ArchSpec:
    try:
        return BUILTIN_ARCHS[name]()
    except KeyError:
        raise KeyError(f"unknown builtin architecture '{name}'; "
                       f"choose from {', '.join(sorted(BUILTIN_ARCHS))}") from None
