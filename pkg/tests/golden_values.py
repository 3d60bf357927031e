# tests/golden_values.py
"""
Published FLOP / parameter totals and the exact values this repo's conventions produce.

PUBLISHED_* are matched within GOLDEN_TOLERANCE (relative); EXACT_* are integer-equal.
"""

GOLDEN_TOLERANCE = 0.02

# VGG-16 on CIFAR-10: P -> (FLOPs, params); first conv stays standard
PUBLISHED_VGG16_CIFAR = {
    1: (313.74e6, 15.00e6),
    2: (175.23e6, 8.45e6),
    4: (105.98e6, 5.17e6),
    8: (71.35e6, 3.54e6),
    16: (54.04e6, 2.72e6),
    32: (45.38e6, 2.31e6),
    64: (41.05e6, 2.11e6),
}
PUBLISHED_VGG16_VARIANTS = {
    "gwc4_pwc": (107.67e6, 5.42e6),
    "dwc_pwc": (38.53e6, 1.97e6),
    "pc": (38.18e6, 1.93e6),
}

EXACT_VGG16_CIFAR_FLOPS = 313_463_808          # 313,196,544 conv + 267,264 FC
EXACT_VGG16_CIFAR_PARAMS = 14_978_250          # 14,710,464 conv + 267,786 FC
EXACT_VGG16_CIFAR_P4_FLOPS = 105_845_760
EXACT_VGG16_CIFAR_P4_PARAMS = 5_172_426

PUBLISHED_RESNET56_FLOPS = 126.01e6
# P -> FLOPs reduced (%) against the P1 network
PUBLISHED_RESNET56_REDUCTION = {2: 44.30, 4: 66.45}
EXACT_RESNET56_STAGE_CONV = 2_359_296         # 32*32 * 16*16 * 9

PUBLISHED_MOBILENET_CIFAR = 46.36e6
EXACT_MOBILENET_CIFAR = 46_354_432
PUBLISHED_MOBILENET_P32 = 55.94e6

PUBLISHED_RESNET34 = (3.6e9, 1.3e9, 64.48)     # baseline, P4, reduction %
EXACT_RESNET34_FLOPS = 3_663_761_408
PUBLISHED_RESNET50 = (4.09e9, 2.85e9, 30.32)
EXACT_RESNET50_FLOPS = 4_089_184_256
PUBLISHED_VGG16_IMAGENET_P4_REDUCTION = 65.8

# speedup = 1 / R_HetConv at K = 3
SPEEDUP_K3 = {1: 1.0, 2: 1.8, 4: 3.0, 8: 4.5, 16: 6.0, 32: 7.2, 64: 8.0}


def within(value: float, published: float, tolerance: float = GOLDEN_TOLERANCE) -> bool:
    return abs(value - published) <= tolerance * abs(published)
