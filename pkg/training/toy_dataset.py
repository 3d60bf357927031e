# training/toy_dataset.py
"""
Seeded synthetic 10-class image task (3 x 16 x 16).

Class = pattern * 2 + colour, with five patterns (horizontal bar, vertical bar, diagonal,
anti-diagonal, centred blob) and two colour schemes (warm / cool). Each sample jitters the
pattern position by up to 2 px, scales its contrast and adds Gaussian noise. Classes are
exactly balanced and the whole dataset is a pure function of the seed.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from core.tensor import Rng, Tensor4
from utils.validation import Sanitizer, ValidationError

logger = logging.getLogger("Trainer")

NUM_CLASSES = 10
IMAGE_SHAPE = (3, 16, 16)
PATTERNS = ("hbar", "vbar", "diag", "antidiag", "blob")
COLOURS = (
    np.array([1.0, 0.35, 0.1]),     # warm
    np.array([0.1, 0.35, 1.0]),     # cool
)


def _pattern(kind: str, dy: int, dx: int, size: int) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size]
    cy, cx = (size - 1) / 2 + dy, (size - 1) / 2 + dx
    if kind == "hbar":
        return (np.abs(yy - cy) <= 1.5).astype(np.float64)
    if kind == "vbar":
        return (np.abs(xx - cx) <= 1.5).astype(np.float64)
    if kind == "diag":
        return (np.abs((yy - cy) - (xx - cx)) <= 1.5).astype(np.float64)
    if kind == "antidiag":
        return (np.abs((yy - cy) + (xx - cx)) <= 1.5).astype(np.float64)
    return np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * 2.5 ** 2))


def render_sample(label: int, rng: Rng, noise: float = 0.25) -> np.ndarray:
    """One [3][16][16] image of class `label`"""
    kind = PATTERNS[label // 2]
    colour = COLOURS[label % 2]
    dy, dx = (int(v) for v in rng.integers(-2, 3, size=2))
    contrast = rng.uniform_array((1,), 0.8, 1.2)[0]
    plane = _pattern(kind, dy, dx, IMAGE_SHAPE[1]) * contrast
    image = colour[:, None, None] * plane[None, :, :]
    return image + rng.normal_array(IMAGE_SHAPE, noise)


@dataclass
class ToyDataset:
    """
    Balanced train / validation splits drawn from one seed

    Usage:
        data = ToyDataset(seed=7, n_train=2000, n_val=500)
        x, y = data.train
    """

    seed: int
    n_train: int = 2000
    n_val: int = 500
    noise: float = 0.25
    train: Tuple[np.ndarray, np.ndarray] = field(init=False, repr=False)
    val: Tuple[np.ndarray, np.ndarray] = field(init=False, repr=False)

    def __post_init__(self):
        self.seed = Sanitizer.sanitize_seed(self.seed)
        for name in ("n_train", "n_val"):
            n = Sanitizer.sanitize_count(getattr(self, name), name)
            if n % NUM_CLASSES != 0:
                raise ValidationError(f"{name} must be a multiple of {NUM_CLASSES}, got {n}")
        if self.noise < 0:
            raise ValidationError(f"noise must be >= 0, got {self.noise}")
        rng = Rng(self.seed)
        self.train = self._split(rng.spawn(0), self.n_train)
        self.val = self._split(rng.spawn(1), self.n_val)
        logger.info(f"ToyDataset seed={self.seed}: {self.n_train} train / {self.n_val} val")

    def _split(self, rng: Rng, n: int) -> Tuple[np.ndarray, np.ndarray]:
        labels = np.tile(np.arange(NUM_CLASSES), n // NUM_CLASSES)[rng.permutation(n)]
        images = np.stack([render_sample(int(label), rng, self.noise) for label in labels])
        return images, labels.astype(np.int64)

    @property
    def samples(self) -> List[Tuple[Tensor4, int]]:
        """Training samples as (1 x 3 x 16 x 16 tensor, label) pairs"""
        x, y = self.train
        return [(Tensor4(x[i:i + 1]), int(y[i])) for i in range(len(y))]

    def class_counts(self, split: str = "train") -> np.ndarray:
        _, y = self.train if split == "train" else self.val
        return np.bincount(y, minlength=NUM_CLASSES)
