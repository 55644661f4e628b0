"""Convolutional backbone producing the 1/2, 1/8, 1/32 feature pyramid.

The stem is a stride-2 4x4 convolution followed by a 3x3 refinement, both
ReLU-activated.  Stage 1 is a single post-activation residual block at 1/2
resolution; stages 2 and 3 each apply a factor-4 average pool and then their
residual blocks, the first of which carries a 1x1 projection shortcut when
the channel width changes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .errors import ConfigurationError, ShapeError
from .tensorops import avg_pool, conv2d, relu
from .weights import WeightStore

LEVEL_STRIDES = (2, 8, 32)


@dataclass(frozen=True)
class Pyramid:
    """Per-level feature maps at strides 2, 8 and 32 of the padded input."""

    level1: np.ndarray
    level2: np.ndarray
    level3: np.ndarray

    @property
    def levels(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.level1, self.level2, self.level3)


def pad_to_multiple(image: np.ndarray, multiple: int = 32) -> tuple[np.ndarray, tuple[int, int]]:
    """Replicate-pad right/bottom so both spatial dims divide `multiple`.

    Returns the padded image and the original (height, width) for clipping
    keypoints back to real content.
    """
    h, w = image.shape[:2]
    ph = (multiple - h % multiple) % multiple
    pw = (multiple - w % multiple) % multiple
    if ph == 0 and pw == 0:
        return image, (h, w)
    padded = np.pad(image, ((0, ph), (0, pw), (0, 0)), mode="edge")
    return padded, (h, w)


def _residual_block(x: np.ndarray, store: WeightStore, prefix: str) -> np.ndarray:
    y = relu(conv2d(x, store.kernel(f"{prefix}.conv1"), stride=1, padding=1))
    y = conv2d(y, store.kernel(f"{prefix}.conv2"), stride=1, padding=1)
    if f"{prefix}.proj.weight" in store.tensors:
        shortcut = conv2d(x, store.kernel(f"{prefix}.proj"), stride=1, padding=0)
    else:
        shortcut = x
    return relu(y + shortcut)


def backbone_forward(image: np.ndarray, store: WeightStore, config: ModelConfig) -> Pyramid:
    """Run the backbone on an RGB image with dims divisible by 32."""
    if store.config.name != config.name:
        raise ConfigurationError(
            f"weights are for {store.config.name}, forward requested {config.name}"
        )
    h, w, c = image.shape
    if c != 3:
        raise ShapeError(f"backbone expects 3 channels, got {c}")
    if h % 32 or w % 32:
        raise ShapeError(f"backbone input {h}x{w} not divisible by 32; pad first")

    x = relu(conv2d(image.astype(np.float32, copy=False), store.kernel("backbone.stem0"), stride=2, padding=1))
    x = relu(conv2d(x, store.kernel("backbone.stem1"), stride=1, padding=1))
    x = _residual_block(x, store, "backbone.stage1.block0")
    level1 = x

    x = avg_pool(x, 4)
    for b in range(config.r2):
        x = _residual_block(x, store, f"backbone.stage2.block{b}")
    level2 = x

    x = avg_pool(x, 4)
    for b in range(config.r3):
        x = _residual_block(x, store, f"backbone.stage3.block{b}")
    level3 = x

    return Pyramid(level1, level2, level3)
