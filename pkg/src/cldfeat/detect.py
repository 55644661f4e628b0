"""Detection head and heatmap post-processing into sparse keypoints."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backbone import Pyramid
from .config import ModelConfig
from .errors import ConfigurationError
from .tensorops import conv2d, pixel_shuffle, relu
from .weights import WeightStore


@dataclass(frozen=True)
class KeypointSet:
    """Integer keypoint coordinates with their heatmap logits.

    xy is (n, 2) as (x, y); scores are non-increasing, ties broken by
    ascending (y, x).
    """

    xy: np.ndarray
    scores: np.ndarray

    def __len__(self) -> int:
        return int(self.xy.shape[0])


def _upsample_nearest(x: np.ndarray, factor: int) -> np.ndarray:
    return np.repeat(np.repeat(x, factor, axis=0), factor, axis=1)


def detect_forward(pyramid: Pyramid, store: WeightStore, config: ModelConfig) -> np.ndarray:
    """Full-resolution logit heatmap (H, W, 1) from the feature pyramid.

    Each level is compressed to the detection width with a 1x1 convolution,
    the coarse levels are nearest-neighbor upsampled to 1/2 resolution, and
    the sum is refined and restored to full resolution with a sub-pixel
    shuffle.
    """
    if store.config.name != config.name:
        raise ConfigurationError(
            f"weights are for {store.config.name}, forward requested {config.name}"
        )
    f1 = conv2d(pyramid.level1, store.kernel("detect.compress1"))
    f2 = conv2d(pyramid.level2, store.kernel("detect.compress2"))
    f3 = conv2d(pyramid.level3, store.kernel("detect.compress3"))
    merged = f1 + _upsample_nearest(f2, 4) + _upsample_nearest(f3, 16)
    x = relu(merged)
    x = relu(conv2d(x, store.kernel("detect.refine"), stride=1, padding=1))
    x = conv2d(x, store.kernel("detect.logits"), stride=1, padding=1)
    return pixel_shuffle(x, 2)


def nms_topk(
    heatmap: np.ndarray,
    radius: int = 2,
    k: int = 4096,
    valid_w: int | None = None,
    valid_h: int | None = None,
    border: int = 0,
) -> KeypointSet:
    """Strict local maxima of the (2r+1)^2 neighborhood, top-k by logit.

    radius 0 disables suppression entirely.  Pixels at or beyond
    (valid_w, valid_h) — the padded margin — are discarded before ranking,
    as is a `border`-pixel band inside the valid region (zero-padding makes
    responses there unreliable).  Ties in score order deterministically by
    (y, x) ascending.
    """
    hm = heatmap[:, :, 0] if heatmap.ndim == 3 else heatmap
    h, w = hm.shape
    if radius < 0 or k < 1 or border < 0:
        raise ValueError(f"nms_topk: invalid radius={radius} k={k} border={border}")

    if radius > 0:
        padded = np.full((h + 2 * radius, w + 2 * radius), -np.inf, dtype=hm.dtype)
        padded[radius:radius + h, radius:radius + w] = hm
        keep = np.ones((h, w), dtype=bool)
        for dy in range(-radius, radius + 1):
            for dx in range(-radius, radius + 1):
                if dy == 0 and dx == 0:
                    continue
                keep &= hm > padded[radius + dy:radius + dy + h, radius + dx:radius + dx + w]
    else:
        keep = np.ones((h, w), dtype=bool)

    vh = h if valid_h is None else min(valid_h, h)
    vw = w if valid_w is None else min(valid_w, w)
    keep[vh:, :] = False
    keep[:, vw:] = False
    if border > 0:
        keep[:border, :] = False
        keep[:, :border] = False
        keep[max(vh - border, 0):, :] = False
        keep[:, max(vw - border, 0):] = False

    ys, xs = np.nonzero(keep)
    scores = hm[ys, xs]
    order = np.lexsort((xs, ys, -scores.astype(np.float64)))[:k]
    xy = np.stack([xs[order], ys[order]], axis=1).astype(np.int32)
    return KeypointSet(xy=xy, scores=scores[order].astype(np.float32))
