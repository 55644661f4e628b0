"""End-to-end extraction: pad, backbone, detect, suppress, describe."""
from __future__ import annotations

import numpy as np

from .backbone import backbone_forward, pad_to_multiple
from .config import ModelConfig
from .describe import DEFAULT_BLOCK, ScratchTracker, describe_fused, describe_naive, predict_offsets
from .detect import detect_forward, nms_topk
from .featio import Features
from .weights import WeightStore


DEFAULT_BORDER = 24


def extract_features(
    image: np.ndarray,
    store: WeightStore,
    top_k: int = 4096,
    nms_radius: int = 2,
    path: str = "fused",
    block: int = DEFAULT_BLOCK,
    border: int = DEFAULT_BORDER,
    tracker: ScratchTracker | None = None,
) -> Features:
    """Run the full pipeline on a float [0, 1] RGB image.

    Keypoints are reported in original (unpadded) pixel coordinates; the
    padded margin never produces detections, and a `border`-pixel band at
    the image edge is excluded because zero-padded convolutions make both
    scores and descriptors unreliable there.  `path` selects the fused
    (blocked) or naive descriptor execution.
    """
    config = store.config
    padded, (orig_h, orig_w) = pad_to_multiple(image, 32)
    pyramid = backbone_forward(padded, store, config)
    heatmap = detect_forward(pyramid, store, config)
    keypoints = nms_topk(
        heatmap, radius=nms_radius, k=top_k, valid_w=orig_w, valid_h=orig_h, border=border
    )
    if path == "fused":
        descriptors = describe_fused(pyramid, keypoints, store, config, block=block, tracker=tracker)
    elif path == "naive":
        offsets = predict_offsets(pyramid, keypoints, store, config, tracker=tracker)
        descriptors = describe_naive(pyramid, keypoints, offsets, store, config, tracker=tracker)
    else:
        raise ValueError(f"unknown descriptor path {path!r}")
    return Features(
        config_name=config.name,
        width=orig_w,
        height=orig_h,
        xy=keypoints.xy.astype(np.float32),
        scores=keypoints.scores,
        descriptors=descriptors,
    )
