"""Sparse local features: a lightweight pyramid backbone, keypoint detection,
a cross-layer deformable description head with naive and cache-blocked fused
execution, matching, training-loss evaluators, and a synthetic homography
benchmark harness."""

from .backbone import Pyramid, backbone_forward, pad_to_multiple
from .config import (
    PRESET_ORDER,
    PRESETS,
    ModelConfig,
    ParamCount,
    flops_estimate,
    get_config,
    param_count,
    tensor_layout,
)
from .describe import (
    DEFAULT_BLOCK,
    ScratchTracker,
    describe_fused,
    describe_naive,
    predict_offsets,
)
from .detect import KeypointSet, detect_forward, nms_topk
from .featio import Features, load_features, save_features
from .matching import MatchSet, dual_softmax_match, mutual_nn_match, similarity_matrix
from .pipeline import extract_features
from .weights import WeightStore, init_weights, load_weights, save_weights

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_BLOCK",
    "Features",
    "KeypointSet",
    "MatchSet",
    "ModelConfig",
    "PRESETS",
    "PRESET_ORDER",
    "ParamCount",
    "Pyramid",
    "ScratchTracker",
    "WeightStore",
    "backbone_forward",
    "describe_fused",
    "describe_naive",
    "detect_forward",
    "extract_features",
    "flops_estimate",
    "get_config",
    "init_weights",
    "load_features",
    "load_weights",
    "dual_softmax_match",
    "mutual_nn_match",
    "nms_topk",
    "pad_to_multiple",
    "param_count",
    "predict_offsets",
    "save_features",
    "save_weights",
    "similarity_matrix",
    "tensor_layout",
]
