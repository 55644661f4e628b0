"""Cross-layer deformable description head.

For every keypoint a cross-layer predictor samples one feature vector per
pyramid level at the keypoint position, concatenates them, and maps the
embedding to per-level sampling offsets.  A layer-independent sampler then
reads M offset positions from each level and a single affine map aggregates
the samples into a unit-norm descriptor.

Two execution paths produce mathematically identical descriptors:

* the naive path materializes the full (n, M*c_sum) sample matrix before
  aggregating — simple, but its intermediate traffic grows with n;
* the fused path processes keypoints in fixed-size blocks, keeping every
  intermediate at block scale so the working set stays cache-resident and
  peak auxiliary memory is independent of n.

Keypoint coordinates map into a level's frame as (coord + 0.5)/stride - 0.5
(cell centers), matching the sampling convention in tensorops.  Offsets are
expressed in each level's own grid units with no bounding activation; the
clamped sampler keeps arbitrary offsets safe.  The aggregation input is
ordered sample-major, level-minor: [s0: L1|L2|L3, s1: L1|L2|L3, ...].
"""
from __future__ import annotations

import numpy as np

from .backbone import LEVEL_STRIDES, Pyramid
from .config import ModelConfig
from .detect import KeypointSet
from .errors import ConfigurationError
from .tensorops import bilinear_sample_many, l2_normalize_rows
from .weights import WeightStore

DEFAULT_BLOCK = 64


class ScratchTracker:
    """Counts auxiliary scalars allocated by the description paths.

    Callers report intermediate buffers via alloc/release; `peak` is the
    largest number of scratch scalars live at once.  Inputs and returned
    results are not counted.
    """

    def __init__(self) -> None:
        self.live = 0
        self.peak = 0

    def alloc(self, n: int) -> None:
        self.live += int(n)
        if self.live > self.peak:
            self.peak = self.live

    def release(self, n: int) -> None:
        self.live -= int(n)

    def reset(self) -> None:
        self.live = 0
        self.peak = 0


def _as_xy(keypoints) -> np.ndarray:
    if isinstance(keypoints, KeypointSet):
        return keypoints.xy.astype(np.float64)
    return np.asarray(keypoints, dtype=np.float64)


class _HeadState:
    """Per-call constants shared by both execution paths: level maps, the
    keypoint positions mapped into each level frame, channel slices, and the
    affine parameters.  Hoisted out of the block loop so the fused path's
    per-block work is pure computation."""

    __slots__ = ("levels", "bases", "slices", "m", "c_sum", "c_desc",
                 "w_off_t", "b_off", "w_agg_t", "b_agg")

    def __init__(self, pyramid: Pyramid, xy: np.ndarray, store: WeightStore,
                 config: ModelConfig) -> None:
        self.levels = pyramid.levels
        self.bases = tuple((xy + 0.5) / s - 0.5 for s in LEVEL_STRIDES)
        c1, c2 = config.c1, config.c2
        self.slices = (slice(0, c1), slice(c1, c1 + c2), slice(c1 + c2, config.c_sum))
        self.m = config.m
        self.c_sum = config.c_sum
        self.c_desc = config.c_desc
        off = store.affine("desc.offsets")
        agg = store.affine("desc.aggregate")
        self.w_off_t = off.weights.T
        self.b_off = off.bias
        self.w_agg_t = agg.weights.T
        self.b_agg = agg.bias


def _predict_block(state: _HeadState, start: int, stop: int,
                   tracker: ScratchTracker | None) -> np.ndarray:
    """Offsets (nb, 3, M, 2) for keypoint rows [start, stop)."""
    nb = stop - start
    emb = np.empty((nb, state.c_sum), dtype=np.float32)
    if tracker is not None:
        tracker.alloc(emb.size)
    for level in range(3):
        base = state.bases[level]
        emb[:, state.slices[level]] = bilinear_sample_many(
            state.levels[level], base[start:stop, 0], base[start:stop, 1], tracker=tracker
        )
    off = emb @ state.w_off_t + state.b_off
    if tracker is not None:
        tracker.alloc(off.size)
        tracker.release(emb.size)
    return off.reshape(nb, 3, state.m, 2)


def _sample_block(state: _HeadState, start: int, stop: int, offsets: np.ndarray,
                  samples: np.ndarray, tracker: ScratchTracker | None) -> None:
    """Fill `samples` (nb, M, c_sum) with per-level deformable reads."""
    nb = stop - start
    for level in range(3):
        base = state.bases[level]
        px = base[start:stop, 0:1] + offsets[:, level, :, 0]
        py = base[start:stop, 1:2] + offsets[:, level, :, 1]
        if tracker is not None:
            tracker.alloc(2 * nb * state.m)
        vals = bilinear_sample_many(state.levels[level], px.ravel(), py.ravel(), tracker=tracker)
        samples[:, :, state.slices[level]] = vals.reshape(nb, state.m, -1)
        if tracker is not None:
            tracker.release(2 * nb * state.m)


def _aggregate_block(state: _HeadState, samples: np.ndarray) -> np.ndarray:
    flat = samples.reshape(samples.shape[0], state.m * state.c_sum)
    return l2_normalize_rows(flat @ state.w_agg_t + state.b_agg)


def _check_store(store: WeightStore, config: ModelConfig) -> None:
    if store.config.name != config.name:
        raise ConfigurationError(
            f"weights are for {store.config.name}, requested {config.name}"
        )


def predict_offsets(
    pyramid: Pyramid,
    keypoints,
    store: WeightStore,
    config: ModelConfig,
    tracker: ScratchTracker | None = None,
) -> np.ndarray:
    """Per-keypoint sampling offsets, (n, 3, M, 2) in level grid units.

    Element [i, l, s] is the (dx, dy) of sample s on level l, predicted from
    the concatenated cross-layer embedding at keypoint i.
    """
    _check_store(store, config)
    xy = _as_xy(keypoints)
    state = _HeadState(pyramid, xy, store, config)
    off = _predict_block(state, 0, xy.shape[0], tracker)
    if tracker is not None:
        tracker.release(off.size)
    return off


def describe_naive(
    pyramid: Pyramid,
    keypoints,
    offsets: np.ndarray,
    store: WeightStore,
    config: ModelConfig,
    tracker: ScratchTracker | None = None,
) -> np.ndarray:
    """Reference path: materialize all samples, then aggregate.

    The (n, M*c_sum) intermediate is built in full, which makes this path the
    memory-heavy oracle the fused path is checked against.
    """
    _check_store(store, config)
    xy = _as_xy(keypoints)
    n = xy.shape[0]
    if n == 0:
        return np.zeros((0, config.c_desc), dtype=np.float32)
    state = _HeadState(pyramid, xy, store, config)
    samples = np.empty((n, config.m, config.c_sum), dtype=np.float32)
    if tracker is not None:
        tracker.alloc(samples.size + offsets.size)
    _sample_block(state, 0, n, offsets, samples, tracker)
    desc = _aggregate_block(state, samples)
    if tracker is not None:
        tracker.alloc(desc.size)  # pre-normalization product
        tracker.release(samples.size + offsets.size + desc.size)
    return desc


def describe_fused(
    pyramid: Pyramid,
    keypoints,
    store: WeightStore,
    config: ModelConfig,
    block: int = DEFAULT_BLOCK,
    tracker: ScratchTracker | None = None,
) -> np.ndarray:
    """Blocked path: predict, sample and aggregate one block at a time.

    Mathematically identical to predict_offsets + describe_naive; with
    block >= n the schedule is exactly the naive one and the output is
    bit-identical.  Peak auxiliary memory is O(block * M * c_sum),
    independent of the keypoint count.
    """
    _check_store(store, config)
    if block < 1:
        raise ValueError(f"describe_fused: block must be >= 1, got {block}")
    xy = _as_xy(keypoints)
    n = xy.shape[0]
    out = np.empty((n, config.c_desc), dtype=np.float32)
    if n == 0:
        return out
    state = _HeadState(pyramid, xy, store, config)
    b = min(block, n)
    buf = np.empty((b, config.m, config.c_sum), dtype=np.float32)
    if tracker is not None:
        tracker.alloc(buf.size)
    for start in range(0, n, b):
        stop = min(start + b, n)
        off_b = _predict_block(state, start, stop, tracker)
        samples = buf[: stop - start]
        _sample_block(state, start, stop, off_b, samples, tracker)
        desc_b = _aggregate_block(state, samples)
        if tracker is not None:
            tracker.alloc(desc_b.size)
            tracker.release(off_b.size + desc_b.size)
        out[start:stop] = desc_b
    if tracker is not None:
        tracker.release(buf.size)
    return out
