"""Descriptor matching: dual-softmax with a confidence threshold, and plain
mutual nearest neighbors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .tensorops import softmax_cols, softmax_rows


@dataclass(frozen=True)
class MatchSet:
    """Accepted correspondences: (n, 2) index pairs, a confidence per pair,
    and the method that produced them.  Each index appears at most once per
    side and pairs are ordered by ascending first index."""

    pairs: np.ndarray
    confidences: np.ndarray
    method: str

    def __len__(self) -> int:
        return int(self.pairs.shape[0])


def similarity_matrix(d_a: np.ndarray, d_b: np.ndarray) -> np.ndarray:
    """Cosine similarity of unit-norm descriptor rows: S = D_A @ D_B^T."""
    if d_a.shape[1] != d_b.shape[1]:
        raise InputError(
            f"descriptor dims differ: {d_a.shape[1]} vs {d_b.shape[1]}"
        )
    return d_a @ d_b.T


def dual_softmax_probs(similarity: np.ndarray, scale: float) -> np.ndarray:
    """Elementwise product of row- and column-softmax of scale * S."""
    logits = similarity * np.float32(scale)
    return softmax_rows(logits) * softmax_cols(logits)


def _mutual_pairs(score: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Indices (i, j) that are mutual argmaxes of `score`; ties take the
    lowest index on both axes."""
    best_j = score.argmax(axis=1)
    best_i = score.argmax(axis=0)
    rows = np.arange(score.shape[0])
    mutual = best_i[best_j] == rows
    return rows[mutual], best_j[mutual]


def dual_softmax_match(
    d_a: np.ndarray,
    d_b: np.ndarray,
    temperature: float = 20.0,
    threshold: float = 0.01,
) -> MatchSet:
    """Dual-softmax matcher: mutual argmax of P plus a confidence threshold.

    P is the elementwise product of row- and column-softmax of the scaled
    similarity matrix.  The temperature acts multiplicatively (logits =
    temperature * S), sharpening the distribution so that the default 0.01
    confidence threshold keeps confident matches at realistic keypoint
    counts; see the matching notes in the README.
    """
    if len(d_a) == 0 or len(d_b) == 0:
        raise InputError("dual_softmax_match: descriptor sets must be non-empty")
    s = similarity_matrix(d_a, d_b)
    p = dual_softmax_probs(s, temperature)
    rows, cols = _mutual_pairs(p)
    conf = p[rows, cols]
    ok = conf >= threshold
    pairs = np.stack([rows[ok], cols[ok]], axis=1).astype(np.int32)
    return MatchSet(pairs=pairs, confidences=conf[ok].astype(np.float32), method="dualsoftmax")


def mutual_nn_match(d_a: np.ndarray, d_b: np.ndarray) -> MatchSet:
    """Mutual-nearest-neighbor matching on raw cosine similarity."""
    if len(d_a) == 0 or len(d_b) == 0:
        raise InputError("mutual_nn_match: descriptor sets must be non-empty")
    s = similarity_matrix(d_a, d_b)
    rows, cols = _mutual_pairs(s)
    pairs = np.stack([rows, cols], axis=1).astype(np.int32)
    return MatchSet(pairs=pairs, confidences=s[rows, cols].astype(np.float32), method="mnn")
