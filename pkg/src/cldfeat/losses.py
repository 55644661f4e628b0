"""Forward evaluators for the training objectives.

No gradients: these exist for checkpoint validation, property testing and
loss-surface probes.  The descriptor losses operate on index-paired
descriptor matrices; the detection loss compares raw logit heatmaps.

In the loss evaluators the temperature divides the similarity logits
(logits = S / temperature), which is the literal form of the matching
probability used for supervision.
"""
from __future__ import annotations

import numpy as np

from .config import ModelConfig
from .errors import InputError, NumericError
from .tensorops import l2_normalize_rows, softmax_cols, softmax_rows

LOG_EPS = 1e-12

# (w_ds, w_op, w_us) per preset: the compact variants trade direct metric
# supervision for distillation.
LOSS_WEIGHTS: dict[str, tuple[float, float, float]] = {
    "A48": (0.05, 1.0, 1.0),
    "N64": (0.1, 1.0, 1.0),
    "T64": (0.5, 1.0, 1.0),
    "S64": (1.0, 0.0, 1.0),
    "M64": (1.0, 0.0, 1.0),
    "L64": (1.0, 0.0, 1.0),
    "G128": (1.0, 0.0, 1.0),
    "E128": (1.0, 0.0, 1.0),
    "U128": (1.0, 0.0, 1.0),
}


def matching_probabilities(d_a: np.ndarray, d_b: np.ndarray, temperature: float = 20.0) -> np.ndarray:
    """P = softmax_rows(S/T) * softmax_cols(S/T) for index-paired matrices."""
    s = (d_a @ d_b.T) / np.float32(temperature)
    return softmax_rows(s) * softmax_cols(s)


def dual_softmax_loss(
    d_a: np.ndarray,
    d_b: np.ndarray,
    mask: np.ndarray,
    temperature: float = 20.0,
) -> float:
    """Masked negative log-likelihood of the diagonal matching probabilities.

    mask is the binary visibility vector; at least one pair must be visible.
    """
    mask = np.asarray(mask, dtype=np.float64)
    total = mask.sum()
    if total == 0:
        raise InputError("dual_softmax_loss: visibility mask is all zero")
    p = matching_probabilities(d_a, d_b, temperature)
    diag = np.clip(np.diag(p).astype(np.float64), LOG_EPS, None)
    return float(-(mask * np.log(diag)).sum() / total)


def _fix_svd_signs(u: np.ndarray, vt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # make the first nonzero entry of each left singular vector positive
    nonzero = np.abs(u) > 1e-30
    first = np.where(nonzero.any(axis=0), nonzero.argmax(axis=0), 0)
    signs = np.sign(u[first, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs, vt * signs[:, None]


def lra_compress(teacher: np.ndarray, target_dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Low-rank compression of teacher descriptors to the student dimension.

    Computes the thin SVD of the (B*N, C_teacher) teacher matrix once per
    batch and keeps the top `target_dim` singular triplets: d_l = U_C S_C.
    Returns (d_l, d_n) where d_n is d_l row-normalized back onto the unit
    hypersphere; zero rows stay zero.
    """
    n, c = teacher.shape
    if n < target_dim:
        raise InputError(f"lra_compress: need at least {target_dim} rows, got {n}")
    try:
        u, s, vt = np.linalg.svd(teacher, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"lra_compress: SVD failed: {exc}") from exc
    u, vt = _fix_svd_signs(u, vt)
    d_l = u[:, :target_dim] * s[:target_dim]
    d_n = l2_normalize_rows(d_l)
    return d_l, d_n


def procrustes_solve(d_a: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Orthogonal matrix best aligning `target` to d_a.

    Solves min over orthogonal X of ||target @ X - d_a||_F via the SVD of the
    correlation matrix d_a^T target: omega = V_p @ U_p^T.
    """
    if d_a.shape[1] != target.shape[1]:
        raise InputError(
            f"procrustes_solve: dims differ: {d_a.shape[1]} vs {target.shape[1]}"
        )
    corr = d_a.T @ target
    try:
        u_p, _, v_pt = np.linalg.svd(corr)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"procrustes_solve: SVD failed: {exc}") from exc
    return v_pt.T @ u_p.T


def procrustes_loss(d_a: np.ndarray, d_n: np.ndarray, omega: np.ndarray) -> float:
    """Sum of squared deviations of the aligned diagonal cosines from 1."""
    if d_a.shape[0] != d_n.shape[0]:
        raise InputError("procrustes_loss: row counts differ")
    diag = ((d_n @ omega) * d_a).sum(axis=1)
    return float(((1.0 - diag) ** 2).sum())


def procrustes_distillation(
    d_a: np.ndarray,
    teacher: np.ndarray,
    target_dim: int | None = None,
    solve_on_normalized: bool = True,
) -> float:
    """Full distillation evaluator: LRA, alignment solve, then the loss.

    By default both the alignment and the loss use the row-normalized
    compressed target (the quantity that lives on the unit hypersphere);
    solve_on_normalized=False solves against the unnormalized d_l instead
    while still evaluating the loss with d_n.
    """
    if target_dim is None:
        target_dim = d_a.shape[1]
    d_l, d_n = lra_compress(teacher, target_dim)
    omega = procrustes_solve(d_a, d_n if solve_on_normalized else d_l)
    return procrustes_loss(d_a, d_n, omega)


def gram_residual(d_a: np.ndarray, reference: np.ndarray) -> float:
    """Squared Frobenius norm of the Gram-matrix difference (diagnostic)."""
    if d_a.shape[0] != reference.shape[0]:
        raise InputError("gram_residual: row counts differ")
    diff = d_a @ d_a.T - reference @ reference.T
    return float((diff * diff).sum())


def _patches(hm: np.ndarray, window: int) -> np.ndarray:
    x = hm[:, :, 0] if hm.ndim == 3 else hm
    h, w = x.shape
    if h % window or w % window:
        raise InputError(f"heatmap {h}x{w} not divisible by window {window}")
    tiles = x.reshape(h // window, window, w // window, window)
    return tiles.transpose(0, 2, 1, 3).reshape(-1, window * window)


def unfold_softmax_loss(
    student_logits: np.ndarray,
    teacher_logits: np.ndarray,
    window: int = 8,
) -> float:
    """Patchwise softmax cross-entropy between teacher and student logits.

    Both maps are split into non-overlapping window x window patches; each
    patch is treated as a classification over its pixels and the mean
    cross-entropy softmax(teacher) vs softmax(student) is returned.
    """
    if student_logits.shape != teacher_logits.shape:
        raise InputError(
            f"heatmap shapes differ: {student_logits.shape} vs {teacher_logits.shape}"
        )
    sp = _patches(student_logits, window).astype(np.float64)
    tp = _patches(teacher_logits, window).astype(np.float64)
    shifted = sp - sp.max(axis=1, keepdims=True)
    log_p = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    q = softmax_rows(tp)
    return float(-(q * log_p).sum(axis=1).mean())


def total_loss(
    l_ds: float,
    l_op: float,
    l_us: float,
    weights: tuple[float, float, float] | None = None,
    config: ModelConfig | None = None,
) -> float:
    """Weighted combination of the three components.

    Pass explicit (w_ds, w_op, w_us) weights, or a config to use its preset
    weighting.
    """
    if weights is None:
        if config is None:
            raise InputError("total_loss: provide weights or a config")
        weights = LOSS_WEIGHTS[config.name]
    w_ds, w_op, w_us = weights
    if w_ds < 0 or w_op < 0 or w_us < 0:
        raise InputError("total_loss: weights must be non-negative")
    return w_ds * l_ds + w_op * l_op + w_us * l_us
