"""Homography utilities, robust estimation, and the mean-homography-accuracy
evaluation protocol for synthetic image pairs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EstimationError, InputError
from .tensorops import bilinear_sample_many


@dataclass(frozen=True)
class PairEval:
    """Corner-error evaluation of one estimated homography."""

    corner_error: float
    passes: dict[int, bool]
    n_matches: int = 0
    n_inliers: int = 0


@dataclass(frozen=True)
class EvalReport:
    """Aggregate over an image set: accuracy percentages per threshold."""

    mha: dict[int, float]
    mean_corner_error: float
    n_pairs: int
    n_failed: int


def normalize_homography(h: np.ndarray) -> np.ndarray:
    """Scale so h[2,2] == 1; rejects singular matrices."""
    h = np.asarray(h, dtype=np.float64)
    if abs(np.linalg.det(h)) <= 1e-12:
        raise EstimationError("homography is singular")
    if h[2, 2] != 0.0:
        h = h / h[2, 2]
    return h


def warp_points(h: np.ndarray, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Projective transform of (n, 2) points.

    Returns (warped, valid); points mapping to infinity (|w| ~ 0) come back
    flagged invalid with zeroed coordinates.
    """
    pts = np.asarray(pts, dtype=np.float64)
    ones = np.ones((pts.shape[0], 1))
    hom = np.concatenate([pts, ones], axis=1) @ h.T
    wcol = hom[:, 2]
    valid = np.abs(wcol) > 1e-12
    out = np.zeros_like(pts)
    out[valid] = hom[valid, :2] / wcol[valid, None]
    return out, valid


def visibility_mask(
    pts: np.ndarray, width: int, height: int, valid: np.ndarray | None = None
) -> np.ndarray:
    """1 where 0 <= x < width and 0 <= y < height (and the point is valid)."""
    pts = np.asarray(pts, dtype=np.float64)
    inside = (
        (pts[:, 0] >= 0) & (pts[:, 0] < width) & (pts[:, 1] >= 0) & (pts[:, 1] < height)
    )
    if valid is not None:
        inside &= valid
    return inside.astype(np.uint8)


def _hartley_normalization(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    centroid = pts.mean(axis=0)
    shifted = pts - centroid
    mean_dist = np.sqrt((shifted**2).sum(axis=1)).mean()
    scale = np.sqrt(2.0) / mean_dist if mean_dist > 0 else 1.0
    t = np.array(
        [[scale, 0, -scale * centroid[0]], [0, scale, -scale * centroid[1]], [0, 0, 1]]
    )
    return shifted * scale, t


def dlt_homography(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Normalized direct linear transform from >= 4 correspondences."""
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    n = src.shape[0]
    if n < 4:
        raise EstimationError(f"dlt needs >= 4 correspondences, got {n}")
    a_n, ta = _hartley_normalization(src)
    b_n, tb = _hartley_normalization(dst)
    rows = np.zeros((2 * n, 9))
    x, y = a_n[:, 0], a_n[:, 1]
    u, v = b_n[:, 0], b_n[:, 1]
    rows[0::2, 0] = -x
    rows[0::2, 1] = -y
    rows[0::2, 2] = -1
    rows[0::2, 6] = u * x
    rows[0::2, 7] = u * y
    rows[0::2, 8] = u
    rows[1::2, 3] = -x
    rows[1::2, 4] = -y
    rows[1::2, 5] = -1
    rows[1::2, 6] = v * x
    rows[1::2, 7] = v * y
    rows[1::2, 8] = v
    _, s, vt = np.linalg.svd(rows)
    h_n = vt[-1].reshape(3, 3)
    h = np.linalg.inv(tb) @ h_n @ ta
    if abs(h[2, 2]) < 1e-12 or abs(np.linalg.det(h)) <= 1e-12:
        raise EstimationError("dlt produced a degenerate homography")
    return h / h[2, 2]


def _has_collinear_triple(pts: np.ndarray) -> bool:
    for i in range(4):
        idx = [j for j in range(4) if j != i]
        p0, p1, p2 = pts[idx]
        area = abs(
            (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1])
        )
        if area < 1e-9:
            return True
    return False


def estimate_homography_ransac(
    pts_a: np.ndarray,
    pts_b: np.ndarray,
    iters: int = 1000,
    inlier_thresh: float = 3.0,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """4-point RANSAC with a normalized-DLT refit on the best consensus set.

    Each iteration draws its sample from a per-iteration seeded stream, so
    results do not depend on iteration scheduling.  Returns (h, inlier_mask).
    Raises EstimationError with < 4 matches or when every sample was
    degenerate.
    """
    pts_a = np.asarray(pts_a, dtype=np.float64)
    pts_b = np.asarray(pts_b, dtype=np.float64)
    n = pts_a.shape[0]
    if n < 4:
        raise EstimationError(f"ransac needs >= 4 matches, got {n}")

    best_count = -1
    best_inliers: np.ndarray | None = None
    for it in range(iters):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(it,)))
        idx = rng.choice(n, size=4, replace=False)
        sample_a, sample_b = pts_a[idx], pts_b[idx]
        if _has_collinear_triple(sample_a) or _has_collinear_triple(sample_b):
            continue
        try:
            h = dlt_homography(sample_a, sample_b)
        except EstimationError:
            continue
        projected, valid = warp_points(h, pts_a)
        err = np.sqrt(((projected - pts_b) ** 2).sum(axis=1))
        inliers = valid & (err < inlier_thresh)
        count = int(inliers.sum())
        if count > best_count:
            best_count = count
            best_inliers = inliers
    if best_inliers is None or best_count < 4:
        raise EstimationError("ransac found no non-degenerate consensus")

    h = dlt_homography(pts_a[best_inliers], pts_b[best_inliers])
    return h, best_inliers


def corner_points(width: int, height: int) -> np.ndarray:
    return np.array(
        [[0, 0], [width - 1, 0], [width - 1, height - 1], [0, height - 1]],
        dtype=np.float64,
    )


def mha_eval(
    h_est: np.ndarray,
    h_gt: np.ndarray,
    width: int,
    height: int,
    thresholds: tuple[int, ...] = (1, 3, 5),
    n_matches: int = 0,
    n_inliers: int = 0,
) -> PairEval:
    """Mean corner reprojection error and per-threshold pass flags."""
    corners = corner_points(width, height)
    est, _ = warp_points(h_est, corners)
    gt, _ = warp_points(h_gt, corners)
    err = float(np.sqrt(((est - gt) ** 2).sum(axis=1)).mean())
    passes = {int(t): err <= t for t in thresholds}
    return PairEval(corner_error=err, passes=passes, n_matches=n_matches, n_inliers=n_inliers)


def aggregate_evals(
    evals: list[PairEval | None], thresholds: tuple[int, ...] = (1, 3, 5)
) -> EvalReport:
    """Fold per-pair results into percentages; None entries count as failures
    at every threshold."""
    n = len(evals)
    ok = [e for e in evals if e is not None]
    mha = {
        int(t): (100.0 * sum(e.passes.get(int(t), False) for e in ok) / n if n else 0.0)
        for t in thresholds
    }
    mean_err = float(np.mean([e.corner_error for e in ok])) if ok else float("inf")
    return EvalReport(mha=mha, mean_corner_error=mean_err, n_pairs=n, n_failed=n - len(ok))


def warp_image(image: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Backward-warp an image through h with clamped bilinear sampling."""
    hh, ww = image.shape[:2]
    h_inv = np.linalg.inv(h)
    ys, xs = np.mgrid[0:hh, 0:ww]
    grid = np.stack([xs.ravel(), ys.ravel()], axis=1).astype(np.float64)
    src, _ = warp_points(h_inv, grid)
    sampled = bilinear_sample_many(
        np.ascontiguousarray(image, dtype=np.float32), src[:, 0], src[:, 1]
    )
    return sampled.reshape(hh, ww, image.shape[2])


def synth_pair(
    image: np.ndarray,
    seed: int,
    max_jitter: float = 0.15,
    photometric: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Random in-bounds perspective warp of an image, with its homography.

    The four corners move inward by up to max_jitter of each dimension, the
    image is bilinearly warped through the induced homography (original ->
    warped coordinates), and an optional brightness/contrast jitter of the
    given strength is applied.  Deterministic per seed.
    """
    if not 0.0 <= max_jitter < 0.5:
        raise InputError(f"synth_pair: max_jitter {max_jitter} out of range")
    hh, ww = image.shape[:2]
    rng = np.random.default_rng(seed)
    if max_jitter == 0.0:
        h_gt = np.eye(3)
        warped = image.copy()
    else:
        src = corner_points(ww, hh)
        # inward-pointing displacements keep every corner inside the frame
        inward = np.array([[1, 1], [-1, 1], [-1, -1], [1, -1]], dtype=np.float64)
        magnitude = rng.uniform(0.0, max_jitter, size=(4, 2)) * np.array([ww, hh])
        dst = src + inward * magnitude
        h_gt = dlt_homography(src, dst)
        warped = warp_image(image, h_gt)
    if photometric > 0.0:
        contrast = 1.0 + rng.uniform(-photometric, photometric)
        brightness = rng.uniform(-photometric, photometric)
        warped = np.clip((warped - 0.5) * contrast + 0.5 + brightness, 0.0, 1.0)
        warped = warped.astype(np.float32)
    return warped, h_gt
