"""Homographies, robust estimation, corner-accuracy scoring, synthetic pairs."""
import numpy as np
import pytest

from cldfeat.errors import EstimationError
from cldfeat.geometry import (
    aggregate_evals,
    corner_points,
    dlt_homography,
    estimate_homography_ransac,
    mha_eval,
    normalize_homography,
    synth_pair,
    visibility_mask,
    warp_image,
    warp_points,
)
from cldfeat.images import procedural_image


def random_homography(rng):
    h = np.eye(3) + 0.1 * rng.standard_normal((3, 3))
    h[2, 2] = 1.0
    return h


class TestWarpPoints:
    def test_identity(self):
        pts = np.random.default_rng(0).uniform(0, 100, (20, 2))
        warped, valid = warp_points(np.eye(3), pts)
        np.testing.assert_allclose(warped, pts, atol=1e-12)
        assert valid.all()

    def test_translation(self):
        h = np.eye(3)
        h[0, 2], h[1, 2] = 5.0, -2.0
        warped, _ = warp_points(h, np.array([[1.0, 1.0], [10.0, 20.0]]))
        np.testing.assert_allclose(warped, [[6.0, -1.0], [15.0, 18.0]])

    def test_matches_per_point_oracle(self):
        rng = np.random.default_rng(1)
        h = random_homography(rng)
        pts = rng.uniform(-50, 50, (50, 2))
        warped, valid = warp_points(h, pts)
        for i in range(50):
            v = h @ np.array([pts[i, 0], pts[i, 1], 1.0])
            np.testing.assert_allclose(warped[i], v[:2] / v[2], atol=1e-9)
        assert valid.all()

    def test_point_at_infinity_flagged(self):
        h = np.eye(3)
        h[2] = [1.0, 0.0, 0.0]  # w = x, so x=0 maps to infinity
        warped, valid = warp_points(h, np.array([[0.0, 5.0], [2.0, 1.0]]))
        assert not valid[0] and valid[1]

    def test_inverse_round_trip(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            h = random_homography(rng)
            pts = rng.uniform(0, 100, (30, 2))
            fwd, _ = warp_points(h, pts)
            back, _ = warp_points(np.linalg.inv(h), fwd)
            np.testing.assert_allclose(back, pts, atol=1e-9)


class TestVisibility:
    def test_all_interior(self):
        pts = np.array([[0.0, 0.0], [5.5, 5.5], [9.99, 19.99]])
        np.testing.assert_array_equal(visibility_mask(pts, 10, 20), [1, 1, 1])

    def test_boundary_convention(self):
        pts = np.array([[-1.0, 5.0], [9.0, 19.0], [10.0, 0.0], [0.0, 20.0]])
        np.testing.assert_array_equal(visibility_mask(pts, 10, 20), [0, 1, 0, 0])


class TestDlt:
    def test_exact_four_point_recovery(self):
        rng = np.random.default_rng(3)
        h = random_homography(rng)
        src = np.array([[0.0, 0.0], [100.0, 0.0], [100.0, 80.0], [0.0, 80.0]])
        dst, _ = warp_points(h, src)
        got = dlt_homography(src, dst)
        np.testing.assert_allclose(got, h / h[2, 2], atol=1e-6)

    def test_overdetermined(self):
        rng = np.random.default_rng(4)
        h = random_homography(rng)
        src = rng.uniform(0, 200, (40, 2))
        dst, _ = warp_points(h, src)
        got = dlt_homography(src, dst)
        proj, _ = warp_points(got, src)
        assert np.abs(proj - dst).max() < 1e-6

    def test_too_few(self):
        with pytest.raises(EstimationError):
            dlt_homography(np.zeros((3, 2)), np.zeros((3, 2)))


class TestRansac:
    def test_exact_inliers_with_outliers(self):
        rng = np.random.default_rng(5)
        h = random_homography(rng)
        src_in = rng.uniform(0, 300, (100, 2))
        dst_in, _ = warp_points(h, src_in)
        src_out = rng.uniform(0, 300, (50, 2))
        dst_out = rng.uniform(0, 300, (50, 2))
        src = np.concatenate([src_in, src_out])
        dst = np.concatenate([dst_in, dst_out])
        got, inliers = estimate_homography_ransac(src, dst, iters=500, seed=7)
        assert inliers[:100].all()
        proj, _ = warp_points(got, src_in)
        assert np.abs(proj - dst_in).max() < 1e-4

    def test_collinear_points_fail(self):
        src = np.stack([np.arange(10.0), 2.0 * np.arange(10.0)], axis=1)
        with pytest.raises(EstimationError):
            estimate_homography_ransac(src, src * 1.5, iters=50, seed=0)

    def test_too_few_matches(self):
        with pytest.raises(EstimationError):
            estimate_homography_ransac(np.zeros((3, 2)), np.zeros((3, 2)))

    def test_deterministic(self):
        rng = np.random.default_rng(6)
        h = random_homography(rng)
        src = rng.uniform(0, 100, (60, 2))
        dst, _ = warp_points(h, src)
        dst[40:] += rng.uniform(-30, 30, (20, 2))
        h1, m1 = estimate_homography_ransac(src, dst, iters=300, seed=3)
        h2, m2 = estimate_homography_ransac(src, dst, iters=300, seed=3)
        np.testing.assert_array_equal(h1, h2)
        np.testing.assert_array_equal(m1, m2)


class TestMha:
    def test_equal_homographies(self):
        h = random_homography(np.random.default_rng(7))
        pe = mha_eval(h, h, 640, 480)
        assert pe.corner_error == pytest.approx(0.0, abs=1e-9)
        assert all(pe.passes.values())

    def test_two_pixel_translation(self):
        h_gt = np.eye(3)
        h_est = np.eye(3)
        h_est[0, 2] = 2.0
        pe = mha_eval(h_est, h_gt, 640, 480)
        assert pe.corner_error == pytest.approx(2.0, abs=1e-9)
        assert not pe.passes[1] and pe.passes[3] and pe.passes[5]

    def test_identity_any_size(self):
        pe = mha_eval(np.eye(3), np.eye(3), 33, 77)
        assert pe.corner_error == 0.0

    def test_aggregate(self):
        a = mha_eval(np.eye(3), np.eye(3), 64, 64)
        h = np.eye(3)
        h[0, 2] = 4.0
        b = mha_eval(h, np.eye(3), 64, 64)
        report = aggregate_evals([a, b, None])
        assert report.n_pairs == 3 and report.n_failed == 1
        assert report.mha[1] == pytest.approx(100.0 / 3.0)
        assert report.mha[5] == pytest.approx(200.0 / 3.0)


class TestSynthPair:
    def test_zero_jitter_identity(self):
        img = procedural_image(0, 64, 96)
        warped, h = synth_pair(img, 5, max_jitter=0.0)
        np.testing.assert_array_equal(warped, img)
        np.testing.assert_array_equal(h, np.eye(3))

    def test_deterministic(self):
        img = procedural_image(1, 64, 96)
        a, ha = synth_pair(img, 9)
        b, hb = synth_pair(img, 9)
        np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal(ha, hb)

    def test_corners_move_inward(self):
        img = procedural_image(2, 64, 96)
        _, h = synth_pair(img, 11, max_jitter=0.15)
        corners = corner_points(96, 64)
        moved, _ = warp_points(h, corners)
        assert (moved[:, 0] >= 0).all() and (moved[:, 0] <= 95).all()
        assert (moved[:, 1] >= 0).all() and (moved[:, 1] <= 63).all()

    def test_warp_inverse_round_trip(self):
        img = procedural_image(3, 96, 128)
        warped, h = synth_pair(img, 13)
        restored = warp_image(warped, np.linalg.inv(h))
        inner = slice(24, -24)
        diff = np.abs(restored[inner, inner] - img[inner, inner])
        assert diff.mean() < 0.02

    def test_photometric_jitter(self):
        img = procedural_image(4, 64, 96)
        warped, _ = synth_pair(img, 15, max_jitter=0.0, photometric=0.3)
        assert warped.min() >= 0.0 and warped.max() <= 1.0
        assert np.abs(warped - img).max() > 0.01


def test_normalize_homography_rejects_singular():
    with pytest.raises(EstimationError):
        normalize_homography(np.zeros((3, 3)))
