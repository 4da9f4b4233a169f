import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from visionary import splatmath as sm
from visionary.errors import (DegenerateCovarianceError, DegenerateDepthError,
                              InvalidInputError)


def random_rotation(rng):
    q = rng.normal(size=4)
    return sm.quat_to_rotmat(q / np.linalg.norm(q))


class TestQuatToRotmat:
    def test_identity(self):
        np.testing.assert_allclose(sm.quat_to_rotmat((1, 0, 0, 0)), np.eye(3))

    def test_180_about_z(self):
        np.testing.assert_allclose(sm.quat_to_rotmat((0, 0, 0, 1)),
                                   np.diag([-1.0, -1.0, 1.0]), atol=1e-12)

    def test_90_about_x_maps_y_to_z(self):
        # Axis-angle oracle: rotate (0,1,0) by 90 degrees about x.
        r = sm.quat_to_rotmat((0.70710678, 0.70710678, 0, 0))
        np.testing.assert_allclose(r @ [0, 1, 0], [0, 0, 1], atol=1e-7)

    def test_orthonormal_det_plus_one(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            r = random_rotation(rng)
            np.testing.assert_allclose(r @ r.T, np.eye(3), atol=1e-12)
            assert np.linalg.det(r) == pytest.approx(1.0)

    def test_zero_quaternion_rejected(self):
        with pytest.raises(InvalidInputError):
            sm.quat_to_rotmat((0, 0, 0, 0))

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(1)
        q = rng.normal(size=(20, 4))
        batch = sm.quat_to_rotmat_batch(q)
        for i in range(20):
            np.testing.assert_allclose(batch[i], sm.quat_to_rotmat(q[i]), atol=1e-12)


class TestCovariance3d:
    def test_unit_scale_identity(self):
        np.testing.assert_allclose(sm.covariance3d((1, 1, 1), np.eye(3)),
                                   [1, 0, 0, 1, 0, 1])

    def test_axis_aligned(self):
        np.testing.assert_allclose(sm.covariance3d((2, 1, 1), np.eye(3)),
                                   [4, 0, 0, 1, 0, 1])

    def test_eigenvalues_are_squared_scales(self):
        # Eigen-decomposition oracle over random scale/rotation pairs.
        rng = np.random.default_rng(2)
        for _ in range(100):
            s = rng.uniform(0.1, 3.0, size=3)
            r = random_rotation(rng)
            c6 = sm.covariance3d(s, r)
            eig = np.sort(np.linalg.eigvalsh(sm.sym3_to_matrix(c6)))
            np.testing.assert_allclose(eig, np.sort(s * s), atol=1e-6)

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidInputError):
            sm.covariance3d((1, np.nan, 1), np.eye(3))

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(3)
        s = rng.uniform(0.2, 2.0, size=(10, 3))
        q = rng.normal(size=(10, 4))
        batch = sm.covariance3d_batch(s, q)
        for i in range(10):
            np.testing.assert_allclose(batch[i],
                                       sm.covariance3d(s[i], sm.quat_to_rotmat(q[i])),
                                       atol=1e-12)


def make_camera(width=200, height=200, fx=100.0, fy=100.0, near=0.1, far=100.0):
    return sm.Camera.from_intrinsics(np.eye(4), width=width, height=height,
                                     fx=fx, fy=fy, near=near, far=far)


class TestProjectToNdc:
    def test_on_axis_point_centered(self):
        cam = make_camera()
        mid = (cam.near + cam.far) / 2
        ndc_xy, _, _, vis = sm.project_to_ndc((0, 0, -mid), cam)
        assert vis
        np.testing.assert_allclose(ndc_xy, [0, 0], atol=1e-12)

    def test_behind_camera_invisible(self):
        cam = make_camera()
        assert not sm.project_to_ndc((0, 0, 1.0), cam)[3]

    def test_manual_pinhole(self):
        # fx=100, viewport 200: ndc_x = fx*x/(-z) / (W/2) = 100*0.1/100 = 0.1.
        cam = make_camera()
        ndc_xy, _, cam_z, vis = sm.project_to_ndc((1, 0, -10), cam)
        assert vis and cam_z == pytest.approx(-10)
        assert ndc_xy[0] == pytest.approx(0.1)

    def test_depth_range_invariant(self):
        cam = make_camera()
        assert sm.project_to_ndc((0, 0, -cam.near * 1.0000001), cam)[1] == pytest.approx(0.0, abs=1e-6)
        assert sm.project_to_ndc((0, 0, -cam.far), cam)[1] == pytest.approx(1.0, abs=1e-9)


class TestCov2dProject:
    def test_zero_covariance_gives_dilation(self):
        cam = make_camera()
        s2 = sm.cov2d_project(np.zeros(6), (0, 0, -5.0), cam)
        np.testing.assert_allclose(s2, [sm.COV2D_DILATION, 0, sm.COV2D_DILATION])

    def test_isotropic_on_axis_closed_form(self):
        cam = make_camera()
        sigma, d = 0.02, 5.0
        s2 = sm.cov2d_project(np.array([sigma**2, 0, 0, sigma**2, 0, sigma**2]),
                              (0, 0, -d), cam)
        expected = (cam.fx * sigma / d) ** 2 + sm.COV2D_DILATION
        np.testing.assert_allclose(s2, [expected, 0, expected], rtol=1e-12)

    def test_matches_finite_difference_jacobian(self):
        # Finite-difference oracle: numerically differentiate the pixel
        # projection and conjugate the covariance by that Jacobian.
        rng = np.random.default_rng(4)
        cam = sm.Camera.look_at((1.5, 0.8, 2.0), (0, 0, 0), width=320, height=240)
        for _ in range(200):
            p_world = rng.uniform(-0.5, 0.5, size=3)
            s = rng.uniform(0.01, 0.05, size=3)
            r = random_rotation(rng)
            c6 = sm.covariance3d(s, r)

            def pixel(p):
                pc = cam.view[:3, :3] @ p + cam.view[:3, 3]
                return np.array([cam.fx * pc[0] / pc[2], cam.fy * pc[1] / pc[2]])

            eps = 1e-6
            jac = np.zeros((2, 3))
            for k in range(3):
                dp = np.zeros(3)
                dp[k] = eps
                jac[:, k] = (pixel(p_world + dp) - pixel(p_world - dp)) / (2 * eps)
            expected = jac @ sm.sym3_to_matrix(c6) @ jac.T
            p_cam = cam.view[:3, :3] @ p_world + cam.view[:3, 3]
            got = sm.cov2d_project(c6, p_cam, cam)
            got_mat = np.array([[got[0] - sm.COV2D_DILATION, got[1]],
                                [got[1], got[2] - sm.COV2D_DILATION]])
            np.testing.assert_allclose(got_mat, expected,
                                       rtol=1e-3, atol=1e-9)

    def test_zero_depth_raises(self):
        with pytest.raises(DegenerateDepthError):
            sm.cov2d_project(np.zeros(6), (0, 0, 0.0), make_camera())


class TestEigen2x2:
    def test_diagonal(self):
        lam1, lam2, v1, _ = sm.eigen2x2((4.0, 0.0, 1.0))
        assert (lam1, lam2) == (4.0, 1.0)
        np.testing.assert_allclose(v1, [1, 0])

    def test_isotropic_tie_break(self):
        lam1, lam2, v1, v2 = sm.eigen2x2((2.5, 0.0, 2.5))
        assert lam1 == lam2 == 2.5
        np.testing.assert_allclose(v1, [1, 0])
        np.testing.assert_allclose(v2, [0, 1])

    def test_hand_solved_characteristic_polynomial(self):
        lam1, lam2, v1, _ = sm.eigen2x2((2.0, 1.0, 2.0))
        assert lam1 == pytest.approx(3.0) and lam2 == pytest.approx(1.0)
        np.testing.assert_allclose(np.abs(v1), [1 / math.sqrt(2)] * 2, atol=1e-12)

    def test_non_positive_definite_rejected(self):
        with pytest.raises(DegenerateCovarianceError):
            sm.eigen2x2((1.0, 2.0, 1.0))

    def test_reconstruction_property(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            a = rng.normal(size=(2, 2))
            s = a @ a.T + 0.1 * np.eye(2)
            lam1, lam2, v1, v2 = sm.eigen2x2((s[0, 0], s[0, 1], s[1, 1]))
            rec = lam1 * np.outer(v1, v1) + lam2 * np.outer(v2, v2)
            np.testing.assert_allclose(rec, s, atol=1e-5)
            assert lam1 >= lam2 > 0
            assert abs(v1 @ v2) < 1e-12
            np.testing.assert_allclose(s @ v1, lam1 * v1, atol=1e-5)

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(6)
        mats = []
        for _ in range(50):
            a = rng.normal(size=(2, 2))
            s = a @ a.T + 0.1 * np.eye(2)
            mats.append((s[0, 0], s[0, 1], s[1, 1]))
        mats.append((2.0, 0.0, 2.0))
        mats.append((1.0, 0.0, 4.0))
        l1, l2, v1, v2 = sm.eigen2x2_batch(np.array(mats))
        for i, m in enumerate(mats):
            sl1, sl2, sv1, sv2 = sm.eigen2x2(m)
            assert l1[i] == pytest.approx(sl1) and l2[i] == pytest.approx(sl2)
            np.testing.assert_allclose(v1[i], sv1, atol=1e-12)


class TestEvalSh:
    def test_band0_constant(self):
        rgb = sm.eval_sh(np.ones((1, 3)), 0, (0, 0, 1))
        np.testing.assert_allclose(rgb, [0.78209479] * 3, atol=1e-7)

    def test_clamp_floor(self):
        rgb = sm.eval_sh(np.full((1, 3), -100.0), 0, (0, 0, 1))
        np.testing.assert_allclose(rgb, [0, 0, 0])

    def test_z_band_view_dependence(self):
        sh = np.zeros((4, 3))
        sh[2] = 0.3                      # z-linear band
        up = sm.eval_sh(sh, 1, (0, 0, 1))
        down = sm.eval_sh(sh, 1, (0, 0, -1))
        np.testing.assert_allclose(up - down, [2 * 0.48860251 * 0.3] * 3, atol=1e-7)

    def test_degree0_direction_independent(self):
        rng = np.random.default_rng(7)
        sh = rng.normal(size=(1, 3))
        ref = sm.eval_sh(sh, 0, (0, 0, 1))
        for _ in range(100):
            d = rng.normal(size=3)
            d /= np.linalg.norm(d)
            assert np.array_equal(sm.eval_sh(sh, 0, d), ref)

    def test_degree_out_of_range(self):
        with pytest.raises(InvalidInputError):
            sm.eval_sh(np.zeros((25, 3)), 4, (0, 0, 1))


class TestF16Roundtrip:
    def test_exact_one(self):
        assert sm.f16_roundtrip(1.0) == 1.0

    def test_tenth_nearest_half(self):
        assert sm.f16_roundtrip(0.1) == 0.0999755859375

    def test_overflow_saturates(self):
        assert sm.f16_roundtrip(70000.0) == math.inf
        assert sm.f16_roundtrip(-70000.0) == -math.inf

    @given(st.floats(allow_nan=False, allow_infinity=False, width=32))
    @settings(max_examples=300)
    def test_idempotent(self, x):
        once = sm.f16_roundtrip(x)
        if math.isfinite(once):
            assert sm.f16_roundtrip(once) == once

    def test_nan_rejected(self):
        with pytest.raises(InvalidInputError):
            sm.f16_roundtrip(float("nan"))
