import numpy as np
import pytest

from nearlight.errors import DegenerateFit
from nearlight.metrics import align_depth, angular_error, evaluate, rel_abs_depth_error


def random_rotation(rng):
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return q


class TestAngularError:
    def test_identical(self):
        v = np.array([0.3, -0.4, 0.866])
        assert angular_error(v, v) == pytest.approx(0.0, abs=1e-6)

    def test_orthogonal(self):
        assert angular_error([0, 0, 1], [0, 1, 0]) == pytest.approx(90.0)

    def test_forty_five(self):
        n = np.array([1, 1, 0]) / np.sqrt(2)
        assert angular_error([1, 0, 0], n) == pytest.approx(45.0)

    def test_symmetric_and_rotation_invariant(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            a = rng.normal(size=3)
            b = rng.normal(size=3)
            a /= np.linalg.norm(a)
            b /= np.linalg.norm(b)
            assert angular_error(a, b) == pytest.approx(angular_error(b, a), abs=1e-9)
            r = random_rotation(rng)
            assert angular_error(r @ a, r @ b) == pytest.approx(
                angular_error(a, b), abs=1e-7
            )

    def test_renormalizes_defensively(self):
        assert angular_error([0, 0, 3.0], [0, 0, 0.2]) == pytest.approx(0.0, abs=1e-6)

    def test_broadcasts(self):
        a = np.tile([1.0, 0, 0], (4, 5, 1))
        b = np.tile([0.0, 1, 0], (4, 5, 1))
        np.testing.assert_allclose(angular_error(a, b), np.full((4, 5), 90.0))


class TestAlignDepth:
    def test_inverts_exact_affine(self):
        rng = np.random.default_rng(1)
        z_gt = rng.uniform(4, 8, size=(16, 16))
        z_est = 2.0 * z_gt + 3.0
        mask = np.ones_like(z_gt, dtype=bool)
        a, b, z_al = align_depth(z_est, z_gt, mask)
        assert a == pytest.approx(0.5, abs=1e-12)
        assert b == pytest.approx(-1.5, abs=1e-12)
        np.testing.assert_allclose(z_al, z_gt, atol=1e-10)

    def test_identity(self):
        z = np.linspace(1, 2, 64).reshape(8, 8)
        a, b, _ = align_depth(z, z, np.ones_like(z, dtype=bool))
        assert a == pytest.approx(1.0, abs=1e-12)
        assert b == pytest.approx(0.0, abs=1e-12)

    def test_noisy_fit_matches_lstsq_oracle(self):
        # Independent oracle: generic least squares on the design [z_est, 1].
        rng = np.random.default_rng(2)
        z_gt = rng.uniform(3, 9, size=400)
        z_est = 0.7 * z_gt - 1.2 + rng.normal(scale=0.05, size=400)
        mask = np.ones(400, dtype=bool)
        a, b, _ = align_depth(z_est, z_gt, mask)
        design = np.stack([z_est, np.ones(400)], axis=1)
        (a_ref, b_ref), *_ = np.linalg.lstsq(design, z_gt, rcond=None)
        assert a == pytest.approx(a_ref, abs=1e-10)
        assert b == pytest.approx(b_ref, abs=1e-10)

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        z_gt = rng.uniform(2, 4, size=(10, 10))
        z_est = 1.7 * z_gt - 0.4 + rng.normal(scale=0.01, size=(10, 10))
        mask = np.ones_like(z_gt, dtype=bool)
        _, _, z_al = align_depth(z_est, z_gt, mask)
        a2, b2, _ = align_depth(z_al, z_gt, mask)
        assert a2 == pytest.approx(1.0, abs=1e-10)
        assert b2 == pytest.approx(0.0, abs=1e-10)

    def test_shift_only(self):
        z_gt = np.linspace(5, 6, 36).reshape(6, 6)
        z_est = z_gt - 0.5
        a, b, z_al = align_depth(z_est, z_gt, np.ones_like(z_gt, bool), fit_scale=False)
        assert a == 1.0
        assert b == pytest.approx(0.5, abs=1e-12)
        np.testing.assert_allclose(z_al, z_gt, atol=1e-12)

    def test_constant_estimate_degenerate(self):
        z_gt = np.linspace(1, 2, 16)
        with pytest.raises(DegenerateFit):
            align_depth(np.full(16, 3.0), z_gt, np.ones(16, bool))

    def test_respects_mask(self):
        z_gt = np.array([1.0, 2.0, 3.0, 100.0])
        z_est = np.array([1.0, 2.0, 3.0, -50.0])
        mask = np.array([True, True, True, False])
        a, b, _ = align_depth(z_est, z_gt, mask)
        assert a == pytest.approx(1.0, abs=1e-12)
        assert b == pytest.approx(0.0, abs=1e-12)


class TestRelAbsDepthError:
    def test_exact_is_zero(self):
        z = np.full((4, 4), 6.0)
        mean, err = rel_abs_depth_error(z, z, np.ones_like(z, bool))
        assert mean == 0.0
        assert np.all(err == 0.0)

    def test_one_percent(self):
        z_gt = np.full((4, 4), 5.0)
        mean, _ = rel_abs_depth_error(1.01 * z_gt, z_gt, np.ones_like(z_gt, bool))
        assert mean == pytest.approx(0.01, abs=1e-12)

    def test_matches_hand_computation_on_crop(self):
        # 3x3 crop, worked by hand: per-pixel |est - gt| / gt.
        z_gt = np.array([[2.0, 4.0, 5.0], [8.0, 10.0, 2.5], [4.0, 5.0, 2.0]])
        z_est = np.array([[2.2, 3.8, 5.0], [8.4, 9.0, 2.5], [3.0, 5.5, 2.1]])
        # errors: .1, .05, 0, .05, .1, 0, .25, .1, .05 -> mean = 0.7/9
        mean, err_map = rel_abs_depth_error(z_est, z_gt, np.ones((3, 3), bool))
        assert mean == pytest.approx(0.7 / 9, abs=1e-12)
        assert err_map[2, 0] == pytest.approx(0.25, abs=1e-12)

    def test_unit_rescale_invariance(self):
        rng = np.random.default_rng(4)
        z_gt = rng.uniform(2, 6, size=(8, 8))
        z_est = z_gt * (1 + rng.normal(scale=0.02, size=(8, 8)))
        mask = rng.random((8, 8)) > 0.3
        m1, _ = rel_abs_depth_error(z_est, z_gt, mask)
        m2, _ = rel_abs_depth_error(z_est * 12.5, z_gt * 12.5, mask)
        assert m1 == pytest.approx(m2, rel=1e-12)


class TestEvaluate:
    def test_exact_estimate_zero_errors(self):
        rng = np.random.default_rng(6)
        depth = rng.uniform(5, 7, size=(12, 12))
        normal = rng.normal(size=(12, 12, 3))
        normal /= np.linalg.norm(normal, axis=-1, keepdims=True)
        mask = np.ones((12, 12), bool)
        rep = evaluate(normal, depth, normal, depth, mask)
        assert rep.mean_angular_error_deg == pytest.approx(0.0, abs=1e-6)
        assert rep.mean_rel_abs_depth_error == pytest.approx(0.0, abs=1e-12)
        assert rep.pixel_count == 144

    def test_shift_absorbed(self):
        rng = np.random.default_rng(7)
        depth = rng.uniform(5, 7, size=(10, 10))
        rep = evaluate(None, depth + 5.0, None, depth, np.ones((10, 10), bool))
        assert rep.mean_rel_abs_depth_error == pytest.approx(0.0, abs=1e-10)
        assert rep.scale * 5.0 + rep.shift == pytest.approx(0.0, abs=1e-8)

    def test_depth_only_reports_nan_angle(self):
        depth = np.linspace(5, 6, 25).reshape(5, 5)
        rep = evaluate(np.zeros((5, 5, 3)), depth, np.zeros((5, 5, 3)), depth, np.ones((5, 5), bool))
        assert np.isnan(rep.mean_angular_error_deg)
        assert rep.to_dict()["mean_angular_error_deg"] is None
