import numpy as np
import pytest
from scipy import linalg as sla

from mdnn.correlation import correlation_gradient, correlation_value, covariance
from mdnn.errors import DegenerateBatchError, ShapeError
from mdnn.gradcheck import central_difference, check_correlation_gradient, relative_error


def whitened_correlation_oracle(Z1, Z2, r):
    """Independent route: whiten each view's data explicitly, then sum the
    canonical correlations of the whitened cross-covariance."""
    n = Z1.shape[1]
    z1 = Z1 - Z1.mean(axis=1, keepdims=True)
    z2 = Z2 - Z2.mean(axis=1, keepdims=True)
    s11 = z1 @ z1.T / (n - 1) + r * np.eye(Z1.shape[0])
    s22 = z2 @ z2.T / (n - 1) + r * np.eye(Z2.shape[0])
    w1, q1 = sla.eigh(s11)
    w2, q2 = sla.eigh(s22)
    y1 = (q1 * w1**-0.5) @ q1.T @ z1
    y2 = (q2 * w2**-0.5) @ q2.T @ z2
    return sla.svdvals(y1 @ y2.T / (n - 1)).sum()


class TestCovariance:
    def test_auto_covariance(self):
        np.testing.assert_allclose(
            covariance(np.array([[1.0, -1.0]]), np.array([[1.0, -1.0]])), [[2.0]]
        )

    def test_ridge_added(self):
        out = covariance(
            np.array([[1.0, -1.0]]), np.array([[1.0, -1.0]]), r=0.5, regularize=True
        )
        np.testing.assert_allclose(out, [[2.5]])

    def test_orthogonal_sign_patterns(self):
        z1 = np.array([[1.0, -1.0, 1.0, -1.0]])
        z2 = np.array([[1.0, 1.0, -1.0, -1.0]])
        np.testing.assert_allclose(covariance(z1, z2), [[0.0]])

    def test_single_sample_rejected(self):
        with pytest.raises(DegenerateBatchError):
            covariance(np.array([[1.0]]), np.array([[1.0]]))


class TestCorrelationValue:
    def test_identical_views_saturate(self):
        rng = np.random.default_rng(0)
        Z = rng.standard_normal((2, 50))
        value, _ = correlation_value(Z, Z, r=0.0)
        assert value == pytest.approx(2.0, abs=1e-8)

    def test_uncorrelated_views(self):
        z1 = np.array([[1.0, -1.0, 1.0, -1.0]])
        z2 = np.array([[1.0, 1.0, -1.0, -1.0]])
        value, _ = correlation_value(z1, z2, r=0.0)
        assert value == pytest.approx(0.0, abs=1e-12)

    def test_explicit_whitening_oracle(self):
        rng = np.random.default_rng(1)
        Z1 = rng.standard_normal((3, 40))
        Z2 = rng.standard_normal((3, 40)) + 0.3 * Z1
        value, _ = correlation_value(Z1, Z2, r=1e-4)
        assert value == pytest.approx(whitened_correlation_oracle(Z1, Z2, 1e-4), abs=1e-8)

    def test_symmetry(self):
        rng = np.random.default_rng(2)
        Z1 = rng.standard_normal((3, 30))
        Z2 = rng.standard_normal((4, 30))
        v12, _ = correlation_value(Z1, Z2, r=1e-4)
        v21, _ = correlation_value(Z2, Z1, r=1e-4)
        assert v12 == pytest.approx(v21, abs=1e-10)

    def test_bounded_by_dimension(self):
        for i in range(10):
            rng = np.random.default_rng(100 + i)
            d = int(rng.integers(1, 5))
            Z1 = rng.standard_normal((d, 60))
            Z2 = rng.standard_normal((d, 60))
            value, _ = correlation_value(Z1, Z2, r=0.0)
            assert -1e-10 <= value <= d + 1e-10

    def test_affine_invariance(self):
        rng = np.random.default_rng(3)
        Z1 = rng.standard_normal((3, 45))
        Z2 = rng.standard_normal((3, 45)) + 0.5 * Z1
        base, _ = correlation_value(Z1, Z2, r=0.0)
        shifted, _ = correlation_value(
            2.5 * Z1 + rng.standard_normal((3, 1)), Z2, r=0.0
        )
        assert shifted == pytest.approx(base, abs=1e-8)

    def test_frobenius_recorded(self):
        rng = np.random.default_rng(4)
        Z1 = rng.standard_normal((2, 30))
        Z2 = rng.standard_normal((2, 30))
        _, ctx = correlation_value(Z1, Z2, r=1e-4)
        assert ctx.frobenius == pytest.approx(
            np.sqrt((ctx.singular_values**2).sum()), abs=1e-12
        )
        assert ctx.value >= ctx.frobenius - 1e-12

    def test_small_batch_warns(self):
        rng = np.random.default_rng(5)
        with pytest.warns(RuntimeWarning):
            correlation_value(rng.standard_normal((4, 4)), rng.standard_normal((4, 4)), 1e-4)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ShapeError):
            correlation_value(np.zeros((2, 5)), np.zeros((2, 6)), 1e-4)


class TestCorrelationGradient:
    def test_finite_difference_single_instance(self):
        rng = np.random.default_rng(6)
        Z1 = rng.standard_normal((3, 20))
        Z2 = rng.standard_normal((3, 20)) + 0.4 * Z1
        _, ctx = correlation_value(Z1, Z2, r=1e-3)
        dZ1, dZ2 = correlation_gradient(ctx)
        fd1 = central_difference(lambda M: correlation_value(M, Z2, 1e-3)[0], Z1, 1e-5)
        fd2 = central_difference(lambda M: correlation_value(Z1, M, 1e-3)[0], Z2, 1e-5)
        assert relative_error(dZ1, fd1) < 1e-5
        assert relative_error(dZ2, fd2) < 1e-5

    def test_suite_of_random_instances(self):
        report = check_correlation_gradient(n_instances=20, seed=0)
        assert report.passed, report.summary()

    def test_identical_views_gradient_vanishes(self):
        rng = np.random.default_rng(7)
        Z = rng.standard_normal((3, 25))
        _, ctx = correlation_value(Z, Z, r=0.0)
        dZ1, dZ2 = correlation_gradient(ctx)
        assert np.all(np.isfinite(dZ1)) and np.all(np.isfinite(dZ2))
        # the objective is at its maximum there, so both gradients vanish
        assert np.abs(dZ1).max() < 1e-8
        assert np.abs(dZ2).max() < 1e-8
        fd = central_difference(lambda M: correlation_value(M, Z, 0.0)[0], Z.copy(), 1e-5)
        assert np.abs(fd).max() < 1e-4

    def test_scale_invariance_direction(self):
        rng = np.random.default_rng(8)
        Z1 = rng.standard_normal((3, 40))
        Z2 = rng.standard_normal((3, 40)) + 0.2 * Z1
        _, ctx = correlation_value(Z1, Z2, r=0.0)
        dZ1, dZ2 = correlation_gradient(ctx)
        directional = float((dZ1 * Z1).sum() + (dZ2 * Z2).sum())
        assert abs(directional) < 1e-6
