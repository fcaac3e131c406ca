"""Matrix-kernel contracts.

Oracles are kept independent of the implementation: the pseudo-inverse
is checked against literal 2x2 Gaussian elimination, and eigenvalue
extremes against a long power iteration.
"""

import numpy as np
import pytest

from etcdos import (
    eig_extremes,
    is_positive_definite,
    left_pseudo_inverse,
    psd_dominates,
    spectral_norm,
)
from etcdos.errors import ContractError, DimensionError, SynthesisError


def power_method_extremes(m: np.ndarray, iters: int = 6000):
    """Eigenvalue extremes of a symmetric matrix via power iteration only."""
    n = m.shape[0]
    rng = np.random.default_rng(12345)

    def dominant(mat):
        v = rng.normal(size=n)
        v /= np.linalg.norm(v)
        for _ in range(iters):
            w = mat @ v
            nw = np.linalg.norm(w)
            if nw == 0.0:
                return 0.0
            v = w / nw
        return float(v @ mat @ v)

    lam_a = dominant(m)                                  # extreme of largest |.|
    lam_b = dominant(m - lam_a * np.eye(n)) + lam_a      # opposite extreme
    return min(lam_a, lam_b), max(lam_a, lam_b)


class TestLeftPseudoInverse:
    def test_identity(self):
        assert np.array_equal(left_pseudo_inverse(np.eye(3)), np.eye(3))

    def test_unit_column(self):
        assert np.allclose(left_pseudo_inverse([[1.0], [0.0]]), [[1.0, 0.0]],
                           atol=1e-14)

    def test_batch_reactor_b_against_hand_elimination(self, reactor_scenario):
        b = reactor_scenario.config.plant.B
        g = b.T @ b
        rhs = b.T
        # literal Gaussian elimination on the 2x2 normal equations
        factor = g[1, 0] / g[0, 0]
        g1 = g[1, 1] - factor * g[0, 1]
        rhs1 = rhs[1] - factor * rhs[0]
        x1 = rhs1 / g1
        x0 = (rhs[0] - g[0, 1] * x1) / g[0, 0]
        expected = np.vstack([x0, x1])
        assert np.allclose(left_pseudo_inverse(b), expected, atol=1e-12)

    def test_left_inverse_property_random(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(2, 9))
            m = int(rng.integers(1, n + 1))
            b = rng.normal(size=(n, m))
            pinv = left_pseudo_inverse(b)
            assert np.abs(pinv @ b - np.eye(m)).max() <= 1e-10

    def test_rank_deficient_rejected(self):
        b = np.array([[1.0, 1.0], [1.0, 1.0], [0.0, 0.0]])
        with pytest.raises(SynthesisError, match="B"):
            left_pseudo_inverse(b)


class TestPositiveDefinite:
    def test_identity_true(self):
        assert is_positive_definite(np.eye(4))

    def test_negative_identity_false(self):
        assert not is_positive_definite(-np.eye(4))

    def test_reactor_scon1_matrix(self, reactor_certificate, reactor_scenario):
        eps = reactor_scenario.synthesis.epsilon
        n = reactor_certificate.P.shape[0]
        assert is_positive_definite(np.eye(n) / eps - reactor_certificate.P)

    def test_non_square_rejected(self):
        with pytest.raises(DimensionError):
            is_positive_definite(np.ones((2, 3)))


class TestEigExtremes:
    def test_identity(self):
        assert eig_extremes(np.eye(3)) == (1.0, 1.0)

    def test_diagonal(self):
        lo, hi = eig_extremes(np.diag([1.0, 2.0, 3.0]))
        assert (lo, hi) == (1.0, 3.0)

    def test_reactor_p_against_power_method(self, reactor_certificate):
        p = reactor_certificate.P
        lo, hi = eig_extremes(p)
        lo_pm, hi_pm = power_method_extremes(p)
        assert abs(lo - lo_pm) <= 1e-9 * abs(lo_pm)
        assert abs(hi - hi_pm) <= 1e-9 * abs(hi_pm)

    def test_positive_scaling(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            m = rng.normal(size=(5, 5))
            m = m + m.T
            c = float(rng.uniform(0.1, 10.0))
            lo, hi = eig_extremes(m)
            lo_c, hi_c = eig_extremes(c * m)
            assert np.isclose(lo_c, c * lo, rtol=1e-12, atol=1e-12)
            assert np.isclose(hi_c, c * hi, rtol=1e-12, atol=1e-12)

    def test_asymmetric_rejected(self):
        m = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(ContractError):
            eig_extremes(m)


class TestPsdDominates:
    def test_zero_below_identity(self):
        assert psd_dominates(np.zeros((3, 3)), np.eye(3))

    def test_twice_identity_not_below_identity(self):
        assert not psd_dominates(2 * np.eye(3), np.eye(3))

    def test_uncertainty_bound_counterexample(self):
        # (0.5 I)^T (0.5 I) = 0.25 I is not below eps*F/2 = 0.01 I
        delta = 0.5 * np.eye(4)
        assert not psd_dominates(delta.T @ delta, 0.01 * np.eye(4))

    def test_transitivity_with_stacked_tolerance(self):
        rng = np.random.default_rng(11)
        tol = 1e-9
        for _ in range(100):
            n = int(rng.integers(2, 7))
            x = rng.normal(size=(n, n))
            x = x + x.T
            g1 = rng.normal(size=(n, n))
            g2 = rng.normal(size=(n, n))
            y = x + g1 @ g1.T
            z = y + g2 @ g2.T
            assert psd_dominates(x, y, tol)
            assert psd_dominates(y, z, tol)
            assert psd_dominates(x, z, 3 * tol)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            psd_dominates(np.eye(2), np.eye(3))


class TestSpectralNorm:
    def test_identity(self):
        assert spectral_norm(np.eye(5)) == 1.0

    def test_diagonal_sign(self):
        assert spectral_norm(np.diag([3.0, -4.0])) == 4.0

    def test_trigger_coupling_matrix_oracle(self, reactor_certificate, reactor_scenario):
        cert = reactor_certificate
        plant = reactor_scenario.config.plant
        ac = plant.A + plant.B @ cert.K
        m = ac.T @ cert.P @ plant.B @ cert.K
        _, hi = eig_extremes(m.T @ m)
        assert abs(spectral_norm(m) - np.sqrt(hi)) <= 1e-9 * np.sqrt(hi)

    def test_transpose_invariance(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            m = rng.normal(size=(int(rng.integers(1, 8)), int(rng.integers(1, 8))))
            a, b = spectral_norm(m), spectral_norm(m.T)
            assert abs(a - b) <= 1e-9 * max(a, 1e-12)
