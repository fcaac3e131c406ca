"""Synthesis-chain contracts.

Independent oracles: the scalar problem is solved by the quadratic
formula done by hand; matrix problems are cross-checked against scipy's
Schur-based DARE solver on the augmented input [B, alpha*Pi], which is
algebraically the same equation as the modified Riccati fixed point.
"""

import dataclasses
import math

import numpy as np
import pytest
from scipy.linalg import solve_discrete_are

from etcdos import (
    SynthesisInputs,
    check_lemma1_conditions,
    compute_certificate,
    compute_gains,
    compute_trigger_threshold,
    solve_riccati,
    sweep_alpha,
)
from etcdos.errors import ContractError, ConvergenceError
from etcdos.numerics import left_pseudo_inverse
from etcdos.synthesis import riccati_residual

from conftest import random_synthesis_inputs


def scalar_inputs(sigma=0.1):
    return SynthesisInputs(
        A=[[0.5]], B=[[1.0]], Q=[[1.0]], F=[[0.0]], R1=[[1.0]], R2=[[1.0]],
        alpha=1.0, epsilon=0.1, sigma=sigma, eta1=0.9, eta2=0.98)


def dare_oracle(inputs: SynthesisInputs) -> np.ndarray:
    """Independent P via scipy on the equivalent augmented-input DARE."""
    n, m = inputs.n, inputs.m
    pi = np.eye(n) - inputs.B @ left_pseudo_inverse(inputs.B)
    b_aug = np.hstack([inputs.B, inputs.alpha * pi])
    r_aug = np.block([[inputs.R1, np.zeros((m, n))],
                      [np.zeros((n, m)), inputs.R2]])
    return solve_discrete_are(inputs.A, b_aug, inputs.Q + inputs.F, r_aug)


class TestSolveRiccati:
    def test_zero_a_fixed_point_is_exact(self):
        inputs = SynthesisInputs(
            A=np.zeros((3, 3)), B=np.eye(3), Q=2 * np.eye(3), F=np.eye(3),
            R1=np.eye(3), R2=np.eye(3), epsilon=0.01, sigma=0.1,
            eta1=0.3, eta2=0.95)
        p = solve_riccati(inputs)
        assert np.array_equal(p, 3 * np.eye(3))

    def test_scalar_quadratic_root(self):
        # p = a^2 p/(1+p) + q  =>  p^2 - (q + a^2 - 1) p - q = 0 for b=r1=1;
        # with a = 0.5, q = 1: p^2 - 0.25 p - 1 = 0
        expected = (0.25 + math.sqrt(0.25**2 + 4.0)) / 2.0
        p = solve_riccati(scalar_inputs(), tol=1e-14)
        assert abs(float(p[0, 0]) - expected) <= 1e-9

    def test_scalar_gain_value(self):
        inputs = scalar_inputs()
        p = solve_riccati(inputs, tol=1e-14)
        k, lgain, _ = compute_gains(p, inputs)
        expected_k = -0.5 / (1.0 / p[0, 0] + 1.0)
        assert abs(float(k[0, 0]) - expected_k) <= 1e-12
        assert np.array_equal(lgain, np.zeros((1, 1)))  # square B: no mismatch

    def test_reactor_residual_below_tolerance(self, reactor_scenario):
        inputs = reactor_scenario.synthesis
        p = solve_riccati(inputs, tol=1e-11)
        # residual reassembled from scratch, outside the iteration loop
        pi = np.eye(inputs.n) - inputs.B @ left_pseudo_inverse(inputs.B)
        s = (np.linalg.inv(p) + inputs.B @ np.linalg.solve(inputs.R1, inputs.B.T)
             + inputs.alpha**2 * pi @ np.linalg.solve(inputs.R2, pi.T))
        resid = np.linalg.norm(
            inputs.A.T @ np.linalg.solve(s, inputs.A) - p + inputs.Q + inputs.F, "fro")
        assert resid <= 1e-11
        assert riccati_residual(p, inputs) <= 1e-11

    def test_reactor_matches_scipy_dare(self, reactor_scenario):
        p = solve_riccati(reactor_scenario.synthesis, tol=1e-12)
        p_ref = dare_oracle(reactor_scenario.synthesis)
        assert np.allclose(p, p_ref, rtol=1e-9, atol=1e-10)

    def test_random_systems_residual_and_oracle(self):
        for seed in range(20):
            inputs = random_synthesis_inputs(seed)
            p = solve_riccati(inputs, tol=1e-11)
            assert riccati_residual(p, inputs) <= 1e-10
            assert np.allclose(p, dare_oracle(inputs), rtol=1e-7, atol=1e-8)

    def test_iteration_budget_error_carries_residual(self, reactor_scenario):
        with pytest.raises(ConvergenceError) as exc:
            solve_riccati(reactor_scenario.synthesis, max_iter=2)
        assert exc.value.residual > 0
        assert exc.value.iterations == 2

    def test_bad_init_rejected(self, reactor_scenario):
        with pytest.raises(ContractError):
            solve_riccati(reactor_scenario.synthesis, init=-np.eye(4))


class TestGainIdentity:
    def test_lemma3_identity_on_reactor(self, reactor_scenario):
        inputs = reactor_scenario.synthesis
        p = solve_riccati(inputs, tol=1e-12)
        k, lgain, m = compute_gains(p, inputs)
        # A^T S^{-1} A == K^T R1 K + L^T R2^T L + M^T P^{-1} M exactly
        lhs = p - inputs.Q - inputs.F  # from the fixed point, equals A^T S^{-1} A
        rhs = (k.T @ inputs.R1 @ k + lgain.T @ inputs.R2.T @ lgain
               + m.T @ np.linalg.solve(p, m))
        assert np.linalg.norm(lhs - rhs) <= 1e-9 * np.linalg.norm(lhs)

    def test_lemma3_identity_on_random_systems(self):
        for seed in range(20):
            inputs = random_synthesis_inputs(seed + 1000)
            p = solve_riccati(inputs, tol=1e-12)
            k, lgain, m = compute_gains(p, inputs)
            g = inputs.B @ np.linalg.solve(inputs.R1, inputs.B.T)
            pi = np.eye(inputs.n) - inputs.B @ left_pseudo_inverse(inputs.B)
            g = g + inputs.alpha**2 * pi @ np.linalg.solve(inputs.R2, pi.T)
            s = np.linalg.inv(p) + g
            lhs = inputs.A.T @ np.linalg.solve(s, inputs.A)
            rhs = (k.T @ inputs.R1 @ k + lgain.T @ inputs.R2.T @ lgain
                   + m.T @ np.linalg.solve(p, m))
            assert np.linalg.norm(lhs - rhs) <= 1e-9 * np.linalg.norm(lhs)

    def test_zero_a_gives_zero_gains(self):
        inputs = SynthesisInputs(
            A=np.zeros((3, 3)), B=np.eye(3), Q=2 * np.eye(3), F=np.eye(3),
            R1=np.eye(3), R2=np.eye(3), epsilon=0.01, sigma=0.1,
            eta1=0.3, eta2=0.95)
        p = solve_riccati(inputs)
        k, lgain, m = compute_gains(p, inputs)
        assert not k.any() and not lgain.any() and not m.any()

    def test_virtual_gain_lives_in_mismatch_subspace(self, reactor_scenario):
        inputs = reactor_scenario.synthesis
        p = solve_riccati(inputs)
        _, lgain, _ = compute_gains(p, inputs)
        pi = np.eye(inputs.n) - inputs.B @ left_pseudo_inverse(inputs.B)
        assert np.allclose(pi @ lgain, lgain, atol=1e-12)


class TestQuadraticFormBound:
    def test_cross_term_inequality_scalarized(self):
        # The bound the Delta-V derivation actually applies:
        # z^T (X^T P W + W^T P X + W^T P W) z
        #   <= z^T (X^T P (eps^-1 I - P)^{-1} P X + 2 eps^-1 W^T W) z.
        # (The bare form with X^T (eps^-1 I - P)^{-1} X instead of the
        # P-sandwich only holds when lambda_max(P) <= 1; see the
        # restricted check below.)
        rng = np.random.default_rng(42)
        for _ in range(300):
            n = int(rng.integers(2, 7))
            eps = float(rng.uniform(0.01, 0.5))
            raw = rng.normal(size=(n, n))
            p = raw @ raw.T + 0.1 * np.eye(n)
            p *= rng.uniform(0.05, 0.95) / (eps * np.linalg.eigvalsh(p).max())
            x_hat = rng.normal(size=(n, n))
            w_hat = rng.normal(size=(n, n))
            z = rng.normal(size=n)
            lhs = z @ (x_hat.T @ p @ w_hat + w_hat.T @ p @ x_hat
                       + w_hat.T @ p @ w_hat) @ z
            gap = np.linalg.inv(np.eye(n) / eps - p)
            rhs = z @ (x_hat.T @ p @ gap @ p @ x_hat
                       + 2.0 / eps * (w_hat.T @ w_hat)) @ z
            assert lhs <= rhs + 1e-9

    def test_unsandwiched_form_holds_for_contractive_p(self):
        rng = np.random.default_rng(43)
        eps = 0.05
        for _ in range(300):
            n = int(rng.integers(2, 7))
            raw = rng.normal(size=(n, n))
            p = raw @ raw.T + 0.1 * np.eye(n)
            p *= rng.uniform(0.1, 0.99) / np.linalg.eigvalsh(p).max()
            x_hat = rng.normal(size=(n, n))
            w_hat = rng.normal(size=(n, n))
            z = rng.normal(size=n)
            lhs = z @ (x_hat.T @ p @ w_hat + w_hat.T @ p @ x_hat
                       + w_hat.T @ p @ w_hat) @ z
            gap = np.linalg.inv(np.eye(n) / eps - p)
            rhs = z @ (x_hat.T @ gap @ x_hat + w_hat.T @ w_hat / eps) @ z
            assert lhs <= rhs + 1e-9


class TestLemma1Conditions:
    def test_reactor_conditions_pass(self, reactor_scenario):
        inputs = reactor_scenario.synthesis
        p = solve_riccati(inputs)
        k, lgain, m = compute_gains(p, inputs)
        rep = check_lemma1_conditions(p, k, lgain, m, inputs)
        assert rep.scon1_ok and rep.scon3_ok
        assert rep.scon1_margin > 0 and rep.scon3_margin > 0

    def test_oversized_epsilon_fails_scon1(self, reactor_scenario):
        inputs = dataclasses.replace(reactor_scenario.synthesis, epsilon=10.0)
        p = solve_riccati(inputs)
        k, lgain, m = compute_gains(p, inputs)
        rep = check_lemma1_conditions(p, k, lgain, m, inputs)
        assert not rep.scon1_ok

    def test_zero_a_reduces_q1_to_q(self):
        q = np.diag([2.0, 3.0, 4.0])
        inputs = SynthesisInputs(
            A=np.zeros((3, 3)), B=np.eye(3), Q=q, F=np.eye(3),
            R1=np.eye(3), R2=np.eye(3), epsilon=0.01, sigma=0.1,
            eta1=0.3, eta2=0.95)
        p = solve_riccati(inputs)
        k, lgain, m = compute_gains(p, inputs)
        rep = check_lemma1_conditions(p, k, lgain, m, inputs)
        assert rep.scon3_ok
        assert np.allclose(rep.Q1, q, atol=1e-12)


class TestTriggerThreshold:
    def _pieces(self, scenario):
        inputs = scenario.synthesis
        p = solve_riccati(inputs)
        k, lgain, m = compute_gains(p, inputs)
        rep = check_lemma1_conditions(p, k, lgain, m, inputs)
        return inputs, p, k, lgain, m, rep.Q1

    def test_doubling_sigma_doubles_mu_exactly(self, reactor_scenario):
        inputs, p, k, lgain, m, q1 = self._pieces(reactor_scenario)
        mu1 = compute_trigger_threshold(p, k, lgain, m, q1, inputs)
        mu2 = compute_trigger_threshold(
            p, k, lgain, m, q1, dataclasses.replace(inputs, sigma=2 * inputs.sigma))
        assert mu2 == 2.0 * mu1

    def test_mu_vanishes_with_sigma(self, reactor_scenario):
        inputs, p, k, lgain, m, q1 = self._pieces(reactor_scenario)
        mu = compute_trigger_threshold(
            p, k, lgain, m, q1, dataclasses.replace(inputs, sigma=1e-300))
        assert 0.0 < mu < 1e-290

    def test_mu_consistent_with_xi_constants(self, reactor_scenario, reactor_certificate):
        # mu == sigma * xi1 / xi2 for the derivation-consistent form
        cert = reactor_certificate
        assert np.isclose(cert.mu, cert.sigma * cert.xi1 / cert.xi2,
                          rtol=1e-12, atol=0)

    def test_printed_variant_differs(self, reactor_scenario):
        inputs, p, k, lgain, m, q1 = self._pieces(reactor_scenario)
        mu_d = compute_trigger_threshold(p, k, lgain, m, q1, inputs, "derivation")
        mu_p = compute_trigger_threshold(p, k, lgain, m, q1, inputs, "as_printed")
        assert mu_d != mu_p


class TestCertificate:
    def test_scalar_certificate_hand_evaluation(self):
        inputs = scalar_inputs()
        cert = compute_certificate(inputs, tol=1e-14)
        p = float(cert.P[0, 0])
        k = float(cert.K[0, 0])
        ac = 0.5 + k
        w = 1.0 / p - inputs.epsilon            # scalar (P^-1 - eps)
        q1 = 1.0 + k * k + (0.5 / (1.0 / p + 1.0)) ** 2 / p - ac * ac / w
        assert np.isclose(float(cert.Q1[0, 0]), q1, rtol=1e-10)
        mu = inputs.sigma * q1**2 / (4 * (ac * p * k) ** 2 + 2 * q1 * (k * k / w))
        assert np.isclose(cert.mu, mu, rtol=1e-10)
        xi1 = q1 / 2
        xi2 = 2 * (ac * p * k) ** 2 / q1 + k * k / w
        assert np.isclose(cert.xi1, xi1, rtol=1e-10)
        assert np.isclose(cert.xi2, xi2, rtol=1e-10)
        c1 = 1 - (q1 / (2 * p)) * (1 - inputs.sigma)
        assert np.isclose(cert.c1, c1, rtol=1e-10)
        gamma = xi2 * (1 + math.sqrt(mu)) ** 2 / p
        assert np.isclose(cert.gamma, gamma, rtol=1e-10)
        assert cert.c2 == 1.0 + cert.gamma
        assert cert.Xi == 1.0                   # scalar: lambda_max == lambda_min
        assert math.isinf(cert.Ta)              # Xi == 1 leaves frequency unconstrained
        rate = ((2 * math.log(inputs.eta1) - math.log(c1))
                / (math.log(1 + gamma) - math.log(c1)))
        assert np.isclose(cert.dos_rate_bound, rate, rtol=1e-8)
        assert cert.flags.valid

    def test_sigma_near_one_kills_the_budget(self, reactor_scenario):
        inputs = dataclasses.replace(reactor_scenario.synthesis, sigma=1 - 1e-12)
        cert = compute_certificate(inputs)
        assert np.isclose(cert.c1, 1.0, atol=1e-9)
        assert not cert.flags.eta1_sq_gt_c1
        assert cert.dos_rate_bound <= 0.0       # empty budget in this limit

    def test_deterministic_bitwise(self, reactor_scenario):
        a = compute_certificate(reactor_scenario.synthesis)
        b = compute_certificate(reactor_scenario.synthesis)
        assert np.array_equal(a.P, b.P) and np.array_equal(a.K, b.K)
        assert (a.mu, a.xi1, a.xi2, a.c1, a.c2, a.Xi, a.dos_rate_bound, a.Ta) \
            == (b.mu, b.xi1, b.xi2, b.c1, b.c2, b.Xi, b.dos_rate_bound, b.Ta)
        import json
        assert json.dumps(a.to_json_dict(), sort_keys=True) \
            == json.dumps(b.to_json_dict(), sort_keys=True)

    def test_zero_a_certificate_has_zero_gain_and_infinite_mu(self):
        inputs = SynthesisInputs(
            A=np.zeros((3, 3)), B=np.eye(3), Q=2 * np.eye(3), F=np.eye(3),
            R1=np.eye(3), R2=np.eye(3), epsilon=0.01, sigma=0.1,
            eta1=0.3, eta2=0.95)
        cert = compute_certificate(inputs)
        assert not cert.K.any()
        assert math.isinf(cert.mu)
        assert cert.flags.scon1 and cert.flags.scon3

    def test_json_round_trip(self, reactor_certificate, tmp_path):
        path = tmp_path / "cert.json"
        reactor_certificate.save(path)
        back = type(reactor_certificate).load(path)
        assert np.array_equal(back.P, reactor_certificate.P)
        assert np.array_equal(back.K, reactor_certificate.K)
        assert back.mu == reactor_certificate.mu
        assert back.flags == reactor_certificate.flags
        assert back.eta1 == reactor_certificate.eta1

    def test_invalid_inputs_rejected(self):
        with pytest.raises(ContractError):
            SynthesisInputs(A=[[0.5]], B=[[1.0]], Q=[[1.0]], F=[[0.0]],
                            R1=[[1.0]], R2=[[1.0]], epsilon=0.01,
                            sigma=0.0, eta1=0.3, eta2=0.95)
        with pytest.raises(ContractError):
            SynthesisInputs(A=[[0.5]], B=[[1.0]], Q=[[1.0]], F=[[0.0]],
                            R1=[[1.0]], R2=[[1.0]], epsilon=0.01,
                            sigma=0.1, eta1=0.95, eta2=0.3)


class TestAlphaSweep:
    def test_sweep_recovers_known_alpha(self):
        inputs = random_synthesis_inputs(99)
        target = dataclasses.replace(inputs, alpha=1.4)
        p = solve_riccati(target)
        k_ref, l_ref, _ = compute_gains(p, target)
        result = sweep_alpha(inputs, 0.5, 2.5, 41, k_ref, l_ref)
        assert abs(result.best_alpha - 1.4) < 1e-9  # 41 steps lands on 1.4 exactly
        assert result.best_k_error < 1e-10
