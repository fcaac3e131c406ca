"""Robust-gain synthesis via the modified discrete Riccati equation.

The virtual design system carries a second, "mismatched" input channel
weighted by ``alpha``; its solution P yields the real feedback gain K,
the virtual gain L, and every constant of the stability certificate
(trigger threshold mu, decrease factor c1, attack growth rate c2, the
DoS duration/frequency budgets).

The Riccati fixed point is

    P = A^T S(P)^{-1} A + Q + F,
    S(P) = P^{-1} + B R1^{-1} B^T + alpha^2 Pi R2^{-1} Pi^T,
    Pi = I - B B+,

iterated from P0 = Q + F (exact for A = 0 and empirically
contraction-friendly).
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import (
    ContractError,
    ConvergenceError,
    DegenerateTriggerError,
    DimensionError,
    RiccatiDivergenceError,
    SynthesisError,
)

MU_FORMULAS = ("derivation", "as_printed")
GAMMA_FORMULAS = ("derivation", "as_printed")


def _require_symmetric_psd(m: np.ndarray, name: str, strict: bool) -> None:
    numerics.require_square(m, name)
    if np.abs(m - m.T).max(initial=0.0) > 1e-9 * max(1.0, np.abs(m).max(initial=0.0)):
        raise ContractError(f"{name} must be symmetric")
    lo = np.linalg.eigvalsh(numerics.symmetrize(m)).min()
    if strict and lo <= 0:
        raise ContractError(f"{name} must be positive definite (lambda_min={lo:.3e})")
    if not strict and lo < -1e-9:
        raise ContractError(f"{name} must be positive semidefinite (lambda_min={lo:.3e})")


@dataclass(frozen=True)
class SynthesisInputs:
    """Design data for one synthesis run.

    ``A`` (n x n) and ``B`` (n x m) describe the nominal plant, ``Q``/``F``
    are PSD state weights (F bounds the uncertainty via
    DeltaA^T DeltaA <= eps*F/2), ``R1``/``R2`` are PD input weights for the
    real and virtual channels, ``alpha`` scales the virtual channel,
    ``sigma`` in (0,1) trades transmissions for decay margin, and
    ``eta1 < eta2 < 1`` parametrize the DoS duration/frequency budgets.
    """

    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    F: np.ndarray
    R1: np.ndarray
    R2: np.ndarray
    alpha: float = 1.0
    epsilon: float = 0.01
    sigma: float = 0.1
    eta1: float = 0.3
    eta2: float = 0.95

    def __post_init__(self):
        a = numerics.as_matrix(self.A, "A")
        numerics.require_square(a, "A")
        n = a.shape[0]
        b = numerics.as_matrix(self.B, "B")
        if b.shape[0] != n:
            raise DimensionError(f"B must have {n} rows, got {b.shape}")
        q = numerics.as_matrix(self.Q, "Q")
        f = numerics.as_matrix(self.F, "F")
        r1 = numerics.as_matrix(self.R1, "R1")
        r2 = numerics.as_matrix(self.R2, "R2")
        for mat, name, shape in ((q, "Q", (n, n)), (f, "F", (n, n)),
                                 (r1, "R1", (b.shape[1],) * 2), (r2, "R2", (n, n))):
            if mat.shape != shape:
                raise DimensionError(f"{name} must be {shape}, got {mat.shape}")
        _require_symmetric_psd(q, "Q", strict=False)
        _require_symmetric_psd(f, "F", strict=False)
        _require_symmetric_psd(r1, "R1", strict=True)
        _require_symmetric_psd(r2, "R2", strict=True)
        if not (self.epsilon > 0):
            raise ContractError(f"epsilon must be > 0, got {self.epsilon}")
        if not (0.0 < self.sigma < 1.0):
            raise ContractError(f"sigma must lie in (0, 1), got {self.sigma}")
        if not (0.0 < self.eta1 < self.eta2 < 1.0):
            raise ContractError(
                f"eta1 < eta2 < 1 with eta1 > 0 required, got {self.eta1}, {self.eta2}"
            )
        if not np.isfinite(self.alpha):
            raise ContractError("alpha must be finite")
        for attr, mat in (("A", a), ("B", b), ("Q", q), ("F", f), ("R1", r1), ("R2", r2)):
            object.__setattr__(self, attr, mat)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class ConditionFlags:
    """Pass/fail flags for the certificate's validity conditions."""

    scon1: bool
    scon3: bool
    c1_in_unit_interval: bool
    eta1_sq_gt_c1: bool
    eta1_gt_c1: bool

    @property
    def valid(self) -> bool:
        return self.scon1 and self.scon3 and self.c1_in_unit_interval

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["valid"] = self.valid
        return d


@dataclass(frozen=True)
class Lemma1Report:
    """Margins of the two synthesis validity conditions.

    ``scon1``: lambda_min(eps^-1 I - P) > 0; ``scon3``: Q1 > 0.
    """

    Q1: np.ndarray | None
    scon1_ok: bool
    scon1_margin: float
    scon3_ok: bool
    scon3_margin: float


@dataclass(frozen=True)
class SynthesisCertificate:
    """Everything a closed-loop run needs to enforce and verify stability."""

    P: np.ndarray
    K: np.ndarray
    L: np.ndarray
    M: np.ndarray
    Q1: np.ndarray | None
    mu: float
    xi1: float
    xi2: float
    c1: float
    gamma: float
    c2: float
    Xi: float
    dos_rate_bound: float
    Ta: float                      # math.inf marks the unbounded case
    riccati_residual: float
    flags: ConditionFlags
    alpha: float
    epsilon: float
    sigma: float
    eta1: float
    eta2: float
    mu_formula: str = "derivation"
    gamma_formula: str = "derivation"

    @property
    def valid(self) -> bool:
        return self.flags.valid

    def to_json_dict(self) -> dict:
        def mat(x):
            return None if x is None else [[float(v) for v in row] for row in x]

        def scalar(x):
            # null marks the unbounded/degenerate cases (strict JSON has no Inf)
            return None if math.isinf(x) else x

        return {
            "P": mat(self.P), "K": mat(self.K), "L": mat(self.L),
            "M": mat(self.M), "Q1": mat(self.Q1),
            "mu": scalar(self.mu), "xi1": self.xi1, "xi2": self.xi2,
            "c1": self.c1, "c2": scalar(self.c2), "gamma": scalar(self.gamma),
            "Xi": self.Xi,
            "dos_rate_bound": self.dos_rate_bound,
            "Ta": scalar(self.Ta),
            "flags": self.flags.to_dict(),
            "residual": self.riccati_residual,
            "meta": {
                "alpha": self.alpha, "epsilon": self.epsilon, "sigma": self.sigma,
                "eta1": self.eta1, "eta2": self.eta2,
                "mu_formula": self.mu_formula, "gamma_formula": self.gamma_formula,
            },
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_json_dict(cls, d: dict) -> "SynthesisCertificate":
        def mat(x):
            return None if x is None else np.array(x, dtype=float)

        meta = d.get("meta", {})
        flags = {k: v for k, v in d["flags"].items() if k != "valid"}

        def scalar(x):
            return math.inf if x is None else x

        return cls(
            P=mat(d["P"]), K=mat(d["K"]), L=mat(d["L"]), M=mat(d["M"]),
            Q1=mat(d["Q1"]),
            mu=scalar(d["mu"]), xi1=d["xi1"], xi2=d["xi2"], c1=d["c1"],
            gamma=scalar(d["gamma"]), c2=scalar(d["c2"]), Xi=d["Xi"],
            dos_rate_bound=d["dos_rate_bound"],
            Ta=scalar(d["Ta"]),
            riccati_residual=d["residual"],
            flags=ConditionFlags(**flags),
            alpha=meta.get("alpha", math.nan), epsilon=meta.get("epsilon", math.nan),
            sigma=meta.get("sigma", math.nan),
            eta1=meta.get("eta1", math.nan), eta2=meta.get("eta2", math.nan),
            mu_formula=meta.get("mu_formula", "derivation"),
            gamma_formula=meta.get("gamma_formula", "derivation"),
        )

    @classmethod
    def load(cls, path) -> "SynthesisCertificate":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def _input_weight(inputs: SynthesisInputs) -> np.ndarray:
    """G = B R1^{-1} B^T + alpha^2 Pi R2^{-1} Pi^T (constant across iterations)."""
    b = inputs.B
    pi = np.eye(inputs.n) - b @ numerics.left_pseudo_inverse(b)
    g = b @ np.linalg.solve(inputs.R1, b.T) \
        + inputs.alpha**2 * (pi @ np.linalg.solve(inputs.R2, pi.T))
    return numerics.symmetrize(g)


def _s_matrix(p: np.ndarray, g: np.ndarray) -> np.ndarray:
    return np.linalg.inv(p) + g


def riccati_residual(p: np.ndarray, inputs: SynthesisInputs) -> float:
    """Frobenius norm of A^T S(P)^{-1} A - P + Q + F."""
    g = _input_weight(inputs)
    s = _s_matrix(p, g)
    r = inputs.A.T @ np.linalg.solve(s, inputs.A) - p + inputs.Q + inputs.F
    return float(np.linalg.norm(r, "fro"))


def solve_riccati(inputs: SynthesisInputs, init: np.ndarray | None = None,
                  tol: float = 1e-10, max_iter: int = 10_000) -> np.ndarray:
    """Fixed-point solution P > 0 of the modified Riccati equation.

    Parameters
    ----------
    init : optional symmetric PD starting iterate; defaults to Q + F.
    tol : Frobenius-norm residual at which iteration stops.
    max_iter : iteration budget.

    Raises
    ------
    ConvergenceError
        Budget exhausted; carries the last residual.
    RiccatiDivergenceError
        An iterate lost positive definiteness.
    """
    g = _input_weight(inputs)
    if init is not None:
        p = numerics.as_matrix(init, "init")
        _require_symmetric_psd(p, "init", strict=True)
    else:
        p = numerics.symmetrize(inputs.Q + inputs.F)

    residual = math.inf
    for _ in range(max_iter):
        try:
            np.linalg.cholesky(p)
        except np.linalg.LinAlgError:
            raise RiccatiDivergenceError(
                "Riccati iterate lost positive definiteness"
            ) from None
        s = _s_matrix(p, g)
        gain_term = inputs.A.T @ np.linalg.solve(s, inputs.A)
        residual = float(np.linalg.norm(gain_term - p + inputs.Q + inputs.F, "fro"))
        if residual <= tol:
            return p
        p = numerics.symmetrize(gain_term + inputs.Q + inputs.F)
    raise ConvergenceError(
        f"Riccati iteration did not reach tol={tol:g} within {max_iter} iterations "
        f"(last residual {residual:.3e})",
        residual=residual, iterations=max_iter,
    )


def compute_gains(p: np.ndarray, inputs: SynthesisInputs):
    """Gains from a Riccati solution P.

    Returns (K, L, M) with K = -R1^{-1} B^T S^{-1} A,
    L = -alpha R2^{-1} Pi^T S^{-1} A, M = S^{-1} A.
    """
    g = _input_weight(inputs)
    s = _s_matrix(p, g)
    cond = float(np.linalg.cond(s))
    if not np.isfinite(cond) or cond > 1e14:
        raise SynthesisError(f"S matrix is numerically singular (cond ~ {cond:.3e})")
    s_inv_a = np.linalg.solve(s, inputs.A)
    b = inputs.B
    pi = np.eye(inputs.n) - b @ numerics.left_pseudo_inverse(b)
    k = -np.linalg.solve(inputs.R1, b.T @ s_inv_a)
    lgain = -inputs.alpha * np.linalg.solve(inputs.R2, pi.T @ s_inv_a)
    return k, lgain, s_inv_a


def check_lemma1_conditions(p, k, lgain, m, inputs: SynthesisInputs) -> Lemma1Report:
    """Evaluate the two validity conditions and their margins.

    Q1 = (Q + K^T R1 K + L^T R2 L + M^T P^{-1} M) - Ac^T (P^{-1} - eps I)^{-1} Ac
    with Ac = A + B K. Failures are reported as flags, never raised.
    """
    n = inputs.n
    scon1_margin = float(
        np.linalg.eigvalsh((1.0 / inputs.epsilon) * np.eye(n) - p).min()
    )
    scon1_ok = scon1_margin > 0.0

    p_inv = np.linalg.inv(p)
    w = numerics.symmetrize(p_inv - inputs.epsilon * np.eye(n))
    if np.linalg.eigvalsh(w).min() <= 0.0:
        # (P^{-1} - eps I) not invertible as a PD form; Q1 undefined.
        return Lemma1Report(None, scon1_ok, scon1_margin, False, -math.inf)

    ac = inputs.A + inputs.B @ k
    q1 = (inputs.Q + k.T @ inputs.R1 @ k + lgain.T @ inputs.R2 @ lgain
          + m.T @ p_inv @ m) - ac.T @ np.linalg.solve(w, ac)
    q1 = numerics.symmetrize(q1)
    scon3_margin = float(np.linalg.eigvalsh(q1).min())
    return Lemma1Report(q1, scon1_ok, scon1_margin, scon3_ok=scon3_margin > 0.0,
                        scon3_margin=scon3_margin)


def compute_trigger_threshold(p, k, lgain, m, q1, inputs: SynthesisInputs,
                              formula: str = "derivation") -> float:
    """Event-trigger threshold mu.

    mu = sigma lambda_min^2(Q1) /
         (4 ||Ac^T P B K||^2 + 2 lambda_min(Q1) ||K^T B^T X B K||)

    where X = (P^{-1} - eps I)^{-1} for ``formula="derivation"`` (the form
    consistent with xi2) and X = (P^{-1} - eps I) for ``"as_printed"``.
    """
    if formula not in MU_FORMULAS:
        raise ValueError(f"unknown mu formula {formula!r}")
    lam = numerics.eig_extremes(q1).lambda_min
    if lam <= 0:
        raise ContractError(f"Q1 must be positive definite (lambda_min={lam:.3e})")
    ac = inputs.A + inputs.B @ k
    p_inv = np.linalg.inv(p)
    w = numerics.symmetrize(p_inv - inputs.epsilon * np.eye(inputs.n))
    x = np.linalg.inv(w) if formula == "derivation" else w
    bk = inputs.B @ k
    term1 = numerics.spectral_norm(ac.T @ p @ bk) ** 2
    term2 = numerics.spectral_norm(bk.T @ x @ bk)
    den = 4.0 * term1 + 2.0 * lam * term2
    if den == 0.0:
        raise DegenerateTriggerError(
            "trigger threshold denominator is zero (K = 0 and no coupling term)"
        )
    return inputs.sigma * lam**2 / den


def compute_certificate(inputs: SynthesisInputs, *,
                        mu_formula: str = "derivation",
                        gamma_formula: str = "derivation",
                        init: np.ndarray | None = None,
                        tol: float = 1e-10,
                        max_iter: int = 10_000) -> SynthesisCertificate:
    """Run the full synthesis chain and assemble the stability certificate.

    Condition failures (scon1/scon3, c1 outside (0,1), eta1^2 <= c1) are
    recorded as flags; only solver-level failures raise.
    """
    if gamma_formula not in GAMMA_FORMULAS:
        raise ValueError(f"unknown gamma formula {gamma_formula!r}")
    p = solve_riccati(inputs, init=init, tol=tol, max_iter=max_iter)
    k, lgain, m = compute_gains(p, inputs)
    rep = check_lemma1_conditions(p, k, lgain, m, inputs)

    lam_p = numerics.eig_extremes(p)
    xi_ratio = lam_p.lambda_max / lam_p.lambda_min

    if rep.Q1 is not None and rep.scon3_ok:
        try:
            mu = compute_trigger_threshold(p, k, lgain, m, rep.Q1, inputs,
                                           formula=mu_formula)
        except DegenerateTriggerError:
            # K = 0 (e.g. A = 0): any held sample is exact, the trigger
            # never needs to fire again after k0.
            mu = math.inf
        lam_q1 = rep.scon3_margin
        p_inv = np.linalg.inv(p)
        w = numerics.symmetrize(p_inv - inputs.epsilon * np.eye(inputs.n))
        bk = inputs.B @ k
        ac = inputs.A + bk
        xi1 = lam_q1 / 2.0
        xi2 = (2.0 * numerics.spectral_norm(ac.T @ p @ bk) ** 2 / lam_q1
               + numerics.spectral_norm(bk.T @ np.linalg.solve(w, bk)))
        c1 = 1.0 - (lam_q1 / (2.0 * lam_p.lambda_min)) * (1.0 - inputs.sigma)
        growth = (1.0 + math.sqrt(mu)) ** 2 if gamma_formula == "derivation" \
            else (1.0 + mu) ** 2
        gamma = xi2 * growth / lam_p.lambda_min
    else:
        mu = xi1 = xi2 = c1 = gamma = math.nan
    c2 = 1.0 + gamma

    if 0.0 < c1 < 1.0 and c2 > 1.0:
        rate = ((2.0 * math.log(inputs.eta1) - math.log(c1))
                / (math.log(c2) - math.log(c1)))
    else:
        rate = math.nan
    if xi_ratio <= 1.0 + 1e-12:
        ta = math.inf
    else:
        ta = 2.0 * (math.log(inputs.eta2) - math.log(inputs.eta1)) / math.log(xi_ratio)

    flags = ConditionFlags(
        scon1=rep.scon1_ok,
        scon3=rep.scon3_ok,
        c1_in_unit_interval=bool(0.0 < c1 < 1.0),
        eta1_sq_gt_c1=bool(c1 > 0.0 and inputs.eta1**2 > c1),
        eta1_gt_c1=bool(c1 > 0.0 and inputs.eta1 > c1),
    )
    return SynthesisCertificate(
        P=p, K=k, L=lgain, M=m, Q1=rep.Q1,
        mu=float(mu), xi1=float(xi1), xi2=float(xi2), c1=float(c1),
        gamma=float(gamma), c2=float(c2), Xi=float(xi_ratio),
        dos_rate_bound=float(rate), Ta=float(ta),
        riccati_residual=riccati_residual(p, inputs),
        flags=flags,
        alpha=inputs.alpha, epsilon=inputs.epsilon, sigma=inputs.sigma,
        eta1=inputs.eta1, eta2=inputs.eta2,
        mu_formula=mu_formula, gamma_formula=gamma_formula,
    )


@dataclass(frozen=True)
class AlphaSweepResult:
    best_alpha: float
    best_k_error: float
    best_l_error: float
    alphas: tuple
    k_errors: tuple


def sweep_alpha(inputs: SynthesisInputs, lo: float, hi: float, steps: int,
                reference_k: np.ndarray,
                reference_l: np.ndarray | None = None) -> AlphaSweepResult:
    """Scan alpha in [lo, hi] and report the value minimizing the
    elementwise mismatch max|K(alpha) - reference_k|."""
    reference_k = numerics.as_matrix(reference_k, "reference K")
    alphas, k_errors = [], []
    best = (math.nan, math.inf, math.inf)
    for alpha in np.linspace(lo, hi, steps):
        candidate = dataclasses.replace(inputs, alpha=float(alpha))
        try:
            p = solve_riccati(candidate)
            k, lgain, _ = compute_gains(p, candidate)
        except SynthesisError:
            continue
        k_err = float(np.abs(k - reference_k).max())
        l_err = math.nan
        if reference_l is not None:
            l_err = float(np.abs(lgain - reference_l).max())
        alphas.append(float(alpha))
        k_errors.append(k_err)
        if k_err < best[1]:
            best = (float(alpha), k_err, l_err)
    return AlphaSweepResult(best_alpha=best[0], best_k_error=best[1],
                            best_l_error=best[2],
                            alphas=tuple(alphas), k_errors=tuple(k_errors))
