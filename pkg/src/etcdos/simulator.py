"""Closed-loop execution: uncertain plant, ZOH event-triggered feedback,
and a channel gated by a DoS signal.

Event semantics per step k (the kernel implements the same order):

1. e <- x_held - x
2. event fires iff mu ||x||^2 - ||e||^2 <= 0 (inclusive), forced at k = 0
3. a firing event transmits when the channel is free (x_held <- x) and is
   jammed when attacked; jammed events do not latch — the condition is
   re-evaluated next step
4. u <- K x_held; before the first successful transmission u = 0
5. x <- (A + DeltaA(k)) x + B u

The trace records, per step, the pre-update error e and trigger slack
(the quantities the event decision used) and the post-update held sample
(the one feeding u).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import numerics
from ._kernel import backend_name, rollout
from .dos import DosBudget, DosSignal, generate
from .errors import (
    CertificateInvalidError,
    ContractError,
    DimensionError,
    DivergenceError,
    SignalFormatError,
)
from .synthesis import SynthesisCertificate, SynthesisInputs, compute_certificate

UNCERTAINTY_MODES = ("fixed", "per-step", "custom")
ZOK1_MODES = ("warn", "error")


@dataclass(frozen=True)
class PlantModel:
    """Nominal (A, B) pair plus the uncertainty bound DeltaA^T DeltaA <= eps*F/2."""

    A: np.ndarray
    B: np.ndarray
    F: np.ndarray
    epsilon: float

    def __post_init__(self):
        a = numerics.as_matrix(self.A, "A")
        numerics.require_square(a, "A")
        b = numerics.as_matrix(self.B, "B")
        f = numerics.as_matrix(self.F, "F")
        if b.shape[0] != a.shape[0]:
            raise DimensionError(f"B must have {a.shape[0]} rows, got {b.shape}")
        if f.shape != a.shape:
            raise DimensionError(f"F must match A's shape {a.shape}, got {f.shape}")
        if np.abs(f - f.T).max(initial=0.0) > 1e-9 * max(1.0, np.abs(f).max(initial=0.0)):
            raise ContractError("F must be symmetric")
        if not (self.epsilon > 0):
            raise ContractError(f"epsilon must be > 0, got {self.epsilon}")
        for attr, mat in (("A", a), ("B", b), ("F", f)):
            object.__setattr__(self, attr, mat)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class UncertaintySpec:
    """How DeltaA(k) is produced.

    fixed    : DeltaA = p * I every step
    per-step : DeltaA = p(k) * I, p(k) ~ U[p_min, p_max] from ``seed``
    custom   : the caller supplies one matrix per step
    """

    mode: str = "fixed"
    p: float = 0.0
    p_min: float | None = None
    p_max: float | None = None
    seed: int = 0
    matrices: tuple = ()

    def __post_init__(self):
        if self.mode not in UNCERTAINTY_MODES:
            raise ContractError(
                f"uncertainty mode must be one of {UNCERTAINTY_MODES}, got {self.mode!r}")
        if self.mode == "per-step":
            if self.p_min is None or self.p_max is None or self.p_min > self.p_max:
                raise ContractError("per-step mode needs p_min <= p_max")
        if self.mode == "fixed" and self.p_min is not None and self.p_max is not None:
            if not (self.p_min <= self.p <= self.p_max):
                raise ContractError(
                    f"p={self.p} outside declared range [{self.p_min}, {self.p_max}]")
        if self.mode == "custom":
            mats = tuple(numerics.as_matrix(m, "DeltaA") for m in self.matrices)
            object.__setattr__(self, "matrices", mats)


@dataclass(frozen=True)
class SimulationOptions:
    enforce_zok1: str = "warn"
    require_valid_certificate: bool = False
    mu_formula: str = "derivation"
    gamma_formula: str = "derivation"

    def __post_init__(self):
        if self.enforce_zok1 not in ZOK1_MODES:
            raise ContractError(
                f"enforce_zok1 must be one of {ZOK1_MODES}, got {self.enforce_zok1!r}")


@dataclass(frozen=True)
class DosRequest:
    """Generate the attack signal from the certificate's budget."""

    seed: int = 0
    style: str = "uniform-random"


@dataclass(frozen=True)
class ScenarioConfig:
    """One bundle binding plant, synthesis, initial state, horizon,
    uncertainty, DoS source and run options."""

    plant: PlantModel
    x0: np.ndarray
    horizon_steps: int
    sample_period: float
    synthesis: SynthesisInputs | None = None
    certificate: SynthesisCertificate | None = None
    uncertainty: UncertaintySpec = field(default_factory=UncertaintySpec)
    dos: DosSignal | DosRequest | None = None
    options: SimulationOptions = field(default_factory=SimulationOptions)

    def __post_init__(self):
        x0 = numerics.as_vector(self.x0, "x0")
        if x0.size != self.plant.n:
            raise DimensionError(f"x0 must have length {self.plant.n}, got {x0.size}")
        if self.horizon_steps < 1:
            raise ContractError(f"horizon_steps must be >= 1, got {self.horizon_steps}")
        if not (self.sample_period > 0):
            raise ContractError(f"sample_period must be > 0, got {self.sample_period}")
        if self.synthesis is None and self.certificate is None:
            raise ContractError("scenario needs synthesis inputs or a certificate")
        object.__setattr__(self, "x0", x0)


@dataclass(frozen=True)
class SimulationTrace:
    """Per-step record of one closed-loop run.

    Arrays are immutable views of length ``horizon`` (states additionally
    expose the post-horizon state ``x_final``). ``e`` and
    ``threshold_slack`` are the pre-update values the trigger evaluated;
    ``x_held`` is the post-update held sample feeding u.
    """

    x: np.ndarray
    x_final: np.ndarray
    x_held: np.ndarray
    u: np.ndarray
    e: np.ndarray
    event: np.ndarray
    transmitted: np.ndarray
    jammed: np.ndarray
    dos_active: np.ndarray
    V: np.ndarray                 # length horizon+1 (includes x_final)
    threshold_slack: np.ndarray
    sample_period: float
    mu: float
    zok1_violation_steps: tuple[int, ...]
    backend: str

    @property
    def horizon(self) -> int:
        return self.x.shape[0]

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def m(self) -> int:
        return self.u.shape[1]

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.horizon) * self.sample_period

    @property
    def e_norm(self) -> np.ndarray:
        return np.sqrt(np.einsum("ij,ij->i", self.e, self.e))

    @property
    def x_norm(self) -> np.ndarray:
        return np.sqrt(np.einsum("ij,ij->i", self.x, self.x))

    def csv_header(self) -> str:
        cols = (["k", "t"]
                + [f"x{i + 1}" for i in range(self.n)]
                + [f"u{j + 1}" for j in range(self.m)]
                + ["event", "transmitted", "jammed", "dos_active",
                   "V", "e_norm", "x_norm", "threshold_slack"])
        return ",".join(cols)

    def to_csv(self) -> str:
        """Full-precision CSV, one row per step (shortest round-trip floats)."""
        lines = [self.csv_header()]
        t = self.t
        e_norm = self.e_norm
        x_norm = self.x_norm
        for k in range(self.horizon):
            row = [str(k), repr(float(t[k]))]
            row += [repr(float(v)) for v in self.x[k]]
            row += [repr(float(v)) for v in self.u[k]]
            row += [str(int(self.event[k])), str(int(self.transmitted[k])),
                    str(int(self.jammed[k])), str(int(self.dos_active[k]))]
            row += [repr(float(self.V[k])), repr(float(e_norm[k])),
                    repr(float(x_norm[k])), repr(float(self.threshold_slack[k]))]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def save_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


class TraceTable:
    """Columns of an exported trace CSV, parsed back into arrays.

    Enough surface for the diagnostics that operate on exported traces
    (transmission statistics); full re-verification uses the in-memory
    SimulationTrace.
    """

    def __init__(self, columns: dict):
        self.columns = columns
        self.k = columns["k"].astype(int)
        self.t = columns["t"]
        self.event = columns["event"].astype(bool)
        self.transmitted = columns["transmitted"].astype(bool)
        self.jammed = columns["jammed"].astype(bool)
        self.dos_active = columns["dos_active"].astype(bool)
        self.V = columns["V"]
        self.x_norm = columns["x_norm"]
        self.e_norm = columns["e_norm"]
        self.threshold_slack = columns["threshold_slack"]

    @property
    def horizon(self) -> int:
        return self.k.size

    @property
    def sample_period(self) -> float:
        if self.t.size >= 2:
            return float(self.t[1] - self.t[0])
        return float("nan")

    @classmethod
    def from_csv(cls, path) -> "TraceTable":
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        if data.shape[1] != len(header):
            raise SignalFormatError(
                f"trace CSV has {data.shape[1]} columns, header names {len(header)}")
        required = {"k", "t", "event", "transmitted", "jammed", "dos_active",
                    "V", "e_norm", "x_norm", "threshold_slack"}
        missing = required - set(header)
        if missing:
            raise SignalFormatError(f"trace CSV is missing columns: {sorted(missing)}")
        return cls({name: data[:, i] for i, name in enumerate(header)})


def sample_uncertainty(spec: UncertaintySpec, n: int, k: int, rng) -> np.ndarray:
    """DeltaA for step k under ``spec``; ``rng`` carries per-step state."""
    if spec.mode == "fixed":
        return spec.p * np.eye(n)
    if spec.mode == "per-step":
        p = rng.uniform(spec.p_min, spec.p_max)
        return p * np.eye(n)
    if k >= len(spec.matrices):
        raise ContractError(
            f"custom uncertainty sequence exhausted at step {k} "
            f"(have {len(spec.matrices)} matrices)")
    m = spec.matrices[k]
    if m.shape != (n, n):
        raise DimensionError(f"custom DeltaA at step {k} has shape {m.shape}, want {(n, n)}")
    return m


def build_uncertainty_sequence(plant: PlantModel, spec: UncertaintySpec,
                               horizon: int, enforce: str = "warn"):
    """Stacked DeltaA(k) for k = 0..horizon-1 plus the zok1-violating steps.

    Each matrix is checked against DeltaA^T DeltaA <= eps*F/2; violations
    raise (``enforce="error"``) or are summarized in one warning.
    """
    n = plant.n
    rng = np.random.default_rng(spec.seed)
    seq = np.empty((horizon, n, n))
    for k in range(horizon):
        seq[k] = sample_uncertainty(spec, n, k, rng)

    bound = (plant.epsilon / 2.0) * plant.F

    def within_bound(delta: np.ndarray) -> bool:
        with np.errstate(over="ignore"):
            gram = delta.T @ delta
        if not np.all(np.isfinite(gram)):   # overflow: certainly above the bound
            return False
        return numerics.psd_dominates(gram, bound)

    violations = []
    if spec.mode == "fixed":
        if not within_bound(seq[0]):
            violations = list(range(horizon))
    else:
        violations = [k for k in range(horizon) if not within_bound(seq[k])]

    if violations:
        msg = (f"uncertainty bound violated at {len(violations)} of {horizon} steps "
               f"(first at step {violations[0]}): DeltaA^T DeltaA exceeds eps*F/2")
        if enforce == "error":
            raise ContractError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return seq, tuple(violations)


@dataclass(frozen=True)
class StepResult:
    x_next: np.ndarray
    x_held_next: np.ndarray
    u: np.ndarray
    e: np.ndarray
    event: bool
    transmitted: bool
    jammed: bool


def step(x, x_held, delta_a, k_gain, dos_active: bool, mu: float,
         a: np.ndarray, b: np.ndarray) -> StepResult:
    """One mid-loop transition (reference implementation of the kernel step)."""
    x = numerics.as_vector(x, "x")
    x_held = numerics.as_vector(x_held, "x_held")
    e = x_held - x
    slack = mu * float(x @ x) - float(e @ e)
    event = slack <= 0.0
    transmitted = event and not dos_active
    jammed = event and dos_active
    held_next = x.copy() if transmitted else x_held
    u = k_gain @ held_next
    x_next = (a + delta_a) @ x + b @ u
    return StepResult(x_next=x_next, x_held_next=held_next, u=u, e=e,
                      event=event, transmitted=transmitted, jammed=jammed)


def make_event_predictor(a_eff: np.ndarray, b: np.ndarray, k_gain: np.ndarray,
                         mu: float, x0: np.ndarray):
    """Dry-run closure for the adversarial-greedy DoS generator.

    Given a candidate signal, replays the closed loop against it and
    returns the steps at which the trigger fires.
    """
    def predictor(signal: DosSignal) -> np.ndarray:
        mask = signal.active_mask().astype(np.uint8)
        _, _, _, _, _, event, _, _ = rollout(a_eff, b, k_gain, mask, mu, x0)
        return np.nonzero(event)[0]

    return predictor


def resolve_certificate(config: ScenarioConfig) -> SynthesisCertificate:
    if config.certificate is not None:
        cert = config.certificate
    else:
        cert = compute_certificate(config.synthesis,
                                   mu_formula=config.options.mu_formula,
                                   gamma_formula=config.options.gamma_formula)
    if config.options.require_valid_certificate and not cert.valid:
        raise CertificateInvalidError(
            f"certificate conditions fail ({cert.flags.to_dict()}) and the run "
            f"requires a valid certificate")
    return cert


def resolve_dos(config: ScenarioConfig, cert: SynthesisCertificate,
                a_eff: np.ndarray) -> DosSignal:
    """Turn the scenario's DoS source into a concrete signal."""
    horizon = config.horizon_steps
    if config.dos is None:
        return DosSignal.empty(horizon)
    if isinstance(config.dos, DosSignal):
        if config.dos.horizon != horizon:
            raise SignalFormatError(
                f"DoS signal horizon {config.dos.horizon} != scenario horizon {horizon}")
        return config.dos
    budget = DosBudget.from_certificate(cert)
    predictor = None
    if config.dos.style == "adversarial-greedy":
        predictor = make_event_predictor(a_eff, config.plant.B, cert.K,
                                         cert.mu, config.x0)
    return generate(horizon, budget, seed=config.dos.seed,
                    style=config.dos.style, event_predictor=predictor)


def run(config: ScenarioConfig):
    """Execute the scenario; returns (trace, certificate, signal).

    Deterministic in the config (all randomness flows through declared
    seeds). Raises DivergenceError naming the first step whose state has
    a NaN/Inf entry.
    """
    cert = resolve_certificate(config)
    horizon = config.horizon_steps
    delta_seq, zok1_steps = build_uncertainty_sequence(
        config.plant, config.uncertainty, horizon, enforce=config.options.enforce_zok1)
    a_eff = config.plant.A[None, :, :] + delta_seq
    a_eff = np.ascontiguousarray(a_eff)

    signal = resolve_dos(config, cert, a_eff)
    dos_mask = signal.active_mask().astype(np.uint8)

    (x_hist, held, u, e, slack,
     event, transmitted, jammed) = rollout(a_eff, config.plant.B, cert.K,
                                           dos_mask, cert.mu, config.x0)
    finite_rows = np.all(np.isfinite(x_hist), axis=1)
    if not finite_rows.all():
        bad = int(np.nonzero(~finite_rows)[0][0])
        raise DivergenceError(
            f"state became non-finite at step {bad}", step=bad)

    v = np.einsum("ki,ij,kj->k", x_hist, cert.P, x_hist)
    trace = SimulationTrace(
        x=x_hist[:-1], x_final=x_hist[-1], x_held=held, u=u, e=e,
        event=event.astype(bool), transmitted=transmitted.astype(bool),
        jammed=jammed.astype(bool), dos_active=dos_mask.astype(bool),
        V=v, threshold_slack=slack,
        sample_period=config.sample_period, mu=cert.mu,
        zok1_violation_steps=zok1_steps, backend=backend_name(),
    )
    return trace, cert, signal
