"""Trace verification: per-step Lyapunov decrease, the ISS state envelope
under DoS, and the transmissions-vs-periodic comparison table.

All checks are read-only over the trace arrays; they come only from the
certificate's constants (never re-estimated from data).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dos import DosBudget, DosSignal, ValidationReport, _prefix_counts, validate
from .errors import ContractError, DegenerateStatsError
from .simulator import SimulationTrace
from .synthesis import SynthesisCertificate


@dataclass(frozen=True)
class StabilityReport:
    """Outcome of re-checking the certificate's claims along a trace.

    ``lyapunov_violations``: steps k (outside attacks, after the first
    transmission) with V(k+1) > c1 V(k) + tol. ``iss_bound_violations``:
    steps where the state exceeds the DoS-aware envelope. ``envelope``
    holds the per-step bound value; ``worst_margin`` is the minimum
    relative envelope slack (negative = violated).
    """

    lyapunov_violations: tuple[int, ...]
    lyapunov_report_only: bool
    iss_bound_violations: tuple[int, ...]
    envelope: np.ndarray
    worst_margin: float
    budget_admissible: bool | None
    budget_report: ValidationReport | None
    notes: tuple[str, ...]

    @property
    def clean(self) -> bool:
        if self.iss_bound_violations:
            return False
        return self.lyapunov_report_only or not self.lyapunov_violations

    def to_json_dict(self) -> dict:
        return {
            "lyapunov_violations": list(self.lyapunov_violations),
            "lyapunov_report_only": self.lyapunov_report_only,
            "iss_bound_violations": list(self.iss_bound_violations),
            "worst_margin": self.worst_margin,
            "budget_admissible": self.budget_admissible,
            "budget_report": (None if self.budget_report is None
                              else self.budget_report.to_json_dict()),
            "envelope": [float(v) for v in self.envelope],
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class TransmissionStats:
    """Table-1 style quantities for one trace."""

    u_total: int
    tau_min: float
    tau_max: float
    periodic_baseline: int
    degenerate: bool

    def to_json_dict(self) -> dict:
        return {"u_total": self.u_total, "tau_min": self.tau_min,
                "tau_max": self.tau_max,
                "periodic_baseline": self.periodic_baseline,
                "degenerate": self.degenerate}


def _first_transmission(trace) -> int | None:
    idx = np.nonzero(np.asarray(trace.transmitted))[0]
    return int(idx[0]) if idx.size else None


def check_lyapunov_decrease(trace: SimulationTrace, cert: SynthesisCertificate,
                            abs_tol: float | None = None) -> list[int]:
    """Steps where V(k+1) > c1 V(k) + abs_tol outside attacks.

    Skips attacked steps (jammed events void the Case-1 bound), and steps
    before the first successful transmission (the bound presumes the loop
    closed at k = 0). Default abs_tol is 1e-12 * V(0).
    """
    if trace.horizon < 1 or trace.V.size < 2:
        raise ContractError("trace must contain at least two Lyapunov samples")
    if abs_tol is None:
        abs_tol = 1e-12 * float(trace.V[0])
    first_tx = _first_transmission(trace)
    if first_tx is None:
        return []
    v = trace.V
    violations = []
    for k in range(first_tx, trace.horizon):
        if trace.dos_active[k] or trace.jammed[k]:
            continue
        if v[k + 1] > cert.c1 * v[k] + abs_tol:
            violations.append(k)
    return violations


def iss_envelope(cert: SynthesisCertificate, signal: DosSignal,
                 x0_norm: float, upto: int) -> np.ndarray:
    """Envelope values Xi^((1+N_off)/2) c1^((k-T_off)/2) c2^(T_off/2) ||x0||
    for k = 0..upto."""
    t_off, n_off = _prefix_counts(signal)
    ks = np.arange(upto + 1, dtype=float)
    t = t_off[:upto + 1].astype(float)
    n = n_off[:upto + 1].astype(float)
    return (cert.Xi ** ((1.0 + n) / 2.0)
            * cert.c1 ** ((ks - t) / 2.0)
            * cert.c2 ** (t / 2.0)
            * x0_norm)


def check_iss_envelope(trace: SimulationTrace, cert: SynthesisCertificate,
                       signal: DosSignal,
                       budget: DosBudget | None = None) -> StabilityReport:
    """Evaluate the DoS-aware state envelope at every step of the trace.

    When a budget is supplied, its admissibility verdict is recorded
    first; envelope violations are reported either way. The Lyapunov
    decrease check is folded into the same report (report-only when the
    run's uncertainty violated its declared bound).
    """
    if signal.horizon != trace.horizon:
        raise ContractError(
            f"signal horizon {signal.horizon} != trace horizon {trace.horizon}")
    notes = []
    budget_report = None
    admissible = None
    if budget is not None:
        budget_report = validate(signal, budget)
        admissible = budget_report.admissible
        if not admissible:
            notes.append("DoS signal violates its budget; envelope bound "
                         "is not guaranteed by the certificate")

    x_norms = np.concatenate([trace.x_norm,
                              [float(np.linalg.norm(trace.x_final))]])
    env = iss_envelope(cert, signal, x_norms[0], trace.horizon)
    with np.errstate(invalid="ignore"):
        rel_margin = (env - x_norms) / np.where(env > 0, env, 1.0)
    bad = np.nonzero(x_norms > env * (1.0 + 1e-12))[0]

    report_only = bool(trace.zok1_violation_steps)
    if report_only:
        notes.append("uncertainty exceeded its declared bound during the run; "
                     "Lyapunov decrease check is report-only")
    lyap = check_lyapunov_decrease(trace, cert)
    return StabilityReport(
        lyapunov_violations=tuple(lyap),
        lyapunov_report_only=report_only,
        iss_bound_violations=tuple(int(k) for k in bad),
        envelope=env,
        worst_margin=float(rel_margin.min()),
        budget_admissible=admissible,
        budget_report=budget_report,
        notes=tuple(notes),
    )


def summarize_transmissions(trace, sample_period: float | None = None) -> TransmissionStats:
    """u_total and min/max inter-transmission gaps in seconds.

    With fewer than two transmissions the gap is undefined; by convention
    the single gap from step 0 to the horizon is reported, flagged
    degenerate. Zero transmissions raise DegenerateStatsError.
    """
    if sample_period is None:
        sample_period = trace.sample_period
    transmitted = np.asarray(trace.transmitted, dtype=bool)
    idx = np.nonzero(transmitted)[0]
    horizon = transmitted.size
    if idx.size == 0:
        raise DegenerateStatsError("trace contains no transmissions")
    if idx.size == 1:
        gap = horizon * sample_period
        return TransmissionStats(u_total=1, tau_min=gap, tau_max=gap,
                                 periodic_baseline=horizon, degenerate=True)
    gaps = np.diff(idx)
    return TransmissionStats(
        u_total=int(idx.size),
        tau_min=float(gaps.min() * sample_period),
        tau_max=float(gaps.max() * sample_period),
        periodic_baseline=horizon,
        degenerate=False,
    )


def format_comparison(stats: TransmissionStats, sample_period: float) -> str:
    """Plain-text comparison of event-triggered vs. per-step feedback."""
    rows = [
        ("Control strategy", "tau_max (sec.)", "tau_min (sec.)", "u_total"),
        ("Periodic feedback control", f"{sample_period:g}", f"{sample_period:g}",
         str(stats.periodic_baseline)),
        ("Event-triggered control", f"{stats.tau_max:g}", f"{stats.tau_min:g}",
         str(stats.u_total)),
    ]
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[j]) for j, cell in enumerate(row)))
        if i == 0:
            lines.append("-" * len(lines[0]))
    if stats.degenerate:
        lines.append("(degenerate: fewer than two transmissions; gap spans the horizon)")
    return "\n".join(lines)
