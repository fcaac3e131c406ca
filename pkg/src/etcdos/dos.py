"""DoS attack signals: representation, measurement, budgets, generation.

A signal is an ordered list of disjoint attack intervals on a discrete
step grid; during an interval the shared channel carries nothing. A
budget constrains every prefix [0, k), k > 1, of the signal:

    duration:   T_off(k)/k <= rate_bound
    frequency:  N_off(k)/k <= freq_bound

where rate_bound = (2 ln(eta1) - ln(c1)) / (ln(c2) - ln(c1)) and
freq_bound = 2 (ln(eta2) - ln(eta1)) / ln(Xi) come from a synthesis
certificate, never from free parameters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetInfeasibleError, DomainError, SignalFormatError

STYLES = ("uniform-random", "burst", "adversarial-greedy")


@dataclass(frozen=True)
class DosSignal:
    """Attack intervals over a finite horizon.

    ``intervals`` is a tuple of (start, duration) pairs; the channel is
    unavailable for steps start <= k < start + duration. Intervals are
    sorted, pairwise disjoint and contained in [0, horizon).
    """

    horizon: int
    intervals: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if not isinstance(self.horizon, int) or self.horizon < 1:
            raise SignalFormatError(f"horizon must be a positive int, got {self.horizon}")
        norm = []
        prev_end = -1
        for item in self.intervals:
            try:
                start, duration = int(item[0]), int(item[1])
            except (TypeError, ValueError, IndexError):
                raise SignalFormatError(f"malformed interval {item!r}") from None
            if duration < 1:
                raise SignalFormatError(f"interval {item!r} has duration < 1")
            if start <= prev_end:
                raise SignalFormatError(
                    f"interval {item!r} overlaps or is out of order")
            if start < 0 or start + duration > self.horizon:
                raise SignalFormatError(
                    f"interval {item!r} exceeds [0, {self.horizon})")
            prev_end = start + duration - 1
            norm.append((start, duration))
        object.__setattr__(self, "intervals", tuple(norm))

    def active_mask(self) -> np.ndarray:
        """Boolean array of length ``horizon``; True where attacked."""
        mask = np.zeros(self.horizon, dtype=bool)
        for start, duration in self.intervals:
            mask[start:start + duration] = True
        return mask

    def total_attacked(self) -> int:
        return sum(d for _, d in self.intervals)

    def to_json_dict(self) -> dict:
        return {"horizon": self.horizon,
                "intervals": [[s, d] for s, d in self.intervals]}

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_json_dict(cls, d: dict) -> "DosSignal":
        try:
            horizon = int(d["horizon"])
            intervals = tuple((int(s), int(k)) for s, k in d["intervals"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SignalFormatError(f"malformed DoS signal document: {exc}") from None
        return cls(horizon=horizon, intervals=intervals)

    @classmethod
    def load(cls, path) -> "DosSignal":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))

    @classmethod
    def empty(cls, horizon: int) -> "DosSignal":
        return cls(horizon=horizon, intervals=())


@dataclass(frozen=True)
class DosBudget:
    """Prefix bounds on attack duration rate and frequency."""

    rate_bound: float
    freq_bound: float      # math.inf when Assumption-2 is unconstraining
    eta1: float
    eta2: float

    def __post_init__(self):
        if math.isfinite(self.rate_bound) and not (0.0 <= self.rate_bound < 1.0):
            raise BudgetInfeasibleError(
                f"rate_bound must lie in [0, 1), got {self.rate_bound}")
        if not (self.freq_bound > 0.0):
            raise BudgetInfeasibleError(
                f"freq_bound must be positive, got {self.freq_bound}")

    @classmethod
    def from_certificate(cls, certificate) -> "DosBudget":
        """Bounds per the certificate's c1, c2 and eigenvalue ratio.

        Raises
        ------
        BudgetInfeasibleError
            If eta1^2 <= c1, which makes the duration-rate bound
            non-positive (no admissible signal exists).
        """
        rate = certificate.dos_rate_bound
        if not math.isfinite(rate) or rate <= 0.0:
            raise BudgetInfeasibleError(
                f"certificate yields duration-rate bound {rate!r}: eta1^2 "
                f"(={certificate.eta1**2:.4f}) must exceed c1 (={certificate.c1:.4f})"
            )
        return cls(rate_bound=min(rate, math.nextafter(1.0, 0.0)),
                   freq_bound=certificate.Ta,
                   eta1=certificate.eta1, eta2=certificate.eta2)


def _prefix_counts(signal: DosSignal):
    """Cumulative (T_off, N_off) arrays indexed by k = 0..horizon.

    T_off[k] = attacked steps in [0, k); N_off[k] = intervals intersecting [0, k).
    """
    horizon = signal.horizon
    t_off = np.zeros(horizon + 1, dtype=np.int64)
    n_off = np.zeros(horizon + 1, dtype=np.int64)
    active = signal.active_mask()
    t_off[1:] = np.cumsum(active)
    for start, _ in signal.intervals:
        n_off[start + 1:] += 1
    return t_off, n_off


def measure(signal: DosSignal, k: int):
    """(T_off, N_off) over the prefix [0, k).

    Defined for 1 < k <= horizon (the duration ratio is only stated for
    k > 1). Raises DomainError outside that range.
    """
    if not (1 < k <= signal.horizon):
        raise DomainError(
            f"measure requires 1 < k <= horizon={signal.horizon}, got k={k}")
    t_off = 0
    n_off = 0
    for start, duration in signal.intervals:
        if start >= k:
            break
        n_off += 1
        t_off += min(start + duration, k) - start
    return t_off, n_off


@dataclass(frozen=True)
class ValidationReport:
    """Per-prefix admissibility of a signal under a budget.

    ``rate_violations``/``freq_violations`` list every k in (1, horizon]
    where the corresponding ratio exceeds its bound. Margins are the
    minimum of (bound - ratio) over all checked k; negative means violated.
    """

    admissible: bool
    rate_violations: tuple[int, ...]
    freq_violations: tuple[int, ...]
    worst_rate_margin: float
    worst_freq_margin: float
    rate_bound: float
    freq_bound: float

    def to_json_dict(self) -> dict:
        return {
            "admissible": self.admissible,
            "rate_violations": list(self.rate_violations),
            "freq_violations": list(self.freq_violations),
            "worst_rate_margin": self.worst_rate_margin,
            "worst_freq_margin": None if math.isinf(self.worst_freq_margin)
            else self.worst_freq_margin,
            "rate_bound": self.rate_bound,
            "freq_bound": None if math.isinf(self.freq_bound) else self.freq_bound,
        }


def validate(signal: DosSignal, budget: DosBudget) -> ValidationReport:
    """Check both prefix bounds at every k in (1, horizon]."""
    t_off, n_off = _prefix_counts(signal)
    ks = np.arange(2, signal.horizon + 1)
    rate_ratio = t_off[2:] / ks
    freq_ratio = n_off[2:] / ks
    rate_bad = ks[rate_ratio > budget.rate_bound]
    worst_rate = float((budget.rate_bound - rate_ratio).min()) if len(ks) else math.inf
    if math.isinf(budget.freq_bound):
        freq_bad = ks[:0]
        worst_freq = math.inf
    else:
        freq_bad = ks[freq_ratio > budget.freq_bound]
        worst_freq = float((budget.freq_bound - freq_ratio).min()) if len(ks) else math.inf
    return ValidationReport(
        admissible=bool(len(rate_bad) == 0 and len(freq_bad) == 0),
        rate_violations=tuple(int(k) for k in rate_bad),
        freq_violations=tuple(int(k) for k in freq_bad),
        worst_rate_margin=worst_rate,
        worst_freq_margin=worst_freq,
        rate_bound=budget.rate_bound,
        freq_bound=budget.freq_bound,
    )


class _FeasibilityTracker:
    """Incremental prefix-feasibility bookkeeping for the generators.

    Attacks are appended left to right, so the binding check for a new
    attacked step k is the prefix k+1 (later ratios only decay until the
    next insertion). Intervals never start before step 1: the stability
    analysis presumes an initial successful transmission at step 0.
    """

    def __init__(self, horizon: int, budget: DosBudget):
        self.horizon = horizon
        self.budget = budget
        self.t_off = 0
        self.n_off = 0

    def can_extend(self, k: int) -> bool:
        """May step k be attacked as a continuation of the current interval?"""
        if k >= self.horizon:
            return False
        return self.t_off + 1 <= self.budget.rate_bound * (k + 1)

    def can_start(self, k: int) -> bool:
        """May a new interval start at step k?"""
        if k < 1 or not self.can_extend(k):
            return False
        if math.isinf(self.budget.freq_bound):
            return True
        return self.n_off + 1 <= self.budget.freq_bound * (k + 1)

    def start(self, k: int) -> None:
        self.n_off += 1
        self.t_off += 1

    def extend(self, k: int) -> None:
        self.t_off += 1


def _grow_interval(tracker: _FeasibilityTracker, start: int, max_duration: int) -> int:
    """Greedily extend an interval begun at ``start``; returns its duration."""
    tracker.start(start)
    duration = 1
    while duration < max_duration and tracker.can_extend(start + duration):
        tracker.extend(start + duration)
        duration += 1
    return duration


def _generate_uniform(horizon, budget, rng) -> list[tuple[int, int]]:
    intervals = []
    tracker = _FeasibilityTracker(horizon, budget)
    # Expected attack load ~ half the budget; short random bursts.
    p_start = min(0.5, budget.rate_bound / 2.0)
    k = 1
    while k < horizon:
        if rng.random() < p_start and tracker.can_start(k):
            want = int(rng.integers(1, 6))
            duration = _grow_interval(tracker, k, want)
            intervals.append((k, duration))
            k += duration + 1          # at least one free step between intervals
        else:
            k += 1
    return intervals


def _generate_burst(horizon, budget, rng) -> list[tuple[int, int]]:
    """Few long intervals, each as long as the prefix budget allows."""
    intervals = []
    tracker = _FeasibilityTracker(horizon, budget)
    k = int(rng.integers(1, max(2, horizon // 8)))
    while k < horizon:
        if tracker.can_start(k):
            duration = _grow_interval(tracker, k, horizon - k)
            intervals.append((k, duration))
            k += duration
        k += int(rng.integers(1, max(2, horizon // 6)))
    return intervals


def _generate_greedy(horizon, budget, event_predictor) -> list[tuple[int, int]]:
    """Attack exactly where the trigger wants to transmit.

    ``event_predictor(signal)`` must return the (sorted) steps at which
    events fire when the loop runs against ``signal``; each round places a
    maximal feasible interval on the first unattacked predicted event.
    """
    intervals: list[tuple[int, int]] = []
    tracker = _FeasibilityTracker(horizon, budget)
    frontier = 1
    while frontier < horizon:
        events = event_predictor(DosSignal(horizon, tuple(intervals)))
        target = next((int(e) for e in events if e >= frontier), None)
        if target is None:
            break
        start = target
        while start < horizon and not tracker.can_start(start):
            start += 1
        if start >= horizon:
            break
        duration = _grow_interval(tracker, start, horizon - start)
        intervals.append((start, duration))
        frontier = start + duration + 1
    return intervals


def generate(horizon: int, budget: DosBudget, seed: int,
             style: str = "uniform-random", event_predictor=None) -> DosSignal:
    """Deterministic admissible signal for (seed, style, horizon, budget).

    Every returned signal passes ``validate(signal, budget)``; styles that
    require at least one interval raise BudgetInfeasibleError when the
    budget admits none.
    """
    if style not in STYLES:
        raise ValueError(f"unknown style {style!r}; expected one of {STYLES}")
    if horizon < 1:
        raise SignalFormatError(f"horizon must be >= 1, got {horizon}")
    rng = np.random.default_rng(seed)
    if style == "uniform-random":
        intervals = _generate_uniform(horizon, budget, rng)
    elif style == "burst":
        intervals = _generate_burst(horizon, budget, rng)
    else:
        if event_predictor is None:
            raise BudgetInfeasibleError(
                "adversarial-greedy generation needs an event_predictor "
                "(a dry-run of the closed loop); none was supplied")
        intervals = _generate_greedy(horizon, budget, event_predictor)

    if style in ("burst", "adversarial-greedy") and not intervals:
        raise BudgetInfeasibleError(
            f"style {style!r} places at least one interval but the budget "
            f"(rate {budget.rate_bound:.4g}, freq {budget.freq_bound:.4g}) "
            f"admits none within horizon {horizon}")
    signal = DosSignal(horizon=horizon, intervals=tuple(intervals))
    report = validate(signal, budget)
    if not report.admissible:      # generator contract; never expected
        raise AssertionError(
            f"internal error: generated signal violates its own budget "
            f"({report.rate_violations[:3]}, {report.freq_violations[:3]})")
    return signal
