"""Render figures from exported trace CSV files and attack-signal JSON.

This package reads only the exported files; the CSV/JSON schema is the
whole contract with the simulator that produced them. Rendering is
headless (Agg) and deterministic: identical inputs yield identical image
bytes for a fixed matplotlib version.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

SHADE_COLOR = "#d62728"
SHADE_ALPHA = 0.25


class TraceSchemaError(ValueError):
    """The trace CSV is missing columns this renderer needs."""


@dataclass
class Trace:
    """Parsed trace columns."""

    t: np.ndarray
    states: dict[str, np.ndarray]          # x1, x2, ... in order
    transmitted: np.ndarray

    @property
    def sample_period(self) -> float:
        return float(self.t[1] - self.t[0]) if self.t.size > 1 else 1.0


@dataclass
class PlotSpec:
    """What to draw and where to put it."""

    trace_csv: str
    output: str
    dos_json: str | None = None
    title: str | None = None
    states: tuple[int, ...] = field(default_factory=tuple)   # 1-based; empty = all


def load_trace(path: str) -> Trace:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape[1] != len(header):
        raise TraceSchemaError(
            f"trace has {data.shape[1]} data columns but {len(header)} header names")
    columns = {name: data[:, i] for i, name in enumerate(header)}
    for required in ("t", "transmitted"):
        if required not in columns:
            raise TraceSchemaError(f"trace CSV is missing column {required!r}")
    state_names = [h for h in header if h.startswith("x") and h[1:].isdigit()]
    if not state_names:
        raise TraceSchemaError("trace CSV has no state columns x1..xn")
    state_names.sort(key=lambda h: int(h[1:]))
    return Trace(
        t=columns["t"],
        states={name: columns[name] for name in state_names},
        transmitted=columns["transmitted"].astype(bool),
    )


def load_intervals(path: str) -> list[tuple[int, int]]:
    with open(path) as fh:
        doc = json.load(fh)
    try:
        return [(int(s), int(d)) for s, d in doc["intervals"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise TraceSchemaError(f"malformed attack-signal JSON: {exc}") from None


def _shade_attacks(ax, intervals, sample_period: float) -> None:
    for start, duration in intervals:
        ax.axvspan(start * sample_period, (start + duration) * sample_period,
                   color=SHADE_COLOR, alpha=SHADE_ALPHA, linewidth=0)


def _select_states(trace: Trace, wanted: tuple[int, ...]) -> dict[str, np.ndarray]:
    if not wanted:
        return trace.states
    selected = {}
    for idx in wanted:
        name = f"x{idx}"
        if name not in trace.states:
            raise TraceSchemaError(f"trace CSV is missing column {name!r}")
        selected[name] = trace.states[name]
    return selected


def _save(fig, path: str) -> None:
    # empty metadata keeps SVG output free of creation dates
    fig.savefig(path, dpi=120, metadata={})
    plt.close(fig)


def plot_states(spec: PlotSpec):
    """State trajectories over time, attack intervals shaded.

    Returns the figure (already written to ``spec.output``); callers may
    inspect its lines and spans.
    """
    trace = load_trace(spec.trace_csv)
    series = _select_states(trace, spec.states)
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for name, values in series.items():
        ax.plot(trace.t, values, label=name, linewidth=1.4)
    if spec.dos_json:
        _shade_attacks(ax, load_intervals(spec.dos_json), trace.sample_period)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("state")
    ax.axhline(0.0, color="black", linewidth=0.6, alpha=0.4)
    ax.legend(loc="upper right")
    if spec.title:
        ax.set_title(spec.title)
    fig.tight_layout()
    _save(fig, spec.output)
    return fig


def plot_events(spec: PlotSpec):
    """Stem chart of inter-transmission times against transmission index.

    The horizontal line marks the sample period (the gap a periodic
    controller would show at every index).
    """
    trace = load_trace(spec.trace_csv)
    idx = np.nonzero(trace.transmitted)[0]
    if idx.size == 0:
        raise ValueError("trace contains no transmissions; nothing to draw")
    period = trace.sample_period
    if idx.size == 1:
        warnings.warn("single transmission: stem chart is degenerate",
                      RuntimeWarning, stacklevel=2)
        gaps = np.array([trace.t.size * period])
        positions = np.array([1])
    else:
        gaps = np.diff(idx) * period
        positions = np.arange(1, idx.size)
    fig, ax = plt.subplots(figsize=(8, 3.5))
    ax.stem(positions, gaps, basefmt=" ")
    ax.axhline(period, color="gray", linestyle="--", linewidth=1.0,
               label=f"sample period {period:g}s")
    ax.set_xlabel("transmission index")
    ax.set_ylabel("inter-transmission time (s)")
    ax.legend(loc="upper right")
    if spec.title:
        ax.set_title(spec.title)
    fig.tight_layout()
    _save(fig, spec.output)
    return fig
