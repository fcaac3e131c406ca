"""Figures for exported closed-loop traces."""

__version__ = "0.1.0"

from .figures import PlotSpec, Trace, TraceSchemaError, plot_events, plot_states

__all__ = ["PlotSpec", "Trace", "TraceSchemaError", "plot_events", "plot_states"]
