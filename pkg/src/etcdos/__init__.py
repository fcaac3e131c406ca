"""Event-triggered robust control of uncertain discrete-time linear
systems under denial-of-service attacks.

The package synthesizes the robust gain and trigger threshold from a
modified Riccati equation, generates and validates DoS signals against
duration/frequency budgets, simulates the closed loop, and re-verifies
every stability bound along the trajectory.
"""

__version__ = "0.1.0"

from ._kernel import backend_name
from .diagnostics import (
    StabilityReport,
    TransmissionStats,
    check_iss_envelope,
    check_lyapunov_decrease,
    summarize_transmissions,
)
from .dos import DosBudget, DosSignal, generate, measure, validate
from .numerics import (
    SymmetricEigenSummary,
    eig_extremes,
    is_positive_definite,
    left_pseudo_inverse,
    psd_dominates,
    spectral_norm,
)
from .scenario import Scenario, load_scenario
from .simulator import (
    DosRequest,
    PlantModel,
    ScenarioConfig,
    SimulationOptions,
    SimulationTrace,
    UncertaintySpec,
    run,
    step,
)
from .synthesis import (
    SynthesisCertificate,
    SynthesisInputs,
    check_lemma1_conditions,
    compute_certificate,
    compute_gains,
    compute_trigger_threshold,
    solve_riccati,
    sweep_alpha,
)

__all__ = [
    "DosBudget", "DosRequest", "DosSignal", "PlantModel", "Scenario",
    "ScenarioConfig", "SimulationOptions", "SimulationTrace",
    "StabilityReport", "SymmetricEigenSummary", "SynthesisCertificate",
    "SynthesisInputs", "TransmissionStats", "UncertaintySpec",
    "backend_name", "check_iss_envelope", "check_lemma1_conditions",
    "check_lyapunov_decrease", "compute_certificate", "compute_gains",
    "compute_trigger_threshold", "eig_extremes", "generate",
    "is_positive_definite", "left_pseudo_inverse", "load_scenario",
    "measure", "psd_dominates", "run", "solve_riccati", "spectral_norm",
    "step", "summarize_transmissions", "sweep_alpha", "validate",
]
