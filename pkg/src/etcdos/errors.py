"""Exception types shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all etcdos errors."""


class DimensionError(ToolkitError, ValueError):
    """Matrix/vector dimensions are inconsistent with the operation."""


class ContractError(ToolkitError, ValueError):
    """An input violates a documented contract (finiteness, symmetry,
    positive definiteness, parameter ranges)."""


class SynthesisError(ToolkitError):
    """Controller synthesis is impossible for the given data."""


class ConvergenceError(SynthesisError):
    """Riccati iteration exhausted its budget without meeting tolerance."""

    def __init__(self, message, residual, iterations):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class RiccatiDivergenceError(SynthesisError):
    """The Riccati iterate lost positive definiteness."""


class DegenerateTriggerError(SynthesisError):
    """The trigger-threshold denominator vanished (K = 0 degenerate case)."""


class CertificateInvalidError(ToolkitError):
    """A run required a valid certificate but the certificate flags fail."""


class BudgetInfeasibleError(ToolkitError):
    """The DoS budget admits no signal of the requested kind."""


class SignalFormatError(ToolkitError, ValueError):
    """A DoS signal violates its structural invariants."""


class DomainError(ToolkitError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class DivergenceError(ToolkitError):
    """Simulation produced a non-finite state."""

    def __init__(self, message, step):
        super().__init__(message)
        self.step = step


class DegenerateStatsError(ToolkitError):
    """Transmission statistics are undefined (no transmissions)."""


class SchemaError(ToolkitError, ValueError):
    """A scenario file fails schema validation.

    ``field`` holds the dotted path of the offending entry.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
