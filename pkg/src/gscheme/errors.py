"""Exception types shared across the package."""


class GschemeError(Exception):
    """Base class for all library errors."""


class ValidationError(GschemeError, ValueError):
    """An uncertainty set violates a structural invariant.

    Carries the full list of violations so callers can fix everything at once.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ArgumentError(GschemeError, ValueError):
    """A caller-supplied argument is out of its admissible range."""


class EvaluationError(GschemeError, RuntimeError):
    """A user-supplied function produced a non-finite value."""


class ConfigurationError(GschemeError, ValueError):
    """An experiment was configured with inputs it cannot accept."""


class ResourceLimitError(GschemeError, RuntimeError):
    """A computation would exceed its configured size cap."""


class NumericalError(GschemeError, RuntimeError):
    """A numerical routine failed to reach its requested tolerance."""


class PreconditionError(GschemeError, RuntimeError):
    """A check's precondition failed; distinct from the check itself failing."""


class UnsupportedError(GschemeError, ValueError):
    """A requested variant is outside the supported surface."""
