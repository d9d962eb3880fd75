"""
Exceptions raised by the toolkit.

All errors derive from ImpactResonanceError so callers can catch the whole
family; each also derives from the builtin it most resembles.
"""


class ImpactResonanceError(Exception):
    """Base class for every error raised by the toolkit."""


class ConfigError(ImpactResonanceError, ValueError):
    """A run configuration failed validation."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class VariantError(ImpactResonanceError, TypeError):
    """An operation was called with the wrong forcing variant."""


class DomainError(ImpactResonanceError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateError(ImpactResonanceError, ValueError):
    """The inverse frequency map is undefined (Δ = 0)."""


class JumpPointError(DomainError):
    """A two-sided value was requested at a jump of the kernel derivative."""


class NonImpactingError(DomainError):
    """The state's free orbit never reaches the limiter."""


class InconsistentStateError(DomainError):
    """A state does not lie on the periodic orbit of the given impulse."""


class NoResonance(ImpactResonanceError):
    """No impulse realises the requested frequency ratio."""


class DegenerateResonance(ImpactResonanceError):
    """Every impulse resonates; the frequency map is flat (Δ = 0)."""


class NoUniformBranch(ImpactResonanceError):
    """The resonant equilibrium does not exist for every slow time."""


class NumericalError(ImpactResonanceError, ArithmeticError):
    """A numerical self-check failed."""


class IntegrationError(ImpactResonanceError, RuntimeError):
    """The ODE integrator failed to advance."""


class InsufficientData(ImpactResonanceError, ValueError):
    """Too few impacts to compute a statistic."""
