"""Exception hierarchy shared across the package."""


class WavefrontLabError(Exception):
    """Base class for all package-specific errors."""


class EvaluationDomainError(WavefrontLabError):
    """Symbol evaluation produced a non-finite value or was called outside its domain."""


class StepSizeError(WavefrontLabError):
    """Newton iteration inside the implicit integrator failed to converge."""


class QuadratureToleranceError(WavefrontLabError):
    """Adaptive quadrature did not reach the requested tolerance."""


class NumericalConsistencyError(WavefrontLabError):
    """Two independent evaluation routes disagree beyond tolerance."""


class IllConditionedExcessError(WavefrontLabError):
    """Singular values of the recurrence block fall in the ambiguous band."""


class CleanIntersectionError(WavefrontLabError):
    """Tangent-fit dimension disagrees with the computed excess."""


class DegenerateRecurrenceError(WavefrontLabError):
    """Full-recurrence linear solve hit a singular system."""


class CompositionError(WavefrontLabError):
    """Shift-then-free composition disagrees with the direct formula."""


class CausticError(WavefrontLabError):
    """Propagation requested too close to a caustic without factorization."""


class ScaleError(WavefrontLabError):
    """Window scale outside the resolvable band of the grid."""


class InsufficientScalesError(WavefrontLabError):
    """Multi-scale decay fit needs at least three usable scales."""


class ConfigError(WavefrontLabError):
    """Scenario configuration failed validation."""


class ConfinementError(WavefrontLabError):
    """Mass near the grid boundary exceeds the hard confinement budget."""


class ConfinementWarning(UserWarning):
    """Mass near the grid boundary exceeds the confinement budget."""
