"""Numerical laboratory for singularity propagation under isotropic Schrödinger evolution.

The package splits into a classical side (symbols, flow, recurrence,
wfpredict) that predicts how singularities move, a quantum side (quantum,
detector) that solves the Schrödinger equation on a grid and measures the
singularities, a quadrature bench (statphase), and a harness that wires the
pipeline together behind a CLI.
"""

from wavefront_lab.errors import (
    CausticError,
    CleanIntersectionError,
    CompositionError,
    DegenerateRecurrenceError,
    EvaluationDomainError,
    IllConditionedExcessError,
    NumericalConsistencyError,
    QuadratureToleranceError,
    ScaleError,
    StepSizeError,
    WavefrontLabError,
)

__version__ = "0.1.0"

__all__ = [
    "WavefrontLabError",
    "EvaluationDomainError",
    "StepSizeError",
    "QuadratureToleranceError",
    "NumericalConsistencyError",
    "IllConditionedExcessError",
    "CleanIntersectionError",
    "DegenerateRecurrenceError",
    "CompositionError",
    "CausticError",
    "ScaleError",
    "__version__",
]
