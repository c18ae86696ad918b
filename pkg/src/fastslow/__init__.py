"""Entry-exit analysis of fast-slow systems with crossing eigenvalues.

For systems ::

    x'  = eps
    z1' = Z1(x, z1, z2, eps)
    z2' = Z2(x, z1, z2, eps)

whose critical manifold ``{z1 = z2 = 0}`` carries a linearization with
two real eigenvalue curves that cross at some ``x = x_star``, this
package predicts where a trajectory entering a delta-cylinder around
the manifold at ``x0`` will exit (extended entry-exit formulae), and
verifies the prediction by direct numerical integration.

Main entry points
-----------------
* :func:`fastslow.systems.make_builtin` / :func:`fastslow.systems.load_system`
* :func:`fastslow.spectral.check_assumptions`
* :func:`fastslow.polar.analyze`
* :func:`fastslow.entry_exit.predict_exit`
* :func:`fastslow.odeint.detect_exit`
* :func:`fastslow.harness.sweep` / :func:`fastslow.harness.reproduce_figure`

plus the ``fastslow`` command-line tool.
"""

from ._version import __version__
from .entry_exit import ExitPrediction, predict_exit
from .errors import (
    AmbiguousCaseError,
    ComplexEigenvaluesError,
    DegenerateClassificationError,
    DegenerateCoefficientsError,
    DomainError,
    FastSlowError,
    MultipleCollisionsError,
    NoCollisionError,
    NoExitInDomainError,
    NoExitObservedError,
    NoSwitchInDomainError,
    StepSizeUnderflowError,
    SystemDefinitionError,
    UncoveredCaseError,
    UniquenessViolationError,
)
from .harness import SweepResult, eps_family, reproduce_figure, sweep
from .odeint import (
    DEFAULT_ATOL,
    DEFAULT_CYLINDER_RADIUS,
    DEFAULT_RTOL,
    ExitEvent,
    SimulationTrace,
    detect_exit,
    integrate_full,
    integrate_polar,
)
from .polar import PolarAnalysis, analyze
from .spectral import SpectralProfile, check_assumptions, find_x_star
from .systems import FastSlowSystem, PolynomialSystemSpec, load_system, make_builtin

__all__ = [
    "__version__",
    "AmbiguousCaseError",
    "ComplexEigenvaluesError",
    "DEFAULT_ATOL",
    "DEFAULT_CYLINDER_RADIUS",
    "DEFAULT_RTOL",
    "DegenerateClassificationError",
    "DegenerateCoefficientsError",
    "DomainError",
    "ExitEvent",
    "ExitPrediction",
    "FastSlowError",
    "FastSlowSystem",
    "MultipleCollisionsError",
    "NoCollisionError",
    "NoExitInDomainError",
    "NoExitObservedError",
    "NoSwitchInDomainError",
    "PolarAnalysis",
    "PolynomialSystemSpec",
    "SimulationTrace",
    "SpectralProfile",
    "StepSizeUnderflowError",
    "SweepResult",
    "SystemDefinitionError",
    "UncoveredCaseError",
    "UniquenessViolationError",
    "analyze",
    "check_assumptions",
    "detect_exit",
    "eps_family",
    "find_x_star",
    "integrate_full",
    "integrate_polar",
    "load_system",
    "make_builtin",
    "predict_exit",
    "reproduce_figure",
    "sweep",
]
