"""Numerics for the fractional torsion problem, moving planes and boundary stability.

Modules
-------
specfun      Gamma, Gauss hypergeometric series and the derived constants.
closedform   Torsion functions, their fractional Laplacians and the barrier.
quadrature   Adaptive singular quadrature used as an independent oracle.
geometry     Star-shaped domains, ball deficit and moving-plane geometry.
solver       Grid discretisation of the Dirichlet problem and post-processing.
experiments  Verification suites and the ``fracserrin`` command line.
"""

from .errors import (
    DegenerateCurvatureError,
    DivergenceError,
    DomainError,
    FracSerrinError,
    IllConditionedFitError,
    IterationStallError,
    NonConvergenceError,
    PoleError,
    PredicateResolutionError,
    ResolutionError,
    SingularityError,
    SpectralError,
)
from .specfun import FracParams, derive_constants, gamma, gauss_2f1, lemma23_funcs

__version__ = "0.1.0"

__all__ = [
    "DegenerateCurvatureError",
    "DivergenceError",
    "DomainError",
    "FracParams",
    "FracSerrinError",
    "IllConditionedFitError",
    "IterationStallError",
    "NonConvergenceError",
    "PoleError",
    "PredicateResolutionError",
    "ResolutionError",
    "SingularityError",
    "SpectralError",
    "derive_constants",
    "gamma",
    "gauss_2f1",
    "lemma23_funcs",
]
