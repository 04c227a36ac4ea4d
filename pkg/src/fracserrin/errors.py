"""Exception hierarchy shared by all modules."""


class FracSerrinError(Exception):
    """Base class for every error raised by the package."""


class DomainError(FracSerrinError, ValueError):
    """An argument lies outside the domain of the operation."""


class PoleError(DomainError):
    """Evaluation at a pole (e.g. Gamma at a non-positive integer)."""


class DivergenceError(FracSerrinError, ArithmeticError):
    """A series or integral is divergent for the given parameters."""


class NonConvergenceError(FracSerrinError, ArithmeticError):
    """An iterative or adaptive procedure exhausted its budget."""


class SingularityError(NonConvergenceError):
    """Successive refinements grow without bound (a genuine -infinity)."""


class ResolutionError(FracSerrinError, ValueError):
    """A grid or sampling is too coarse for the requested operation."""


class SpectralError(FracSerrinError, ValueError):
    """The reaction slope is not below the first discrete eigenvalue."""


class IllConditionedFitError(FracSerrinError, ArithmeticError):
    """A least-squares boundary fit is under-resolved."""


class PredicateResolutionError(FracSerrinError, ArithmeticError):
    """A geometric predicate cannot be resolved at the sampling resolution."""


class IterationStallError(NonConvergenceError):
    """Power/inverse iteration failed to reach the requested tolerance."""


class DegenerateCurvatureError(FracSerrinError, ValueError):
    """Boundary samples violate the declared regularity bounds."""
