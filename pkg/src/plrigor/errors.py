"""Exception hierarchy shared across the toolkit.

Two broad classes matter to callers (and to the CLI exit codes):
``PreconditionError`` for inputs that violate a documented contract, and
``NumericalFailure`` for computations that could not be completed on
otherwise valid inputs (non-convergence, singular designs, degenerate
statistics).
"""


class PlrigorError(Exception):
    """Base class for all toolkit errors."""


class PreconditionError(PlrigorError, ValueError):
    """Input violates a documented precondition."""


class NumericalFailure(PlrigorError, RuntimeError):
    """A numerical procedure failed on valid inputs."""


class DegenerateFitError(PreconditionError):
    """Too few observations for the requested parameter count."""


class PerfectFitError(NumericalFailure):
    """Zero residual variance: the Gaussian log-likelihood is undefined."""


class IdenticalModelsError(NumericalFailure):
    """Pointwise log-likelihoods coincide; the comparison is degenerate."""


class InsufficientTailError(PreconditionError):
    """Not enough observations above the candidate cutoff."""


class AllCandidatesRejectedError(NumericalFailure):
    """No cutoff candidate leaves the required tail size.

    Carries the best fit found over the unrestricted candidate grid in
    ``best_fit`` so callers can still inspect it.
    """

    def __init__(self, message, best_fit=None):
        super().__init__(message)
        self.best_fit = best_fit


class FitFailedError(NumericalFailure):
    """An optimiser did not converge.  ``last_iterate`` holds the best
    parameter vector reached."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class SingularDesignError(NumericalFailure):
    """Rank-deficient regression design."""


class UnsupportedFormError(PreconditionError):
    """Operation does not apply to the requested model form."""
