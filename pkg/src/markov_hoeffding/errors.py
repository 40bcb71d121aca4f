"""Exception hierarchy.

The CLI maps these onto exit codes: validation problems exit with 2,
domain problems with 3.
"""


class MarkovHoeffdingError(Exception):
    """Base class for all package errors."""


class ChainValidationError(MarkovHoeffdingError, ValueError):
    """A chain document or array bundle failed validation.

    Parameters
    ----------
    problems : list of str
        One human-readable message per violated invariant.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class DomainError(MarkovHoeffdingError, ValueError):
    """Inputs are valid objects but outside the domain of a formula."""


class NoSpectralGapError(DomainError):
    """Second eigenvalue is numerically equal to one."""


class LezaudDomainError(DomainError):
    """Deviation too large for the comparison bound (5 eps > mu)."""


class SpectralError(MarkovHoeffdingError, ArithmeticError):
    """Eigen-solver output violates an invariant it must satisfy."""


class NonConvergenceError(MarkovHoeffdingError, ArithmeticError):
    """An iterative search did not bracket or reach its target."""


class BudgetExceededError(MarkovHoeffdingError, ValueError):
    """Exact computation would exceed its configured size cap."""


class NonLatticeError(MarkovHoeffdingError, ValueError):
    """Observable values are not multiples of 1/L for any allowed L."""
