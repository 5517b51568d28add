"""
Exception hierarchy for mest.

All exceptions inherit from MEstError for easy catching.
"""

from typing import Any, Optional


class MEstError(Exception):
    """Base exception for the mest package.

    All other exceptions in this module inherit from this,
    allowing callers to catch any mest error with a single except.
    """
    pass


class ConfigurationError(MEstError):
    """Error in configuration.

    Raised when:
    - Config file not found
    - Config YAML is invalid
    - A config value is out of range
    """
    pass


class SpecError(MEstError):
    """Invalid model specification.

    Raised when:
    - LossSpec parameters are missing or out of range (e.g. Huber c <= 0)
    - ScadParams has a <= 2 or lambda < 0
    - A Dataset has non-finite entries or inconsistent shapes
    - Penalty weights are negative, non-finite or the wrong length
    - A pilot vector contains NaN/inf
    - A lambda grid is empty or not strictly descending
    """
    pass


class MomentConditionError(MEstError):
    """The loss/error-law pair violates E[phi(eps)] = 0.

    Raised when:
    - gamma_sigma2 finds a nonzero score mean (e.g. Quantile alpha != 0.5
      under a symmetric error law)
    """
    pass


class SolverError(MEstError):
    """Base class for optimization failures."""
    pass


class MaxIterExceeded(SolverError):
    """Iteration budget exhausted before the KKT certificate was met.

    The solver itself returns the best iterate with converged=False;
    this is raised by FitResult.raise_for_status().

    Attributes:
        result: The best FitResult found
    """

    def __init__(self, message: str, result: Optional[Any] = None):
        super().__init__(message)
        self.result = result


class NonFiniteEncountered(SolverError):
    """NaN or inf appeared in the iterates.

    Raised when:
    - The splitting iterates blow up (aborts the fit)
    """
    pass


class DegenerateFit(MEstError):
    """BIC is undefined because the fit interpolates the data.

    Raised when:
    - The mean loss of a fit is <= 1e-12
    """
    pass


class TuningError(MEstError):
    """Tuning-parameter selection failed.

    Raised when:
    - Every lambda on the grid failed to produce a usable fit
    """
    pass


class ScenarioError(MEstError):
    """Invalid simulation scenario or method.

    Raised when:
    - ScenarioConfig has p < k, n < 1 or |rho| >= 1
    - An Oracle method is requested without a true support
    - An unknown method or distribution name is given
    - normality_check gets replicates < 1 or ||u|| > 1
    """
    pass


class FailureBudgetExceeded(MEstError):
    """Too many method fits failed within a scenario.

    Raised when:
    - More than 1% of the fits of a scenario raised or did not converge
    """
    pass
