"""Exception hierarchy shared by all modules."""


class WpcjError(Exception):
    """Base class for package errors."""


class ConfigError(WpcjError, ValueError):
    """Invalid system configuration or experiment specification."""


class DimensionError(WpcjError, ValueError):
    """Inconsistent vector/matrix dimensions."""


class NotHermitianError(WpcjError, ValueError):
    pass


class SolverError(WpcjError):
    """Base for failures reported by the cone solver.

    ``solution`` carries the :class:`~wpcj.conic.ConeSolution` when one exists.
    """

    def __init__(self, message: str, solution=None):
        super().__init__(message)
        self.solution = solution


class NumericalFailure(SolverError):
    pass


class InfeasibleProblem(SolverError):
    pass


class UnboundedProblem(SolverError):
    pass


class Rank1ExtractionError(WpcjError):
    """The relaxed beamforming matrix is not numerically rank one."""

    def __init__(self, message: str, ratio: float):
        super().__init__(message)
        self.ratio = ratio


class AllZeroError(WpcjError, ValueError):
    """Rank-one extraction was asked to factor a (numerically) zero matrix."""


class MissingDuals(WpcjError):
    pass


class InitializationInfeasible(WpcjError):
    """No feasible starting point exists for a CCCP run."""
