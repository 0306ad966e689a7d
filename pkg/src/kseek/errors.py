"""Exception types shared across the package."""


class KseekError(Exception):
    """Base class for all package errors."""


class DimensionError(KseekError, ValueError):
    """Shapes of model, data, or partitions do not agree."""


class DomainError(KseekError, ValueError):
    """Argument outside the mathematical domain of the operation."""


class SingularCovariance(KseekError):
    """A covariance matrix is not symmetric positive definite."""


class DegenerateComponent(KseekError):
    """A mixture component collapsed during estimation.

    Carries the index of the offending component in ``component``.
    """

    def __init__(self, component, message=None):
        self.component = component
        super().__init__(message or f"component {component} degenerated")


class DegenerateVariance(KseekError):
    """Pooled variance cannot be estimated (too few samples per cluster)."""


class CalibrationFailed(KseekError):
    """Overlap calibration could not reach the target within budget.

    Carries the best realized average overlap in ``best_omega_bar``.
    """

    def __init__(self, best_omega_bar, message=None):
        self.best_omega_bar = best_omega_bar
        super().__init__(
            message or f"calibration failed, best omega_bar={best_omega_bar:.6g}"
        )


class PgMeansFailed(KseekError):
    """Every EM restart degenerated while growing the mixture.

    Carries the last successfully fitted model in ``last_model``.
    """

    def __init__(self, last_model, message=None):
        self.last_model = last_model
        super().__init__(message or "all EM restarts degenerated")


class NoConvergence(KseekError):
    """Iterative solver exhausted its sweep budget.

    Carries the last iterate in ``last_iterate``.
    """

    def __init__(self, last_iterate, message=None):
        self.last_iterate = last_iterate
        super().__init__(message or "solver did not converge")
