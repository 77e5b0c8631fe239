"""Exception hierarchy shared by all flockopt modules."""


class FlockoptError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(FlockoptError, ValueError):
    """A configuration or parameter document is invalid."""


class InfeasibleConfigError(ConfigError):
    """Initial placement could not satisfy the spacing constraint."""


class SimulationDiverged(FlockoptError, RuntimeError):
    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"non-finite swarm state at step {step}")


class DegenerateColumnError(FlockoptError, ValueError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"objective column {column!r} has zero variance")


class AmbiguousPartitionError(FlockoptError, ValueError):
    def __init__(self, objectives, message=None):
        self.objectives = list(objectives)
        super().__init__(message or f"ambiguous sign partition at {self.objectives}")


class NumericalFailure(FlockoptError, ArithmeticError):
    """An iterative numerical routine failed to converge."""


class ZeroAmplitudeError(FlockoptError, ValueError):
    """A time series carries no oscillation to fit."""


class FitFailed(FlockoptError, RuntimeError):
    def __init__(self, params, residual, message=None):
        self.params = params
        self.residual = residual
        super().__init__(message or f"sinusoid fit did not converge (rms residual {residual:.3g})")


class DegenerateFitError(FlockoptError, ValueError):
    """Fitted amplitude too small for a loiter fitness."""
