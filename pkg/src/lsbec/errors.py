"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    pass


class ConvergenceFailure(RuntimeError):
    """Iterative solver stopped without meeting its tolerance.

    ``last`` carries the final iterate so callers can inspect or restart.
    """

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class CalibrationFailure(RuntimeError):
    pass


class NumericFailure(RuntimeError):
    pass


class TableLoadError(IOError):
    pass
