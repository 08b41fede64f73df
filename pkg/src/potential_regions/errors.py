"""Exception hierarchy shared by every module of the package."""


class LabError(Exception):
    """Base class for all errors raised by potential_regions."""


class InvalidParameterError(LabError, ValueError):
    pass


class InvalidIntervalError(LabError, ValueError):
    pass


class OutOfRangeError(LabError, ValueError):
    """A height or coordinate falls outside a tabulated range."""

    def __init__(self, value, lo, hi, what="height"):
        self.value, self.lo, self.hi = value, lo, hi
        super().__init__(f"{what} {value!r} outside table range [{lo!r}, {hi!r}]")


class NumericalFailureError(LabError, RuntimeError):
    """Adaptive quadrature did not converge within its evaluation budget."""

    def __init__(self, message, residual=float("nan")):
        self.residual = residual
        super().__init__(f"{message} (residual {residual:.3e})")


class ConsistencyError(LabError, RuntimeError):
    """An internal invariant failed, usually a symptom of quadrature trouble."""


class DominationError(LabError, ValueError):
    pass


class GaugeNotTangentialError(LabError, ValueError):
    pass


class TableExhaustedError(LabError, RuntimeError):
    """No admissible level exists inside the gauge table; extend it downward."""


class CoverageError(LabError, ValueError):
    def __init__(self, y_range, t_range):
        self.y_range, self.t_range = y_range, t_range
        super().__init__(
            "field grid does not cover the region: missing y in "
            f"[{y_range[0]:.6g}, {y_range[1]:.6g}] at t in [{t_range[0]:.6g}, {t_range[1]:.6g}]"
        )
