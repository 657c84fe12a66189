"""Exception types raised by qherm."""


class QhermError(Exception):
    """Base class for all qherm errors."""


class SpecificationError(QhermError, ValueError):
    """A chain specification violates its structural invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class DecouplingError(QhermError, ValueError):
    """A zero hopping splits the chain, so no diagonal metric exists."""

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"H[{index},{index + 1}] = 0: chain decouples at bond {index}")


class NotSymmetrizableError(QhermError, ValueError):
    """Some hopping ratio is not strictly positive."""

    def __init__(self, index: int, ratio: complex):
        self.index = index
        self.ratio = ratio
        super().__init__(f"ratio R_{index} = {ratio!r} is not real positive")


class MetricRangeError(QhermError, OverflowError):
    """Exponentiating a log-scaled metric entry overflows double precision."""

    def __init__(self, index: int, log_magnitude: float):
        self.index = index
        self.log_magnitude = log_magnitude
        super().__init__(
            f"component {index} overflows: log-magnitude {log_magnitude:.6g}"
        )


class ContractError(QhermError, ValueError):
    """Input violates a solver precondition (e.g. non-symmetric matrix)."""


class ConvergenceError(QhermError, RuntimeError):
    """An iterative solver failed to converge."""

    def __init__(self, message: str, residuals=None):
        self.residuals = residuals
        super().__init__(message)


class DomainError(QhermError, ValueError):
    """Model parameters outside the domain of a closed-form solution."""
