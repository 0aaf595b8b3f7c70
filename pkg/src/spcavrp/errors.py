"""Exception types raised by the toolkit."""


class SpcaError(Exception):
    """Base class for all toolkit errors."""


class InvalidInput(SpcaError, ValueError):
    """Arguments violate a documented precondition."""


class RankDeficient(SpcaError, ValueError):
    """A nonzero matrix expected to have full column rank does not."""


class TooLarge(SpcaError, ValueError):
    """An enumeration would exceed its configured size cap."""


class Unreachable(SpcaError, ValueError):
    """The requested hypergeometric tail has probability zero."""


class DegenerateDeflation(SpcaError, ArithmeticError):
    """The deflated submatrix has no positive leading eigenvalue."""

    def __init__(self, step, value):
        self.step = step
        self.value = value
        super().__init__(
            f"deflation step {step}: leading eigenvalue {value:.3e} is numerically zero"
        )
