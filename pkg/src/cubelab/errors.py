"""Exception hierarchy shared by every cubelab module."""


class CubelabError(Exception):
    pass


class WindowExhausted(CubelabError):
    """A symbolic point lacks the symbols (or resolution) a query needs."""


class OverflowGuard(CubelabError):
    """An iterate exponent is outside the exact-arithmetic range."""


class KindMismatch(CubelabError):
    pass


class DimensionMismatch(CubelabError):
    pass


class RangeExceeded(CubelabError):
    pass


class ConfigError(CubelabError):
    pass


class BudgetExceeded(CubelabError):
    """A bounded search ran out of budget.

    ``best`` holds whatever partial result the search had produced (usually a
    :class:`~cubelab.rp.WitnessReport`).
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class InvariantViolation(CubelabError):
    """A hard mathematical assertion failed (e.g. a Lipschitz replay bound)."""
