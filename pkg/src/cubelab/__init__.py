"""Finite-budget experiments on dynamical cubes and regional proximality of order d."""

from .errors import (BudgetExceeded, ConfigError, CubelabError, DimensionMismatch,
                     InvariantViolation, KindMismatch, OverflowGuard, RangeExceeded,
                     WindowExhausted)

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded", "ConfigError", "CubelabError", "DimensionMismatch", "InvariantViolation",
    "KindMismatch", "OverflowGuard", "RangeExceeded", "WindowExhausted",
]
