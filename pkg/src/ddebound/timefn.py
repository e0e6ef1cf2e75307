"""Helpers for scalar functions of time used as system coefficients."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .expressions import Expression

__all__ = [
    "TimeFunction",
    "ConstantFn",
    "as_time_function",
    "memoize_last",
    "grid_supremum",
]

TimeFunction = Callable[[float], float]


class ConstantFn:
    """Time function that ignores ``t``; keeps the constant inspectable."""

    __slots__ = ("value",)

    def __init__(self, value: float):
        self.value = float(value)

    def __call__(self, t: float) -> float:
        return self.value

    def __repr__(self) -> str:
        return f"ConstantFn({self.value!r})"


def as_time_function(value) -> TimeFunction:
    """Normalize a number, `Expression` or callable into ``t -> float``."""
    if isinstance(value, ConstantFn):
        return value
    if isinstance(value, (int, float)):
        return ConstantFn(value)
    if isinstance(value, Expression):
        if value.is_constant():
            return ConstantFn(value.constant_value())
        return value.compiled()
    if callable(value):
        return value
    raise TypeError(f"cannot interpret {value!r} as a function of time")


class _MemoLast:
    """Caches the most recent (t, value) pair.

    Integration right sides evaluate several coefficient functions that share
    one expensive sub-function (e.g. a matrix norm) at the same time point;
    this keeps those shared evaluations to one per time point.  The pair is
    swapped as a single tuple so concurrent readers never see a torn cache;
    redundant refills are harmless (the wrapped function is pure).
    """

    __slots__ = ("fn", "_pair")

    def __init__(self, fn: TimeFunction):
        self.fn = fn
        self._pair = (math.nan, math.nan)

    def __call__(self, t: float) -> float:
        pair = self._pair
        if pair[0] != t:
            pair = (t, self.fn(t))
            self._pair = pair
        return pair[1]


def memoize_last(fn: TimeFunction) -> TimeFunction:
    if isinstance(fn, (ConstantFn, _MemoLast)):
        return fn
    return _MemoLast(fn)


def grid_supremum(fn: TimeFunction, t_lo: float, t_hi: float,
                  samples: int = 10_000, margin: float = 0.0,
                  overflow_guard: float = 1e12) -> float:
    """Supremum of ``fn`` on ``[t_lo, t_hi]`` approximated on a uniform grid.

    The grid maximum is inflated by ``margin`` relative to its magnitude so
    that the returned value errs on the side of dominating the true supremum.
    Constants are returned as-is (their supremum is exact).
    """
    if t_hi < t_lo:
        raise ValueError(f"empty interval [{t_lo}, {t_hi}]")
    if isinstance(fn, ConstantFn):
        best = fn.value
    else:
        grid = np.linspace(t_lo, t_hi, max(2, samples))
        best = max(fn(float(t)) for t in grid)
    if not np.isfinite(best) or abs(best) > overflow_guard:
        raise OverflowError(f"supremum sample {best!r} exceeds the overflow guard")
    return best + margin * abs(best)
