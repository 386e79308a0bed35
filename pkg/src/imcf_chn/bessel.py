"""Modified Bessel functions of the first kind, integer order.

Power series for ``x <= 30`` and the large-argument expansion beyond.  The
scaled and logarithmic variants avoid overflow for large arguments.
"""

from __future__ import annotations

import math

SERIES_LIMIT = 30.0
OVERFLOW_LIMIT = 500.0


def _series(p: int, x: float) -> float:
    half = 0.5 * x
    term = half**p / math.factorial(p)
    total = term
    q = half * half
    m = 0
    while True:
        m += 1
        term *= q / (m * (m + p))
        total += term
        if term <= 1e-17 * total:
            return total


def _asymptotic_scaled(p: int, x: float) -> float:
    """``I_p(x) e^{-x}`` from the expansion in ``1/x``, truncated at the smallest term."""
    mu = 4.0 * p * p
    term, total = 1.0, 1.0
    k = 0
    while k < 60:
        k += 1
        nxt = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(nxt) > abs(term) or nxt == 0.0:
            break
        term = nxt
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    return total / math.sqrt(2.0 * math.pi * x)


def _check(p: int, x: float):
    if p < 0 or int(p) != p:
        raise ValueError(f"order must be a nonnegative integer, got {p}")
    if x < 0:
        raise ValueError(f"argument must be nonnegative, got {x}")


def bessel_I_scaled(p: int, x: float) -> float:
    """``I_p(x) exp(-x)``."""
    _check(p, x)
    if x <= SERIES_LIMIT:
        return _series(int(p), x) * math.exp(-x)
    return _asymptotic_scaled(int(p), x)


def bessel_I_log(p: int, x: float) -> float:
    """``log I_p(x)`` for ``x > 0``."""
    _check(p, x)
    if x == 0:
        return 0.0 if p == 0 else -math.inf
    if x <= SERIES_LIMIT:
        return math.log(_series(int(p), x))
    return x + math.log(_asymptotic_scaled(int(p), x))


def bessel_I(p: int, x: float) -> float:
    """``I_p(x)``; raises ``OverflowError`` above ``x = 500`` (use :func:`bessel_I_log`)."""
    _check(p, x)
    if x > OVERFLOW_LIMIT:
        raise OverflowError(f"I_{p}({x}) is too large; use bessel_I_log")
    if x <= SERIES_LIMIT:
        return _series(int(p), x)
    return math.exp(x) * _asymptotic_scaled(int(p), x)
