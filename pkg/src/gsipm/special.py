"""Exponential integral Ei for positive arguments.

Two regimes, split at x = 40: the everywhere-convergent power series
Ei(x) = gamma + ln x + sum x^k/(k*k!), and the asymptotic expansion
e^x/x * sum k!/x^k truncated at its smallest term. Both reach 1e-12
relative error in double precision on their side of the split; arguments
above 700 would push e^x out of double range and are rejected.

The scalar worker `_ei_raw` is written in njit-compatible Python (math
module only) so the kernel module can compile the identical source.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NonPositiveArgument, Overflow

EULER_GAMMA = 0.5772156649015329

_SPLIT = 40.0
_MAX_ARG = 700.0


def _ei_raw(x: float) -> float:
    # caller guarantees 0 < x <= 700
    if x <= _SPLIT:
        total = EULER_GAMMA + math.log(x)
        term = 1.0
        for k in range(1, 500):
            term *= x / k
            contrib = term / k
            total += contrib
            if contrib <= 1e-17 * abs(total):
                break
        return total
    # asymptotic: terms k!/x^k shrink until k ~ x, far below 1e-12 by then
    s = 1.0
    term = 1.0
    for k in range(1, 400):
        nxt = term * k / x
        if nxt >= term:
            break
        s += nxt
        term = nxt
        if nxt <= 1e-17 * s:
            break
    return math.exp(x) / x * s


def ei(x: float) -> float:
    """Ei(x) for 0 < x <= 700."""
    x = float(x)
    if not x > 0.0:
        raise NonPositiveArgument(f"ei requires x > 0, got {x}")
    if x > _MAX_ARG:
        raise Overflow(f"ei overflow: x = {x} > {_MAX_ARG}")
    return _ei_raw(x)


def _ei_array_unchecked(x: np.ndarray) -> np.ndarray:
    """Vectorized Ei; caller guarantees every element in (0, 700]."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)

    small = x <= _SPLIT
    if small.any():
        xs = x[small]
        total = EULER_GAMMA + np.log(xs)
        term = np.ones_like(xs)
        for k in range(1, 500):
            term *= xs / k
            contrib = term / k
            total += contrib
            if np.all(contrib <= 1e-17 * np.abs(total)):
                break
        out[small] = total

    large = ~small
    if large.any():
        xl = x[large]
        s = np.ones_like(xl)
        term = np.ones_like(xl)
        alive = np.ones(xl.shape, dtype=bool)
        for k in range(1, 400):
            nxt = term * (k / xl)
            alive &= nxt < term
            if not alive.any():
                break
            s = np.where(alive, s + nxt, s)
            term = np.where(alive, nxt, term)
            alive &= nxt > 1e-17 * s
            if not alive.any():
                break
        out[large] = np.exp(xl) / xl * s

    return out


def ei_array(x) -> np.ndarray:
    """Vectorized :func:`ei` with the same domain checks."""
    x = np.asarray(x, dtype=np.float64)
    if x.size and not np.all(x > 0.0):
        raise NonPositiveArgument("ei requires x > 0")
    if x.size and np.any(x > _MAX_ARG):
        raise Overflow(f"ei overflow: max x = {x.max()} > {_MAX_ARG}")
    return _ei_array_unchecked(x)
