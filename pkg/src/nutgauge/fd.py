"""Central finite differences with one level of Richardson extrapolation."""

from __future__ import annotations

from typing import Callable

import numpy as np


def central(fun: Callable[[np.ndarray], np.ndarray], x: np.ndarray, axis: int, h: float) -> np.ndarray:
    e = np.zeros_like(x, dtype=float)
    e[axis] = h
    return (np.asarray(fun(x + e)) - np.asarray(fun(x - e))) / (2.0 * h)


def derivative(fun, x, axis: int, h: float, with_error: bool = False):
    """d fun / d x[axis] with O(h^4) error.

    The error estimate is the gap between the extrapolated value and the
    plain central difference at h/2.
    """
    x = np.asarray(x, dtype=float)
    d1 = central(fun, x, axis, h)
    d2 = central(fun, x, axis, h / 2.0)
    d = (4.0 * d2 - d1) / 3.0
    if with_error:
        return d, np.max(np.abs(d - d2))
    return d


def jacobian(fun, x, h: float, with_error: bool = False):
    """Stack of derivatives along every axis of x; new axis first."""
    x = np.asarray(x, dtype=float)
    parts = [derivative(fun, x, i, h, with_error=True) for i in range(x.shape[0])]
    jac = np.stack([p[0] for p in parts])
    if with_error:
        return jac, max(p[1] for p in parts)
    return jac


def second_derivative(fun, x, axis: int, h: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    e = np.zeros_like(x)

    def d2(step):
        e[:] = 0.0
        e[axis] = step
        return (np.asarray(fun(x + e)) - 2.0 * np.asarray(fun(x)) + np.asarray(fun(x - e))) / step**2

    a, b = d2(h), d2(h / 2.0)
    return (4.0 * b - a) / 3.0


def mixed_derivative(fun, x, i: int, j: int, h: float) -> np.ndarray:
    if i == j:
        return second_derivative(fun, x, i, h)
    return derivative(lambda y: derivative(fun, y, j, h), x, i, h)
