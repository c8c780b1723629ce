"""Scalar search routines used by the numeric solver paths."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy.optimize import bisect

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
INV_PHI_SQ = (3.0 - math.sqrt(5.0)) / 2.0


def golden_section_max(
    f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10
) -> tuple[float, float]:
    """Maximise a unimodal ``f`` on ``[lo, hi]``.

    ``f`` may return ``-inf`` on an infeasible part of the interval as long as
    the feasible part is an interval on which ``f`` is unimodal.  The returned
    point is the best one evaluated, so it is always feasible when any
    evaluated point was.
    """
    a, b = min(lo, hi), max(lo, hi)
    best_x, best_f = a, f(a)
    fb = f(b)
    if fb > best_f:
        best_x, best_f = b, fb
    h = b - a
    if h <= tol:
        return best_x, best_f
    n = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))
    c, d = a + INV_PHI_SQ * h, a + INV_PHI * h
    yc, yd = f(c), f(d)
    for _ in range(n):
        for x, y in ((c, yc), (d, yd)):
            if y > best_f:
                best_x, best_f = x, y
        if yc >= yd:
            b, d, yd = d, c, yc
            h *= INV_PHI
            c = a + INV_PHI_SQ * h
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            h *= INV_PHI
            d = a + INV_PHI * h
            yd = f(d)
    for x, y in ((c, yc), (d, yd)):
        if y > best_f:
            best_x, best_f = x, y
    return best_x, best_f


def grid_then_golden_max(
    f: Callable[[float], float],
    f_vec: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    grid_size: int = 2001,
    tol: float = 1e-10,
) -> tuple[float, float]:
    """Coarse grid search followed by golden-section refinement around the best node."""
    grid = np.linspace(lo, hi, grid_size)
    values = f_vec(grid)
    k = int(np.argmax(values))
    if not np.isfinite(values[k]):
        return float(grid[k]), float(values[k])
    left = grid[max(k - 1, 0)]
    right = grid[min(k + 1, grid_size - 1)]
    x, fx = golden_section_max(f, float(left), float(right), tol=tol)
    if fx < values[k]:
        return float(grid[k]), float(values[k])
    return x, fx


def bisect_root(f: Callable[[float], float], lo: float, hi: float) -> float:
    """Root of ``f`` on ``[lo, hi]`` by bisection, to machine precision.

    ``f(lo)`` and ``f(hi)`` must differ in sign.
    """
    return float(bisect(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500))
