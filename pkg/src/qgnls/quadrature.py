"""Tanh-sinh (double exponential) quadrature on a finite interval.

Used as an independent cross-check of the adaptive Gauss results in
:mod:`qgnls.phase`.  The integrand is called as ``f(x, da, db)`` where ``da``
and ``db`` are the distances to the two endpoints, computed without
cancellation, so endpoint singularities like 1/sqrt(b - x) stay accurate.
"""

from __future__ import annotations

import math

import numpy as np


def _nodes(h: float, tmax: float):
    t = np.arange(-math.floor(tmax / h), math.floor(tmax / h) + 1) * h
    u = 0.5 * math.pi * np.sinh(t)
    with np.errstate(over="ignore"):
        da = 2.0 / (1.0 + np.exp(-2.0 * u))  # 1 + tanh(u)
        db = 2.0 / (1.0 + np.exp(2.0 * u))  # 1 - tanh(u)
        w = 0.5 * math.pi * np.cosh(t) / np.cosh(u) ** 2
    return da, db, w


def tanh_sinh(f, a: float, b: float, tol: float = 1e-13, h0: float = 0.5,
              tmax: float = 4.5, max_levels: int = 10) -> tuple[float, float]:
    """Integrate ``f(x, x - a, b - x)`` over [a, b]; returns (value, error estimate)."""
    if b == a:
        return 0.0, 0.0
    if b < a:
        val, err = tanh_sinh(lambda x, da, db: f(x, db, da), b, a, tol, h0, tmax, max_levels)
        return -val, err
    r = 0.5 * (b - a)
    prev = None
    h = h0
    for _ in range(max_levels):
        da, db, w = _nodes(h, tmax)
        keep = (da > 0) & (db > 0) & (w > 0)
        da, db, w = r * da[keep], r * db[keep], r * w[keep]
        x = np.where(da < db, a + da, b - db)
        fx = np.asarray(f(x, da, db), dtype=float)
        est = h * float(np.sum(w * fx))
        if prev is not None:
            err = abs(est - prev)
            if err <= tol * abs(est):
                return est, err
        prev = est
        h *= 0.5
    return est, abs(est - prev)
