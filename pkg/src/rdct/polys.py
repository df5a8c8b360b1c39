"""Small dense univariate polynomials (ascending coefficients) and real roots.

Roots are isolated on an interval by splitting it at the real critical
points (roots of the derivative, found the same way one degree down), so
every piece is monotone and holds at most one root.  Each bracketed root is
found by Newton iteration safeguarded with bisection, which also serves as
the polishing step.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .errors import IdenticallyZero

DEGREE_DROP = 1e-12
MERGE_TOL = 1e-8
TANGENT_TOL = 1e-12


def _as_poly(a) -> np.ndarray:
    return np.atleast_1d(np.asarray(a, dtype=float))


def poly_add(a, b) -> np.ndarray:
    a, b = _as_poly(a), _as_poly(b)
    out = np.zeros(max(len(a), len(b)))
    out[: len(a)] += a
    out[: len(b)] += b
    return out


def poly_sub(a, b) -> np.ndarray:
    return poly_add(a, -_as_poly(b))


def poly_mul(a, b) -> np.ndarray:
    return np.convolve(_as_poly(a), _as_poly(b))


def poly_eval(c, x):
    c = _as_poly(c)
    return np.polynomial.polynomial.polyval(x, c)


@njit(cache=True)
def _horner(c, d, x):
    p = c[d]
    dp = 0.0
    for i in range(d - 1, -1, -1):
        dp = dp * x + p
        p = p * x + c[i]
    return p, dp


@njit(cache=True)
def _abs_scale(c, d, x):
    s = 0.0
    ax = abs(x)
    xp = 1.0
    for i in range(d + 1):
        s += abs(c[i]) * xp
        xp *= ax
    return s


@njit(cache=True)
def _effective_degree(c):
    cmax = 0.0
    for i in range(c.shape[0]):
        if abs(c[i]) > cmax:
            cmax = abs(c[i])
    if cmax == 0.0:
        return -1
    d = c.shape[0] - 1
    while d > 0 and abs(c[d]) <= DEGREE_DROP * cmax:
        d -= 1
    return d


@njit(cache=True)
def _newton_bracket(c, d, a, b, fa):
    x = 0.5 * (a + b)
    for _ in range(200):
        fx, dfx = _horner(c, d, x)
        if fx == 0.0:
            return x
        if (fx > 0.0) == (fa > 0.0):
            a = x
            fa = fx
        else:
            b = x
        xn = x - fx / dfx if dfx != 0.0 else math.nan
        if not (xn > a and xn < b):
            xn = 0.5 * (a + b)
        if abs(xn - x) <= 4e-16 * max(1.0, abs(x)) or b - a <= 4e-16 * max(1.0, abs(x)):
            return xn
        x = xn
    return x


@njit(cache=True)
def _roots_between(c, d, lo, hi, crit, nc, out):
    """Roots of ``c`` on ``[lo, hi]`` given sorted interior critical points."""
    n = 0
    a = lo
    fa, _ = _horner(c, d, a)
    if fa == 0.0:
        out[n] = a
        n += 1
    for k in range(nc + 1):
        b = crit[k] if k < nc else hi
        fb, _ = _horner(c, d, b)
        if fa != 0.0 and fb != 0.0 and (fa > 0.0) != (fb > 0.0):
            out[n] = _newton_bracket(c, d, a, b, fa)
            n += 1
        elif fb == 0.0:
            out[n] = b
            n += 1
        elif k < nc and abs(fb) <= TANGENT_TOL * _abs_scale(c, d, b):
            # even-multiplicity root at a critical point: no sign change
            out[n] = b
            n += 1
        a = b
        fa = fb
    return n


@njit(cache=True)
def _cauchy_clip(c, d, lo, hi):
    bound = 0.0
    for i in range(d):
        r = abs(c[i] / c[d])
        if r > bound:
            bound = r
    bound += 1.0
    return max(lo, -bound), min(hi, bound)


@njit(cache=True)
def _sorted_unique(r, n, lo, hi):
    """Keep roots inside [lo, hi], sort, merge near duplicates (in place)."""
    m = 0
    for i in range(n):
        if r[i] >= lo and r[i] <= hi and not math.isnan(r[i]):
            r[m] = r[i]
            m += 1
    for i in range(1, m):
        v = r[i]
        j = i - 1
        while j >= 0 and r[j] > v:
            r[j + 1] = r[j]
            j -= 1
        r[j + 1] = v
    k = 0
    for i in range(m):
        if k > 0 and abs(r[i] - r[k - 1]) <= MERGE_TOL * max(1.0, abs(r[i])):
            continue
        r[k] = r[i]
        k += 1
    return k


@njit(cache=True)
def _roots_upto2(c, d, lo, hi, out):
    if d <= 0:
        return 0
    if d == 1:
        out[0] = -c[0] / c[1]
        return _sorted_unique(out, 1, lo, hi)
    lo, hi = _cauchy_clip(c, d, lo, hi)
    crit = np.empty(1)
    nc = 0
    x = -c[1] / (2.0 * c[2])
    if x > lo and x < hi:
        crit[0] = x
        nc = 1
    n = _roots_between(c, d, lo, hi, crit, nc, out)
    return _sorted_unique(out, n, lo, hi)


@njit(cache=True)
def _derivative(c, d):
    dc = np.empty(d)
    for i in range(1, d + 1):
        dc[i - 1] = i * c[i]
    return dc


@njit(cache=True)
def _roots_upto3(c, d, lo, hi, out):
    if d <= 2:
        return _roots_upto2(c, d, lo, hi, out)
    lo, hi = _cauchy_clip(c, d, lo, hi)
    crit = np.empty(3)
    nc = _roots_upto2(_derivative(c, d), d - 1, lo, hi, crit)
    n = _roots_between(c, d, lo, hi, crit, nc, out)
    return _sorted_unique(out, n, lo, hi)


@njit(cache=True)
def real_roots_kernel(c, lo, hi, out):
    """Distinct real roots of a polynomial of effective degree <= 4 in [lo, hi].

    Writes into ``out`` (length >= 4) and returns the count, or -1 when every
    coefficient is zero.
    """
    d = _effective_degree(c)
    if d < 0:
        return -1
    if d > 4:
        d = 4
    if d <= 3:
        return _roots_upto3(c, d, lo, hi, out)
    lo, hi = _cauchy_clip(c, d, lo, hi)
    crit = np.empty(4)
    nc = _roots_upto3(_derivative(c, d), d - 1, lo, hi, crit)
    n = _roots_between(c, d, lo, hi, crit, nc, out)
    return _sorted_unique(out, n, lo, hi)


def real_roots_quartic(p, feasible=(-8.0, 1.0), scale: float = 0.0) -> np.ndarray:
    """Sorted distinct real roots of ``p`` (degree <= 4) inside ``feasible``.

    ``feasible`` may use infinite endpoints.  A polynomial whose
    coefficients are all below ``1e-12 * scale`` (or exactly zero when no
    scale is given) raises :class:`IdenticallyZero`.
    """
    c = _as_poly(p)
    cmax = np.max(np.abs(c)) if c.size else 0.0
    if cmax == 0.0 or cmax <= DEGREE_DROP * scale:
        raise IdenticallyZero("polynomial vanishes identically")
    if c.size > 5:
        if np.any(np.abs(c[5:]) > DEGREE_DROP * cmax):
            raise ValueError("polynomial degree exceeds 4")
        c = c[:5]
    c = np.ascontiguousarray(c)
    out = np.empty(8)
    lo, hi = feasible
    n = real_roots_kernel(c, float(lo), float(hi), out)
    return out[:n].copy()
