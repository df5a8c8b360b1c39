"""Scalar kernels for distortion and symmetric transfer, shared by solver and metrics."""

from __future__ import annotations

import numpy as np
from numba import njit

NO_PREIMAGE_PENALTY = 1.0


@njit(cache=True)
def distort_scalar(x, y, w, lam):
    """Scalar ``f^d``; returns ``(ok, xd, yd)`` (see ``geom.distort_point``)."""
    r2 = x * x + y * y
    disc = w * w - 4.0 * lam * r2
    if disc < 0.0:
        return False, 0.0, 0.0
    sq = np.sqrt(disc)
    if lam < 0.0:
        den = w + sq
    elif w < 0.0:
        den = w - sq
    else:
        den = w + sq
    if den == 0.0 or not np.isfinite(den):
        return False, 0.0, 0.0
    k = 2.0 / den
    return True, x * k, y * k


@njit(cache=True)
def pair_transfer_errors(l, u, lam, pd, pdp, n, out):
    """Per-correspondence symmetric transfer error (normalized units squared).

    Forward: ``f^d(H f(x~))`` against ``x~'``; backward ``f^d(H^-1 f(x~'))``
    against ``x~``, with ``H = I + u l^T``.  A transfer that has no real
    distorted preimage contributes ``NO_PREIMAGE_PENALTY`` instead.
    """
    lu = l[0] * u[0] + l[1] * u[1] + l[2] * u[2]
    den = 1.0 + lu
    for i in range(n):
        x = pd[i, 0]
        y = pd[i, 1]
        w = 1.0 + lam * (x * x + y * y)
        xp = pdp[i, 0]
        yp = pdp[i, 1]
        wp = 1.0 + lam * (xp * xp + yp * yp)
        e = 0.0
        a = l[0] * x + l[1] * y + l[2] * w
        ok, tx, ty = distort_scalar(x + u[0] * a, y + u[1] * a, w + u[2] * a, lam)
        if ok:
            dx = tx - xp
            dy = ty - yp
            e += dx * dx + dy * dy
        else:
            e += NO_PREIMAGE_PENALTY
        b = (l[0] * xp + l[1] * yp + l[2] * wp) / den
        ok, tx, ty = distort_scalar(xp - u[0] * b, yp - u[1] * b, wp - u[2] * b, lam)
        if ok and den != 0.0:
            dx = tx - x
            dy = ty - y
            e += dx * dx + dy * dy
        else:
            e += NO_PREIMAGE_PENALTY
        if not np.isfinite(e):
            e = 2.0 * NO_PREIMAGE_PENALTY
        out[i] = e
