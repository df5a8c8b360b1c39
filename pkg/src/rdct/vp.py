"""Vanishing point of the translation direction given the vanishing line and lambda.

With ``H = I + u l^T`` and ``l3 = 1``, eliminating the homogeneous scale of
``alpha x' = H x`` leaves, per undistorted correspondence ``x <-> x'``,

    (l.x) u1 - x' (l.x) u3 = x' - x
    (l.x) u2 - y' (l.x) u3 = y' - y

which is linear in ``u``.  The incidence ``l.u = 0`` is imposed exactly
through the KKT system of the equality-constrained least-squares problem.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .errors import RankDeficient

KKT_COND_MAX = 1e12


@njit(cache=True)
def _solve_gepp(A, b, x):
    """Gaussian elimination with partial pivoting on a small dense system.

    Overwrites ``A`` and ``b``.  Returns the ratio of the smallest to the
    largest pivot magnitude, a cheap stand-in for the reciprocal condition.
    """
    n = A.shape[0]
    pmax = 0.0
    pmin = np.inf
    for k in range(n):
        p = k
        best = abs(A[k, k])
        for i in range(k + 1, n):
            if abs(A[i, k]) > best:
                best = abs(A[i, k])
                p = i
        if p != k:
            for j in range(n):
                t = A[k, j]
                A[k, j] = A[p, j]
                A[p, j] = t
            t = b[k]
            b[k] = b[p]
            b[p] = t
        piv = A[k, k]
        pmax = max(pmax, abs(piv))
        pmin = min(pmin, abs(piv))
        if piv == 0.0:
            return 0.0
        for i in range(k + 1, n):
            f = A[i, k] / piv
            if f != 0.0:
                for j in range(k, n):
                    A[i, j] -= f * A[k, j]
                b[i] -= f * b[k]
    for i in range(n - 1, -1, -1):
        s = b[i]
        for j in range(i + 1, n):
            s -= A[i, j] * x[j]
        x[i] = s / A[i, i]
    return pmin / pmax if pmax > 0.0 else 0.0


@njit(cache=True)
def recover_vp_kernel(l, lam, pd, pdp, n, u_out):
    """Fill ``u_out`` from the first ``n`` correspondences.

    Returns ``(status, skipped)``: status 0 on success, 1 when fewer than two
    correspondences survive dehomogenization, 2 when the KKT matrix is
    numerically singular.
    """
    MtM = np.zeros((3, 3))
    Mty = np.zeros(3)
    used = 0
    skipped = 0
    for i in range(n):
        x = pd[i, 0]
        y = pd[i, 1]
        w = 1.0 + lam * (x * x + y * y)
        xp = pdp[i, 0]
        yp = pdp[i, 1]
        wp = 1.0 + lam * (xp * xp + yp * yp)
        if abs(w) <= 1e-12 * np.sqrt(x * x + y * y + w * w) or abs(wp) <= 1e-12 * np.sqrt(
            xp * xp + yp * yp + wp * wp
        ):
            skipped += 1
            continue
        x /= w
        y /= w
        xp /= wp
        yp /= wp
        a = l[0] * x + l[1] * y + l[2]
        # row (a, 0, -xp a) -> xp - x ; row (0, a, -yp a) -> yp - y
        r1 = (a, 0.0, -xp * a)
        r2 = (0.0, a, -yp * a)
        y1 = xp - x
        y2 = yp - y
        for j in range(3):
            Mty[j] += r1[j] * y1 + r2[j] * y2
            for k in range(3):
                MtM[j, k] += r1[j] * r1[k] + r2[j] * r2[k]
        used += 1
    if used < 2:
        return 1, skipped
    K = np.zeros((4, 4))
    rhs = np.zeros(4)
    for j in range(3):
        for k in range(3):
            K[j, k] = MtM[j, k]
        K[j, 3] = l[j]
        K[3, j] = l[j]
        rhs[j] = Mty[j]
    sol = np.empty(4)
    rc = _solve_gepp(K, rhs, sol)
    if not (rc * KKT_COND_MAX > 1.0) or not np.isfinite(sol[0] + sol[1] + sol[2]):
        return 2, skipped
    # remove the round-off component along l so that l.u = 0 holds tightly
    ll = l[0] * l[0] + l[1] * l[1] + l[2] * l[2]
    lu = l[0] * sol[0] + l[1] * sol[1] + l[2] * sol[2]
    for j in range(3):
        u_out[j] = sol[j] - lu * l[j] / ll
    return 0, skipped


def recover_vp(l, lam: float, pd, pd_prime) -> np.ndarray:
    """Constrained least-squares vanishing point ``u`` (with ``H = I + u l^T``).

    Parameters
    ----------
    l : (3,) vanishing line, ``l3 = 1``
    lam : division-model parameter
    pd, pd_prime : (n, 2) normalized distorted correspondences, ``n >= 2``
    """
    l = np.ascontiguousarray(l, dtype=float)
    pd = np.ascontiguousarray(pd, dtype=float)
    pdp = np.ascontiguousarray(pd_prime, dtype=float)
    u = np.empty(3)
    status, _ = recover_vp_kernel(l, float(lam), pd, pdp, pd.shape[0], u)
    if status != 0:
        raise RankDeficient("vanishing point is not determined by these correspondences")
    return u


def vp_residual(l, lam: float, u, pd, pd_prime) -> np.ndarray:
    """Residual ``M u - y`` of the stacked linear constraints (for checking)."""
    rows = []
    for (x, y), (xp, yp) in zip(np.asarray(pd, float), np.asarray(pd_prime, float)):
        w = 1.0 + lam * (x * x + y * y)
        wp = 1.0 + lam * (xp * xp + yp * yp)
        x, y, xp, yp = x / w, y / w, xp / wp, yp / wp
        a = l[0] * x + l[1] * y + l[2]
        rows.append(a * u[0] - xp * a * u[2] - (xp - x))
        rows.append(a * u[1] - yp * a * u[2] - (yp - y))
    return np.array(rows)
