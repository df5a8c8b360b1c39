"""Eliminated-vanishing-point constraints, evaluated numerically.

For a correspondence ``x~ <-> x~'`` related by a conjugate translation of
relative scale ``s``, ``[f(x~')]_x (I + s u l^T) f(x~) = 0``.  These matrices
are not solved here; they serve as independent checks of ground truth and
of the eliminated-vanishing-line solver.
"""

from __future__ import annotations

import numpy as np

from .geom import skew, undistort_point

# (correspondence, skew row) in the order that gives the documented zero pattern
EVP_ROW_ORDER = ((0, 2), (1, 2), (0, 1), (1, 1), (2, 2), (2, 1))


def evp_constraint_residuals(l, u, sbar: float, lam: float, corr) -> np.ndarray:
    """``[f(x~')]_x (I + sbar u l^T) f(x~)`` for one correspondence ``corr = (pd, pd')``."""
    pd, pdp = corr
    x = undistort_point(np.asarray(pd, float)[:2], lam)
    xp = undistort_point(np.asarray(pdp, float)[:2], lam)
    H = np.eye(3) + sbar * np.outer(np.asarray(u, float), np.asarray(l, float))
    return skew(xp) @ H @ x


def evp_matrix_eval(l1: float, l2: float, sbar3: float, lam: float, corrs) -> np.ndarray:
    """The 7x4 matrix whose null vector is ``(u1, u2, u3, 1)`` at ground truth.

    Six rows are two independent components of the constraint for each of
    the three correspondences (relative scales 1, 1, ``sbar3``); the last
    row is the incidence ``l^T u = 0`` with ``l3 = 1``.
    """
    l = np.array([l1, l2, 1.0])
    scales = (1.0, 1.0, sbar3)
    pts = [
        (undistort_point(np.asarray(pd, float)[:2], lam), undistort_point(np.asarray(pdp, float)[:2], lam))
        for pd, pdp in corrs
    ]
    M = np.zeros((7, 4))
    for r, (i, k) in enumerate(EVP_ROW_ORDER):
        x, xp = pts[i]
        S = skew(xp)
        M[r, :3] = scales[i] * (l @ x) * S[k]
        M[r, 3] = (S @ x)[k]
    M[6] = (l1, l2, 1.0, 0.0)
    return M
