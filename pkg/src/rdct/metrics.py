"""Evaluation metrics against a ground-truth scene, and the model-scoring error.

Warp and transfer errors are reported in pixels; the symmetric transfer
error used for scoring is in normalized units squared.
"""

from __future__ import annotations

import numpy as np

from ._transfer import NO_PREIMAGE_PENALTY, pair_transfer_errors
from .errors import DegenerateU, UnrectifiablePoint
from .geom import EPS_W, dehomogenize, distort_point, undistort_point, vanishing_line

GN_ITERS = 5


def rectify_points(pd, l, lam: float) -> np.ndarray:
    """``H(l) f(x~, lam)`` dehomogenized; nan where the rectified ``w`` vanishes."""
    x = undistort_point(pd, lam)
    l = np.asarray(l, dtype=float)
    out = x.copy()
    out[..., 2] = x @ l
    return dehomogenize(out, EPS_W)


def _reimage(A6, r, P, lam):
    A = A6.reshape(2, 3)
    X = r @ A[:, :2].T + A[:, 2]
    x = np.concatenate([X, np.ones((len(X), 1))], axis=-1) @ P.T
    return distort_point(x, lam, strict=False)


def _fit_affine(r, X) -> np.ndarray:
    """Least-squares affine map from rectified points ``r`` to plane points ``X``."""
    D = np.concatenate([r, np.ones((len(r), 1))], axis=-1)
    sol, *_ = np.linalg.lstsq(D, X, rcond=None)
    return sol.T.ravel()


def _cost(A6, r, P, lam, target):
    res = _reimage(A6, r, P, lam) - target
    c = float(np.sum(res * res))
    return c if np.isfinite(c) else np.inf


def warp_error_rectified(r, gt, *, polish: bool = True, n: int = 10) -> float:
    """RMS warp error (px) given already-rectified tessellation points ``r``.

    ``r`` must correspond row by row to ``gt.tessellation(n)``.  The affine
    ambiguity between the rectified plane and the ground-truth plane is
    fitted in closed form and then refined by a few Gauss-Newton steps on
    the image-space residual.
    """
    r = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r)):
        return np.inf
    X = gt.tessellation(n)
    target = gt.image_points(X)
    A6 = _fit_affine(r, X)
    cost = _cost(A6, r, gt.P, gt.lam, target)
    if polish and np.isfinite(cost):
        A6, cost = _gauss_newton(A6, cost, r, gt.P, gt.lam, target)
    if not np.isfinite(cost):
        return np.inf
    return float(np.sqrt(cost / len(X)) / gt.frame.norm_scale)


def _gauss_newton(A6, cost, r, P, lam, target):
    for _ in range(GN_ITERS):
        f0 = (_reimage(A6, r, P, lam) - target).ravel()
        J = np.empty((f0.size, 6))
        for k in range(6):
            h = 1e-7 * max(1.0, abs(A6[k]))
            Ah = A6.copy()
            Ah[k] += h
            J[:, k] = ((_reimage(Ah, r, P, lam) - target).ravel() - f0) / h
        if not np.all(np.isfinite(J)):
            break
        step, *_ = np.linalg.lstsq(J, -f0, rcond=None)
        improved = False
        for _ in range(4):
            c = _cost(A6 + step, r, P, lam, target)
            if c < cost:
                A6, improved = A6 + step, True
                done = cost - c <= 1e-12 * cost
                cost = c
                break
            step = 0.5 * step
        if not improved or done:
            break
    return A6, cost


def warp_error(model, gt, *, polish: bool = True, n: int = 10, strict: bool = False) -> float:
    """RMS warp error in pixels of a rectification model on a ground-truth scene.

    Returns ``inf`` when a tessellation point is sent to the line at
    infinity by the estimate (or raises :class:`UnrectifiablePoint` with
    ``strict``).
    """
    pd = gt.image_points(gt.tessellation(n))
    r = rectify_points(pd, model.l, model.lam)
    if not np.all(np.isfinite(r)):
        if strict:
            raise UnrectifiablePoint("a tessellation point maps to infinity under the estimate")
        return np.inf
    return warp_error_rectified(r, gt, polish=polish, n=n)


def plane_translation(u, l, P) -> np.ndarray:
    """Scene-plane preimage ``U`` of the estimated conjugate translation ``I + u l^T``."""
    lP = vanishing_line(P, normalize=False)
    proj = np.asarray(u, float) * (np.asarray(l, float) @ lP) / (lP @ lP)
    return np.linalg.solve(P, proj)


def _direction_transfer(u, l, lam_hat, gt, k, n):
    U_hat = plane_translation(u, l, gt.P)
    nU = np.linalg.norm(U_hat[:2])
    if nU < 1e-10:
        raise DegenerateU("estimated translation has no extent on the scene plane")
    H1 = np.eye(3) + np.outer(u, l) / nU
    Ugt = gt.translations[k]
    X = gt.tessellation(n)
    a = gt.image_points(X)
    b = gt.image_points(X + Ugt / np.linalg.norm(Ugt))
    pred = distort_point(undistort_point(a, lam_hat) @ H1.T, lam_hat, strict=False)
    d2 = np.sum((pred - b) ** 2, axis=-1)
    return np.where(np.isfinite(d2), d2, np.inf)


def transfer_error(model, gt, direction: int | None = None, *, n: int = 10) -> float:
    """RMS geometric transfer error (px) of the unit-magnitude conjugate translation.

    The estimated translation is rescaled to unit length on the scene plane
    and compared with the unit ground-truth translation of the same
    direction over the tessellation.  A second direction carried by the
    model is pooled into the RMS.
    """
    if model.u is None:
        raise ValueError("transfer error needs a vanishing point")
    k = model.direction if direction is None else direction
    d2 = [_direction_transfer(model.u, model.l, model.lam, gt, k, n)]
    if model.v is not None and direction is None:
        d2.append(_direction_transfer(model.v, model.l, model.lam, gt, model.v_direction, n))
    d2 = np.concatenate(d2)
    return float(np.sqrt(np.mean(d2)) / gt.frame.norm_scale)


def lambda_rel_error(lam_hat: float, lam_gt: float, *, with_flag: bool = False):
    """``|lam_hat - lam_gt| / |lam_gt|``; absolute error when ``lam_gt = 0``.

    With ``with_flag`` returns ``(value, is_relative)``.
    """
    err = abs(lam_hat - lam_gt)
    rel = lam_gt != 0
    val = err / abs(lam_gt) if rel else err
    return (val, rel) if with_flag else val


def symm_transfer_errors(model, pd, pd_prime) -> np.ndarray:
    """Per-correspondence symmetric transfer error (normalized units squared).

    Transfers without a real distorted preimage count as
    ``NO_PREIMAGE_PENALTY`` each.
    """
    pd = np.ascontiguousarray(np.asarray(pd, float).reshape(-1, 2))
    pdp = np.ascontiguousarray(np.asarray(pd_prime, float).reshape(-1, 2))
    out = np.empty(len(pd))
    pair_transfer_errors(
        np.ascontiguousarray(model.l, dtype=float),
        np.ascontiguousarray(model.u, dtype=float),
        float(model.lam),
        pd,
        pdp,
        len(pd),
        out,
    )
    return out


def symm_transfer_error(model, pd, pd_prime) -> float:
    """Sum of symmetric transfer errors over the given correspondences."""
    return float(np.sum(symm_transfer_errors(model, pd, pd_prime)))


__all__ = [
    "NO_PREIMAGE_PENALTY",
    "lambda_rel_error",
    "plane_translation",
    "rectify_points",
    "symm_transfer_error",
    "symm_transfer_errors",
    "transfer_error",
    "warp_error",
    "warp_error_rectified",
]
