"""Homogeneous 2D primitives, the division model and conjugate translations.

All coordinates handled here are *normalized*: the distortion center is
subtracted and pixels are scaled by ``1 / (width + height)``.  Points are
numpy arrays whose last axis holds ``(x, y)`` or ``(x, y, w)``; every
function broadcasts over leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLine, NoRealPreimage, SingularCamera

EPS_W = 1e-12
EPS_L3 = 1e-8


@dataclass(frozen=True)
class ImageFrame:
    """Pixel raster geometry and its normalization."""

    width: int
    height: int
    center: tuple[float, float] | None = None

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        if self.center is None:
            object.__setattr__(self, "center", (self.width / 2.0, self.height / 2.0))

    @property
    def norm_scale(self) -> float:
        return 1.0 / (self.width + self.height)

    @property
    def half_extent(self) -> tuple[float, float]:
        """Normalized half-width and half-height about the center (max over sides)."""
        cx, cy = self.center
        s = self.norm_scale
        return max(cx, self.width - cx) * s, max(cy, self.height - cy) * s

    def contains(self, p: np.ndarray, margin_px: float = 0.0) -> np.ndarray:
        """Mask of normalized points that fall inside the raster."""
        px = denormalize_from_frame(p, self)
        return (
            (px[..., 0] >= margin_px)
            & (px[..., 0] <= self.width - margin_px)
            & (px[..., 1] >= margin_px)
            & (px[..., 1] <= self.height - margin_px)
        )


def normalize_to_frame(p_px, frame: ImageFrame) -> np.ndarray:
    """Pixel points ``(..., 2)`` to normalized, center-subtracted points ``(..., 2)``."""
    p_px = np.asarray(p_px, dtype=float)
    c = np.asarray(frame.center, dtype=float)
    return (p_px[..., :2] - c) * frame.norm_scale


def denormalize_from_frame(p, frame: ImageFrame) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    c = np.asarray(frame.center, dtype=float)
    return p[..., :2] / frame.norm_scale + c


def homogenize(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return np.concatenate([p[..., :2], np.ones(p.shape[:-1] + (1,))], axis=-1)


def dehomogenize(p, eps: float = EPS_W) -> np.ndarray:
    """Divide through by ``w``; points with ``|w| <= eps * |p|`` come back as nan."""
    p = np.asarray(p, dtype=float)
    w = p[..., 2:3]
    bad = np.abs(w) <= eps * np.linalg.norm(p, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = p[..., :2] / w
    return np.where(bad, np.nan, out)


def undistort_point(pd, lam: float) -> np.ndarray:
    """Division-model undistortion ``f``: ``(x, y) -> (x, y, 1 + lam * r^2)``.

    The result is homogeneous and may have ``w <= 0`` for points beyond the
    field of view the model can represent.
    """
    pd = np.asarray(pd, dtype=float)
    if pd.shape[-1] == 3:
        pd = pd[..., :2] / pd[..., 2:3]
    xy = pd[..., :2]
    r2 = np.sum(xy * xy, axis=-1, keepdims=True)
    return np.concatenate([xy, 1.0 + lam * r2], axis=-1)


def distort_point(p, lam: float, *, strict: bool = True) -> np.ndarray:
    """Inverse of :func:`undistort_point` (the lens distortion ``f^d``).

    Solves ``t^2 - w t + lam * (x^2 + y^2) = 0`` for the scale ``t`` that
    takes the homogeneous input back to ``(x~, y~, 1 + lam r~^2)`` and
    returns ``(x, y) / t``.  The root is the one continuous at ``lam = 0``;
    for ``lam < 0`` the sign of the homogeneous vector is respected, so
    points produced by ``undistort_point`` with ``w < 0`` still round-trip.

    With ``strict`` a negative discriminant raises :class:`NoRealPreimage`;
    otherwise those rows come back as nan.
    """
    p = np.asarray(p, dtype=float)
    if p.shape[-1] == 2:
        p = homogenize(p)
    x, y, w = p[..., 0], p[..., 1], p[..., 2]
    r2 = x * x + y * y
    disc = w * w - 4.0 * lam * r2
    if np.any(disc < 0):
        if strict:
            raise NoRealPreimage(f"no real distorted preimage for lambda={lam}")
    sq = np.sqrt(np.maximum(disc, 0.0))
    if lam < 0:
        denom = w + sq
    else:
        denom = w + np.where(w < 0, -sq, sq)
    with np.errstate(divide="ignore", invalid="ignore"):
        k = 2.0 / denom
        out = np.stack([x * k, y * k], axis=-1)
    if not strict:
        out = np.where((disc < 0)[..., None], np.nan, out)
    return out


def rectify_homography(l) -> np.ndarray:
    """Affine-rectifying homography whose third row is the vanishing line."""
    l = np.asarray(l, dtype=float)
    if abs(l[2]) < EPS_L3 * np.linalg.norm(l):
        raise DegenerateLine(f"vanishing line {l} passes through the distortion center")
    H = np.eye(3)
    H[2] = l
    return H


def skew(p) -> np.ndarray:
    x, y, w = np.asarray(p, dtype=float)
    return np.array([[0.0, -w, y], [w, 0.0, -x], [-y, x, 0.0]])


def join(p, q) -> np.ndarray:
    """Line through two homogeneous points (zero vector if they coincide)."""
    return np.cross(np.asarray(p, dtype=float), np.asarray(q, dtype=float))


def meet(a, b) -> np.ndarray:
    """Intersection point of two homogeneous lines."""
    return np.cross(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def translation_matrix(U) -> np.ndarray:
    T = np.eye(3)
    T[:2, 2] = U[:2]
    return T


def conjugate_translation(P, U) -> np.ndarray:
    """Image of the scene-plane translation ``U`` under the plane camera ``P``."""
    P = np.asarray(P, dtype=float)
    det = np.linalg.det(P)
    if not np.isfinite(det) or abs(det) < 1e-14 * np.linalg.norm(P) ** 3:
        raise SingularCamera("camera homography is singular")
    return P @ translation_matrix(np.asarray(U, dtype=float)) @ np.linalg.inv(P)


def vanishing_line(P, normalize: bool = True) -> np.ndarray:
    """Image of the scene line at infinity, ``P^-T e3``, optionally with ``l3 = 1``."""
    P = np.asarray(P, dtype=float)
    try:
        l = np.linalg.solve(P.T, np.array([0.0, 0.0, 1.0]))
    except np.linalg.LinAlgError as exc:
        raise SingularCamera(str(exc)) from exc
    if normalize:
        if abs(l[2]) < EPS_L3 * np.linalg.norm(l):
            raise DegenerateLine(f"vanishing line {l} passes through the distortion center")
        l = l / l[2]
    return l


def vanishing_point(P, U) -> np.ndarray:
    """Vanishing point ``u`` such that ``P T(U) P^-1 = I + u l^T`` with ``l3 = 1``."""
    lP = vanishing_line(P, normalize=False)
    return lP[2] * (np.asarray(P, dtype=float) @ np.array([U[0], U[1], 0.0]))
