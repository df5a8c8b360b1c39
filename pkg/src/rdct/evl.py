"""Eliminated-vanishing-line minimal solver.

Three radially-distorted point correspondences taken from one translated
affine frame give six meets of joins whose undistorted images must all lie
on the vanishing line ``l``.  Any admissible choice of three of them stacks
into ``M(lambda) l = 0`` with ``M`` polynomial in ``lambda``; its
determinant is a quartic, and ``l`` is the null vector of ``M`` at each
feasible real root.

Rows are either ``V(i, j)``, the meet of the join of points ``i, j`` with the
join of their translates, or ``U(i, j)``, the meet of the joins of
correspondences ``i`` and ``j``.  At most one ``U`` row can be used, which
leaves ten selections.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from numba import njit

from ._transfer import pair_transfer_errors
from .errors import (
    DegenerateConfiguration,
    DegenerateSelection,
    IdenticallyZeroDeterminant,
    NoFeasibleRoot,
    NoValidModel,
)
from .polys import real_roots_kernel
from .vp import recover_vp_kernel

FEASIBLE = (-8.0, 1.0)
ZERO_ROW_TOL = 1e-12
ZERO_DET_TOL = 1e-11
NULL_RESIDUAL_TOL = 1e-8
L3_TOL = 1e-8
CIRCLE_TOL = 1e-9
ROW_VANISH_TOL = 1e-5

V, U = 0, 1
OK, ZERO_ROW, ZERO_DET, NO_ROOT, CIRCLE = 0, 1, 2, 3, 4


@dataclass(frozen=True)
class MeetSelection:
    """Three meet-of-joins rows; indices are 0-based correspondence numbers."""

    rows: tuple[tuple[str, int, int], ...]

    def __post_init__(self):
        if len(self.rows) != 3:
            raise ValueError("a selection has exactly three rows")
        if sum(kind == "U" for kind, _, _ in self.rows) > 1:
            raise ValueError("at most one U row may be used")

    @property
    def code(self) -> np.ndarray:
        c = self.__dict__.get("_code")
        if c is None:
            c = np.array([[V if k == "V" else U, i, j] for k, i, j in self.rows], dtype=np.int64)
            object.__setattr__(self, "_code", c)
        return c

    @property
    def label(self) -> str:
        return ",".join(f"{k}{i + 1}{j + 1}" for k, i, j in self.rows)

    def __str__(self):
        return self.label


def enumerate_selections() -> list[MeetSelection]:
    """The ten admissible selections: all-V first, then (V pair, U row) pairs."""
    pairs = list(combinations(range(3), 2))
    vrows = [("V", i, j) for i, j in pairs]
    urows = [("U", i, j) for i, j in pairs]
    sels = [MeetSelection(tuple(vrows))]
    for a, b in combinations(vrows, 2):
        for ur in urows:
            sels.append(MeetSelection((a, b, ur)))
    return sels


SELECTIONS = enumerate_selections()
_CODES = np.ascontiguousarray(np.stack([s.code for s in SELECTIONS]))


@dataclass
class RectifyModel:
    """Joint undistortion and affine rectification estimate.

    ``l`` has ``l3 = 1``.  ``u`` is the vanishing point of the translation
    direction ``direction`` with the magnitude convention ``H = I + u l^T``.
    An optional second direction is carried in ``v`` / ``v_direction``.
    """

    l: np.ndarray
    lam: float
    u: np.ndarray | None = None
    score: float | None = None
    provenance: str | None = None
    direction: int = 0
    v: np.ndarray | None = None
    v_direction: int | None = None
    meta: dict | None = field(default=None, repr=False)

    def conjugate_translation(self) -> np.ndarray:
        if self.u is None:
            raise ValueError("model has no vanishing point")
        return np.eye(3) + np.outer(self.u, self.l)

    def to_dict(self) -> dict:
        d = {"l": [float(v) for v in self.l], "lambda": float(self.lam)}
        if self.u is not None:
            d["u"] = [float(v) for v in self.u]
        if self.score is not None:
            d["score"] = float(self.score)
        if self.provenance is not None:
            d["provenance"] = self.provenance
        if self.v is not None:
            d["v"] = [float(x) for x in self.v]
            d["v_direction"] = self.v_direction
        d["direction"] = self.direction
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RectifyModel":
        l = np.asarray(d["l"], dtype=float)
        u = d.get("u")
        v = d.get("v")
        return cls(
            l=l,
            lam=float(d["lambda"]),
            u=None if u is None else np.asarray(u, dtype=float),
            score=d.get("score"),
            provenance=d.get("provenance"),
            direction=int(d.get("direction", 0)),
            v=None if v is None else np.asarray(v, dtype=float),
            v_direction=d.get("v_direction"),
        )


# --------------------------------------------------------------------------
# kernels


@njit(cache=True)
def _join_poly(x1, y1, r1, x2, y2, r2):
    # f(p) = (x, y, 1 + lam r^2): f(p1) x f(p2) = (a0 + lam a1, b0 + lam b1, c0)
    return y1 - y2, y1 * r2 - r1 * y2, x2 - x1, r1 * x2 - x1 * r2, x1 * y2 - y1 * x2


@njit(cache=True)
def meet_row_kernel(a1, a2, b1, b2, out):
    ja0, ja1, jb0, jb1, jc = _join_poly(
        a1[0], a1[1], a1[0] ** 2 + a1[1] ** 2, a2[0], a2[1], a2[0] ** 2 + a2[1] ** 2
    )
    ka0, ka1, kb0, kb1, kc = _join_poly(
        b1[0], b1[1], b1[0] ** 2 + b1[1] ** 2, b2[0], b2[1], b2[0] ** 2 + b2[1] ** 2
    )
    out[0, 0] = jb0 * kc - jc * kb0
    out[0, 1] = jb1 * kc - jc * kb1
    out[0, 2] = 0.0
    out[1, 0] = jc * ka0 - ja0 * kc
    out[1, 1] = jc * ka1 - ja1 * kc
    out[1, 2] = 0.0
    out[2, 0] = ja0 * kb0 - jb0 * ka0
    out[2, 1] = ja0 * kb1 + ja1 * kb0 - jb0 * ka1 - jb1 * ka0
    out[2, 2] = ja1 * kb1 - jb1 * ka1


@njit(cache=True)
def _coord_scale(pd, pdp):
    c = 0.0
    for i in range(3):
        for k in range(2):
            c = max(c, abs(pd[i, k]), abs(pdp[i, k]))
    return c


@njit(cache=True)
def _is_circle(pd, pdp):
    rmin = np.inf
    rmax = 0.0
    for i in range(3):
        for p in (pd, pdp):
            r = np.sqrt(p[i, 0] ** 2 + p[i, 1] ** 2)
            rmin = min(rmin, r)
            rmax = max(rmax, r)
    return rmax - rmin <= CIRCLE_TOL * rmax


@njit(cache=True)
def build_M_kernel(pd, pdp, code, M, rowmag):
    """Fill ``M[row, component, power]``; returns False if a row vanishes."""
    c = _coord_scale(pd, pdp)
    if c == 0.0:
        return False
    ok = True
    for r in range(3):
        kind = code[r, 0]
        i = code[r, 1]
        j = code[r, 2]
        if kind == 0:
            meet_row_kernel(pd[i], pd[j], pdp[i], pdp[j], M[r])
        else:
            meet_row_kernel(pd[i], pdp[i], pd[j], pdp[j], M[r])
        m = 0.0
        for comp in range(3):
            for k in range(3):
                m = max(m, abs(M[r, comp, k]) / c ** (4 + 2 * k))
        rowmag[r] = m
        if m <= ZERO_ROW_TOL:
            ok = False
    return ok


@njit(cache=True)
def _pmul_acc(a, b, sign, out):
    # out += sign * a * b for length-3 coefficient vectors, truncated to 5
    for i in range(3):
        if a[i] == 0.0:
            continue
        for j in range(3):
            if i + j < 5:
                out[i + j] += sign * a[i] * b[j]


@njit(cache=True)
def det_poly_kernel(M, out):
    for k in range(5):
        out[k] = 0.0
    t = np.zeros(5)
    perms = ((0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0), (0, 2, 1, -1.0), (1, 0, 2, -1.0), (2, 1, 0, -1.0))
    for p in perms:
        a, b, cc, s = p
        for k in range(5):
            t[k] = 0.0
        _pmul_acc(M[1, b], M[2, cc], 1.0, t)
        # multiply t (deg <= 4) by M[0, a] (deg <= 2), truncated to degree 4
        for i in range(3):
            if M[0, a, i] == 0.0:
                continue
            for j in range(5 - i):
                out[i + j] += s * M[0, a, i] * t[j]


@njit(cache=True)
def _eval_M(M, lam, Mn):
    for r in range(3):
        for comp in range(3):
            Mn[r, comp] = M[r, comp, 0] + lam * (M[r, comp, 1] + lam * M[r, comp, 2])


@njit(cache=True)
def _null_vector(Mn, l):
    """Unit null vector of a rank-2 3x3 matrix; False if the rank is lower."""
    best = -1.0
    fro = 0.0
    for r in range(3):
        for k in range(3):
            fro += Mn[r, k] ** 2
    if fro == 0.0:
        return False
    for a, b in ((0, 1), (0, 2), (1, 2)):
        cx = Mn[a, 1] * Mn[b, 2] - Mn[a, 2] * Mn[b, 1]
        cy = Mn[a, 2] * Mn[b, 0] - Mn[a, 0] * Mn[b, 2]
        cz = Mn[a, 0] * Mn[b, 1] - Mn[a, 1] * Mn[b, 0]
        nn = cx * cx + cy * cy + cz * cz
        if nn > best:
            best = nn
            l[0] = cx
            l[1] = cy
            l[2] = cz
    if best <= (1e-12 * fro) ** 2:
        _, s, vt = np.linalg.svd(Mn)
        if s[1] <= 1e-10 * s[0]:
            return False
        for k in range(3):
            l[k] = vt[2, k]
        return True
    nrm = np.sqrt(best)
    for k in range(3):
        l[k] /= nrm
    return True


@njit(cache=True)
def solve_one_kernel(pd, pdp, code, lo, hi, ls, lams):
    """Candidates of one selection into ``ls`` / ``lams``; returns (status, n)."""
    if _is_circle(pd, pdp):
        return CIRCLE, 0
    M = np.empty((3, 3, 3))
    rowmag = np.empty(3)
    if not build_M_kernel(pd, pdp, code, M, rowmag):
        return ZERO_ROW, 0
    d = np.empty(5)
    det_poly_kernel(M, d)
    c = _coord_scale(pd, pdp)
    dmag = 0.0
    for k in range(5):
        dmag = max(dmag, abs(d[k]) / c ** (12 + 2 * k))
    if dmag <= ZERO_DET_TOL * rowmag[0] * rowmag[1] * rowmag[2]:
        return ZERO_DET, 0
    roots = np.empty(8)
    nr = real_roots_kernel(d, lo, hi, roots)
    if nr < 0:
        return ZERO_DET, 0
    Mn = np.empty((3, 3))
    l = np.empty(3)
    n = 0
    for q in range(nr):
        lam = roots[q]
        _eval_M(M, lam, Mn)
        # all three meets at infinity / coincident: nothing constrains l
        mabs = 0.0
        fro = 0.0
        for r in range(3):
            for comp in range(3):
                mabs += abs(M[r, comp, 0]) + abs(lam) * (abs(M[r, comp, 1]) + abs(lam) * abs(M[r, comp, 2]))
                fro += Mn[r, comp] ** 2
        fro = np.sqrt(fro)
        if fro <= 1e-10 * mabs:
            continue
        # a meet that vanishes at the root (coincident joins) constrains nothing
        vanished = False
        for r in range(3):
            rn = np.sqrt(Mn[r, 0] ** 2 + Mn[r, 1] ** 2 + Mn[r, 2] ** 2)
            if rn <= ROW_VANISH_TOL * rowmag[r] * c**4:
                vanished = True
        if vanished:
            continue
        if not _null_vector(Mn, l):
            continue
        res = 0.0
        for r in range(3):
            s = Mn[r, 0] * l[0] + Mn[r, 1] * l[1] + Mn[r, 2] * l[2]
            res += s * s
        if np.sqrt(res) > NULL_RESIDUAL_TOL * fro:
            continue
        if abs(l[2]) < L3_TOL:
            continue
        ls[n, 0] = l[0] / l[2]
        ls[n, 1] = l[1] / l[2]
        ls[n, 2] = 1.0
        lams[n] = lam
        n += 1
    if n == 0:
        return NO_ROOT, 0
    return OK, n


@njit(cache=True)
def solve_all_kernel(pd, pdp, codes, lo, hi, out_l, out_lam, out_u, out_score, out_sel, status):
    """Run every selection, recover u and score each candidate.

    Returns ``(n, best)`` where ``best`` indexes the minimum-score candidate
    (ties to smaller ``|lambda|``) or is -1.
    """
    ls = np.empty((4, 3))
    lams = np.empty(4)
    u = np.empty(3)
    errs = np.empty(3)
    n = 0
    best = -1
    for s in range(codes.shape[0]):
        st, m = solve_one_kernel(pd, pdp, codes[s], lo, hi, ls, lams)
        status[s] = st
        for q in range(m):
            vst, _ = recover_vp_kernel(ls[q], lams[q], pd, pdp, 3, u)
            if vst != 0:
                continue
            pair_transfer_errors(ls[q], u, lams[q], pd, pdp, 3, errs)
            score = errs[0] + errs[1] + errs[2]
            for k in range(3):
                out_l[n, k] = ls[q, k]
                out_u[n, k] = u[k]
            out_lam[n] = lams[q]
            out_score[n] = score
            out_sel[n] = s
            if best < 0:
                best = n
            else:
                sb = out_score[best]
                if score < sb - 1e-12 * sb - 1e-300:
                    best = n
                elif score <= sb + 1e-12 * sb and abs(lams[q]) < abs(out_lam[best]):
                    best = n
            n += 1
    return n, best


# --------------------------------------------------------------------------
# python surface


def _as_pts(a) -> np.ndarray:
    if type(a) is np.ndarray and a.dtype == np.float64 and a.shape == (3, 2) and a.flags.c_contiguous:
        return a
    return np.ascontiguousarray(np.asarray(a, dtype=np.float64)[..., :2])


def frame_arrays(pd, pd_prime=None):
    """Normalize solver input to two contiguous (3, 2) float arrays.

    Accepts either two arrays or a sequence of correspondence objects with
    ``pd`` / ``pd_prime`` attributes.
    """
    if pd_prime is None:
        corrs = list(pd)
        pd = np.array([c.pd for c in corrs], dtype=float)
        pd_prime = np.array([c.pd_prime for c in corrs], dtype=float)
    return _as_pts(pd), _as_pts(pd_prime)


def meet_row(a1, a2, b1, b2) -> np.ndarray:
    """``(f(a1) x f(a2)) x (f(b1) x f(b2))`` with lambda symbolic.

    Returns a (3, 3) array: one row per homogeneous component, ascending
    powers of lambda.  The component degrees are at most (1, 1, 2).
    """
    out = np.empty((3, 3))
    meet_row_kernel(
        np.asarray(a1, float)[:2].copy(),
        np.asarray(a2, float)[:2].copy(),
        np.asarray(b1, float)[:2].copy(),
        np.asarray(b2, float)[:2].copy(),
        out,
    )
    return out


def build_M(pd, pd_prime, sel: MeetSelection) -> np.ndarray:
    """Polynomial matrix ``M[row, column, power]`` for one selection."""
    pd, pdp = frame_arrays(pd, pd_prime)
    M = np.empty((3, 3, 3))
    rowmag = np.empty(3)
    if not build_M_kernel(pd, pdp, sel.code, M, rowmag):
        raise DegenerateSelection(f"selection {sel} has a vanishing row")
    return M


def det_poly(M) -> np.ndarray:
    """Determinant of a polynomial ``M`` (ascending coefficients, degree <= 4)."""
    out = np.empty(5)
    det_poly_kernel(np.ascontiguousarray(M, dtype=float), out)
    return out


def _raise_status(status: int, what: str):
    if status == ZERO_ROW:
        raise DegenerateSelection(f"{what}: a meet-of-joins row vanishes")
    if status == ZERO_DET:
        raise IdenticallyZeroDeterminant(f"{what}: determinant vanishes for every lambda")
    if status == CIRCLE:
        raise DegenerateConfiguration(f"{what}: all points on one circle about the distortion center")
    if status == NO_ROOT:
        raise NoFeasibleRoot(f"{what}: no admissible root in the feasible interval")


def solve_one(pd, pd_prime, sel: MeetSelection, feasible=FEASIBLE) -> list[RectifyModel]:
    """All admissible ``(l, lambda)`` candidates for one meet selection."""
    pd, pdp = frame_arrays(pd, pd_prime)
    ls = np.empty((4, 3))
    lams = np.empty(4)
    status, n = solve_one_kernel(pd, pdp, sel.code, feasible[0], feasible[1], ls, lams)
    if status:
        _raise_status(status, str(sel))
    label = sel.label
    return [RectifyModel(ls[k], float(lams[k]), None, None, label) for k in range(n)]


def _solve_all_arrays(pd, pdp, feasible):
    out_l = np.empty((40, 3))
    out_lam = np.empty(40)
    out_u = np.empty((40, 3))
    out_score = np.empty(40)
    out_sel = np.empty(40, dtype=np.int64)
    status = np.zeros(len(SELECTIONS), dtype=np.int64)
    n, best = solve_all_kernel(
        pd, pdp, _CODES, feasible[0], feasible[1], out_l, out_lam, out_u, out_score, out_sel, status
    )
    return n, best, out_l, out_lam, out_u, out_score, out_sel, status


def _no_model(status):
    if np.all(status == CIRCLE):
        _raise_status(CIRCLE, "frame")
    raise NoValidModel(f"no selection produced a model (statuses {status.tolist()})")


def solve_all(pd, pd_prime=None, feasible=FEASIBLE) -> list[RectifyModel]:
    """Every scored candidate over the ten selections, in selection order."""
    pd, pdp = frame_arrays(pd, pd_prime)
    n, _, out_l, out_lam, out_u, out_score, out_sel, status = _solve_all_arrays(pd, pdp, feasible)
    if n == 0:
        _no_model(status)
    return [
        RectifyModel(
            l=out_l[k].copy(),
            lam=float(out_lam[k]),
            u=out_u[k].copy(),
            score=float(out_score[k]),
            provenance=SELECTIONS[out_sel[k]].label,
        )
        for k in range(n)
    ]


def solve_best(pd, pd_prime=None, feasible=FEASIBLE) -> RectifyModel:
    """Best minimal solution over all ten selections.

    Each candidate gets its vanishing point from :func:`rdct.vp.recover_vp`
    and is scored by the summed symmetric transfer error of the three
    correspondences; the minimum wins and carries its score.
    """
    pd, pdp = frame_arrays(pd, pd_prime)
    n, best, out_l, out_lam, out_u, out_score, out_sel, status = _solve_all_arrays(pd, pdp, feasible)
    if best < 0:
        _no_model(status)
    return RectifyModel(
        l=out_l[best].copy(),
        lam=float(out_lam[best]),
        u=out_u[best].copy(),
        score=float(out_score[best]),
        provenance=SELECTIONS[out_sel[best]].label,
    )


def solve_random(pd, pd_prime=None, rng=None, feasible=FEASIBLE) -> RectifyModel:
    """Baseline: one uniformly drawn selection, smallest-``|lambda|`` candidate."""
    rng = np.random.default_rng(rng)
    pd, pdp = frame_arrays(pd, pd_prime)
    sel = SELECTIONS[int(rng.integers(len(SELECTIONS)))]
    cands = sorted(solve_one(pd, pdp, sel, feasible), key=lambda m: abs(m.lam))
    u = np.empty(3)
    errs = np.empty(3)
    for m in cands:
        status, _ = recover_vp_kernel(m.l, m.lam, pd, pdp, 3, u)
        if status == 0:
            pair_transfer_errors(m.l, u, m.lam, pd, pdp, 3, errs)
            m.u = u.copy()
            m.score = float(errs.sum())
            return m
    raise NoValidModel(f"selection {sel}: no candidate admits a vanishing point")
