from types import SimpleNamespace

import numpy as np
import pytest

from rdct.errors import (
    DegenerateConfiguration,
    DegenerateSelection,
    IdenticallyZeroDeterminant,
    NoFeasibleRoot,
    NoValidModel,
    RectifyError,
)
from rdct.evl import (
    SELECTIONS,
    MeetSelection,
    RectifyModel,
    build_M,
    det_poly,
    enumerate_selections,
    meet_row,
    solve_all,
    solve_best,
    solve_one,
    solve_random,
)
from rdct.geom import join, meet, undistort_point
from rdct.polys import poly_eval
from rdct.scene import gen_scene

from conftest import make_scene, noiseless_frames, rel

FROZEN_PD = np.array([[0.1, 0.05], [-0.2, 0.15], [0.25, -0.1]])
FROZEN_PDP = np.array([[0.15, 0.1], [-0.15, 0.2], [0.3, -0.05]])
FROZEN_DET = [0.0, -189 / 40000000000, -17577 / 16000000000000, -33453 / 800000000000000, 2079 / 1000000000000000]


def _angle(a, b):
    return np.arctan2(np.linalg.norm(np.cross(a, b)), abs(a @ b))


def _by_label(label):
    return next(s for s in SELECTIONS if s.label == label)


def test_enumeration():
    sels = enumerate_selections()
    assert len(sels) == 10
    assert sels[0].label == "V12,V13,V23"
    assert sum(all(k == "V" for k, _, _ in s.rows) for s in sels) == 1
    assert all(sum(k == "U" for k, _, _ in s.rows) <= 1 for s in sels)
    assert [s.label for s in sels[1:4]] == ["V12,V13,U12", "V12,V13,U13", "V12,V13,U23"]
    assert len({s.label for s in sels}) == 10
    with pytest.raises(ValueError):
        MeetSelection((("U", 0, 1), ("U", 0, 2), ("V", 1, 2)))


def test_meet_row_matches_numeric_meet():
    rng = np.random.default_rng(10)
    for _ in range(100):
        a1, a2, b1, b2 = rng.uniform(-0.5, 0.5, (4, 2))
        lam = rng.uniform(-8, 1)
        row = meet_row(a1, a2, b1, b2)
        f = [undistort_point(p, lam) for p in (a1, a2, b1, b2)]
        num = meet(join(f[0], f[1]), join(f[2], f[3]))
        got = np.array([poly_eval(row[k], lam) for k in range(3)])
        assert np.allclose(got, num, atol=1e-12)


def test_meet_row_degrees_and_pinhole_terms():
    rng = np.random.default_rng(11)
    a1, a2, b1, b2 = rng.uniform(-0.5, 0.5, (4, 2))
    row = meet_row(a1, a2, b1, b2)
    assert row[0, 2] == 0.0 and row[1, 2] == 0.0
    h = [np.append(p, 1.0) for p in (a1, a2, b1, b2)]
    assert np.allclose(row[:, 0], meet(join(h[0], h[1]), join(h[2], h[3])))


def test_duplicate_point_gives_zero_row():
    a = np.array([0.1, 0.2])
    assert np.allclose(meet_row(a, a, [0.3, 0.1], [0.0, -0.2]), 0.0)
    pd = np.array([a, a, [0.3, 0.1]])
    with pytest.raises(DegenerateSelection):
        build_M(pd, pd + 0.05, SELECTIONS[0])


def test_frozen_determinant():
    d = det_poly(build_M(FROZEN_PD, FROZEN_PDP, SELECTIONS[0]))
    assert np.allclose(d, FROZEN_DET, rtol=1e-10, atol=1e-20)
    lams = sorted(m.lam for m in solve_one(FROZEN_PD, FROZEN_PDP, SELECTIONS[0]))
    assert np.allclose(lams, [-6.25, 0.0], atol=1e-10)


def test_determinant_degree_at_most_four():
    s = make_scene(seed=5, n_frames=1)
    for sel in SELECTIONS:
        M = build_M(s.pd[0], s.pdp[0], sel)
        assert M.shape == (3, 3, 3)
        assert det_poly(M).shape == (5,)


def test_solve_one_noiseless_recovery():
    for s in noiseless_frames(30, seed=12):
        lgt = s.l
        best = None
        for m in solve_one(s.pd[0], s.pdp[0], SELECTIONS[0]):
            if best is None or abs(m.lam - s.lam) < abs(best.lam - s.lam):
                best = m
        assert abs(best.lam - s.lam) <= 1e-9 * max(1.0, abs(s.lam))
        assert _angle(best.l, lgt) <= 1e-8
        assert best.l[2] == 1.0


def test_every_selection_contains_truth():
    for s in noiseless_frames(10, seed=13):
        for sel in SELECTIONS:
            try:
                lams = [m.lam for m in solve_one(s.pd[0], s.pdp[0], sel)]
            except RectifyError:
                continue
            assert min(abs(x - s.lam) for x in lams) <= 1e-8 * max(1.0, abs(s.lam))


def test_candidates_are_null_vectors():
    s = make_scene(seed=14, n_frames=1, sigma_px=1.0)
    for sel in SELECTIONS:
        try:
            cands = solve_one(s.pd[0], s.pdp[0], sel)
        except RectifyError:
            continue
        M = build_M(s.pd[0], s.pdp[0], sel)
        for m in cands:
            Mn = np.polynomial.polynomial.polyval(m.lam, M.transpose(2, 0, 1))
            assert np.linalg.norm(Mn @ m.l) <= 1e-8 * np.linalg.norm(Mn)
            assert -8.0 <= m.lam <= 1.0


def test_pinhole_scene():
    s = make_scene(seed=15, n_frames=1, lam=0.0)
    m = solve_best(s.pd[0], s.pdp[0])
    assert abs(m.lam) <= 1e-9


def test_solve_best_noiseless():
    for s in noiseless_frames(20, seed=16):
        m = solve_best(s.pd[0], s.pdp[0])
        assert m.score <= 1e-12
        assert abs(m.lam - s.lam) <= 1e-8 * max(1.0, abs(s.lam))
        assert rel(m.u, s.vanishing_point()) <= 1e-6
        assert abs(m.l @ m.u) <= 1e-8


def test_solve_best_score_flags_mismatch():
    s = make_scene(seed=17, n_frames=2)
    clean = solve_best(s.pd[0], s.pdp[0])
    bad = s.pdp[0].copy()
    bad[1] = s.pdp[1][2]
    try:
        corrupt = solve_best(s.pd[0], bad)
    except RectifyError:
        return
    assert corrupt.score > 1e6 * max(clean.score, 1e-20)
    assert corrupt.score > 1e-8


def test_solve_all_and_best_agree():
    s = make_scene(seed=18, n_frames=1, sigma_px=0.5)
    cands = solve_all(s.pd[0], s.pdp[0])
    best = solve_best(s.pd[0], s.pdp[0])
    assert min(c.score for c in cands) == pytest.approx(best.score)
    assert all(c.u is not None for c in cands)


def test_solve_random_is_deterministic_and_exact_on_clean_data():
    s = make_scene(seed=19, n_frames=1)
    a = solve_random(s.pd[0], s.pdp[0], rng=5)
    b = solve_random(s.pd[0], s.pdp[0], rng=5)
    assert a.lam == b.lam and a.provenance == b.provenance
    cands = {round(c.lam, 9) for c in solve_all(s.pd[0], s.pdp[0])}
    assert round(a.lam, 9) in cands


def test_accepts_correspondence_objects():
    s = make_scene(seed=20, n_frames=1)
    corrs = [SimpleNamespace(pd=s.pd[0, i], pd_prime=s.pdp[0, i]) for i in range(3)]
    assert solve_best(corrs).lam == solve_best(s.pd[0], s.pdp[0]).lam


def test_scale_invariance_of_pixel_representation():
    # the same scene rendered at twice the resolution normalizes to the same points
    s = make_scene(seed=21, n_frames=1)
    fr2 = s.cfg.replace(width=2000, height=2000).frame
    px = (s.pd[0] / s.frame.norm_scale) * 2.0
    pdp_px = (s.pdp[0] / s.frame.norm_scale) * 2.0
    a = solve_best(s.pd[0], s.pdp[0])
    b = solve_best(px * fr2.norm_scale, pdp_px * fr2.norm_scale)
    assert b.lam == pytest.approx(a.lam, rel=1e-10)
    assert np.allclose(a.l, b.l, rtol=1e-9)


def test_collinear_cross_joins():
    a, d = np.array([0.1, 0.05]), np.array([0.2, 0.1])
    pd = np.array([a, a + 2 * d, [-0.2, 0.15]])
    pdp = np.array([a + d, a + 3 * d, [-0.1, 0.3]])
    with pytest.raises((DegenerateSelection, IdenticallyZeroDeterminant)):
        solve_one(pd, pdp, _by_label("V12,V13,U12"))
    rng = np.random.default_rng(24)
    for _ in range(50):
        a, d, third = rng.uniform(-0.2, 0.2, 2), rng.uniform(-0.1, 0.1, 2), rng.uniform(-0.3, 0.3, 2)
        pd = np.array([a, a + 2 * d, third])
        pdp = np.array([a + d, a + 3 * d, third + rng.uniform(-0.1, 0.1, 2)])
        with pytest.raises((DegenerateSelection, IdenticallyZeroDeterminant, NoFeasibleRoot)):
            solve_one(pd, pdp, _by_label("V12,V13,U12"))
    # everything on one line: no selection yields a model
    pd = np.array([a, a + 2 * d, a - d])
    with pytest.raises(NoValidModel):
        solve_best(pd, pd + d)


def test_circle_configuration():
    th = np.random.default_rng(22).uniform(0, 2 * np.pi, 6)
    pts = 0.3 * np.c_[np.cos(th), np.sin(th)]
    with pytest.raises(DegenerateConfiguration):
        solve_one(pts[:3], pts[3:], SELECTIONS[0])
    with pytest.raises(DegenerateConfiguration):
        solve_best(pts[:3], pts[3:])


def test_vanishing_line_through_center_is_rejected():
    # pinhole plane camera whose horizon is the image x-axis, l ~ (0, 1, 0)
    P = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.1], [0.0, 1.0, 1.0]])
    l = np.linalg.solve(P.T, [0.0, 0.0, 1.0])
    assert np.allclose(l, [0.0, 10.0, 0.0])
    X = np.array([[0.1, 1.0], [0.4, 1.2], [0.2, 1.6]])
    U = np.array([0.3, 0.4])

    def image(Y):
        x = np.c_[Y, np.ones(len(Y))] @ P.T
        return x[:, :2] / x[:, 2:]

    # the true root lam = 0 has l3 = 0 and must not come back as a model
    with pytest.raises(NoValidModel):
        solve_all(image(X), image(X + U))


def test_no_feasible_root():
    s = make_scene(seed=23, n_frames=1, lam=-4.0)
    with pytest.raises((NoFeasibleRoot, RectifyError)):
        solve_one(s.pd[0], s.pdp[0], SELECTIONS[0], feasible=(0.5, 1.0))


def test_model_dict_roundtrip():
    m = RectifyModel(np.array([0.1, 0.2, 1.0]), -2.5, np.array([1.0, -0.1, -0.08]), 1e-3, "V12,V13,U23")
    d = m.to_dict()
    assert set(d) >= {"l", "lambda", "u", "score", "provenance"}
    back = RectifyModel.from_dict(d)
    assert np.allclose(back.l, m.l) and back.lam == m.lam and np.allclose(back.u, m.u)
    assert np.allclose(back.conjugate_translation(), np.eye(3) + np.outer(m.u, m.l))
