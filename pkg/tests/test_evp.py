import numpy as np

from rdct.evp import evp_constraint_residuals, evp_matrix_eval
from rdct.geom import undistort_point

from conftest import noiseless_frames, rel


def _truth(s):
    return s.l, s.vanishing_point(), list(zip(s.pd[0], s.pdp[0]))


def test_residuals_vanish_at_truth():
    for s in noiseless_frames(50, seed=40):
        l, u, corrs = _truth(s)
        for c in corrs:
            assert np.linalg.norm(evp_constraint_residuals(l, u, 1.0, s.lam, c)) <= 1e-10


def test_residual_orthogonal_to_target_point():
    rng = np.random.default_rng(41)
    for _ in range(20):
        l = np.append(rng.normal(size=2), 1.0)
        u = rng.normal(size=3)
        c = rng.uniform(-0.4, 0.4, (2, 2))
        lam = rng.uniform(-6, 0)
        r = evp_constraint_residuals(l, u, rng.uniform(0.5, 2), lam, c)
        assert abs(r @ undistort_point(c[1], lam)) <= 1e-12


def test_wrong_lambda_leaves_residual():
    s = noiseless_frames(1, seed=42)[0]
    l, u, corrs = _truth(s)
    assert max(np.linalg.norm(evp_constraint_residuals(l, u, 1.0, s.lam + 0.1, c)) for c in corrs) > 1e-8


def test_matrix_rank_and_null_vector():
    for s in noiseless_frames(50, seed=43):
        l, u, corrs = _truth(s)
        A = evp_matrix_eval(l[0], l[1], 1.0, s.lam, corrs)
        assert A.shape == (7, 4)
        _, sv, Vt = np.linalg.svd(A)
        assert sv[3] / sv[0] <= 1e-8
        assert rel(Vt[-1, :3] / Vt[-1, 3], u) <= 1e-6


def test_wrong_lambda_has_full_rank():
    ratios = []
    for s in noiseless_frames(20, seed=44):
        l, _, corrs = _truth(s)
        sv = np.linalg.svd(evp_matrix_eval(l[0], l[1], 1.0, s.lam + 0.7, corrs), compute_uv=False)
        ratios.append(sv[3] / sv[0])
    assert np.median(ratios) > 1e-4


def test_zero_pattern():
    s = noiseless_frames(1, seed=45)[0]
    l, _, corrs = _truth(s)
    A = evp_matrix_eval(l[0], l[1], 1.3, s.lam, corrs)
    # 1-based (row, column) entries that vanish identically
    for r, c in [(1, 3), (2, 3), (3, 2), (4, 2), (5, 3), (6, 2)]:
        assert A[r - 1, c - 1] == 0.0
    assert np.allclose(A[6], [l[0], l[1], 1.0, 0.0])
