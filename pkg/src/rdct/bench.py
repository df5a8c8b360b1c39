"""Synthetic studies: stability, noise sensitivity, RANSAC convergence, timing.

Every study derives one seed per scene from ``(seed, scene_index)``, so a
scene's numbers do not depend on how many scenes are run or on how they are
spread over worker processes.  Worker count defaults to 1 and is capped by
the ``RECTIFY_THREADS`` environment variable.
"""

from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ProcessPoolExecutor
from functools import partial

import numpy as np

from .errors import RectifyError
from .evl import SELECTIONS, solve_best, solve_one, solve_one_kernel
from .metrics import lambda_rel_error, warp_error
from .ransac import RansacConfig, run_fixed
from .scene import SceneConfig, gen_scene, scene_seed

LOG10_FLOOR = 1e-18
STABILITY_CONFIG = SceneConfig(lam=(-6.0, 0.0), sigma_px=0.0, n_frames=1)
SENSITIVITY_CONFIG = SceneConfig(lam=-4.0)
CONVERGENCE_CONFIG = SceneConfig(lam=-4.0, sigma_px=1.0, outlier_frac=0.5, outlier_mode="frame")
SIGMAS = (0.0, 0.1, 0.5, 1.0, 2.0)


def worker_count(requested: int | None = None) -> int:
    cap = os.environ.get("RECTIFY_THREADS")
    n = requested if requested is not None else 1
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def _map(fn, items, workers):
    workers = worker_count(workers)
    if workers == 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(workers) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


# --------------------------------------------------------------------------
# stability


def _stability_one(i, seed, cfg):
    s = gen_scene(cfg, scene_seed(seed, i))
    row = {"scene_id": i, "lambda_gt": s.lam, "lambda_hat": np.nan, "status": "ok"}
    try:
        m = solve_best(s.pd[0], s.pdp[0])
    except RectifyError as exc:
        row.update(status=type(exc).__name__, lambda_abs_error=np.inf, warp_error=np.inf, log10_warp_error=np.inf)
        return row
    w = warp_error(m, s)
    row.update(
        lambda_hat=m.lam,
        lambda_abs_error=abs(m.lam - s.lam),
        warp_error=w,
        log10_warp_error=float(np.log10(max(w, LOG10_FLOOR))),
    )
    return row


def study_stability(n_scenes: int = 500, seed: int = 0, cfg: SceneConfig = STABILITY_CONFIG, workers=None):
    """Noiseless best-minimal-solution accuracy, one frame per scene."""
    return _map(partial(_stability_one, seed=seed, cfg=cfg), range(n_scenes), workers)


# --------------------------------------------------------------------------
# sensitivity


def _sensitivity_one(i, seed, cfg, sigmas, solvers, iterations):
    rows = []
    for sigma in sigmas:
        s = gen_scene(cfg.replace(sigma_px=float(sigma)), scene_seed(seed, i))
        for name in solvers:
            rc = RansacConfig(iterations=iterations, scoring="warp_oracle", seed=i)
            try:
                res = run_fixed(name, s, rc, gt=s)
            except RectifyError:
                vals = {"warp_error": np.inf, "transfer_error": np.inf, "lambda_rel_error": np.inf, "lambda_hat": np.nan}
            else:
                # one run serves all three oracle scorings: each keeps its own minimum
                lam_rows = [r for r in res.trace if r["status"] == "ok"]
                lam_best = min(lam_rows, key=lambda r: r["lambda_rel_error"])
                vals = {
                    "warp_error": res.best_metric("warp_error"),
                    "transfer_error": res.best_metric("transfer_error"),
                    "lambda_rel_error": lam_best["lambda_rel_error"],
                    "lambda_hat": lam_best["lambda_hat"],
                }
            for metric, value in vals.items():
                rows.append({"scene_id": i, "solver": name, "sigma": float(sigma), "metric": metric, "value": float(value)})
    return rows


def study_sensitivity(
    n_scenes: int = 200,
    sigmas=SIGMAS,
    seed: int = 0,
    solvers=("best", "random"),
    iterations: int = 25,
    cfg: SceneConfig = SENSITIVITY_CONFIG,
    workers=None,
):
    """Oracle-scored 25-iteration RANSAC per scene, noise level and solver.

    Returns long-format rows ``(scene_id, solver, sigma, metric, value)``.
    Scene geometry is shared across noise levels and solvers; the two
    solvers also see the same frame draws.
    """
    fn = partial(_sensitivity_one, seed=seed, cfg=cfg, sigmas=tuple(sigmas), solvers=tuple(solvers), iterations=iterations)
    return [row for rows in _map(fn, range(n_scenes), workers) for row in rows]


def boxplot_stats(values) -> dict:
    """Median, quartiles and 1.5 IQR whiskers (clipped to the data) of finite-or-inf values."""
    v = np.sort(np.asarray(values, dtype=float))
    v = v[~np.isnan(v)]
    if v.size == 0:
        return dict.fromkeys(("n", "median", "q1", "q3", "iqr", "whisker_lo", "whisker_hi"), np.nan)
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    iqr = q3 - q1
    lo = v[v >= q1 - 1.5 * iqr]
    hi = v[v <= q3 + 1.5 * iqr]
    return {
        "n": int(v.size),
        "median": float(med),
        "q1": float(q1),
        "q3": float(q3),
        "iqr": float(iqr),
        "whisker_lo": float(lo.min()) if lo.size else float(q1),
        "whisker_hi": float(hi.max()) if hi.size else float(q3),
    }


def summarize(rows) -> list[dict]:
    """Boxplot statistics per ``(solver, sigma, metric)`` of long-format rows."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["solver"], r["sigma"], r["metric"]), []).append(r["value"])
    out = []
    for (solver, sigma, metric), vals in sorted(groups.items()):
        out.append({"solver": solver, "sigma": sigma, "metric": metric, **boxplot_stats(vals)})
    return out


# --------------------------------------------------------------------------
# convergence


def _convergence_one(i, seed, cfg, solvers, iterations):
    s = gen_scene(cfg, scene_seed(seed, i))
    out = {}
    for name in solvers:
        rc = RansacConfig(iterations=iterations, scoring="warp_oracle", seed=i)
        try:
            out[name] = run_fixed(name, s, rc, gt=s).running_best("best_warp_error")
        except RectifyError:
            out[name] = np.full(iterations, np.inf)
    return out


def study_convergence(
    n_scenes: int = 30,
    iters: int = 25,
    outlier_frac: float = 0.5,
    seed: int = 0,
    sigma_px: float = 1.0,
    solvers=("best", "random"),
    cfg: SceneConfig = CONVERGENCE_CONFIG,
    workers=None,
):
    """Mean running-best warp error per iteration over scenes, per solver.

    Returns ``(rows, curves)``: long rows ``(iteration, solver,
    mean_warp_error)`` and the raw ``(n_scenes, iters)`` curve per solver.
    """
    cfg = cfg.replace(outlier_frac=outlier_frac, sigma_px=sigma_px)
    per_scene = _map(partial(_convergence_one, seed=seed, cfg=cfg, solvers=tuple(solvers), iterations=iters), range(n_scenes), workers)
    curves = {name: np.stack([p[name] for p in per_scene]) for name in solvers}
    rows = []
    for name, c in curves.items():
        mean = c.mean(axis=0)
        for it in range(iters):
            rows.append({"iteration": it + 1, "solver": name, "mean_warp_error": float(mean[it])})
    return rows, curves


# --------------------------------------------------------------------------
# timing


def _timing_inputs(n, seed):
    cfg = SceneConfig(lam=(-6.0, 0.0), n_frames=1)
    return [gen_scene(cfg, scene_seed(seed, i)) for i in range(n)]


def _per_call(fn, repeat):
    t0 = time.perf_counter_ns()
    for _ in range(repeat):
        fn()
    return (time.perf_counter_ns() - t0) / repeat / 1000.0


def _stats(samples) -> dict:
    a = np.asarray(samples)
    return {
        "median_us": float(np.median(a)),
        "p95_us": float(np.percentile(a, 95)),
        "mean_us": float(a.mean()),
        "std_us": float(a.std()),
        "n": int(a.size),
    }


def bench_solver_time(n_instances: int = 200, seed: int = 0, repeat: int = 20) -> dict:
    """Wall time per call on pre-generated inputs.

    ``solve_one`` is the compiled single-selection solver writing into
    preallocated buffers; ``solve_one_api`` adds the Python wrapper that
    builds model objects and maps status codes to exceptions;
    ``solve_best`` is the full ten-selection solve with scoring and
    vanishing-point recovery.  Each instance is timed as the mean of
    ``repeat`` back-to-back calls.
    """
    scenes = _timing_inputs(n_instances, seed)
    sel = SELECTIONS[0]
    code = sel.code
    ls = np.empty((4, 3))
    lams = np.empty(4)
    pts = [(np.ascontiguousarray(s.pd[0]), np.ascontiguousarray(s.pdp[0])) for s in scenes]
    # compile and warm caches outside the timed region
    solve_one_kernel(pts[0][0], pts[0][1], code, -8.0, 1.0, ls, lams)
    solve_best(*pts[0])
    kernel, api, best = [], [], []
    for pd, pdp in pts:
        kernel.append(_per_call(lambda: solve_one_kernel(pd, pdp, code, -8.0, 1.0, ls, lams), repeat))

        def one():
            try:
                solve_one(pd, pdp, sel)
            except RectifyError:
                pass

        api.append(_per_call(one, repeat))

        def full():
            try:
                solve_best(pd, pdp)
            except RectifyError:
                pass

        best.append(_per_call(full, max(1, repeat // 4)))
    return {"solve_one": _stats(kernel), "solve_one_api": _stats(api), "solve_best": _stats(best)}


# --------------------------------------------------------------------------
# output


def write_csv(rows, path, fields=None):
    """Rows (dicts) as CSV preceded by a ``# format_version: 1`` line."""
    rows = list(rows)
    fields = fields or (list(rows[0]) if rows else [])
    with open(path, "w", newline="") as fh:
        fh.write("# format_version: 1\n")
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in rows:
            w.writerow({k: r.get(k) for k in fields})


def read_csv(path) -> list[dict]:
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


__all__ = [
    "boxplot_stats",
    "bench_solver_time",
    "lambda_rel_error",
    "read_csv",
    "study_convergence",
    "study_sensitivity",
    "study_stability",
    "summarize",
    "worker_count",
    "write_csv",
]
