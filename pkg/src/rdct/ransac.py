"""Fixed-budget robust estimation over frame correspondences.

Each iteration draws one frame (three correspondences) uniformly, runs a
minimal solver on it and scores the hypothesis.  Scoring can use ground
truth (the oracle modes used by the synthetic studies) or a consensus count
of correspondences whose symmetric transfer error is under a threshold.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NoModelFound, RectifyError
from .evl import RectifyModel, solve_best, solve_random
from .metrics import lambda_rel_error, symm_transfer_errors, transfer_error, warp_error

SCORINGS = ("warp_oracle", "transfer_oracle", "lambda_oracle", "consensus")
TRACE_FIELDS = (
    "iteration",
    "frame",
    "status",
    "score",
    "warp_error",
    "transfer_error",
    "lambda_hat",
    "lambda_rel_error",
    "best_score",
    "best_warp_error",
    "best_transfer_error",
    "best_lambda_rel_error",
)


def _solve_best(pd, pdp, rng):
    return solve_best(pd, pdp)


def _solve_random(pd, pdp, rng):
    return solve_random(pd, pdp, rng=rng)


SOLVERS: dict[str, Callable] = {"best": _solve_best, "random": _solve_random}


@dataclass(frozen=True)
class RansacConfig:
    iterations: int = 25
    scoring: str = "warp_oracle"
    threshold_px: float = 2.0
    preempt: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.scoring not in SCORINGS:
            raise ValueError(f"scoring must be one of {SCORINGS}")
        if self.threshold_px <= 0:
            raise ValueError("threshold must be positive")


@dataclass
class RansacResult:
    model: RectifyModel
    score: float
    trace: list[dict] = field(repr=False)
    inliers: np.ndarray | None = field(default=None, repr=False)

    def best_metric(self, name: str) -> float:
        """Minimum of a per-iteration metric over the run (nan if none was finite)."""
        vals = np.array([row[name] for row in self.trace], dtype=float)
        vals = vals[~np.isnan(vals)]
        return float(vals.min()) if vals.size else np.nan

    def running_best(self, name: str = "best_warp_error") -> np.ndarray:
        return np.array([row[name] for row in self.trace], dtype=float)


def _pool_arrays(pool):
    if hasattr(pool, "pd") and hasattr(pool, "pdp"):
        return np.asarray(pool.pd, float), np.asarray(pool.pdp, float)
    pd, pdp = pool
    return np.asarray(pd, float), np.asarray(pdp, float)


def consensus_set(model, pool, threshold: float) -> np.ndarray:
    """Mask of correspondences whose symmetric transfer error is at most ``threshold**2``.

    ``threshold`` is in normalized units; the mask has the pool's
    ``(n_frames, 3)`` shape.
    """
    pd, pdp = _pool_arrays(pool)
    err = symm_transfer_errors(model, pd.reshape(-1, 2), pdp.reshape(-1, 2))
    return (err <= threshold * threshold).reshape(pd.shape[:-1])


def _metrics(model, gt):
    if gt is None:
        return np.nan, np.nan, np.nan
    w = warp_error(model, gt)
    try:
        t = transfer_error(model, gt)
    except RectifyError:
        t = np.inf
    return w, t, lambda_rel_error(model.lam, gt.lam)


def run_fixed(solver, pool, cfg: RansacConfig = RansacConfig(), gt=None, frame=None) -> RansacResult:
    """Run ``cfg.iterations`` hypothesize-and-score rounds.

    ``solver`` is ``"best"``, ``"random"`` or a callable ``(pd, pdp, rng)``.
    ``pool`` is a scene (anything with ``pd`` / ``pdp``) or a ``(pd, pdp)``
    pair of ``(n_frames, 3, 2)`` arrays.  Oracle scorings need ``gt``; the
    consensus threshold is converted from pixels with ``frame`` (defaults
    to ``gt.frame`` or the pool's frame).

    Frame draws and the solver's own randomness come from separate streams
    of ``cfg.seed``, so different solvers see the same frame sequence.
    """
    solve = SOLVERS[solver] if isinstance(solver, str) else solver
    if cfg.scoring != "consensus" and gt is None:
        raise ValueError(f"scoring '{cfg.scoring}' needs ground truth")
    pd, pdp = _pool_arrays(pool)
    if pd.ndim != 3 or pd.shape[1:] != (3, 2) or pd.shape[0] < 1:
        raise ValueError("pool must hold at least one frame of three correspondences")
    frame = frame or getattr(gt, "frame", None) or getattr(pool, "frame", None)
    if cfg.scoring == "consensus" and frame is None:
        raise ValueError("consensus scoring needs an image frame for the pixel threshold")
    thr = cfg.threshold_px * frame.norm_scale if frame is not None else None

    frame_ss, solver_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    frame_rng = np.random.default_rng(frame_ss)
    solver_rng = np.random.default_rng(solver_ss)

    best = None
    best_score = np.inf
    best_m = (np.inf, np.inf, np.inf)
    trace = []
    for it in range(cfg.iterations):
        f = int(frame_rng.integers(pd.shape[0]))
        row = dict.fromkeys(TRACE_FIELDS, np.nan)
        row.update(iteration=it, frame=f)
        try:
            model = solve(pd[f], pdp[f], solver_rng)
        except RectifyError as exc:
            row["status"] = type(exc).__name__
            model = None
        if model is not None and cfg.preempt is not None and model.score is not None and model.score > cfg.preempt:
            row["status"] = "preempted"
            model = None
        if model is not None:
            row["status"] = "ok"
            w, t, lr = _metrics(model, gt)
            row.update(warp_error=w, transfer_error=t, lambda_hat=model.lam, lambda_rel_error=lr)
            if cfg.scoring == "warp_oracle":
                score = w
            elif cfg.scoring == "transfer_oracle":
                score = t
            elif cfg.scoring == "lambda_oracle":
                score = lr
            else:
                score = -float(np.sum(consensus_set(model, (pd, pdp), thr)))
            row["score"] = score
            if best is None or score < best_score:
                best, best_score, best_m = model, score, (w, t, lr)
        row.update(
            best_score=best_score,
            best_warp_error=best_m[0],
            best_transfer_error=best_m[1],
            best_lambda_rel_error=best_m[2],
        )
        trace.append(row)
    if best is None:
        raise NoModelFound(f"all {cfg.iterations} iterations failed to produce a model")
    inliers = consensus_set(best, (pd, pdp), thr) if thr is not None and best.u is not None else None
    return RansacResult(best, float(best_score), trace, inliers)


def write_trace_csv(trace, path):
    """Trace rows as CSV with a format-version comment header."""
    with open(path, "w", newline="") as fh:
        fh.write("# format_version: 1\n")
        w = csv.DictWriter(fh, fieldnames=TRACE_FIELDS)
        w.writeheader()
        for row in trace:
            w.writerow({k: row.get(k) for k in TRACE_FIELDS})
