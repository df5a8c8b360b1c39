"""Command-line interface: ``rdct {synth,solve,bench,eval,warp}``.

Exit status is 0 when a valid result was written, 2 for bad input files or
arguments, 3 when the geometry is degenerate or no model could be found.
With ``--error-json`` failures are also reported as one JSON object on
stdout.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

from . import bench
from .errors import RectifyError, SchemaError
from .evl import RectifyModel, solve_all, solve_best
from .metrics import lambda_rel_error, transfer_error, warp_error
from .raster import MAX_SIZE, read_ppm, warp_image, write_ppm
from .ransac import RansacConfig, run_fixed
from .scene import FORMAT_VERSION, SceneConfig, gen_scene, read_correspondences, save_scene, scene_from_dict

EXIT_INPUT = 2
EXIT_GEOMETRY = 3


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc


def _finite(obj):
    """Replace non-finite floats by None so the output is strict JSON."""
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _dump(obj, path):
    text = json.dumps(_finite(obj), indent=1, allow_nan=False)
    if path in (None, "-"):
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def load_model(path) -> RectifyModel:
    d = _load_json(path)
    if d.get("format_version", FORMAT_VERSION) != FORMAT_VERSION:
        raise SchemaError(f"unsupported format_version {d['format_version']}")
    for key in ("l", "lambda"):
        if key not in d:
            raise SchemaError(f"model file lacks '{key}'")
    if len(d["l"]) != 3:
        raise SchemaError("'l' must have three entries")
    return RectifyModel.from_dict(d)


# --------------------------------------------------------------------------
# commands


def cmd_synth(args) -> int:
    cfg = SceneConfig.from_dict(_load_json(args.config)) if args.config else SceneConfig()
    over = {}
    if args.sigma is not None:
        over["sigma_px"] = args.sigma
    if args.outliers is not None:
        over["outlier_frac"] = args.outliers
    if args.seed is not None:
        over["seed"] = args.seed
    cfg = cfg.replace(**over) if over else cfg
    scene = gen_scene(cfg)
    save_scene(scene, args.out, include_gt=not args.no_gt)
    return 0


def cmd_solve(args) -> int:
    doc = _load_json(args.corrs)
    frame, pd, pdp, ids, _ = read_correspondences(doc)
    if len(ids) == 1:
        f = 0
        best = solve_best(pd[0], pdp[0]) if args.solver == "best" else run_fixed(
            args.solver, (pd, pdp), RansacConfig(iterations=1, scoring="consensus", seed=args.seed), frame=frame
        ).model
        inliers = None
    else:
        cfg = RansacConfig(iterations=args.iters, scoring="consensus", threshold_px=args.threshold, seed=args.seed)
        res = run_fixed(args.solver, (pd, pdp), cfg, frame=frame)
        best = res.model
        f = next(r["frame"] for r in res.trace if r["status"] == "ok" and r["score"] == res.score)
        inliers = int(res.inliers.sum()) if res.inliers is not None else None
    out = {"format_version": FORMAT_VERSION, **best.to_dict()}
    out["frame_id"] = ids[f]
    if inliers is not None:
        out["inliers"] = inliers
    out["candidates"] = [m.to_dict() for m in solve_all(pd[f], pdp[f])]
    out["image"] = doc["image"]
    if args.format == "csv":
        rows = [{"provenance": c.get("provenance"), "lambda": c["lambda"], "l1": c["l"][0], "l2": c["l"][1], "score": c.get("score")}
                for c in out["candidates"]]
        _write_csv(rows, args.out)
    else:
        _dump(out, args.out)
    return 0


def _write_csv(rows, path):
    if path in (None, "-"):
        fields = list(rows[0]) if rows else []
        sys.stdout.write("# format_version: 1\n")
        w = csv.DictWriter(sys.stdout, fieldnames=fields)
        w.writeheader()
        w.writerows(rows)
    else:
        bench.write_csv(rows, path)


def cmd_bench(args) -> int:
    workers = args.workers
    if args.study == "stability":
        rows = bench.study_stability(args.scenes or 500, seed=args.seed, workers=workers)
    elif args.study == "sensitivity":
        sigmas = [args.sigma] if args.sigma is not None else bench.SIGMAS
        solvers = [args.solver] if args.solver else ("best", "random")
        rows = bench.study_sensitivity(args.scenes or 200, sigmas=sigmas, seed=args.seed, solvers=solvers,
                                       iterations=args.iters, workers=workers)
        if args.summary:
            rows = bench.summarize(rows)
    elif args.study == "convergence":
        solvers = [args.solver] if args.solver else ("best", "random")
        rows, _ = bench.study_convergence(
            args.scenes or 30, iters=args.iters, outlier_frac=0.5 if args.outliers is None else args.outliers,
            seed=args.seed, sigma_px=1.0 if args.sigma is None else args.sigma, solvers=solvers, workers=workers,
        )
    else:
        res = bench.bench_solver_time(args.scenes or 200, seed=args.seed)
        rows = [{"solver": k, **v} for k, v in res.items()]
    if args.format == "json":
        _dump({"format_version": FORMAT_VERSION, "study": args.study, "rows": rows}, args.out)
    else:
        _write_csv(rows, args.out)
    return 0


def cmd_eval(args) -> int:
    model = load_model(args.model)
    scene = scene_from_dict(_load_json(args.gt))
    out = {
        "format_version": FORMAT_VERSION,
        "warp_error_px": warp_error(model, scene),
        "lambda_rel_error": lambda_rel_error(model.lam, scene.lam),
    }
    if model.u is not None:
        out["transfer_error_px"] = transfer_error(model, scene)
    _dump(out, args.out)
    return 0


def cmd_warp(args) -> int:
    model = load_model(args.model)
    try:
        img = read_ppm(args.image)
    except OSError as exc:
        raise SchemaError(f"cannot read raster {args.image}: {exc}") from exc
    out = warp_image(img, model, args.mode, max_size=args.max_size)
    write_ppm(args.out, out)
    return 0


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rdct", description="Joint radial undistortion and affine rectification from translated repeats.")
    p.add_argument("--error-json", action="store_true", help="report failures as a JSON object on stdout")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic correspondence file with ground truth")
    s.add_argument("--config", help="scene configuration JSON")
    s.add_argument("--seed", type=int)
    s.add_argument("--sigma", type=float, help="noise in pixels")
    s.add_argument("--outliers", type=float, help="outlier fraction")
    s.add_argument("--no-gt", action="store_true", help="omit the ground-truth block")
    s.add_argument("-o", "--out", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("solve", help="estimate (l, lambda, u) from a correspondence file")
    s.add_argument("corrs")
    s.add_argument("-o", "--out", default="-")
    s.add_argument("--solver", choices=("best", "random"), default="best")
    s.add_argument("--iters", type=int, default=25)
    s.add_argument("--threshold", type=float, default=2.0, help="consensus threshold in pixels")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--format", choices=("json", "csv"), default="json")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("bench", help="run a synthetic study")
    s.add_argument("study", choices=("stability", "sensitivity", "convergence", "timing"))
    s.add_argument("--scenes", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--sigma", type=float)
    s.add_argument("--iters", type=int, default=25)
    s.add_argument("--outliers", type=float)
    s.add_argument("--solver", choices=("best", "random"))
    s.add_argument("--workers", type=int, help="worker processes (capped by RECTIFY_THREADS)")
    s.add_argument("--summary", action="store_true", help="sensitivity: boxplot statistics instead of raw rows")
    s.add_argument("--format", choices=("json", "csv"), default="csv")
    s.add_argument("-o", "--out", default="-")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("eval", help="score a model against a ground-truth correspondence file")
    s.add_argument("model")
    s.add_argument("gt")
    s.add_argument("-o", "--out", default="-")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("warp", help="undistort or rectify a PPM raster")
    s.add_argument("image")
    s.add_argument("model")
    s.add_argument("--mode", choices=("undistort", "rectify"), default="undistort")
    s.add_argument("--max-size", type=int, default=MAX_SIZE)
    s.add_argument("-o", "--out", required=True)
    s.set_defaults(func=cmd_warp)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, ValueError, KeyError, TypeError, FileNotFoundError) as exc:
        code, err = EXIT_INPUT, exc
    except RectifyError as exc:
        code, err = EXIT_GEOMETRY, exc
    if args.error_json:
        print(json.dumps({"error": type(err).__name__, "message": str(err), "exit_code": code}))
    print(f"rdct: {type(err).__name__}: {err}", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
