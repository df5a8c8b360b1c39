import json

import numpy as np
import pytest

from rdct.cli import main
from rdct.raster import read_ppm, write_ppm


@pytest.fixture(scope="module")
def fixture_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    cfg = d / "cfg.json"
    cfg.write_text(json.dumps({"format_version": 1, "n_frames": 1, "lam": -3.5, "sigma_px": 0.0}))
    clean = d / "clean.json"
    assert main(["synth", "--config", str(cfg), "--seed", "80", "-o", str(clean)]) == 0
    noisy = d / "noisy.json"
    assert main(["synth", "--seed", "81", "--sigma", "1", "--outliers", "0.2", "-o", str(noisy)]) == 0
    return d, clean, noisy


def _read(p):
    return json.loads(p.read_text())


def test_synth_solve_recovers_lambda(fixture_files):
    d, clean, _ = fixture_files
    out = d / "model.json"
    assert main(["solve", str(clean), "-o", str(out)]) == 0
    m = _read(out)
    assert m["format_version"] == 1
    assert abs(m["lambda"] - _read(clean)["ground_truth"]["lambda"]) <= 1e-9
    assert m["l"][2] == 1.0 and len(m["candidates"]) >= 1
    assert all("score" in c for c in m["candidates"])


def test_eval_ground_truth_model(fixture_files, capsys):
    d, clean, _ = fixture_files
    gt = _read(clean)["ground_truth"]
    P = np.array(gt["P"]).reshape(3, 3)
    lP = np.linalg.solve(P.T, [0.0, 0.0, 1.0])
    u = lP[2] * (P @ np.array([*gt["translations"][0], 0.0]))
    model = d / "gt_model.json"
    model.write_text(json.dumps({"format_version": 1, "l": (lP / lP[2]).tolist(), "lambda": gt["lambda"], "u": u.tolist()}))
    capsys.readouterr()
    assert main(["eval", str(model), str(clean)]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["warp_error_px"] <= 1e-9 and res["transfer_error_px"] <= 1e-9


def test_solve_multi_frame(fixture_files, capsys):
    d, _, noisy = fixture_files
    capsys.readouterr()
    assert main(["solve", str(noisy), "--iters", "10", "--threshold", "5"]) == 0
    m = json.loads(capsys.readouterr().out)
    assert m["inliers"] > 0 and "frame_id" in m
    assert main(["solve", str(noisy), "--format", "csv", "--iters", "5"]) == 0
    text = capsys.readouterr().out
    assert text.startswith("# format_version: 1\nprovenance,lambda")


def test_error_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert main(["--error-json", "solve", str(bad)]) == 2
    err = json.loads(capsys.readouterr().out)
    assert err["error"] == "SchemaError" and err["exit_code"] == 2
    assert main(["solve", str(tmp_path / "missing.json")]) == 2
    # every point on one circle about the center: a geometric failure
    th = np.linspace(0.1, 5.0, 6)
    pts = 300 + 200 * np.c_[np.cos(th), np.sin(th)]
    recs = [{"frame_id": 0, "direction_id": 0, "points": [pts[i].tolist(), pts[i + 3].tolist()]} for i in range(3)]
    circ = tmp_path / "circle.json"
    circ.write_text(json.dumps({"format_version": 1, "image": {"width": 600, "height": 600}, "correspondences": recs}))
    capsys.readouterr()
    assert main(["--error-json", "solve", str(circ)]) == 3
    assert json.loads(capsys.readouterr().out)["error"] == "DegenerateConfiguration"


def test_warp_identity(tmp_path):
    img = np.random.default_rng(82).integers(0, 256, (30, 40, 3), dtype=np.uint8)
    src, dst = tmp_path / "a.ppm", tmp_path / "b.ppm"
    write_ppm(src, img)
    model = tmp_path / "id.json"
    model.write_text(json.dumps({"format_version": 1, "l": [0, 0, 1], "lambda": 0.0}))
    for mode in ("undistort", "rectify"):
        assert main(["warp", str(src), str(model), "--mode", mode, "-o", str(dst)]) == 0
        assert np.array_equal(read_ppm(dst), img)
    assert main(["warp", str(tmp_path / "none.ppm"), str(model), "-o", str(dst)]) == 2


def test_bench_outputs(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("RECTIFY_THREADS", "1")
    out = tmp_path / "stab.csv"
    assert main(["bench", "stability", "--scenes", "3", "-o", str(out)]) == 0
    assert out.read_text().startswith("# format_version: 1\nscene_id")
    capsys.readouterr()
    assert main(["bench", "convergence", "--scenes", "1", "--iters", "3", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["format_version"] == 1 and len(doc["rows"]) == 6
    assert main(["bench", "sensitivity", "--scenes", "1", "--sigma", "0.5", "--iters", "2", "--summary", "--solver", "best"]) == 0
    assert main(["bench", "timing", "--scenes", "2"]) == 0
