import numpy as np
import pytest

from rdct.evl import RectifyModel
from rdct.scene import SceneConfig, gen_scene, scene_seed

NOISELESS_ONE = SceneConfig(lam=(-6.0, 0.0), n_frames=1)


def make_scene(seed=0, index=0, **kw):
    """One synthetic scene; keyword arguments override the default config."""
    return gen_scene(SceneConfig(**kw), scene_seed(seed, index))


def noiseless_frames(n, seed=0, **kw):
    """``n`` single-frame noiseless scenes with lambda drawn from [-6, 0]."""
    cfg = NOISELESS_ONE.replace(**kw) if kw else NOISELESS_ONE
    return [gen_scene(cfg, scene_seed(seed, i)) for i in range(n)]


def gt_model(scene, k=0):
    return RectifyModel(scene.l, scene.lam, scene.vanishing_point(k), direction=k)


def rel(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


@pytest.fixture(scope="session")
def scene():
    return make_scene(seed=1, n_frames=8)


@pytest.fixture(scope="session")
def noisy_scene():
    return make_scene(seed=2, n_frames=20, sigma_px=1.0, outlier_frac=0.2)


ACCEPTANCE_LINES: list[str] = []


def report(number, ok, detail):
    """Record and print one acceptance verdict line."""
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
