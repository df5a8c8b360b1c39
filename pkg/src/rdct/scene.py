"""Synthetic scenes: a random camera viewing a plane of translated affine frames.

A scene is built in normalized image coordinates.  The camera is a plane
homography ``P = K [R e1, R e2, -R C]`` aimed at the plane origin; the plane
is then rescaled so that the largest centered square that stays inside the
distorted image is ``[-4.5, 4.5]^2``.  This square carries the 10x10 metric
tessellation and contains every affine frame and its translate.

Randomness is split into independent streams (geometry, noise, outliers)
derived from one seed, so the same seed gives the same geometry at every
noise level.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegenerateLine, RetryExhausted, SchemaError
from .geom import (
    ImageFrame,
    denormalize_from_frame,
    distort_point,
    normalize_to_frame,
    undistort_point,
    vanishing_line,
    vanishing_point,
)

FORMAT_VERSION = 1
SQUARE_HALF = 4.5
MAX_ATTEMPTS = 100


@dataclass(frozen=True)
class SceneConfig:
    width: int = 1000
    height: int = 1000
    focal_mm: tuple[float, float] = (15.0, 50.0)
    lam: float | tuple[float, float] = -4.0
    sigma_px: float = 0.0
    n_frames: int = 50
    n_directions: int = 1
    outlier_frac: float = 0.0
    outlier_mode: str = "point"
    frame_extent: tuple[float, float] = (0.01, 0.05)
    translation_extent: tuple[float, float] = (0.2, 0.6)
    tilt_max_deg: float = 60.0
    min_coverage: float = 0.6
    seed: int = 0

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image size must be positive")
        for name in ("focal_mm", "frame_extent", "translation_extent"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ValueError(f"{name} must be a non-empty positive range")
        if not np.isscalar(self.lam):
            lo, hi = self.lam
            if lo > hi:
                raise ValueError("lambda range is empty")
        if self.sigma_px < 0:
            raise ValueError("sigma must be non-negative")
        if self.n_frames < 1:
            raise ValueError("need at least one frame")
        if self.n_directions not in (1, 2):
            raise ValueError("one or two translation directions are supported")
        if not 0.0 <= self.outlier_frac < 1.0:
            raise ValueError("outlier fraction must lie in [0, 1)")
        if self.outlier_mode not in ("point", "frame"):
            raise ValueError("outlier mode is 'point' or 'frame'")

    @property
    def frame(self) -> ImageFrame:
        return ImageFrame(self.width, self.height)

    def replace(self, **kw) -> "SceneConfig":
        d = asdict(self)
        d.update(kw)
        return SceneConfig(**d)

    @classmethod
    def from_dict(cls, d: dict) -> "SceneConfig":
        d = dict(d)
        d.pop("format_version", None)
        for k in ("focal_mm", "frame_extent", "translation_extent"):
            if k in d:
                d[k] = tuple(d[k])
        if "lam" in d and not np.isscalar(d["lam"]):
            d["lam"] = tuple(d["lam"])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise SchemaError(f"unknown scene config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class GroundTruthScene:
    """Ground truth plus clean and observed correspondences.

    Point arrays have shape ``(n_frames, 3, 2)`` in normalized distorted
    coordinates; ``pd[f, i] <-> pdp[f, i]`` is a correspondence.
    """

    cfg: SceneConfig
    P: np.ndarray
    lam: float
    translations: np.ndarray
    frames_plane: np.ndarray
    frame_direction: np.ndarray
    pd_clean: np.ndarray
    pdp_clean: np.ndarray
    pd: np.ndarray
    pdp: np.ndarray
    outliers: np.ndarray
    plane_region: tuple[float, float, float, float] = (-SQUARE_HALF, SQUARE_HALF, -SQUARE_HALF, SQUARE_HALF)
    meta: dict = field(default_factory=dict)

    @property
    def frame(self) -> ImageFrame:
        return self.cfg.frame

    @property
    def l(self) -> np.ndarray:
        return vanishing_line(self.P)

    @property
    def n_frames(self) -> int:
        return self.pd.shape[0]

    def vanishing_point(self, k: int = 0) -> np.ndarray:
        """Ground-truth ``u`` of direction ``k`` (``H = I + u l^T``)."""
        return vanishing_point(self.P, self.translations[k])

    def tessellation(self, n: int = 10) -> np.ndarray:
        """``n x n`` plane grid over the visible square, shape ``(n*n, 2)``."""
        x0, x1, y0, y1 = self.plane_region
        gx = np.linspace(x0, x1, n)
        gy = np.linspace(y0, y1, n)
        X, Y = np.meshgrid(gx, gy)
        return np.stack([X.ravel(), Y.ravel()], axis=-1)

    def image_points(self, X, lam: float | None = None) -> np.ndarray:
        """Project plane points and distort them with the true (or given) lambda."""
        lam = self.lam if lam is None else lam
        X = np.asarray(X, dtype=float)
        x = np.concatenate([X[..., :2], np.ones(X.shape[:-1] + (1,))], axis=-1) @ self.P.T
        return distort_point(x, lam, strict=False)

    def frames_of_direction(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.frame_direction == k)

    def to_dict(self, include_gt: bool = True) -> dict:
        return scene_to_dict(self, include_gt)


# --------------------------------------------------------------------------
# seeds


def scene_seed(master: int, index: int) -> np.random.SeedSequence:
    """Per-scene seed derived from ``(master, index)``; independent of worker layout."""
    return np.random.SeedSequence([int(master), int(index)])


def _streams(seed):
    if isinstance(seed, np.random.SeedSequence):
        ss = np.random.SeedSequence(seed.entropy, spawn_key=seed.spawn_key)
    else:
        ss = np.random.SeedSequence(seed)
    g, n, o = ss.spawn(3)
    return np.random.default_rng(g), np.random.default_rng(n), np.random.default_rng(o)


# --------------------------------------------------------------------------
# camera


def _rotation_to(z_axis, roll):
    """World-to-camera rotation whose optical axis is ``z_axis``, rolled by ``roll``."""
    z = z_axis / np.linalg.norm(z_axis)
    tmp = np.array([1.0, 0.0, 0.0]) if abs(z[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    x = np.cross(tmp, z)
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    c, s = np.cos(roll), np.sin(roll)
    x, y = c * x + s * y, -s * x + c * y
    return np.stack([x, y, z])


def random_camera(cfg: SceneConfig, rng: np.random.Generator) -> tuple[np.ndarray, dict]:
    """Plane camera with a realistic focal length, tilted towards the plane origin."""
    frame = cfg.frame
    f_mm = rng.uniform(*cfg.focal_mm)
    f_n = f_mm / 36.0 * frame.width * frame.norm_scale
    tilt = np.deg2rad(rng.uniform(0.0, cfg.tilt_max_deg))
    azim = rng.uniform(0.0, 2 * np.pi)
    roll = rng.uniform(0.0, 2 * np.pi)
    C = np.array([np.sin(tilt) * np.cos(azim), np.sin(tilt) * np.sin(azim), np.cos(tilt)])
    R = _rotation_to(-C, roll)
    K = np.diag([f_n, f_n, 1.0])
    P = K @ np.column_stack([R[:, 0], R[:, 1], -R @ C])
    return P, {"focal_mm": f_mm, "tilt_deg": float(np.rad2deg(tilt))}


def _image_grid(frame: ImageFrame, n: int = 21) -> np.ndarray:
    hx, hy = frame.half_extent
    gx = np.linspace(-hx, hx, n)
    gy = np.linspace(-hy, hy, n)
    X, Y = np.meshgrid(gx, gy)
    return np.stack([X.ravel(), Y.ravel()], axis=-1)


def plane_coverage(P, lam: float, frame: ImageFrame, n: int = 21) -> float:
    """Fraction of image rays (on an ``n x n`` grid) that meet the plane in front of the camera."""
    x = undistort_point(_image_grid(frame, n), lam)
    X = x @ np.linalg.inv(P).T
    ok = (x[:, 2] > 0) & (X[:, 2] > 0)
    return float(np.mean(ok))


def _in_image(P, lam, frame, X, margin_px=1.0) -> np.ndarray:
    x = np.concatenate([X, np.ones((len(X), 1))], axis=-1) @ P.T
    ok = x[:, 2] > 0
    pd = distort_point(x, lam, strict=False)
    ok &= np.all(np.isfinite(pd), axis=-1)
    ok &= frame.contains(np.nan_to_num(pd, nan=1e9), margin_px)
    # the distorted point must map back to a forward ray
    ok &= undistort_point(np.nan_to_num(pd), lam)[:, 2] > 0
    return ok


def _square_perimeter(s: float, n: int = 40) -> np.ndarray:
    t = np.linspace(-s, s, n)
    return np.concatenate(
        [np.c_[t, -s + 0 * t], np.c_[t, s + 0 * t], np.c_[-s + 0 * t, t], np.c_[s + 0 * t, t]]
    )


def visible_square(P, lam, frame: ImageFrame) -> float:
    """Half-side of the largest origin-centered plane square imaged inside the raster."""
    lo, hi = 0.0, 1.0
    while np.all(_in_image(P, lam, frame, _square_perimeter(hi))):
        lo, hi = hi, 2 * hi
        if hi > 1e6:
            return lo
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if np.all(_in_image(P, lam, frame, _square_perimeter(mid))):
            lo = mid
        else:
            hi = mid
    return lo


# --------------------------------------------------------------------------
# frames


def _random_laf(rng, extent) -> np.ndarray:
    """Affine frame ``(o, o + b1, o + b2)`` about the origin, shape (3, 2)."""
    # extent is a fraction of the visible square's area
    e = np.sqrt(rng.uniform(*extent)) * 2 * SQUARE_HALF
    aspect = rng.uniform(0.5, 1.0)
    phi = rng.uniform(0.0, 2 * np.pi)
    gap = np.deg2rad(rng.uniform(60.0, 120.0))
    b1 = e * np.array([np.cos(phi), np.sin(phi)])
    b2 = e * aspect * np.array([np.cos(phi + gap), np.sin(phi + gap)])
    return np.stack([np.zeros(2), b1, b2])


def _random_translations(cfg, rng) -> np.ndarray:
    out = []
    a0 = rng.uniform(0.0, 2 * np.pi)
    for k in range(cfg.n_directions):
        mag = rng.uniform(*cfg.translation_extent) * 2 * SQUARE_HALF
        ang = a0 if k == 0 else a0 + rng.uniform(np.pi / 4, 3 * np.pi / 4) * rng.choice([-1, 1])
        out.append(mag * np.array([np.cos(ang), np.sin(ang)]))
    return np.array(out)


def _radius_spread(pts) -> float:
    r = np.linalg.norm(pts.reshape(-1, 2), axis=-1)
    return float((r.max() - r.min()) / max(r.mean(), 1e-300))


def _place_frame(P, lam, frame, U, rng, extent):
    for _ in range(MAX_ATTEMPTS):
        laf = _random_laf(rng, extent)
        lo = -SQUARE_HALF - np.minimum(laf.min(0), (laf + U).min(0))
        hi = SQUARE_HALF - np.maximum(laf.max(0), (laf + U).max(0))
        if np.any(lo > hi):
            continue
        X = laf + rng.uniform(lo, hi)
        Xp = X + U
        if not np.all(_in_image(P, lam, frame, np.concatenate([X, Xp]))):
            continue
        pd = _project_distort(P, lam, X)
        pdp = _project_distort(P, lam, Xp)
        if _radius_spread(np.concatenate([pd, pdp])) < 0.01:
            continue
        return X, pd, pdp
    raise RetryExhausted("could not place an affine frame inside the image")


def _project_distort(P, lam, X) -> np.ndarray:
    x = np.concatenate([X, np.ones((len(X), 1))], axis=-1) @ P.T
    return distort_point(x, lam)


# --------------------------------------------------------------------------
# corruption


def add_noise(pts, sigma_px: float, frame: ImageFrame, rng) -> np.ndarray:
    """Isotropic Gaussian pixel noise on normalized distorted points."""
    pts = np.asarray(pts, dtype=float)
    z = np.random.default_rng(rng).standard_normal(pts.shape)
    return pts + sigma_px * frame.norm_scale * z


def _uniform_image_points(frame: ImageFrame, n: int, rng) -> np.ndarray:
    px = rng.uniform([0.0, 0.0], [frame.width, frame.height], size=(n, 2))
    return normalize_to_frame(px, frame)


def inject_outliers(pdp, fraction: float, frame: ImageFrame, rng, mode: str = "point"):
    """Replace a fraction of second points with mismatches; returns ``(pdp, mask)``.

    ``mode="point"`` replaces ``round(fraction * N)`` individual second
    points by uniform in-image points.  ``mode="frame"`` corrupts whole
    frames instead, replacing all three second points by a randomly placed,
    randomly shaped frame elsewhere in the image (a wrong region match).
    """
    if not 0.0 <= fraction < 1.0:
        raise ValueError("outlier fraction must lie in [0, 1)")
    rng = np.random.default_rng(rng)
    pdp = np.array(pdp, dtype=float)
    F = pdp.shape[0]
    mask = np.zeros(pdp.shape[:2], dtype=bool)
    if mode == "point":
        n = int(round(fraction * F * 3))
        idx = rng.choice(F * 3, size=n, replace=False)
        mask.ravel()[idx] = True
        pdp[mask] = _uniform_image_points(frame, n, rng)
    elif mode == "frame":
        n = int(round(fraction * F))
        for f in rng.choice(F, size=n, replace=False):
            c = _uniform_image_points(frame, 1, rng)[0]
            shape = pdp[f] - pdp[f].mean(0)
            scale = np.linalg.norm(shape, axis=-1).max()
            new = rng.normal(size=(3, 2))
            new = new - new.mean(0)
            new *= scale / max(np.linalg.norm(new, axis=-1).max(), 1e-300)
            pdp[f] = c + new
            mask[f] = True
    else:
        raise ValueError("outlier mode is 'point' or 'frame'")
    return pdp, mask


def gt_vanishing_line(P) -> np.ndarray:
    """``P^-T e3`` scaled to ``l3 = 1``."""
    return vanishing_line(P)


# --------------------------------------------------------------------------
# generation


def gen_scene(cfg: SceneConfig, seed=None) -> GroundTruthScene:
    """Draw one scene; ``seed`` (int, sequence or SeedSequence) defaults to ``cfg.seed``."""
    seed = cfg.seed if seed is None else seed
    rg, rn, ro = _streams(seed)
    frame = cfg.frame
    lam = float(cfg.lam) if np.isscalar(cfg.lam) else float(rg.uniform(*cfg.lam))
    for attempt in range(MAX_ATTEMPTS):
        P, info = random_camera(cfg, rg)
        lP = vanishing_line(P, normalize=False)
        if abs(lP[2]) < 1e-3 * np.linalg.norm(lP):
            continue
        if plane_coverage(P, lam, frame) < cfg.min_coverage:
            continue
        s = visible_square(P, lam, frame)
        if not np.isfinite(s) or s <= 0:
            continue
        # rescale the plane so the visible square is [-4.5, 4.5]^2
        P = P @ np.diag([s / SQUARE_HALF, s / SQUARE_HALF, 1.0])
        P = P / np.linalg.norm(P)
        try:
            vanishing_line(P)
        except DegenerateLine:
            continue
        U = _random_translations(cfg, rg)
        try:
            placed = [
                _place_frame(P, lam, frame, U[f % cfg.n_directions], rg, cfg.frame_extent)
                for f in range(cfg.n_frames)
            ]
        except RetryExhausted:
            continue
        break
    else:
        raise RetryExhausted(f"no admissible scene after {MAX_ATTEMPTS} attempts")

    X = np.stack([p[0] for p in placed])
    pd_clean = np.stack([p[1] for p in placed])
    pdp_clean = np.stack([p[2] for p in placed])
    both = add_noise(np.stack([pd_clean, pdp_clean]), cfg.sigma_px, frame, rn)
    pd, pdp = both[0], both[1]
    pdp, mask = inject_outliers(pdp, cfg.outlier_frac, frame, ro, cfg.outlier_mode)
    info["attempts"] = attempt + 1
    return GroundTruthScene(
        cfg=cfg,
        P=P,
        lam=lam,
        translations=U,
        frames_plane=X,
        frame_direction=np.arange(cfg.n_frames) % cfg.n_directions,
        pd_clean=pd_clean,
        pdp_clean=pdp_clean,
        pd=pd,
        pdp=pdp,
        outliers=mask,
        meta=info,
    )


# --------------------------------------------------------------------------
# JSON correspondence format


def _image_header(frame: ImageFrame) -> dict:
    return {"width": frame.width, "height": frame.height, "center": list(frame.center)}


def scene_to_dict(scene: GroundTruthScene, include_gt: bool = True) -> dict:
    """Correspondence file contents: pixel records plus an optional ground-truth block."""
    frame = scene.frame
    a = denormalize_from_frame(scene.pd, frame)
    b = denormalize_from_frame(scene.pdp, frame)
    records = []
    for f in range(scene.n_frames):
        for i in range(3):
            records.append(
                {
                    "frame_id": f,
                    "direction_id": int(scene.frame_direction[f]),
                    "points": [a[f, i].tolist(), b[f, i].tolist()],
                    "scale_class": "unit",
                }
            )
    d = {
        "format_version": FORMAT_VERSION,
        "image": _image_header(frame),
        "normalization": "sum_wh",
        "correspondences": records,
    }
    if include_gt:
        d["ground_truth"] = {
            "P": scene.P.ravel().tolist(),
            "lambda": scene.lam,
            "translations": scene.translations.tolist(),
            "plane_region": list(scene.plane_region),
            "frames_plane": scene.frames_plane.tolist(),
            "outliers": scene.outliers.astype(int).tolist(),
            "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(scene.cfg).items()},
        }
    return d


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise SchemaError(f"missing '{key}' in {where}")
    return d[key]


def read_correspondences(d: dict):
    """Parse a correspondence document into ``(frame, pd, pdp, frame_ids, direction_ids)``.

    Records are grouped by ``frame_id`` in order of first appearance; every
    frame must hold exactly three correspondences.
    """
    if _require(d, "format_version", "document") != FORMAT_VERSION:
        raise SchemaError(f"unsupported format_version {d['format_version']}")
    img = _require(d, "image", "document")
    frame = ImageFrame(
        int(_require(img, "width", "image")),
        int(_require(img, "height", "image")),
        tuple(img["center"]) if img.get("center") is not None else None,
    )
    if d.get("normalization", "sum_wh") != "sum_wh":
        raise SchemaError("only 'sum_wh' normalization is supported")
    groups: dict = {}
    dirs: dict = {}
    for r in _require(d, "correspondences", "document"):
        pts = np.asarray(_require(r, "points", "record"), dtype=float)
        if pts.shape != (2, 2) or not np.all(np.isfinite(pts)):
            raise SchemaError("each record needs two finite [x, y] points")
        fid = _require(r, "frame_id", "record")
        groups.setdefault(fid, []).append(pts)
        dirs[fid] = int(r.get("direction_id", 0))
    pd, pdp = [], []
    for fid, pts in groups.items():
        if len(pts) != 3:
            raise SchemaError(f"frame {fid} has {len(pts)} correspondences, expected 3")
        pts = np.stack(pts)
        pd.append(normalize_to_frame(pts[:, 0], frame))
        pdp.append(normalize_to_frame(pts[:, 1], frame))
    if not pd:
        raise SchemaError("no correspondences")
    ids = list(groups)
    return frame, np.stack(pd), np.stack(pdp), ids, np.array([dirs[i] for i in ids])


def scene_from_dict(d: dict) -> GroundTruthScene:
    """Rebuild a scene (with ground truth) from a correspondence document."""
    frame, pd, pdp, _, dirs = read_correspondences(d)
    gt = _require(d, "ground_truth", "document")
    cfg_d = dict(gt.get("config", {}))
    cfg_d.update(width=frame.width, height=frame.height)
    cfg = SceneConfig.from_dict(cfg_d)
    P = np.asarray(_require(gt, "P", "ground_truth"), dtype=float).reshape(3, 3)
    lam = float(_require(gt, "lambda", "ground_truth"))
    X = np.asarray(gt.get("frames_plane", np.full(pd.shape, np.nan)), dtype=float)
    if np.all(np.isfinite(X)):
        pd_clean = np.stack([_project_distort(P, lam, x) for x in X])
        U = np.asarray(gt["translations"], dtype=float)
        pdp_clean = np.stack([_project_distort(P, lam, x + U[k]) for x, k in zip(X, dirs)])
    else:
        pd_clean, pdp_clean = pd.copy(), pdp.copy()
    return GroundTruthScene(
        cfg=cfg,
        P=P,
        lam=lam,
        translations=np.asarray(_require(gt, "translations", "ground_truth"), dtype=float).reshape(-1, 2),
        frames_plane=X,
        frame_direction=dirs,
        pd_clean=pd_clean,
        pdp_clean=pdp_clean,
        pd=pd,
        pdp=pdp,
        outliers=np.asarray(gt.get("outliers", np.zeros(pd.shape[:2])), dtype=bool),
        plane_region=tuple(gt.get("plane_region", (-SQUARE_HALF, SQUARE_HALF, -SQUARE_HALF, SQUARE_HALF))),
    )


def save_scene(scene: GroundTruthScene, path, include_gt: bool = True):
    with open(path, "w") as fh:
        json.dump(scene_to_dict(scene, include_gt), fh, indent=1)


def load_scene(path) -> GroundTruthScene:
    with open(path) as fh:
        return scene_from_dict(json.load(fh))
