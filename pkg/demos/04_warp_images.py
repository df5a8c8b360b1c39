#!/usr/bin/env python3
"""Render a distorted view of a checkerboard plane, then undistort and rectify it.

Writes three PPM files next to this script: the synthetic fisheye-like view,
its undistortion and the affine-rectified plane, all using a model that was
estimated from a single noisy region correspondence.
"""

from pathlib import Path

import numpy as np

from rdct import SceneConfig, gen_scene, solve_best
from rdct.geom import undistort_point
from rdct.raster import warp_image, write_ppm

OUT = Path(__file__).resolve().parent

scene = gen_scene(SceneConfig(width=640, height=480, n_frames=1, lam=-4.0, sigma_px=0.5), seed=21)
frame = scene.frame

# Forward render: each pixel is undistorted, sent back to the plane and shaded.
rows, cols = np.mgrid[0:frame.height, 0:frame.width]
px = np.stack([cols + 0.5, rows + 0.5], axis=-1)
pd = (px - np.asarray(frame.center)) * frame.norm_scale
x = undistort_point(pd, scene.lam)
X = x @ np.linalg.inv(scene.P).T
with np.errstate(divide="ignore", invalid="ignore"):
    XY = X[..., :2] / X[..., 2:]
# pixels seeing the plane share the homogeneous sign of a known plane point
side = np.sign(undistort_point(scene.pd[0, 0], scene.lam) @ np.linalg.inv(scene.P).T)[2]
valid = (x[..., 2] > 0) & (X[..., 2] * side > 0) & np.all(np.isfinite(XY), axis=-1)
check = (np.floor(XY[..., 0]) + np.floor(XY[..., 1])) % 2
img = np.where(valid, 60 + 160 * check, 0).astype(np.uint8)
img = np.repeat(img[..., None], 3, axis=-1)
img[..., 2] = np.where(valid, 200 - 80 * check, 0)
write_ppm(OUT / "view.ppm", img)

model = solve_best(scene.pd[0], scene.pdp[0])
print("estimated lambda", round(model.lam, 4), "true", scene.lam)

write_ppm(OUT / "undistorted.ppm", warp_image(img, model, "undistort", max_size=1200))
write_ppm(OUT / "rectified.ppm", warp_image(img, model, "rectify", max_size=1200))
print("wrote", *(p.name for p in sorted(OUT.glob("*.ppm"))))
