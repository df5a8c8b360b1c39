"""Binary PPM I/O and inverse-mapping warps for undistortion and rectification.

Pixel ``(row, col)`` has its center at ``(col + 0.5, row + 0.5)`` in the
continuous pixel coordinates used by :class:`rdct.geom.ImageFrame`.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import map_coordinates

from .errors import SchemaError
from .geom import EPS_W, ImageFrame, dehomogenize, distort_point, normalize_to_frame, undistort_point

MAX_SIZE = 2048


def read_ppm(path) -> np.ndarray:
    """Read an 8-bit binary PPM (P6) as an ``(h, w, 3)`` uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise SchemaError("truncated PPM header")
        tokens.append(data[start:pos])
    if tokens[0] != b"P6":
        raise SchemaError("only binary PPM (P6) is supported")
    w, h, maxval = (int(t) for t in tokens[1:])
    if maxval > 255 or w <= 0 or h <= 0:
        raise SchemaError("only 8-bit PPM with positive size is supported")
    pos += 1
    pix = np.frombuffer(data, dtype=np.uint8, count=w * h * 3, offset=pos) if len(data) - pos >= w * h * 3 else None
    if pix is None:
        raise SchemaError("PPM pixel data is truncated")
    return pix.reshape(h, w, 3).copy()


def write_ppm(path, img: np.ndarray):
    img = np.asarray(img)
    if img.ndim == 2:
        img = np.repeat(img[..., None], 3, axis=-1)
    img = np.clip(img, 0, 255).astype(np.uint8)
    h, w = img.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode())
        fh.write(np.ascontiguousarray(img[..., :3]).tobytes())


def _border(frame: ImageFrame, n: int = 64) -> np.ndarray:
    t = np.linspace(0.0, 1.0, n)
    W, H = frame.width, frame.height
    px = np.concatenate([np.c_[t * W, 0 * t], np.c_[t * W, H + 0 * t], np.c_[0 * t, t * H], np.c_[W + 0 * t, t * H]])
    return normalize_to_frame(px, frame)


def _forward(pts, model, mode):
    """Distorted normalized points to output-space points (nan if not representable)."""
    x = undistort_point(pts, model.lam)
    if mode == "rectify":
        x = x.copy()
        x[..., 2] = x @ np.asarray(model.l, float)
    ok = x[..., 2] > EPS_W * np.linalg.norm(x, axis=-1)
    out = dehomogenize(x)
    out[~ok] = np.nan
    return out


def _backward(q, model, mode):
    """Output-space points to distorted normalized source points."""
    x = np.concatenate([q, np.ones(q.shape[:-1] + (1,))], axis=-1)
    if mode == "rectify":
        l = np.asarray(model.l, float)
        # H(l)^-1 (q, 1) = (q1, q2, (1 - l1 q1 - l2 q2) / l3)
        x[..., 2] = (1.0 - l[0] * q[..., 0] - l[1] * q[..., 1]) / l[2]
    ok = x[..., 2] > 0
    with np.errstate(invalid="ignore", divide="ignore"):
        src = distort_point(x, model.lam, strict=False)
    src[~ok] = np.nan
    return src


def output_bounds(frame: ImageFrame, model, mode: str, max_extent: float = 4.0):
    """Bounding box of the warped image in output normalized coordinates.

    Border points sent to infinity are dropped and the box is clipped to
    ``max_extent`` times the source half-extent so that views reaching the
    horizon stay finite.
    """
    q = _forward(_border(frame), model, mode)
    q = q[np.all(np.isfinite(q), axis=-1)]
    hx, hy = frame.half_extent
    lim = max_extent * max(hx, hy)
    if q.size == 0:
        return -hx, hx, -hy, hy
    x0, y0 = np.maximum(q.min(0), -lim)
    x1, y1 = np.minimum(q.max(0), lim)
    return float(x0), float(x1), float(y0), float(y1)


def warp_image(img: np.ndarray, model, mode: str = "undistort", max_size: int = MAX_SIZE, frame: ImageFrame | None = None):
    """Undistort or rectify a raster by inverse mapping with bilinear sampling.

    ``undistort``: each output pinhole pixel samples the source at ``f^d``
    of its position.  ``rectify``: the output is the affine-rectified plane
    and samples the source at ``f^d(H(l)^-1 q)``.  The output canvas fits
    the warped image bounds at the source pixel scale, shrunk if needed so
    its larger side is at most ``max_size``.  Unmapped pixels are black.
    """
    if mode not in ("undistort", "rectify"):
        raise ValueError("mode must be 'undistort' or 'rectify'")
    img = np.asarray(img)
    h, w = img.shape[:2]
    frame = frame or ImageFrame(w, h)
    x0, x1, y0, y1 = output_bounds(frame, model, mode)
    s = frame.norm_scale  # normalized units per source pixel
    W = max(1, int(np.ceil((x1 - x0) / s - 1e-9)))
    H = max(1, int(np.ceil((y1 - y0) / s - 1e-9)))
    zoom = min(1.0, max_size / max(W, H))
    W, H = max(1, int(round(W * zoom))), max(1, int(round(H * zoom)))
    step = s / zoom
    cols = x0 + (np.arange(W) + 0.5) * step
    rows = y0 + (np.arange(H) + 0.5) * step
    qx, qy = np.meshgrid(cols, rows)
    src = _backward(np.stack([qx, qy], axis=-1), model, mode)
    cx, cy = frame.center
    sc = src[..., 0] / s + cx - 0.5
    sr = src[..., 1] / s + cy - 0.5
    bad = ~(np.isfinite(sc) & np.isfinite(sr))
    sc = np.where(bad, -10.0, sc)
    sr = np.where(bad, -10.0, sr)
    chans = img[..., None] if img.ndim == 2 else img
    out = np.empty((H, W, chans.shape[-1]), dtype=np.float64)
    for c in range(chans.shape[-1]):
        out[..., c] = map_coordinates(chans[..., c].astype(np.float64), [sr, sc], order=1, mode="constant", cval=0.0)
    out = np.clip(np.rint(out), 0, 255).astype(np.uint8)
    return out[..., 0] if img.ndim == 2 else out
