"""Minimal rasterization: strokes as black polylines on a white canvas,
written as binary PPM (P6).  Quality beyond this is out of scope; the SVG
frames are the ground-truth output.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .geometry import sample_curve
from .sketch import SketchFrame

__all__ = ["rasterize_frame", "write_ppm"]

CURVE_SAMPLES = 128


def _draw_segment(img: np.ndarray, x0: int, y0: int, x1: int, y1: int):
    """Bresenham line with clipping."""
    h, w = img.shape[:2]
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        if 0 <= x0 < w and 0 <= y0 < h:
            img[y0, x0] = 0
        if x0 == x1 and y0 == y1:
            return
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def rasterize_frame(frame: SketchFrame, size: int = 256) -> np.ndarray:
    """Render to a (size, size, 3) uint8 image, 128 samples per curve."""
    img = np.full((size, size, 3), 255, dtype=np.uint8)
    us = np.linspace(0.0, 1.0, CURVE_SAMPLES)
    for stroke in frame.strokes:
        pts = sample_curve(stroke.control, us)
        ij = np.rint(pts).astype(int)
        for a, b in zip(ij[:-1], ij[1:]):
            _draw_segment(img, a[0], a[1], b[0], b[1])
    return img


def write_ppm(path, img: np.ndarray):
    """Binary PPM, deterministic bytes for identical input."""
    h, w = img.shape[:2]
    header = f"P6\n{w} {h}\n255\n".encode("ascii")
    Path(path).write_bytes(header + img.tobytes())
