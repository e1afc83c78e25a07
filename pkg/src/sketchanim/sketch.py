"""Sketch, frame, and video data model plus frame composition.

A sketch frame is a list of cubic Bezier strokes (4k control points for k
strokes).  A sketch video is an (n, 4k, 2) trajectory of those points with
the stroke topology fixed across frames.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch
from .geometry import (
    CubicBezier,
    GlobalTransform,
    Point2,
    transform_matrix_jacobian,
)

__all__ = [
    "SketchFrame",
    "SketchVideo",
    "frame_centroid",
    "compose_video",
    "compose_backward",
    "RECURRENT",
    "ANCHORED",
]

RECURRENT = "recurrent"
ANCHORED = "anchored"


class SketchFrame:
    """All control points of a sketch at one instant, grouped by stroke."""

    __slots__ = ("strokes",)

    def __init__(self, strokes):
        strokes = tuple(strokes)
        if not strokes:
            raise ValueError("a sketch frame needs at least one stroke")
        if not all(isinstance(s, CubicBezier) for s in strokes):
            raise TypeError("strokes must be CubicBezier instances")
        object.__setattr__(self, "strokes", strokes)

    def __setattr__(self, name, value):
        raise AttributeError("SketchFrame is immutable")

    @property
    def stroke_count(self) -> int:
        return len(self.strokes)

    def points(self) -> np.ndarray:
        """Control points as a (4k, 2) array, stroke-major."""
        return np.concatenate([s.control for s in self.strokes], axis=0)

    @classmethod
    def from_points(cls, points) -> "SketchFrame":
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] % 4 != 0 or pts.shape[0] == 0:
            raise ShapeMismatch(f"expected (4k, 2) control points, got {pts.shape}")
        return cls(CubicBezier(pts[i : i + 4]) for i in range(0, len(pts), 4))


class SketchVideo:
    """An n-frame trajectory of a fixed-topology sketch."""

    __slots__ = ("points", "stroke_count")

    def __init__(self, points, stroke_count: int):
        pts = np.array(points, dtype=float)
        if pts.ndim != 3 or pts.shape[2] != 2:
            raise ShapeMismatch(f"expected (n, 4k, 2) trajectory, got {pts.shape}")
        if pts.shape[0] < 2:
            raise ShapeMismatch("a video needs at least 2 frames")
        if stroke_count < 1 or pts.shape[1] != 4 * stroke_count:
            raise ShapeMismatch(
                f"{pts.shape[1]} points inconsistent with {stroke_count} strokes"
            )
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "stroke_count", stroke_count)

    def __setattr__(self, name, value):
        raise AttributeError("SketchVideo is immutable")

    @property
    def frame_count(self) -> int:
        return self.points.shape[0]

    def frame(self, i: int) -> SketchFrame:
        return SketchFrame.from_points(self.points[i])

    @classmethod
    def from_frames(cls, frames) -> "SketchVideo":
        frames = list(frames)
        if not frames:
            raise ShapeMismatch("no frames")
        k = frames[0].stroke_count
        if any(f.stroke_count != k for f in frames):
            raise ShapeMismatch("stroke count must be constant across frames")
        return cls(np.stack([f.points() for f in frames]), k)


def frame_centroid(frame: SketchFrame) -> Point2:
    """Arithmetic mean of all control points."""
    c = frame.points().mean(axis=0)
    return Point2(c[0], c[1])


def _check_motion_shapes(n_points: int, transforms, offsets) -> np.ndarray:
    off = np.asarray(offsets, dtype=float)
    if off.ndim != 3 or off.shape[1:] != (n_points, 2):
        raise ShapeMismatch(f"offsets shape {off.shape} does not match {n_points} points")
    if len(transforms) != off.shape[0]:
        raise ShapeMismatch(
            f"{len(transforms)} transforms vs {off.shape[0]} offset frames"
        )
    return off


def compose_video(
    initial: SketchFrame,
    transforms,
    offsets,
    mode: str = RECURRENT,
) -> SketchVideo:
    """Build the n-frame video from per-interval transforms and offsets.

    Each step applies the interval's global transform about the source
    frame's centroid, then translates, then adds the per-point offsets:

        next = M (src - centroid) + centroid + translate + offsets

    With ``mode="recurrent"`` the source is the previous frame (the update
    chains); with ``mode="anchored"`` every frame is produced directly from
    frame 0.
    """
    if mode not in (RECURRENT, ANCHORED):
        raise ValueError(f"unknown composition mode {mode!r}")
    base = initial.points()
    off = _check_motion_shapes(base.shape[0], transforms, offsets)

    frames = [base]
    src = base
    for i, tr in enumerate(transforms):
        centroid = src.mean(axis=0)
        m = tr.matrix()
        nxt = (src - centroid) @ m.T + centroid + tr.translation() + off[i]
        frames.append(nxt)
        if mode == RECURRENT:
            src = nxt
    return SketchVideo(np.stack(frames), initial.stroke_count)


def compose_backward(
    video: SketchVideo,
    transforms,
    offsets,
    d_points: np.ndarray,
    mode: str = RECURRENT,
):
    """Backpropagate video point gradients into transform/offset gradients.

    d_points is (n, 4k, 2) (gradients of some scalar with respect to every
    composed control point).  Returns (d_transforms, d_offsets) with shapes
    (n-1, 6) and (n-1, 4k, 2); transform gradients are in parameter order
    (scale_x, scale_y, shear, rotation, tx, ty).
    """
    if mode not in (RECURRENT, ANCHORED):
        raise ValueError(f"unknown composition mode {mode!r}")
    pts = video.points
    n, n_pts = pts.shape[0], pts.shape[1]
    off = _check_motion_shapes(n_pts, transforms, offsets)
    d_points = np.asarray(d_points, dtype=float)
    if d_points.shape != pts.shape:
        raise ShapeMismatch(
            f"upstream gradient shape {d_points.shape} != video shape {pts.shape}"
        )
    if off.shape[0] != n - 1:
        raise ShapeMismatch(f"{off.shape[0]} offset frames for {n} video frames")

    d_transforms = np.zeros((n - 1, 6))
    d_offsets = np.zeros_like(off)
    eye = np.eye(2)

    if mode == RECURRENT:
        grad = d_points.copy()
        for i in range(n - 2, -1, -1):
            g = grad[i + 1]
            src = pts[i]
            centroid = src.mean(axis=0)
            rel = src - centroid
            m = transforms[i].matrix()
            jac = transform_matrix_jacobian(transforms[i].linear_params())

            d_m = np.einsum("ja,jb->ab", g, rel)
            d_transforms[i, :4] = np.einsum("rab,ab->r", jac, d_m)
            d_transforms[i, 4:] = g.sum(axis=0)
            d_offsets[i] = g
            # gradient into the source frame: through the rotated offset from
            # the centroid and through the centroid itself
            g_sum = g.sum(axis=0)
            grad[i] += g @ m + ((eye - m).T @ g_sum) / n_pts
        return d_transforms, d_offsets

    base = pts[0]
    centroid = base.mean(axis=0)
    rel = base - centroid
    for i in range(n - 1):
        g = d_points[i + 1]
        jac = transform_matrix_jacobian(transforms[i].linear_params())
        d_m = np.einsum("ja,jb->ab", g, rel)
        d_transforms[i, :4] = np.einsum("rab,ab->r", jac, d_m)
        d_transforms[i, 4:] = g.sum(axis=0)
        d_offsets[i] = g
    return d_transforms, d_offsets
