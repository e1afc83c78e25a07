"""Geometry-only animation quality metrics.

These quantify temporal consistency (stroke-length stability, swept area,
point kinematics) and shape distortion (rigidity energy) directly from a
frame sequence, with no learned models involved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .delaunay import delaunay_triangulate
from .errors import AllCollinear, TooFewPoints
from .geometry import QuadratureSpec
from .losses import ArapConfig, arap_energy_per_frame
from .optim import _video_displacement_motion
from .losses import la_terms, LaConfig
from .sketch import SketchVideo

__all__ = ["MetricsReport", "compute_metrics"]

METRICS_SCHEMA = 1


@dataclass(frozen=True)
class MetricsReport:
    per_frame_lengths: np.ndarray  # (n, k)
    max_length_deviation: float
    mean_length_deviation: float
    total_swept_area: float
    per_frame_arap_energy: np.ndarray  # (n,)
    mean_speed: float
    mean_acceleration: float

    @property
    def frame_count(self) -> int:
        return self.per_frame_lengths.shape[0]

    def to_json_dict(self) -> dict:
        return {
            "schema": METRICS_SCHEMA,
            "frames": int(self.per_frame_lengths.shape[0]),
            "strokes": int(self.per_frame_lengths.shape[1]),
            "per_frame_lengths": self.per_frame_lengths.tolist(),
            "max_length_deviation": self.max_length_deviation,
            "mean_length_deviation": self.mean_length_deviation,
            "total_swept_area": self.total_swept_area,
            "per_frame_arap_energy": self.per_frame_arap_energy.tolist(),
            "mean_speed": self.mean_speed,
            "mean_acceleration": self.mean_acceleration,
        }


def compute_metrics(
    video: SketchVideo,
    q: QuadratureSpec = QuadratureSpec(),
    arap: ArapConfig = ArapConfig(),
) -> MetricsReport:
    """Recompute all metrics from frame geometry alone.

    Swept area uses per-point displacement motion between consecutive
    frames; rigidity energy uses a Delaunay mesh built on frame 0 (the
    same construction the training loop uses, so values agree with it).
    """
    from .losses import _stroke_lengths_and_grad  # value path only

    pts = video.points
    n = video.frame_count
    lengths, _ = _stroke_lengths_and_grad(pts, q.samples_u)
    deviation = np.abs(lengths[1:] - lengths[0])
    max_dev = float(deviation.max()) if deviation.size else 0.0
    mean_dev = float(deviation.mean()) if deviation.size else 0.0

    transforms, offsets = _video_displacement_motion(video)
    _, area_raw, _ = la_terms(
        video, transforms, offsets, LaConfig(lambda_l=0.0, lambda_a=0.0), q
    )

    try:
        mesh = delaunay_triangulate(pts[0])
        arap_energy = arap_energy_per_frame(mesh, video.frame(0), video, arap)
    except (AllCollinear, TooFewPoints):
        # no triangulation exists, so there is no rigidity to measure
        arap_energy = np.zeros(n)

    steps = pts[1:] - pts[:-1]
    speed = float(np.linalg.norm(steps, axis=-1).mean()) if len(steps) else 0.0
    if n >= 3:
        accel_vec = pts[2:] - 2.0 * pts[1:-1] + pts[:-2]
        accel = float(np.linalg.norm(accel_vec, axis=-1).mean())
    else:
        accel = 0.0

    return MetricsReport(
        per_frame_lengths=lengths,
        max_length_deviation=max_dev,
        mean_length_deviation=mean_dev,
        total_swept_area=float(area_raw),
        per_frame_arap_energy=arap_energy,
        mean_speed=speed,
        mean_acceleration=accel,
    )
