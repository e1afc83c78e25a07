"""Guidance oracles: pluggable (loss, gradient) sources over a sketch video.

The optimization loop only ever sees this interface.  A production system
would put a score-distillation wrapper around a text-to-video diffusion
model behind it; here synthetic oracles provide exact, cheap gradients so
the full loop can be verified on a desk.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeMismatch
from .sketch import SketchVideo

__all__ = [
    "GuidanceOracle",
    "TargetVideoOracle",
    "RigidMotionOracle",
    "make_target_oracle",
    "make_rigid_motion_oracle",
    "make_static_oracle",
    "ORACLE_BUILDERS",
]


class GuidanceOracle:
    """Interface: evaluate(video) -> (scalar loss, gradient per control point).

    The gradient array matches video.points in shape.  Implementations
    wrapping a diffusion model may additionally expose ``noise_level``
    (their timestep), ``schedule_weight`` (the noising-schedule factor at
    that timestep), and ``prompt``; the engine never reads them.
    """

    noise_level: float | None = None
    schedule_weight: float | None = None
    prompt: str | None = None

    def evaluate(self, video: SketchVideo) -> tuple[float, np.ndarray]:
        raise NotImplementedError


class TargetVideoOracle(GuidanceOracle):
    """Weighted mean squared control-point distance to a fixed target video."""

    def __init__(self, targets: np.ndarray, weight: float):
        self.targets = np.array(targets, dtype=float)
        self.weight = float(weight)

    def evaluate(self, video: SketchVideo) -> tuple[float, np.ndarray]:
        pts = video.points
        if pts.shape != self.targets.shape:
            raise ShapeMismatch(
                f"video shape {pts.shape} != target shape {self.targets.shape}"
            )
        diff = pts - self.targets
        n_coords = diff.size
        loss = self.weight * float(np.sum(diff * diff)) / n_coords
        grad = (2.0 * self.weight / n_coords) * diff
        return loss, grad


def make_target_oracle(targets: SketchVideo, weight: float = 1.0) -> TargetVideoOracle:
    return TargetVideoOracle(targets.points, weight)


def _rotation(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


class RigidMotionOracle(GuidanceOracle):
    """Synthetic prompt: rotate/advect the sketch at a constant rate.

    Target frame j is frame 0 rotated by j*angular_velocity about its
    centroid and translated by j*translation_velocity.  Targets are frozen
    from the first video this oracle sees (frame 0 never moves during
    optimization, so this is just a cache), after which the oracle is a
    plain MSE-to-target oracle with an exact gradient.
    """

    def __init__(self, angular_velocity: float, translation_velocity, weight: float = 1.0):
        self.angular_velocity = float(angular_velocity)
        self.translation_velocity = np.asarray(translation_velocity, dtype=float)
        self.weight = float(weight)
        self._inner: TargetVideoOracle | None = None

    def synthesize_targets(self, rest_points: np.ndarray, n_frames: int) -> np.ndarray:
        centroid = rest_points.mean(axis=0)
        frames = []
        for j in range(n_frames):
            angle = j * self.angular_velocity
            if angle == 0.0:
                # keep the untransformed frame bit-exact
                frames.append(rest_points + j * self.translation_velocity)
            else:
                frames.append(
                    (rest_points - centroid) @ _rotation(angle).T
                    + centroid
                    + j * self.translation_velocity
                )
        return np.stack(frames)

    def evaluate(self, video: SketchVideo) -> tuple[float, np.ndarray]:
        if self._inner is None:
            targets = self.synthesize_targets(video.points[0], video.frame_count)
            self._inner = TargetVideoOracle(targets, self.weight)
        return self._inner.evaluate(video)


def make_rigid_motion_oracle(
    angular_velocity: float, translation_velocity=(0.0, 0.0), weight: float = 1.0
) -> RigidMotionOracle:
    return RigidMotionOracle(angular_velocity, translation_velocity, weight)


def make_static_oracle(weight: float = 1.0) -> RigidMotionOracle:
    """Penalize any departure from the initial sketch."""
    return RigidMotionOracle(0.0, (0.0, 0.0), weight)


def _build_rigid(params: dict) -> GuidanceOracle:
    return make_rigid_motion_oracle(
        angular_velocity=float(params.pop("angle", 0.0)),
        translation_velocity=(float(params.pop("tx", 0.0)), float(params.pop("ty", 0.0))),
        weight=float(params.pop("weight", 1.0)),
    )


def _build_static(params: dict) -> GuidanceOracle:
    return make_static_oracle(weight=float(params.pop("weight", 1.0)))


# "target" needs file IO to load its target video; the CLI registers it.
ORACLE_BUILDERS = {
    "rigid": _build_rigid,
    "static": _build_static,
}
