"""Adam and the training loop that fits the motion model to an oracle.

Two wirings are supported.  "joint" backpropagates the full objective
(guidance + regularizers) into every branch each iteration.
"posthoc_refine" mirrors a pipeline where regularization runs after the
guidance step: guidance updates the local/global branches, then the
length-area and rigidity terms update only the refinement head applied to
the composed frames.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .delaunay import TriangleMesh, delaunay_triangulate
from .errors import ConfigError, NonFiniteLoss, ShapeMismatch
from .geometry import GlobalTransform, QuadratureSpec
from .losses import (
    ArapConfig,
    LaConfig,
    LossBreakdown,
    arap_loss,
    la_terms,
    total_loss,
)
from .motion import EncodingSpec, MotionParams, backward, forward, refine, refine_backward
from .oracles import GuidanceOracle
from .sketch import RECURRENT, ANCHORED, SketchFrame, SketchVideo, compose_backward, compose_video

__all__ = [
    "AdamState",
    "adam_step",
    "TrainConfig",
    "TrainReport",
    "train",
    "export_history_csv",
    "WIRING_JOINT",
    "WIRING_POST_HOC",
]

WIRING_JOINT = "joint"
WIRING_POST_HOC = "posthoc_refine"


@dataclass(frozen=True)
class AdamState:
    """Bias-corrected Adam moments; treated as an immutable value."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def init(cls, size: int, lr: float = 1e-3, **kw) -> "AdamState":
        return cls(m=np.zeros(size), v=np.zeros(size), lr=lr, **kw)


def adam_step(state: AdamState, params: np.ndarray, grads: np.ndarray):
    """One bias-corrected Adam update; returns (new_state, new_params)."""
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise ShapeMismatch(
            f"params {params.shape}, grads {grads.shape}, moments {state.m.shape}"
        )
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_params = params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return replace(state, m=m, v=v, t=t), new_params


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 1000
    frames: int = 24
    wiring: str = WIRING_JOINT
    seed: int = 0
    log_every: int = 0
    lr: float = 1e-3
    cosine_decay: bool = False
    composition: str = RECURRENT
    quadrature: QuadratureSpec = QuadratureSpec()
    encoding: EncodingSpec = EncodingSpec()
    feature_dim: int = 128
    hidden: tuple = (64, 64)

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if self.frames < 2:
            raise ConfigError(f"frames must be >= 2, got {self.frames}")
        if self.wiring not in (WIRING_JOINT, WIRING_POST_HOC):
            raise ConfigError(f"unknown wiring {self.wiring!r}")
        if self.composition not in (RECURRENT, ANCHORED):
            raise ConfigError(f"unknown composition {self.composition!r}")
        if self.lr <= 0:
            raise ConfigError(f"learning rate must be positive, got {self.lr}")
        if self.log_every < 0:
            raise ConfigError("log_every must be >= 0")


@dataclass
class TrainReport:
    history: list  # one LossBreakdown per iteration
    final_video: SketchVideo
    final_breakdown: LossBreakdown
    wall_clock_seconds: float
    seed: int
    params: MotionParams
    mesh: TriangleMesh


def _lr_at(cfg: TrainConfig, iteration: int) -> float:
    if not cfg.cosine_decay:
        return cfg.lr
    span = max(cfg.iterations - 1, 1)
    return cfg.lr * 0.5 * (1.0 + np.cos(np.pi * iteration / span))


def _video_displacement_motion(video: SketchVideo):
    """Identity transforms plus per-point frame differences as offsets.

    Any video is exactly reproduced by this motion description, which lets
    the LA terms be evaluated on frames that were not generated from an
    explicit transform/offset pair (e.g. after refinement).
    """
    n_iv = video.frame_count - 1
    transforms = [GlobalTransform.identity()] * n_iv
    offsets = video.points[1:] - video.points[:-1]
    return transforms, offsets


def _regularizer_eval(video, la, arap, mesh, rest, q):
    """LA on displacement motion plus rigidity; value terms and point grads."""
    transforms, offsets = _video_displacement_motion(video)
    length_raw, area_raw, la_grads = la_terms(video, transforms, offsets, la, q)
    arap_raw, arap_grad = arap_loss(mesh, rest, video, arap)
    d_points = la_grads.d_points + arap.lambda_arap * arap_grad
    # offsets are frame differences, so their gradient folds back into points
    d_points[1:] += la_grads.d_offsets
    d_points[:-1] -= la_grads.d_offsets
    return length_raw, area_raw, arap_raw, d_points


def _refined_video(params: MotionParams, video: SketchVideo) -> SketchVideo:
    """Apply the refinement head to frames >= 1 (frame 0 stays the input)."""
    frames = [video.points[0]]
    for i in range(1, video.frame_count):
        frames.append(refine(params, video.frame(i)).points())
    return SketchVideo(np.stack(frames), video.stroke_count)


def train(
    sketch: SketchFrame,
    oracle: GuidanceOracle,
    la: LaConfig = LaConfig(),
    arap: ArapConfig = ArapConfig(),
    cfg: TrainConfig = TrainConfig(),
) -> TrainReport:
    """Optimize the motion model against the oracle and regularizers.

    Deterministic for a fixed (sketch, oracle, config, seed): reruns give
    bit-identical histories and videos.  Raises NonFiniteLoss (with the
    iteration index) as soon as any loss value stops being finite.
    """
    start = time.perf_counter()
    mesh = delaunay_triangulate(sketch.points())
    params = MotionParams(
        seed=cfg.seed,
        encoding=cfg.encoding,
        feature_dim=cfg.feature_dim,
        hidden=cfg.hidden,
    )
    vec = params.get_vector()
    slices = params.slices()
    motion_slice = slice(slices["shared"].start, slices["global"].stop)
    refine_slice = slices["refine"]

    if cfg.wiring == WIRING_JOINT:
        state = AdamState.init(vec.size, lr=cfg.lr)
    else:
        state_motion = AdamState.init(motion_slice.stop - motion_slice.start, lr=cfg.lr)
        state_refine = AdamState.init(refine_slice.stop - refine_slice.start, lr=cfg.lr)

    n = cfg.frames
    history: list[LossBreakdown] = []

    for it in range(cfg.iterations):
        lr = _lr_at(cfg, it)
        transforms, offsets = forward(params, sketch, n)
        video = compose_video(sketch, transforms, offsets, cfg.composition)

        if cfg.wiring == WIRING_JOINT:
            breakdown, grads = total_loss(
                video, transforms, offsets, la, arap, oracle, mesh, sketch, cfg.quadrature
            )
            if not breakdown.is_finite():
                raise NonFiniteLoss(it, breakdown.total)
            d_tr, d_off = compose_backward(
                video, transforms, offsets, grads.d_points, cfg.composition
            )
            d_tr += grads.d_transforms
            d_off += grads.d_offsets
            g_vec = backward(params, sketch, n, d_tr, d_off)
            state, vec = adam_step(replace(state, lr=lr), vec, g_vec)
            params.set_vector(vec)
        else:
            # stage 1: guidance drives the local/global branches
            guidance, g_grad = oracle.evaluate(video)
            d_tr, d_off = compose_backward(
                video, transforms, offsets, g_grad, cfg.composition
            )
            g_vec = backward(params, sketch, n, d_tr, d_off)
            state_motion, new_motion = adam_step(
                replace(state_motion, lr=lr), vec[motion_slice], g_vec[motion_slice]
            )
            vec[motion_slice] = new_motion
            params.set_vector(vec)

            # stage 2: regularizers drive only the refinement head, applied
            # to the frames composed with the just-updated branches
            transforms, offsets = forward(params, sketch, n)
            composed = compose_video(sketch, transforms, offsets, cfg.composition)
            refined = _refined_video(params, composed)
            length_raw, area_raw, arap_raw, d_points = _regularizer_eval(
                refined, la, arap, mesh, sketch, cfg.quadrature
            )
            g_refine = np.zeros_like(vec)
            for i in range(1, n):
                g_refine += refine_backward(params, composed.frame(i), d_points[i])
            state_refine, new_refine = adam_step(
                replace(state_refine, lr=lr), vec[refine_slice], g_refine[refine_slice]
            )
            vec[refine_slice] = new_refine
            params.set_vector(vec)

            total = (
                guidance
                + la.lambda_l * length_raw
                + la.lambda_a * area_raw
                + arap.lambda_arap * arap_raw
            )
            breakdown = LossBreakdown(length_raw, area_raw, arap_raw, guidance, total)
            if not breakdown.is_finite():
                raise NonFiniteLoss(it, breakdown.total)

        history.append(breakdown)
        if cfg.log_every and (it % cfg.log_every == 0 or it == cfg.iterations - 1):
            print(
                f"iter {it:5d}  total {breakdown.total:.6g}  "
                f"guidance {breakdown.guidance_term:.6g}  length {breakdown.length_term:.6g}  "
                f"area {breakdown.area_term:.6g}  arap {breakdown.arap_term:.6g}",
                flush=True,
            )

    # final state: compose once more with the trained parameters
    transforms, offsets = forward(params, sketch, n)
    final_video = compose_video(sketch, transforms, offsets, cfg.composition)
    if cfg.wiring == WIRING_POST_HOC:
        final_video = _refined_video(params, final_video)
        length_raw, area_raw, arap_raw, _ = _regularizer_eval(
            final_video, la, arap, mesh, sketch, cfg.quadrature
        )
        guidance, _ = oracle.evaluate(final_video)
        total = (
            guidance
            + la.lambda_l * length_raw
            + la.lambda_a * area_raw
            + arap.lambda_arap * arap_raw
        )
        final_breakdown = LossBreakdown(length_raw, area_raw, arap_raw, guidance, total)
    else:
        final_breakdown, _ = total_loss(
            final_video, transforms, offsets, la, arap, oracle, mesh, sketch, cfg.quadrature
        )

    return TrainReport(
        history=history,
        final_video=final_video,
        final_breakdown=final_breakdown,
        wall_clock_seconds=time.perf_counter() - start,
        seed=cfg.seed,
        params=params,
        mesh=mesh,
    )


def export_history_csv(history, path):
    """Write the loss history as CSV: iter,length,area,arap,guidance,total."""
    lines = ["iter,length,area,arap,guidance,total"]
    for i, b in enumerate(history):
        lines.append(
            f"{i},{b.length_term:.17g},{b.area_term:.17g},{b.arap_term:.17g},"
            f"{b.guidance_term:.17g},{b.total:.17g}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
