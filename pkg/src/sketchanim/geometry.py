"""Cubic Bezier geometry: evaluation, arc length, and space-time swept area.

All quadrature uses the composite midpoint rule, which is smooth in the
control points (needed for gradient-based optimization) and deterministic.
Sums run in a fixed left-to-right order so results are reproducible
bit-for-bit regardless of caller threading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Point2",
    "CubicBezier",
    "QuadratureSpec",
    "GlobalTransform",
    "eval_bezier",
    "bezier_velocity",
    "curve_length",
    "swept_area",
    "bernstein_basis",
    "bernstein_derivative_basis",
]

IDENTITY_PARAMS = np.array([1.0, 1.0, 0.0, 0.0])  # scale_x, scale_y, shear, rotation


@dataclass(frozen=True)
class Point2:
    """A finite point (or vector) in scene units."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])


def _as_point_array(points, count: int) -> np.ndarray:
    arr = np.asarray(
        [p.as_array() if isinstance(p, Point2) else p for p in points], dtype=float
    )
    if arr.shape != (count, 2):
        raise ValueError(f"expected {count} 2D points, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("control points must be finite")
    return arr


class CubicBezier:
    """One stroke: a cubic Bezier defined by four control points.

    ``control`` is a read-only (4, 2) float array.
    """

    __slots__ = ("control",)

    def __init__(self, control):
        arr = _as_point_array(control, 4)
        arr.flags.writeable = False
        object.__setattr__(self, "control", arr)

    def __setattr__(self, name, value):
        raise AttributeError("CubicBezier is immutable")

    def __repr__(self):
        pts = ", ".join(f"({x:g}, {y:g})" for x, y in self.control)
        return f"CubicBezier({pts})"


@dataclass(frozen=True)
class QuadratureSpec:
    """Midpoint-rule sample counts along the curve parameter and time."""

    samples_u: int = 1000
    samples_t: int = 16

    def __post_init__(self):
        if self.samples_u < 2 or self.samples_t < 2:
            raise ValueError("quadrature needs at least 2 samples per direction")


@dataclass(frozen=True)
class GlobalTransform:
    """Per-frame affine motion: scale, shear, rotation, translation.

    The linear part is built as rotate @ shear @ scale; callers decide
    the fixed point (see ``sketch.compose_video``).
    """

    scale_x: float = 1.0
    scale_y: float = 1.0
    shear: float = 0.0
    rotation: float = 0.0
    translate: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        vals = (self.scale_x, self.scale_y, self.shear, self.rotation) + tuple(
            self.translate
        )
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("transform parameters must be finite")
        if self.scale_x <= 0 or self.scale_y <= 0:
            raise ValueError("scales must be positive")

    @classmethod
    def identity(cls) -> "GlobalTransform":
        return cls()

    @classmethod
    def from_params(cls, params) -> "GlobalTransform":
        p = np.asarray(params, dtype=float)
        if p.shape != (6,):
            raise ValueError("expected 6 transform parameters")
        return cls(p[0], p[1], p[2], p[3], (p[4], p[5]))

    def params(self) -> np.ndarray:
        """Parameter vector (scale_x, scale_y, shear, rotation, tx, ty)."""
        return np.array(
            [
                self.scale_x,
                self.scale_y,
                self.shear,
                self.rotation,
                self.translate[0],
                self.translate[1],
            ]
        )

    def linear_params(self) -> np.ndarray:
        return np.array([self.scale_x, self.scale_y, self.shear, self.rotation])

    def matrix(self) -> np.ndarray:
        """2x2 linear part (rotate @ shear @ scale)."""
        return transform_matrix(self.linear_params())

    def translation(self) -> np.ndarray:
        return np.asarray(self.translate, dtype=float)


def transform_matrix(params: np.ndarray) -> np.ndarray:
    """Linear part of the transform for params (..., 4) = (sx, sy, shear, rot).

    Returns (..., 2, 2).  Entries in closed form:
        [[cos*sx, sy*(cos*h - sin)],
         [sin*sx, sy*(sin*h + cos)]]
    """
    params = np.asarray(params, dtype=float)
    sx, sy, h, th = (params[..., i] for i in range(4))
    c, s = np.cos(th), np.sin(th)
    m = np.empty(params.shape[:-1] + (2, 2))
    m[..., 0, 0] = c * sx
    m[..., 0, 1] = sy * (c * h - s)
    m[..., 1, 0] = s * sx
    m[..., 1, 1] = sy * (s * h + c)
    return m


def transform_matrix_jacobian(params: np.ndarray) -> np.ndarray:
    """d(matrix)/d(params): (..., 4, 2, 2), one 2x2 slab per parameter."""
    params = np.asarray(params, dtype=float)
    sx, sy, h, th = (params[..., i] for i in range(4))
    c, s = np.cos(th), np.sin(th)
    jac = np.zeros(params.shape[:-1] + (4, 2, 2))
    # d/d scale_x
    jac[..., 0, 0, 0] = c
    jac[..., 0, 1, 0] = s
    # d/d scale_y
    jac[..., 1, 0, 1] = c * h - s
    jac[..., 1, 1, 1] = s * h + c
    # d/d shear
    jac[..., 2, 0, 1] = sy * c
    jac[..., 2, 1, 1] = sy * s
    # d/d rotation
    jac[..., 3, 0, 0] = -s * sx
    jac[..., 3, 0, 1] = sy * (-s * h - c)
    jac[..., 3, 1, 0] = c * sx
    jac[..., 3, 1, 1] = sy * (c * h - s)
    return jac


def transform_matrix_hessian(params: np.ndarray) -> np.ndarray:
    """Second derivatives d2(matrix)/d(params_r)d(params_q): (..., 4, 4, 2, 2)."""
    params = np.asarray(params, dtype=float)
    sx, sy, h, th = (params[..., i] for i in range(4))
    c, s = np.cos(th), np.sin(th)
    hes = np.zeros(params.shape[:-1] + (4, 4, 2, 2))
    # (scale_x, rotation)
    hes[..., 0, 3, 0, 0] = -s
    hes[..., 0, 3, 1, 0] = c
    # (scale_y, shear)
    hes[..., 1, 2, 0, 1] = c
    hes[..., 1, 2, 1, 1] = s
    # (scale_y, rotation)
    hes[..., 1, 3, 0, 1] = -s * h - c
    hes[..., 1, 3, 1, 1] = c * h - s
    # (shear, rotation)
    hes[..., 2, 3, 0, 1] = -sy * s
    hes[..., 2, 3, 1, 1] = sy * c
    # (rotation, rotation)
    hes[..., 3, 3, 0, 0] = -c * sx
    hes[..., 3, 3, 0, 1] = sy * (-c * h + s)
    hes[..., 3, 3, 1, 0] = -s * sx
    hes[..., 3, 3, 1, 1] = sy * (-s * h - c)
    # symmetrize the mixed entries
    for r in range(4):
        for q in range(r + 1, 4):
            hes[..., q, r, :, :] = hes[..., r, q, :, :]
    return hes


def bernstein_basis(u: np.ndarray) -> np.ndarray:
    """Cubic Bernstein basis values at u: shape (len(u), 4)."""
    u = np.asarray(u, dtype=float)
    w = 1.0 - u
    return np.stack([w**3, 3.0 * w**2 * u, 3.0 * w * u**2, u**3], axis=-1)


def bernstein_derivative_basis(u: np.ndarray) -> np.ndarray:
    """d/du of the cubic Bernstein basis at u: shape (len(u), 4)."""
    u = np.asarray(u, dtype=float)
    w = 1.0 - u
    return np.stack(
        [
            -3.0 * w**2,
            3.0 * (w**2 - 2.0 * w * u),
            3.0 * (2.0 * w * u - u**2),
            3.0 * u**2,
        ],
        axis=-1,
    )


def midpoints(n: int) -> np.ndarray:
    """Midpoint-rule nodes on [0, 1]."""
    return (np.arange(n) + 0.5) / n


def eval_bezier(c: CubicBezier, u: float) -> Point2:
    """Point on the curve at parameter u in [0, 1]."""
    b = bernstein_basis(np.array([u]))[0]
    p = b @ c.control
    return Point2(p[0], p[1])


def bezier_velocity(c: CubicBezier, u: float) -> Point2:
    """Exact derivative of the curve at u (a quadratic in u)."""
    db = bernstein_derivative_basis(np.array([u]))[0]
    v = db @ c.control
    return Point2(v[0], v[1])


def sample_curve(control: np.ndarray, us: np.ndarray) -> np.ndarray:
    """Evaluate points on a curve (or batch of curves) at parameters us.

    control: (..., 4, 2); returns (..., len(us), 2).
    """
    b = bernstein_basis(us)
    return np.einsum("uj,...jc->...uc", b, control)


def curve_length(c: CubicBezier, q: QuadratureSpec = QuadratureSpec()) -> float:
    """Arc length by midpoint quadrature of the speed |f'(u)|."""
    return float(batch_curve_lengths(c.control[np.newaxis], q.samples_u)[0])


def batch_curve_lengths(control: np.ndarray, samples_u: int) -> np.ndarray:
    """Arc lengths for a batch of curves: control (..., 4, 2) -> (...,)."""
    db = bernstein_derivative_basis(midpoints(samples_u))
    vel = np.einsum("uj,...jc->...uc", db, control)
    speed = np.sqrt(np.sum(vel * vel, axis=-1))
    return speed.sum(axis=-1) / samples_u


def interpolated_transform_chain(transform: GlobalTransform, samples_t: int):
    """Per time-sample linear matrices and their time derivatives.

    The transform parameters are interpolated linearly from the identity
    at t=0 to the given transform at t=1, and the matrix is rebuilt at
    each midpoint sample (entry-wise interpolation can produce degenerate
    matrices; parameter-space interpolation cannot).

    Returns (ts, mats, dmats) with shapes (T,), (T, 2, 2), (T, 2, 2) where
    dmats is the derivative of the matrix with respect to t.
    """
    ts = midpoints(samples_t)
    lin = transform.linear_params()
    w = lin - IDENTITY_PARAMS
    interp = IDENTITY_PARAMS + ts[:, None] * w[None, :]
    mats = transform_matrix(interp)
    jac = transform_matrix_jacobian(interp)
    dmats = np.einsum("trab,r->tab", jac, w)
    return ts, mats, dmats


def swept_area(
    c: CubicBezier,
    frame_transform: GlobalTransform,
    offsets,
    q: QuadratureSpec = QuadratureSpec(),
    anchor: Point2 | None = None,
) -> float:
    """Area of the space-time surface swept over one unit frame interval.

    The surface has time-varying control points
        p_j(t) = M(t) (q_j - a) + a + t * translate + t * offset_j
    where a is the anchor (origin unless given) and M(t) interpolates the
    transform parameters from identity to ``frame_transform``.  Integrates
    |df/du x df/dt| with the scalar 2D cross product, midpoint rule on a
    samples_u x samples_t grid.
    """
    off = _as_point_array(offsets, 4)
    a = np.zeros(2) if anchor is None else anchor.as_array()
    ts, mats, dmats = interpolated_transform_chain(frame_transform, q.samples_t)
    tau = frame_transform.translation()
    qc = c.control - a

    # time-varying control points and their time derivatives: (T, 4, 2)
    p = np.einsum("tab,jb->tja", mats, qc) + a + ts[:, None, None] * (tau + off)
    v = np.einsum("tab,jb->tja", dmats, qc) + tau + off

    us = midpoints(q.samples_u)
    bu = bernstein_basis(us)
    dbu = bernstein_derivative_basis(us)
    f_u = np.einsum("uj,tja->tua", dbu, p)
    f_t = np.einsum("uj,tja->tua", bu, v)
    cross = f_u[..., 0] * f_t[..., 1] - f_u[..., 1] * f_t[..., 0]
    return float(np.abs(cross).sum() / (q.samples_u * q.samples_t))
