"""Shared test utilities: finite differences and independent oracles."""

import numpy as np

from sketchanim.geometry import GlobalTransform, IDENTITY_PARAMS


def central_diff(fn, x: np.ndarray, h: float = 1e-5, indices=None) -> dict:
    """Central finite differences of a scalar fn at selected flat indices."""
    x = np.array(x, dtype=float)
    flat = x.ravel()
    if indices is None:
        indices = range(flat.size)
    out = {}
    for i in indices:
        orig = flat[i]
        flat[i] = orig + h
        fp = fn(x)
        flat[i] = orig - h
        fm = fn(x)
        flat[i] = orig
        out[i] = (fp - fm) / (2.0 * h)
    return out


def max_rel_error(fd: dict, analytic: np.ndarray, floor: float = 1e-8) -> float:
    """Worst relative error of analytic vs finite-difference entries.

    The floor keeps near-zero gradient pairs from blowing up the ratio;
    entries where both sides are below it count as exact.
    """
    flat = np.asarray(analytic).ravel()
    worst = 0.0
    for i, fd_val in fd.items():
        scale = max(abs(fd_val), abs(flat[i]), floor)
        worst = max(worst, abs(fd_val - flat[i]) / scale)
    return worst


def random_transform(rng: np.random.Generator) -> GlobalTransform:
    return GlobalTransform(
        scale_x=float(np.exp(rng.normal(0.0, 0.15))),
        scale_y=float(np.exp(rng.normal(0.0, 0.15))),
        shear=float(rng.normal(0.0, 0.25)),
        rotation=float(rng.normal(0.0, 0.6)),
        translate=tuple(rng.normal(0.0, 5.0, 2)),
    )


def rotation_matrix(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def brute_force_swept_area(control, transform, offsets, nu: int, nt: int) -> float:
    """Independent dense midpoint-rule integration of the swept-area surface.

    Rebuilds the space-time surface from first principles: Bernstein
    polynomials written out directly, the time derivative of the transform
    matrix taken by central differences (so no analytic chain is shared
    with the implementation under test).
    """
    control = np.asarray(control, dtype=float)
    offsets = np.asarray(offsets, dtype=float)
    lin = transform.linear_params()
    w = lin - IDENTITY_PARAMS
    tau = transform.translation()

    def matrix_at(t):
        sx, sy, hh, th = IDENTITY_PARAMS + t * w
        return np.array(
            [
                [np.cos(th) * sx, sy * (np.cos(th) * hh - np.sin(th))],
                [np.sin(th) * sx, sy * (np.sin(th) * hh + np.cos(th))],
            ]
        )

    us = (np.arange(nu) + 0.5) / nu
    b = np.stack(
        [(1 - us) ** 3, 3 * (1 - us) ** 2 * us, 3 * (1 - us) * us**2, us**3], axis=1
    )
    db = np.stack(
        [
            -3 * (1 - us) ** 2,
            3 * ((1 - us) ** 2 - 2 * (1 - us) * us),
            3 * (2 * (1 - us) * us - us**2),
            3 * us**2,
        ],
        axis=1,
    )

    step = 1e-6
    total = 0.0
    for m in range(nt):
        t = (m + 0.5) / nt
        mat = matrix_at(t)
        dmat = (matrix_at(t + step) - matrix_at(t - step)) / (2 * step)
        p = control @ mat.T + t * (tau + offsets)
        v = control @ dmat.T + tau + offsets
        f_u = db @ p
        f_t = b @ v
        total += np.abs(f_u[:, 0] * f_t[:, 1] - f_u[:, 1] * f_t[:, 0]).sum()
    return total / (nu * nt)


def convex_hull_area(points: np.ndarray) -> float:
    """Area of the convex hull (Andrew's monotone chain + shoelace)."""
    pts = sorted(map(tuple, np.asarray(points, dtype=float)))

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and (
                (out[-1][0] - out[-2][0]) * (p[1] - out[-2][1])
                - (out[-1][1] - out[-2][1]) * (p[0] - out[-2][0])
            ) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(reversed(pts))
    hull = lower[:-1] + upper[:-1]
    area = 0.0
    for i in range(len(hull)):
        x0, y0 = hull[i]
        x1, y1 = hull[(i + 1) % len(hull)]
        area += x0 * y1 - x1 * y0
    return 0.5 * abs(area)
