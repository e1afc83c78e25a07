"""The two-branch motion model: shared point features, local offsets,
global per-interval transforms, and a residual refinement head.

Everything is a small tanh MLP with hand-written forward/backward passes;
reverse-mode gradients are checked against finite differences in the test
suite.  Final layers are zero-initialized so a fresh model produces the
identity animation.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ShapeMismatch
from .geometry import GlobalTransform
from .sketch import SketchFrame

__all__ = [
    "EncodingSpec",
    "Mlp",
    "MotionParams",
    "positional_encode",
    "encode_scalar",
    "forward",
    "backward",
    "refine",
    "refine_backward",
    "save_checkpoint",
    "load_checkpoint",
    "CHECKPOINT_MAGIC",
]

CANVAS_SIZE = 256.0
CHECKPOINT_MAGIC = b"SMV1"


@dataclass(frozen=True)
class EncodingSpec:
    """Sinusoidal positional encoding: sin/cos at octave frequencies."""

    num_frequencies: int = 6
    include_input: bool = True

    def __post_init__(self):
        if self.num_frequencies < 1:
            raise ValueError("need at least one encoding frequency")

    @property
    def point_dim(self) -> int:
        base = 2 if self.include_input else 0
        return base + 4 * self.num_frequencies

    @property
    def scalar_dim(self) -> int:
        base = 1 if self.include_input else 0
        return base + 2 * self.num_frequencies


def positional_encode(points: np.ndarray, spec: EncodingSpec = EncodingSpec()) -> np.ndarray:
    """Encode canvas points: coordinates are mapped to [-1, 1] first.

    points (..., 2) -> features (..., 2 + 4F) with the raw scaled
    coordinates (when include_input) followed by sin/cos pairs of each
    coordinate at frequencies 2^j * pi.
    """
    pts = np.asarray(points, dtype=float)
    scaled = pts / (CANVAS_SIZE / 2.0) - 1.0
    feats = []
    if spec.include_input:
        feats.append(scaled)
    for j in range(spec.num_frequencies):
        arg = (2.0**j) * np.pi * scaled
        sin, cos = np.sin(arg), np.cos(arg)
        feats.append(np.stack([sin[..., 0], cos[..., 0], sin[..., 1], cos[..., 1]], axis=-1))
    return np.concatenate(feats, axis=-1)


def encode_scalar(value: np.ndarray, spec: EncodingSpec = EncodingSpec()) -> np.ndarray:
    """Encode an already-normalized scalar in [0, 1] (no canvas scaling)."""
    v = np.asarray(value, dtype=float)[..., None]
    feats = []
    if spec.include_input:
        feats.append(v)
    for j in range(spec.num_frequencies):
        arg = (2.0**j) * np.pi * v
        feats.append(np.sin(arg))
        feats.append(np.cos(arg))
    return np.concatenate(feats, axis=-1)


class Mlp:
    """Fully-connected net, tanh between layers, linear output."""

    def __init__(self, sizes, rng: np.random.Generator, zero_last: bool = False):
        self.sizes = tuple(int(s) for s in sizes)
        if len(self.sizes) < 2:
            raise ValueError("an MLP needs at least input and output sizes")
        self.weights = []
        self.biases = []
        for nin, nout in zip(self.sizes[:-1], self.sizes[1:]):
            self.weights.append(rng.normal(0.0, 1.0 / np.sqrt(nin), size=(nin, nout)))
            self.biases.append(np.zeros(nout))
        if zero_last:
            self.weights[-1][:] = 0.0

    def forward(self, x: np.ndarray):
        """Returns (output, activations); activations[i] feeds layer i."""
        if x.shape[-1] != self.sizes[0]:
            raise ShapeMismatch(f"input width {x.shape[-1]} != {self.sizes[0]}")
        acts = [x]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = acts[-1] @ w + b
            acts.append(z if i == last else np.tanh(z))
        return acts[-1], acts

    def backward(self, acts, d_out: np.ndarray):
        """Returns (d_weights, d_biases, d_input)."""
        d_weights = [None] * len(self.weights)
        d_biases = [None] * len(self.biases)
        g = d_out
        last = len(self.weights) - 1
        for i in range(last, -1, -1):
            if i != last:
                g = g * (1.0 - acts[i + 1] ** 2)
            flat_in = acts[i].reshape(-1, self.sizes[i])
            flat_g = g.reshape(-1, self.sizes[i + 1])
            d_weights[i] = flat_in.T @ flat_g
            d_biases[i] = flat_g.sum(axis=0)
            g = g @ self.weights[i].T
        return d_weights, d_biases, g

    def param_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def get_vector(self) -> np.ndarray:
        return np.concatenate(
            [np.concatenate([w.ravel(), b]) for w, b in zip(self.weights, self.biases)]
        )

    def set_vector(self, vec: np.ndarray):
        pos = 0
        for i, w in enumerate(self.weights):
            self.weights[i] = vec[pos : pos + w.size].reshape(w.shape).copy()
            pos += w.size
            b = self.biases[i]
            self.biases[i] = vec[pos : pos + b.size].copy()
            pos += b.size
        if pos != len(vec):
            raise ShapeMismatch(f"vector length {len(vec)} != {pos} parameters")


class MotionParams:
    """All trainable state: shared map, local/global branches, refine head.

    The parameter vector concatenates the nets in declaration order
    (shared, local, global, refine), each as alternating weight matrices
    (row-major) and bias vectors.
    """

    def __init__(
        self,
        seed: int = 0,
        encoding: EncodingSpec = EncodingSpec(),
        feature_dim: int = 128,
        hidden=(64, 64),
    ):
        self.encoding = encoding
        self.feature_dim = int(feature_dim)
        rng = np.random.default_rng(seed)
        point_dim = encoding.point_dim
        cond_dim = encoding.scalar_dim
        self.shared = Mlp([point_dim, *hidden, feature_dim], rng)
        self.local = Mlp([feature_dim + cond_dim, *hidden, 2], rng, zero_last=True)
        self.global_branch = Mlp([feature_dim + cond_dim, *hidden, 6], rng, zero_last=True)
        self.refine = Mlp([point_dim, *hidden, 2], rng, zero_last=True)

    @property
    def nets(self):
        return (self.shared, self.local, self.global_branch, self.refine)

    def param_count(self) -> int:
        return sum(net.param_count() for net in self.nets)

    def get_vector(self) -> np.ndarray:
        return np.concatenate([net.get_vector() for net in self.nets])

    def set_vector(self, vec: np.ndarray):
        vec = np.asarray(vec, dtype=float)
        if len(vec) != self.param_count():
            raise ShapeMismatch(
                f"vector length {len(vec)} != {self.param_count()} parameters"
            )
        pos = 0
        for net in self.nets:
            count = net.param_count()
            net.set_vector(vec[pos : pos + count])
            pos += count

    def slices(self):
        """Per-net slices into the flat parameter vector."""
        out = {}
        pos = 0
        for name, net in zip(("shared", "local", "global", "refine"), self.nets):
            count = net.param_count()
            out[name] = slice(pos, pos + count)
            pos += count
        return out


def _interval_conditions(n_frames: int, spec: EncodingSpec) -> np.ndarray:
    """Encoded normalized interval indices i/(n-1): (n-1, scalar_dim)."""
    idx = np.arange(n_frames - 1) / (n_frames - 1)
    return encode_scalar(idx, spec)


def _forward_cached(params: MotionParams, initial: SketchFrame, n_frames: int):
    if n_frames < 2:
        raise ShapeMismatch("need at least 2 frames")
    pts = initial.points()
    n_pts = pts.shape[0]
    enc = positional_encode(pts, params.encoding)  # (P, E)
    shared_out, shared_acts = params.shared.forward(enc)  # (P, D)
    pooled = shared_out.mean(axis=0)  # (D,)
    cond = _interval_conditions(n_frames, params.encoding)  # (I, C)
    n_iv = n_frames - 1

    local_in = np.concatenate(
        [
            np.broadcast_to(shared_out[None], (n_iv, n_pts, params.feature_dim)),
            np.broadcast_to(cond[:, None, :], (n_iv, n_pts, cond.shape[1])),
        ],
        axis=-1,
    )
    offsets, local_acts = params.local.forward(local_in)  # (I, P, 2)

    global_in = np.concatenate(
        [np.broadcast_to(pooled[None], (n_iv, params.feature_dim)), cond], axis=-1
    )
    raw, global_acts = params.global_branch.forward(global_in)  # (I, 6)

    transforms = [
        GlobalTransform(
            scale_x=float(np.exp(r[0])),
            scale_y=float(np.exp(r[1])),
            shear=float(r[2]),
            rotation=float(r[3]),
            translate=(float(r[4]), float(r[5])),
        )
        for r in raw
    ]
    cache = {
        "shared_acts": shared_acts,
        "local_acts": local_acts,
        "global_acts": global_acts,
        "raw": raw,
        "n_pts": n_pts,
        "n_iv": n_iv,
    }
    return transforms, offsets, cache


def forward(params: MotionParams, initial: SketchFrame, n_frames: int):
    """Predict per-interval transforms and offsets for an n-frame video.

    Every control point of the initial frame is encoded and lifted by the
    shared map; the local branch reads (point feature, interval encoding)
    and emits a per-point offset, while the global branch reads the mean
    pooled feature and emits the 6 transform parameters with scales
    passed through exp (so they are always positive).
    """
    transforms, offsets, _ = _forward_cached(params, initial, n_frames)
    return transforms, offsets


def backward(
    params: MotionParams,
    initial: SketchFrame,
    n_frames: int,
    d_transforms: np.ndarray,
    d_offsets: np.ndarray,
) -> np.ndarray:
    """Reverse-mode gradients of forward() w.r.t. the parameter vector.

    d_transforms is (n-1, 6) in actual parameter space (scale_x, scale_y,
    shear, rotation, tx, ty); d_offsets is (n-1, 4k, 2).  Returns a flat
    gradient aligned with MotionParams.get_vector().
    """
    transforms, offsets, cache = _forward_cached(params, initial, n_frames)
    d_transforms = np.asarray(d_transforms, dtype=float)
    d_offsets = np.asarray(d_offsets, dtype=float)
    n_iv, n_pts = cache["n_iv"], cache["n_pts"]
    if d_transforms.shape != (n_iv, 6):
        raise ShapeMismatch(f"d_transforms shape {d_transforms.shape} != ({n_iv}, 6)")
    if d_offsets.shape != offsets.shape:
        raise ShapeMismatch(f"d_offsets shape {d_offsets.shape} != {offsets.shape}")

    # scales were produced through exp: d/d raw = scale * d/d scale
    d_raw = d_transforms.copy()
    d_raw[:, 0] *= np.exp(cache["raw"][:, 0])
    d_raw[:, 1] *= np.exp(cache["raw"][:, 1])

    g_dw, g_db, d_global_in = params.global_branch.backward(cache["global_acts"], d_raw)
    l_dw, l_db, d_local_in = params.local.backward(cache["local_acts"], d_offsets)

    d_feat = params.feature_dim
    d_shared_out = d_local_in[..., :d_feat].sum(axis=0)  # (P, D)
    d_pooled = d_global_in[:, :d_feat].sum(axis=0)  # (D,)
    d_shared_out = d_shared_out + d_pooled[None, :] / n_pts

    s_dw, s_db, _ = params.shared.backward(cache["shared_acts"], d_shared_out)

    def flat(dws, dbs):
        return np.concatenate(
            [np.concatenate([dw.ravel(), db]) for dw, db in zip(dws, dbs)]
        )

    return np.concatenate(
        [
            flat(s_dw, s_db),
            flat(l_dw, l_db),
            flat(g_dw, g_db),
            np.zeros(params.refine.param_count()),
        ]
    )


def refine(params: MotionParams, frame: SketchFrame) -> SketchFrame:
    """Residual correction: output points = input + refine MLP(encoding)."""
    pts = frame.points()
    enc = positional_encode(pts, params.encoding)
    correction, _ = params.refine.forward(enc)
    return SketchFrame.from_points(pts + correction)


def refine_backward(
    params: MotionParams, frame: SketchFrame, d_out_points: np.ndarray
) -> np.ndarray:
    """Gradient of refine() output points w.r.t. the full parameter vector.

    Only the refine head receives gradient; the slices for the other nets
    are zero.  Input points are treated as constants.
    """
    pts = frame.points()
    d_out_points = np.asarray(d_out_points, dtype=float)
    if d_out_points.shape != pts.shape:
        raise ShapeMismatch(
            f"upstream shape {d_out_points.shape} != frame shape {pts.shape}"
        )
    enc = positional_encode(pts, params.encoding)
    _, acts = params.refine.forward(enc)
    r_dw, r_db, _ = params.refine.backward(acts, d_out_points)
    flat = np.concatenate(
        [np.concatenate([dw.ravel(), db]) for dw, db in zip(r_dw, r_db)]
    )
    head = params.param_count() - params.refine.param_count()
    return np.concatenate([np.zeros(head), flat])


def save_checkpoint(path, params: MotionParams):
    """Write magic "SMV1" + little-endian float64 parameter vector."""
    vec = params.get_vector()
    Path(path).write_bytes(CHECKPOINT_MAGIC + vec.astype("<f8").tobytes())


def load_checkpoint(path, params: MotionParams):
    """Load a checkpoint into params (architecture must already match)."""
    blob = Path(path).read_bytes()
    if blob[:4] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a motion checkpoint (bad magic)")
    payload = blob[4:]
    expected = params.param_count()
    if len(payload) != 8 * expected:
        raise ShapeMismatch(
            f"{path}: {len(payload) // 8} parameters, model needs {expected}"
        )
    params.set_vector(np.frombuffer(payload, dtype="<f8"))
