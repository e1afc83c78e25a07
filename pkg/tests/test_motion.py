import numpy as np
import pytest

from sketchanim.errors import ShapeMismatch
from sketchanim.geometry import GlobalTransform
from sketchanim.motion import (
    EncodingSpec,
    MotionParams,
    backward,
    encode_scalar,
    forward,
    load_checkpoint,
    positional_encode,
    refine,
    save_checkpoint,
)
from sketchanim.sketch import compose_video

from conftest import random_sketch


def test_encoding_dimensions():
    spec = EncodingSpec()
    assert spec.point_dim == 26
    assert positional_encode(np.zeros((5, 2)), spec).shape == (5, 26)
    assert encode_scalar(np.zeros(3), spec).shape == (3, 13)
    no_input = EncodingSpec(num_frequencies=4, include_input=False)
    assert no_input.point_dim == 16
    assert positional_encode(np.zeros((5, 2)), no_input).shape == (5, 16)


def test_encoding_center_point():
    # the canvas center maps to (0, 0): all sin features 0, all cos 1
    feats = positional_encode(np.array([128.0, 128.0]))
    assert np.allclose(feats[:2], 0.0, atol=0)
    sincos = feats[2:].reshape(-1, 4)
    assert np.all(sincos[:, [0, 2]] == 0.0)
    assert np.all(sincos[:, [1, 3]] == 1.0)


def test_encoding_injective_on_random_batch():
    rng = np.random.default_rng(42)
    pts = rng.uniform(0, 256, (1000, 2))
    feats = positional_encode(pts)
    assert len(np.unique(feats, axis=0)) == 1000


def test_encoding_validation():
    with pytest.raises(ValueError):
        EncodingSpec(num_frequencies=0)


def test_forward_shapes(box_sketch):
    params = MotionParams(seed=0)
    transforms, offsets = forward(params, box_sketch, 7)
    assert len(transforms) == 6
    assert offsets.shape == (6, 16, 2)


def test_zero_init_gives_identity_animation(box_sketch):
    params = MotionParams(seed=3)
    transforms, offsets = forward(params, box_sketch, 5)
    assert np.all(offsets == 0.0)
    assert all(t == GlobalTransform.identity() for t in transforms)
    video = compose_video(box_sketch, transforms, offsets)
    for i in range(5):
        assert np.array_equal(video.points[i], box_sketch.points())


def test_scales_always_positive(box_sketch):
    rng = np.random.default_rng(5)
    params = MotionParams(seed=1, feature_dim=8, hidden=(6,))
    vec = rng.normal(0, 2.0, params.param_count())
    params.set_vector(vec)
    transforms, _ = forward(params, box_sketch, 6)
    for t in transforms:
        assert t.scale_x > 0
        assert t.scale_y > 0


def test_forward_deterministic(box_sketch):
    params = MotionParams(seed=9)
    t1, o1 = forward(params, box_sketch, 6)
    t2, o2 = forward(params, box_sketch, 6)
    assert np.array_equal(o1, o2)
    assert all(a == b for a, b in zip(t1, t2))


def test_backward_zero_upstream(box_sketch):
    params = MotionParams(seed=2, feature_dim=8, hidden=(6,))
    g = backward(params, box_sketch, 4, np.zeros((3, 6)), np.zeros((3, 16, 2)))
    assert np.all(g == 0.0)


def test_backward_linearity(box_sketch):
    rng = np.random.default_rng(11)
    params = MotionParams(seed=2, feature_dim=8, hidden=(6,))
    params.set_vector(rng.normal(0, 0.3, params.param_count()))
    d_tr = rng.normal(0, 1, (3, 6))
    d_off = rng.normal(0, 1, (3, 16, 2))
    g1 = backward(params, box_sketch, 4, d_tr, d_off)
    g3 = backward(params, box_sketch, 4, 3.0 * d_tr, 3.0 * d_off)
    assert np.allclose(g3, 3.0 * g1, rtol=1e-12, atol=1e-12)


def test_backward_shape_mismatch(box_sketch):
    params = MotionParams(seed=0, feature_dim=8, hidden=(6,))
    with pytest.raises(ShapeMismatch):
        backward(params, box_sketch, 4, np.zeros((2, 6)), np.zeros((3, 16, 2)))
    with pytest.raises(ShapeMismatch):
        backward(params, box_sketch, 4, np.zeros((3, 6)), np.zeros((3, 8, 2)))


def test_refine_identity_at_init(box_sketch):
    params = MotionParams(seed=4)
    out = refine(params, box_sketch)
    assert np.array_equal(out.points(), box_sketch.points())
    assert out.stroke_count == box_sketch.stroke_count


def test_refine_preserves_stroke_count():
    rng = np.random.default_rng(13)
    sketch = random_sketch(rng, strokes=5)
    params = MotionParams(seed=1, feature_dim=8, hidden=(6,))
    params.set_vector(rng.normal(0, 0.5, params.param_count()))
    out = refine(params, sketch)
    assert out.stroke_count == 5
    assert not np.array_equal(out.points(), sketch.points())


def test_checkpoint_round_trip(tmp_path):
    rng = np.random.default_rng(21)
    params = MotionParams(seed=6, feature_dim=8, hidden=(6,))
    vec = rng.normal(0, 1, params.param_count())
    params.set_vector(vec)
    path = tmp_path / "model.smv1"
    save_checkpoint(path, params)
    blob = path.read_bytes()
    assert blob[:4] == b"SMV1"
    assert len(blob) == 4 + 8 * params.param_count()

    fresh = MotionParams(seed=0, feature_dim=8, hidden=(6,))
    load_checkpoint(path, fresh)
    assert np.array_equal(fresh.get_vector(), vec)


def test_checkpoint_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.smv1"
    path.write_bytes(b"NOPE" + b"\x00" * 80)
    params = MotionParams(seed=0, feature_dim=8, hidden=(6,))
    with pytest.raises(ValueError):
        load_checkpoint(path, params)


def test_checkpoint_rejects_wrong_size(tmp_path):
    params = MotionParams(seed=0, feature_dim=8, hidden=(6,))
    path = tmp_path / "short.smv1"
    path.write_bytes(b"SMV1" + b"\x00" * 16)
    with pytest.raises(ShapeMismatch):
        load_checkpoint(path, params)
