import numpy as np
import pytest

from sketchanim.errors import EmptySketch, MalformedSvg, UnsupportedCommand
from sketchanim.sketch import SketchFrame
from sketchanim.svg_io import (
    frame_to_svg,
    load_video_dir,
    normalize_frame,
    parse_path_data,
    parse_svg,
    write_frame,
)

SVG_HEAD = '<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 256 256">'


def wrap(*paths: str) -> str:
    body = "".join(f'<path d="{d}"/>' for d in paths)
    return f"{SVG_HEAD}{body}</svg>"


def test_parse_cubic_direct_mapping():
    strokes = parse_path_data("M 0 0 C 1 0 2 0 3 0")
    assert len(strokes) == 1
    assert np.allclose(strokes[0], [[0, 0], [1, 0], [2, 0], [3, 0]])


def test_parse_line_degree_elevation():
    strokes = parse_path_data("M 0 0 L 3 0")
    assert np.allclose(strokes[0], [[0, 0], [1, 0], [2, 0], [3, 0]])


def test_parse_relative_commands():
    strokes = parse_path_data("m 1 1 c 1 0 2 0 3 0 l 0 2")
    assert np.allclose(strokes[0], [[1, 1], [2, 1], [3, 1], [4, 1]])
    assert np.allclose(strokes[1][3], [4, 3])


def test_parse_implicit_repeats():
    # repeated C six-tuples and moveto's implicit linetos
    strokes = parse_path_data("M 0 0 C 1 0 2 0 3 0 1 1 2 2 3 3")
    assert len(strokes) == 2
    strokes = parse_path_data("M 0 0 4 0 4 4")
    assert len(strokes) == 2
    assert np.allclose(strokes[1][3], [4, 4])


def test_parse_closepath_emits_closing_line():
    strokes = parse_path_data("M 0 0 L 4 0 L 4 4 Z")
    assert len(strokes) == 3
    assert np.allclose(strokes[2][0], [4, 4])
    assert np.allclose(strokes[2][3], [0, 0])


def test_parse_closepath_skips_zero_length():
    strokes = parse_path_data("M 0 0 L 4 0 L 0 0 Z")
    assert len(strokes) == 2


def test_unsupported_commands_named():
    for cmd in "QAHVST":
        with pytest.raises(UnsupportedCommand) as exc:
            parse_path_data(f"M 0 0 {cmd} 1 1")
        assert cmd in str(exc.value)


def test_malformed_path_data():
    with pytest.raises(MalformedSvg):
        parse_path_data("M 0 0 C 1 2 3")  # arity
    with pytest.raises(MalformedSvg):
        parse_path_data("0 0 L 1 1")  # numbers before any command
    with pytest.raises(MalformedSvg):
        parse_path_data("M 0 0 L 1 @")


def test_parse_svg_not_xml():
    with pytest.raises(MalformedSvg):
        parse_svg("this is not xml")


def test_parse_svg_empty_document():
    with pytest.raises(EmptySketch):
        parse_svg(f"{SVG_HEAD}<g></g></svg>")


def test_parse_svg_normalizes_to_canvas():
    frame = parse_svg(wrap("M 0 0 C 1 0 2 0 3 0"))
    pts = frame.points()
    # 5% margin: content spans [12.8, 243.2] on the long axis, centered
    assert pts[:, 0].min() == pytest.approx(12.8, abs=1e-9)
    assert pts[:, 0].max() == pytest.approx(243.2, abs=1e-9)
    assert pts[:, 1].mean() == pytest.approx(128.0, abs=1e-9)


def test_parse_svg_namespaced_paths():
    text = (
        '<svg:svg xmlns:svg="http://www.w3.org/2000/svg">'
        '<svg:path d="M 0 0 C 1 0 2 0 3 0"/></svg:svg>'
    )
    assert parse_svg(text).stroke_count == 1


def test_normalize_idempotent():
    rng = np.random.default_rng(10)
    for _ in range(10):
        frame = SketchFrame.from_points(rng.uniform(-40, 400, (8, 2)))
        once = normalize_frame(frame)
        twice = normalize_frame(once)
        assert np.allclose(once.points(), twice.points(), atol=1e-9)


def test_export_parse_raw_round_trip_is_exact():
    rng = np.random.default_rng(33)
    frame = SketchFrame.from_points(rng.uniform(0, 256, (12, 2)))
    back = parse_svg(frame_to_svg(frame), normalize=False)
    assert np.array_equal(back.points(), frame.points())


def test_export_parse_normalized_round_trip(tmp_path):
    rng = np.random.default_rng(44)
    for _ in range(10):
        frame = SketchFrame.from_points(rng.uniform(20, 230, (8, 2)))
        normalized = parse_svg(frame_to_svg(frame))
        again = parse_svg(frame_to_svg(normalized))
        assert np.allclose(normalized.points(), again.points(), atol=1e-6)


def test_load_video_dir(tmp_path):
    rng = np.random.default_rng(3)
    frames = [SketchFrame.from_points(rng.uniform(0, 256, (8, 2))) for _ in range(3)]
    for i, f in enumerate(frames):
        write_frame(tmp_path / f"frame_{i:04d}.svg", f)
    video = load_video_dir(tmp_path)
    assert video.frame_count == 3
    for i, f in enumerate(frames):
        assert np.array_equal(video.points[i], f.points())


def test_load_video_dir_empty(tmp_path):
    with pytest.raises(MalformedSvg):
        load_video_dir(tmp_path)
