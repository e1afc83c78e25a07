import numpy as np
import pytest

from sketchanim.sketch import SketchFrame


def make_box_sketch() -> SketchFrame:
    """Four curvy strokes around a square; a well-conditioned test subject."""
    pts = []
    corners = [(60, 60), (196, 60), (196, 196), (60, 196)]
    for i in range(4):
        a = np.array(corners[i], float)
        b = np.array(corners[(i + 1) % 4], float)
        d = b - a
        perp = np.array([-d[1], d[0]]) / np.linalg.norm(d)
        pts.append(np.stack([a, a + d / 3 + perp * 12, a + 2 * d / 3 - perp * 8, b]))
    return SketchFrame.from_points(np.concatenate(pts))


def random_sketch(rng: np.random.Generator, strokes: int = 3) -> SketchFrame:
    return SketchFrame.from_points(rng.uniform(30.0, 226.0, size=(4 * strokes, 2)))


@pytest.fixture
def box_sketch() -> SketchFrame:
    return make_box_sketch()
