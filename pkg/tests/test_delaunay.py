import numpy as np
import pytest

from sketchanim.delaunay import (
    TriangleMesh,
    delaunay_triangulate,
    incircle_det,
    triangle_area,
)
from sketchanim.errors import AllCollinear, TooFewPoints

from helpers import convex_hull_area


def brute_force_empty(points: np.ndarray, tri, tol: float) -> bool:
    """O(n) incircle scan for one triangle (the O(n^4) oracle's inner loop)."""
    a, b, c = (points[i] for i in tri)
    if triangle_area(a, b, c) < 0:
        a, b = b, a
    for i, p in enumerate(points):
        if i in tri:
            continue
        if incircle_det(a, b, c, p) > tol:
            return False
    return True


def check_structure(points: np.ndarray, mesh: TriangleMesh):
    areas = [
        abs(triangle_area(points[t[0]], points[t[1]], points[t[2]]))
        for t in mesh.triangles
    ]
    hull = convex_hull_area(points)
    assert sum(areas) == pytest.approx(hull, rel=1e-9)
    # interior edges shared by exactly two triangles, hull edges by one
    counts = {}
    for t in mesh.triangles:
        for e in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            counts[tuple(sorted(e))] = counts.get(tuple(sorted(e)), 0) + 1
    assert set(counts) == {tuple(e) for e in mesh.edges}
    assert all(v in (1, 2) for v in counts.values())


def test_single_triangle():
    mesh = delaunay_triangulate([(0, 0), (1, 0), (0, 1)])
    assert len(mesh.triangles) == 1
    assert len(mesh.edges) == 3
    assert mesh.vertex_count == 3


def test_edge_weights_are_rest_lengths():
    mesh = delaunay_triangulate([(0, 0), (3, 0), (0, 4)])
    weights = {tuple(e): w for e, w in zip(map(tuple, mesh.edges), mesh.edge_weights)}
    assert weights[(0, 1)] == pytest.approx(3.0)
    assert weights[(0, 2)] == pytest.approx(4.0)
    assert weights[(1, 2)] == pytest.approx(5.0)


def test_unit_square_cocircular_tie_break():
    # all four corners are cocircular: both diagonals are valid Delaunay
    # choices, and the tie goes to the diagonal incident to vertex 0
    mesh = delaunay_triangulate([(0, 0), (1, 0), (1, 1), (0, 1)])
    assert len(mesh.triangles) == 2
    edges = {tuple(e) for e in mesh.edges}
    assert (0, 2) in edges
    assert (1, 3) not in edges
    assert len(edges) == 5


def test_eight_random_points_vs_exhaustive_oracle():
    rng = np.random.default_rng(123)
    pts = rng.uniform(0, 100, (8, 2))
    mesh = delaunay_triangulate(pts)
    tol = 1e-12 * 100.0**4
    for tri in mesh.triangles:
        assert brute_force_empty(pts, tuple(tri), tol)
    check_structure(pts, mesh)


def test_many_random_sets_match_oracle():
    rng = np.random.default_rng(7)
    for trial in range(60):
        n = int(rng.integers(4, 13))
        pts = rng.uniform(0, 256, (n, 2))
        mesh = delaunay_triangulate(pts)
        tol = 1e-12 * 256.0**4
        for tri in mesh.triangles:
            assert brute_force_empty(pts, tuple(tri), tol), (trial, tri)
        check_structure(pts, mesh)


def test_no_positive_area_overlap():
    rng = np.random.default_rng(21)
    pts = rng.uniform(0, 50, (10, 2))
    mesh = delaunay_triangulate(pts)

    def contains(tri, p):
        a, b, c = (pts[i] for i in tri)
        d1 = triangle_area(a, b, p)
        d2 = triangle_area(b, c, p)
        d3 = triangle_area(c, a, p)
        return (d1 > 1e-9 and d2 > 1e-9 and d3 > 1e-9) or (
            d1 < -1e-9 and d2 < -1e-9 and d3 < -1e-9
        )

    # strict interior samples of one triangle must lie in no other
    for i, tri in enumerate(mesh.triangles):
        a, b, c = (pts[v] for v in tri)
        for w in ((1 / 3, 1 / 3), (0.6, 0.2), (0.1, 0.8), (0.25, 0.5)):
            p = a * (1 - w[0] - w[1]) + b * w[0] + c * w[1]
            hits = [j for j, other in enumerate(mesh.triangles) if contains(other, p)]
            assert hits == [i]


def test_determinism():
    rng = np.random.default_rng(5)
    pts = rng.uniform(0, 256, (30, 2))
    m1 = delaunay_triangulate(pts)
    m2 = delaunay_triangulate(pts)
    assert np.array_equal(m1.triangles, m2.triangles)
    assert np.array_equal(m1.edges, m2.edges)


def test_duplicates_are_merged():
    pts = [(0, 0), (1, 0), (0, 1), (0, 0), (1, 0)]
    mesh = delaunay_triangulate(pts)
    assert mesh.vertex_count == 5
    assert len(mesh.triangles) == 1
    assert set(mesh.triangles[0]) == {0, 1, 2}


def test_too_few_points():
    with pytest.raises(TooFewPoints):
        delaunay_triangulate([(0, 0), (1, 1)])
    with pytest.raises(TooFewPoints):
        delaunay_triangulate([(0, 0), (0, 0), (1, 1), (1, 1)])


def test_all_collinear():
    with pytest.raises(AllCollinear):
        delaunay_triangulate([(0, 0), (1, 1), (2, 2), (3, 3)])


def test_collinear_subset_is_fine():
    # a straight stroke plus off-axis points: collinear interior points on
    # the hull boundary must not break the triangulation
    pts = np.array([(0, 0), (1, 0), (2, 0), (3, 0), (1.5, 2.0), (1.5, -1.0)])
    mesh = delaunay_triangulate(pts)
    check_structure(pts, mesh)


def test_mesh_validation():
    with pytest.raises(ValueError):
        TriangleMesh(
            vertex_count=3,
            triangles=np.array([[0, 1, 3]]),
            edges=np.array([[0, 1]]),
            edge_weights=np.array([1.0]),
        )
    with pytest.raises(ValueError):
        TriangleMesh(
            vertex_count=4,
            triangles=np.array([[0, 1, 2]]),
            edges=np.array([[0, 1]]),
            edge_weights=np.array([-1.0]),
        )
