"""Delaunay triangulation of control points.

Hull-first Bowyer-Watson: the convex hull is fan-triangulated and
legalized by Lawson flips, then interior points are inserted one at a
time by carving their circumcircle cavity.  No super-triangle is involved
(a finite one can sit inside the circumcircle of a sliver hull triangle
and punch holes in the result), so the output covers the hull exactly.

The triangulation feeds the rigidity energy, so it must be deterministic
across runs and platforms: points are inserted in index order and
cocircular ties are resolved by a canonical flip pass (the diagonal
incident to the lowest vertex index wins).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AllCollinear, TooFewPoints

__all__ = ["TriangleMesh", "delaunay_triangulate", "incircle_det", "triangle_area"]

DEGENERATE_AREA = 1e-12
DUPLICATE_TOL = 1e-9


@dataclass(frozen=True)
class TriangleMesh:
    """Fixed triangulation topology with per-edge rest-length weights.

    triangles index into the point list the mesh was built from; each
    undirected edge is stored once with weight alpha > 0 (the rest length).
    """

    vertex_count: int
    triangles: np.ndarray  # (T, 3) int
    edges: np.ndarray  # (E, 2) int, each row sorted, rows unique
    edge_weights: np.ndarray  # (E,) float > 0

    def __post_init__(self):
        tris = np.asarray(self.triangles, dtype=int)
        edges = np.asarray(self.edges, dtype=int)
        weights = np.asarray(self.edge_weights, dtype=float)
        object.__setattr__(self, "triangles", tris)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "edge_weights", weights)
        if tris.size and tris.max() >= self.vertex_count:
            raise ValueError("triangle index out of range")
        if edges.size and edges.max() >= self.vertex_count:
            raise ValueError("edge index out of range")
        if len(edges) != len(weights):
            raise ValueError("edge/weight length mismatch")
        if len(edges):
            if not np.all(edges[:, 0] < edges[:, 1]):
                raise ValueError("edges must be stored with sorted endpoints")
            if len(np.unique(edges, axis=0)) != len(edges):
                raise ValueError("duplicate edges")
            if not np.all(weights > 0):
                raise ValueError("edge weights must be positive")


def triangle_area(a, b, c) -> float:
    """Signed area: positive for counter-clockwise vertices."""
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))


def incircle_det(a, b, c, p) -> float:
    """Positive iff p is strictly inside the circumcircle of ccw (a, b, c)."""
    adx, ady = a[0] - p[0], a[1] - p[1]
    bdx, bdy = b[0] - p[0], b[1] - p[1]
    cdx, cdy = c[0] - p[0], c[1] - p[1]
    ad = adx * adx + ady * ady
    bd = bdx * bdx + bdy * bdy
    cd = cdx * cdx + cdy * cdy
    return (
        ad * (bdx * cdy - bdy * cdx)
        - bd * (adx * cdy - ady * cdx)
        + cd * (adx * bdy - ady * bdx)
    )


def _dedup_points(pts: np.ndarray):
    """First-occurrence indices of points distinct beyond DUPLICATE_TOL."""
    reps: list[int] = []
    for i, p in enumerate(pts):
        for j in reps:
            if abs(p[0] - pts[j][0]) <= DUPLICATE_TOL and abs(p[1] - pts[j][1]) <= DUPLICATE_TOL:
                break
        else:
            reps.append(i)
    return reps


def _check_not_collinear(pts: np.ndarray):
    p0 = pts[0]
    d = pts - p0
    far = int(np.argmax(np.einsum("ij,ij->i", d, d)))
    axis = pts[far] - p0
    span = np.linalg.norm(axis)
    if span == 0.0:
        raise AllCollinear("all points coincide")
    cross = np.abs(d[:, 0] * axis[1] - d[:, 1] * axis[0]) / span
    if np.max(cross) <= DUPLICATE_TOL:
        raise AllCollinear("all points are collinear")


def _convex_hull(pts: np.ndarray) -> list[int]:
    """Strict convex hull, counter-clockwise vertex indices (monotone chain)."""
    order = sorted(range(len(pts)), key=lambda i: (pts[i][0], pts[i][1]))

    def build(seq):
        out: list[int] = []
        for i in seq:
            while len(out) >= 2:
                o, a = pts[out[-2]], pts[out[-1]]
                if triangle_area(o, a, pts[i]) > 0:
                    break
                out.pop()
            out.append(i)
        return out

    lower = build(order)
    upper = build(reversed(order))
    return lower[:-1] + upper[:-1]


class _Triangulation:
    """Triangle soup with an edge adjacency map and Lawson flips."""

    def __init__(self, pts: np.ndarray, tie_tol: float):
        self.pts = pts
        self.tie_tol = tie_tol
        self.tris: dict[int, tuple[int, int, int]] = {}
        self.edge_map: dict[tuple[int, int], list[int]] = {}
        self.next_id = 0

    def add(self, a: int, b: int, c: int):
        if triangle_area(self.pts[a], self.pts[b], self.pts[c]) < 0:
            a, b = b, a
        tid = self.next_id
        self.next_id += 1
        self.tris[tid] = (a, b, c)
        for e in ((a, b), (b, c), (c, a)):
            self.edge_map.setdefault((min(e), max(e)), []).append(tid)
        return tid

    def remove(self, tid: int):
        a, b, c = self.tris.pop(tid)
        for e in ((a, b), (b, c), (c, a)):
            key = (min(e), max(e))
            owners = self.edge_map[key]
            owners.remove(tid)
            if not owners:
                del self.edge_map[key]

    def opposite(self, tid: int, edge: tuple[int, int]) -> int:
        return next(v for v in self.tris[tid] if v not in edge)

    def _flip(self, edge: tuple[int, int]):
        """Replace the diagonal of the quad around edge; returns new edges."""
        t1, t2 = self.edge_map[edge]
        a, b = edge
        c = self.opposite(t1, edge)
        d = self.opposite(t2, edge)
        # the quad must be strictly convex for the flip to be valid
        s1 = triangle_area(self.pts[c], self.pts[d], self.pts[a])
        s2 = triangle_area(self.pts[c], self.pts[d], self.pts[b])
        if abs(s1) <= DEGENERATE_AREA or abs(s2) <= DEGENERATE_AREA or (s1 > 0) == (s2 > 0):
            return None
        self.remove(t1)
        self.remove(t2)
        self.add(c, d, a)
        self.add(c, d, b)
        return [(min(c, x), max(c, x)) for x in (a, b)] + [
            (min(d, x), max(d, x)) for x in (a, b)
        ]

    def legalize(self, seed_edges=None, canonical_ties: bool = False):
        """Lawson flips until every edge is (tolerantly) Delaunay.

        With canonical_ties, cocircular quads additionally get the diagonal
        incident to their lowest vertex index (a flip moves the lowest
        index onto the diagonal, so this terminates).
        """
        queue = list(seed_edges) if seed_edges is not None else sorted(self.edge_map)
        guard = 0
        limit = 64 * (len(self.pts) ** 2 + 16)
        while queue:
            guard += 1
            if guard > limit:  # pragma: no cover - defensive bound
                warnings.warn("flip pass did not settle; mesh may be non-Delaunay")
                return
            edge = queue.pop()
            owners = self.edge_map.get(edge)
            if not owners or len(owners) != 2:
                continue
            t1, t2 = owners
            a, b, c = self.tris[t1]
            d = self.opposite(t2, edge)
            det = incircle_det(self.pts[a], self.pts[b], self.pts[c], self.pts[d])
            flip = det > self.tie_tol
            if not flip and canonical_ties and abs(det) <= self.tie_tol:
                quad_min = min(edge[0], edge[1], self.opposite(t1, edge), d)
                flip = quad_min not in edge
            if flip:
                created = self._flip(edge)
                if created:
                    queue.extend(created)

    def insert_interior(self, idx: int):
        """Carve the circumcircle cavity of point idx and fan it."""
        p = self.pts[idx]
        bad = [
            tid
            for tid, (a, b, c) in self.tris.items()
            if incircle_det(self.pts[a], self.pts[b], self.pts[c], p) > 0
        ]
        boundary: dict[tuple[int, int], tuple[int, int]] = {}
        for tid in bad:
            a, b, c = self.tris[tid]
            for e in ((a, b), (b, c), (c, a)):
                key = (min(e), max(e))
                if key in boundary:
                    boundary.pop(key)
                else:
                    boundary[key] = e
        for tid in bad:
            self.remove(tid)
        for key in sorted(boundary):
            u, v = boundary[key]
            self.add(u, v, idx)


def _triangulate(pts: np.ndarray, tie_tol: float) -> list[tuple[int, int, int]]:
    hull = _convex_hull(pts)
    tri = _Triangulation(pts, tie_tol)
    for i in range(1, len(hull) - 1):
        tri.add(hull[0], hull[i], hull[i + 1])
    tri.legalize()
    hull_set = set(hull)
    for idx in range(len(pts)):
        if idx not in hull_set:
            tri.insert_interior(idx)
            tri.legalize()
    tri.legalize(canonical_ties=True)
    return list(tri.tris.values())


def delaunay_triangulate(points) -> TriangleMesh:
    """Delaunay triangulation with rest-length edge weights.

    Duplicate points (within 1e-9) are merged onto their first occurrence;
    triangle and edge indices always refer to the original point list.
    Near-degenerate triangles are dropped with a warning.
    """
    pts = np.asarray(
        [p.as_array() if hasattr(p, "as_array") else p for p in points], dtype=float
    )
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected (N, 2) points, got {pts.shape}")
    if len(pts) < 3:
        raise TooFewPoints(f"triangulation needs >= 3 points, got {len(pts)}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")

    reps = _dedup_points(pts)
    if len(reps) < 3:
        raise TooFewPoints(f"only {len(reps)} distinct points after merging duplicates")
    unique = pts[reps]
    _check_not_collinear(unique)

    span = max(float(np.max(unique.max(axis=0) - unique.min(axis=0))), 1.0)
    tie_tol = 1e-12 * span**4

    tris = _triangulate(unique, tie_tol)

    kept = []
    dropped = 0
    for t in tris:
        if abs(triangle_area(unique[t[0]], unique[t[1]], unique[t[2]])) <= DEGENERATE_AREA:
            dropped += 1
        else:
            kept.append(t)
    if dropped:
        warnings.warn(f"dropped {dropped} degenerate triangle(s) from the mesh")

    # map back to original indices, canonical vertex order within each triangle
    mapped = []
    for t in kept:
        tri = tuple(reps[v] for v in t)
        roll = int(np.argmin(tri))
        mapped.append(tri[roll:] + tri[:roll])
    mapped.sort()

    edge_set = set()
    for a, b, c in mapped:
        for e in ((a, b), (b, c), (c, a)):
            edge_set.add((min(e), max(e)))
    edges = np.array(sorted(edge_set), dtype=int).reshape(-1, 2)
    weights = (
        np.linalg.norm(pts[edges[:, 1]] - pts[edges[:, 0]], axis=1)
        if len(edges)
        else np.zeros(0)
    )

    return TriangleMesh(
        vertex_count=len(pts),
        triangles=np.array(mapped, dtype=int).reshape(-1, 3),
        edges=edges,
        edge_weights=weights,
    )
