"""Closed orientable triangle meshes with incremental connectivity.

The central type is :class:`TriMesh`. Connectivity is a single hash map from
directed edges to the triangle that owns them; on a closed, consistently
oriented manifold every directed edge is owned by exactly one triangle and its
reverse by the neighbor. All local surgeries (edge split, vertex split,
triangle split) update this map in place, so meshes can absorb millions of
splits without any global rebuild.

Positions are kept as plain float tuples: the surgeries touch a handful of
vertices at a time and tuple math beats numpy at that granularity. Bulk
consumers (layout, metrics, file IO) take snapshots via ``vertices_array`` /
``triangles_array``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MeshError

Vec3 = tuple[float, float, float]


def _sub(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def _cross(a: Vec3, b: Vec3) -> Vec3:
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def _dot(a: Vec3, b: Vec3) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def _norm(a: Vec3) -> float:
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


class TriMesh:
    """Triangle mesh intended for closed orientable surfaces.

    Parameters
    ----------
    vertices : iterable of 3 floats each, optional
    triangles : iterable of 3 vertex indices each, optional
        Triangles are CCW when seen from outside. Inserting a triangle whose
        directed edge is already owned raises :class:`MeshError` immediately,
        so non-manifold or inconsistently oriented input fails fast.

    Notes
    -----
    ``genus``/``euler_characteristic`` are purely combinatorial; call
    ``validate()`` first when the mesh comes from an untrusted file.
    """

    __slots__ = ("V", "T", "_dedge")

    def __init__(self, vertices=None, triangles=None):
        self.V: list[Vec3] = []
        self.T: list[tuple[int, int, int]] = []
        self._dedge: dict[tuple[int, int], int] = {}
        if vertices is not None:
            for p in vertices:
                self.add_vertex((float(p[0]), float(p[1]), float(p[2])))
        if triangles is not None:
            for t in triangles:
                self.add_triangle(int(t[0]), int(t[1]), int(t[2]))

    # ------------------------------------------------------------------ sizes

    @property
    def n_vertices(self) -> int:
        return len(self.V)

    @property
    def n_triangles(self) -> int:
        return len(self.T)

    @property
    def n_edges(self) -> int:
        return len(self._dedge) // 2

    def euler_characteristic(self) -> int:
        # counts every directed edge once per owner; on a closed mesh the
        # undirected edge count is exactly half
        return self.n_vertices - self.n_edges + self.n_triangles

    def genus(self) -> int:
        chi = self.euler_characteristic()
        if chi % 2 != 0 or chi > 2:
            raise MeshError(f"Euler characteristic {chi} is not that of a closed orientable surface")
        return (2 - chi) // 2

    # ------------------------------------------------------------ construction

    def add_vertex(self, pos: Vec3) -> int:
        self.V.append(pos)
        return len(self.V) - 1

    def add_triangle(self, a: int, b: int, c: int) -> int:
        if a == b or b == c or c == a:
            raise MeshError(f"triangle {len(self.T)} repeats a vertex: ({a},{b},{c})")
        ti = len(self.T)
        self.T.append((a, b, c))
        self._claim(ti, a, b, c)
        return ti

    def _claim(self, ti: int, a: int, b: int, c: int) -> None:
        de = self._dedge
        claimed = []
        for u, v in ((a, b), (b, c), (c, a)):
            if (u, v) in de:
                for key in claimed:
                    del de[key]
                self.T.pop()
                raise MeshError(
                    f"directed edge ({u},{v}) owned by triangles {de[(u, v)]} and {ti}: "
                    "mesh is non-manifold or inconsistently oriented"
                )
            de[(u, v)] = ti
            claimed.append((u, v))

    def replace_triangle(self, ti: int, a: int, b: int, c: int) -> None:
        oa, ob, oc = self.T[ti]
        de = self._dedge
        del de[(oa, ob)], de[(ob, oc)], de[(oc, oa)]
        self.T[ti] = (a, b, c)
        for u, v in ((a, b), (b, c), (c, a)):
            if (u, v) in de:
                raise MeshError(f"directed edge ({u},{v}) claimed twice while rewriting triangle {ti}")
            de[(u, v)] = ti

    def copy(self) -> "TriMesh":
        m = TriMesh()
        m.V = list(self.V)
        m.T = list(self.T)
        m._dedge = dict(self._dedge)
        return m

    # ------------------------------------------------------------- connectivity

    def tri_of(self, u: int, v: int) -> int | None:
        """Index of the triangle owning directed edge (u, v), or None."""
        return self._dedge.get((u, v))

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self._dedge or (v, u) in self._dedge

    def _third(self, ti: int, u: int, v: int) -> int:
        x, y, z = self.T[ti]
        if x != u and x != v:
            return x
        if y != u and y != v:
            return y
        return z

    def next_ccw(self, v: int, a: int) -> int:
        """Neighbor following a counterclockwise around v (outward normals)."""
        ti = self._dedge.get((v, a))
        if ti is None:
            raise MeshError(f"directed edge ({v},{a}) has no owner; mesh not closed at vertex {v}")
        return self._third(ti, v, a)

    def next_cw(self, v: int, a: int) -> int:
        ti = self._dedge.get((a, v))
        if ti is None:
            raise MeshError(f"directed edge ({a},{v}) has no owner; mesh not closed at vertex {v}")
        return self._third(ti, v, a)

    def ring(self, v: int, start: int | None = None) -> list[int]:
        """Full one-ring of v in CCW order, beginning at neighbor ``start``.

        Without ``start`` the smallest-index neighbor is used; that form scans
        the whole edge map, so hot paths should pass a known neighbor.
        """
        if start is None:
            start = min((b for (a, b) in self._dedge if a == v), default=-1)
            if start < 0:
                raise MeshError(f"vertex {v} has no incident edges")
        out = [start]
        cur = self.next_ccw(v, start)
        guard = len(self.V) + 1
        while cur != start:
            out.append(cur)
            cur = self.next_ccw(v, cur)
            if len(out) > guard:
                raise MeshError(f"one-ring of vertex {v} does not close into a single cycle")
        return out

    def valence(self, v: int, start: int | None = None) -> int:
        return len(self.ring(v, start))

    # ---------------------------------------------------------------- geometry

    def edge_length(self, u: int, v: int) -> float:
        return math.dist(self.V[u], self.V[v])

    def tri_normal(self, ti: int) -> Vec3:
        """Unnormalized normal (cross product; length is twice the area)."""
        a, b, c = self.T[ti]
        pa = self.V[a]
        return _cross(_sub(self.V[b], pa), _sub(self.V[c], pa))

    def tri_area(self, ti: int) -> float:
        return 0.5 * _norm(self.tri_normal(ti))

    def vertices_array(self) -> np.ndarray:
        return np.asarray(self.V, dtype=np.float64).reshape(-1, 3)

    def triangles_array(self) -> np.ndarray:
        return np.asarray(self.T, dtype=np.int64).reshape(-1, 3)

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        v = self.vertices_array()
        return v.min(axis=0), v.max(axis=0)

    def bbox_diagonal(self) -> float:
        lo, hi = self.bbox()
        return float(np.linalg.norm(hi - lo))

    # ---------------------------------------------------------------- surgeries

    def split_edge(self, a: int, b: int, pos: Vec3 | None = None) -> int:
        """Split undirected edge (a, b) at ``pos`` (default midpoint).

        Both incident triangles are subdivided 1 -> 2. Net effect: +1 vertex,
        +2 triangles. Returns the new vertex index.
        """
        t1 = self._dedge.get((a, b))
        t2 = self._dedge.get((b, a))
        if t1 is None or t2 is None:
            raise MeshError(f"edge ({a},{b}) is not an interior manifold edge")
        c = self._third(t1, a, b)
        d = self._third(t2, a, b)
        if pos is None:
            pa, pb = self.V[a], self.V[b]
            pos = ((pa[0] + pb[0]) * 0.5, (pa[1] + pb[1]) * 0.5, (pa[2] + pb[2]) * 0.5)
        m = self.add_vertex(pos)
        self.replace_triangle(t1, a, m, c)
        self.add_triangle(m, b, c)
        self.replace_triangle(t2, b, m, d)
        self.add_triangle(m, a, d)
        return m

    def split_triangle(self, ti: int, pos: Vec3 | None = None) -> int:
        """Insert a vertex inside triangle ``ti`` (default barycenter), 1 -> 3."""
        a, b, c = self.T[ti]
        if pos is None:
            pa, pb, pc = self.V[a], self.V[b], self.V[c]
            pos = (
                (pa[0] + pb[0] + pc[0]) / 3.0,
                (pa[1] + pb[1] + pc[1]) / 3.0,
                (pa[2] + pb[2] + pc[2]) / 3.0,
            )
        g = self.add_vertex(pos)
        self.replace_triangle(ti, a, b, g)
        self.add_triangle(b, c, g)
        self.add_triangle(c, a, g)
        return g

    def split_vertex(self, v: int, fan: list[int], pos: Vec3) -> int:
        """Split vertex v along the one-ring slice ``fan``.

        ``fan`` lists CCW-consecutive neighbors of v (at least two). The swept
        triangles (v, fan[i], fan[i+1]) are reattached to the new vertex and
        two triangles (v, fan[0], v'), (v, v', fan[-1]) fill the opened slit.
        Net effect: +1 vertex, +2 triangles, independent of the fan size.
        """
        if len(fan) < 2:
            raise MeshError("vertex split needs a fan of at least two ring neighbors")
        tis = []
        for i in range(len(fan) - 1):
            ti = self._dedge.get((v, fan[i]))
            if ti is None or self._third(ti, v, fan[i]) != fan[i + 1]:
                raise MeshError(
                    f"fan slice ({fan[i]},{fan[i+1]}) is not CCW-consecutive around vertex {v}"
                )
            tis.append(ti)
        w = self.add_vertex(pos)
        for i, ti in enumerate(tis):
            self.replace_triangle(ti, w, fan[i], fan[i + 1])
        self.add_triangle(v, fan[0], w)
        self.add_triangle(v, w, fan[-1])
        return w

    # --------------------------------------------------------------- validation

    def validate(self, closed: bool = True) -> None:
        """Full structural check; raises :class:`MeshError` on first violation.

        Checks triangle index sanity, finite positions, closedness (every
        directed edge paired with its reverse), global connectivity, single
        umbrella per vertex, no unreferenced vertices and no zero-length
        edges. With ``closed=False`` boundary edges are permitted and each
        boundary vertex umbrella must be a single open fan instead of a cycle.
        """
        nv = len(self.V)
        if nv == 0 or not self.T:
            raise MeshError("mesh is empty")
        for i, p in enumerate(self.V):
            if not (math.isfinite(p[0]) and math.isfinite(p[1]) and math.isfinite(p[2])):
                raise MeshError(f"vertex {i} has a non-finite coordinate")
        # per-vertex wedge successor maps: triangle (v, a, b) contributes a -> b
        wedge: list[dict[int, int]] = [dict() for _ in range(nv)]
        for ti, (a, b, c) in enumerate(self.T):
            for u in (a, b, c):
                if not (0 <= u < nv):
                    raise MeshError(f"triangle {ti} references missing vertex {u}")
            wedge[a][b] = c
            wedge[b][c] = a
            wedge[c][a] = b
        for (u, v), ti in self._dedge.items():
            if closed and (v, u) not in self._dedge:
                raise MeshError(f"boundary edge ({u},{v}) on triangle {ti}: mesh is not closed")
            if self.V[u] == self.V[v] or math.dist(self.V[u], self.V[v]) == 0.0:
                raise MeshError(f"zero-length edge ({u},{v})")
        for v in range(nv):
            s = wedge[v]
            if not s:
                raise MeshError(f"vertex {v} is referenced by no triangle")
            entered = set(s.values())
            starts = [a for a in s if a not in entered]
            if len(starts) > 1:
                raise MeshError(f"vertex {v} has a non-disk neighborhood (pinched one-ring)")
            begin = starts[0] if starts else next(iter(s))
            cur = begin
            hops = 0
            while hops <= len(s) and cur in s:
                cur = s[cur]
                hops += 1
                if cur == begin:
                    break
            if hops != len(s) or (starts and cur in s) or (not starts and cur != begin):
                raise MeshError(f"vertex {v} has a non-disk neighborhood (pinched one-ring)")
        # connectivity over vertices via shared triangles
        seen = bytearray(nv)
        first = self.T[0][0]
        stack = [first]
        seen[first] = 1
        reached = 1
        while stack:
            u = stack.pop()
            for a, b in wedge[u].items():
                for w in (a, b):
                    if not seen[w]:
                        seen[w] = 1
                        reached += 1
                        stack.append(w)
        if reached != nv:
            raise MeshError(f"mesh is disconnected ({reached} of {nv} vertices reachable)")


@dataclass(frozen=True)
class Fan:
    """A contiguous wedge of triangles around ``center``.

    ``verts`` is the swept one-ring slice in CCW order; the wedge triangles
    are (center, verts[i], verts[i+1]). Interior spokes are the edges from
    ``center`` to ``verts[1:-1]``.
    """

    center: int
    verts: tuple[int, ...]

    @property
    def spokes(self) -> tuple[int, ...]:
        return self.verts[1:-1]

    @property
    def n_triangles(self) -> int:
        return len(self.verts) - 1

    @property
    def n_interior_edges(self) -> int:
        return len(self.verts) - 2

    def triangle_indices(self, mesh: TriMesh) -> list[int]:
        return [mesh._dedge[(self.center, self.verts[i])] for i in range(len(self.verts) - 1)]


def fan_between(mesh: TriMesh, center: int, from_v: int, to_v: int, direction: str = "ccw") -> Fan:
    """Wedge of triangles swept from edge (center, from_v) to (center, to_v).

    ``direction`` is "ccw" or "cw". The returned fan is always stored in CCW
    vertex order regardless of sweep direction.
    """
    if from_v == to_v:
        raise MeshError("fan endpoints coincide")
    for nb in (from_v, to_v):
        if (center, nb) not in mesh._dedge:
            raise MeshError(f"({center},{nb}) is not a directed mesh edge")
    step = mesh.next_ccw if direction == "ccw" else mesh.next_cw
    if direction not in ("ccw", "cw"):
        raise MeshError(f"unknown fan direction {direction!r}")
    verts = [from_v]
    cur = from_v
    guard = len(mesh.V) + 1
    while cur != to_v:
        cur = step(center, cur)
        verts.append(cur)
        if len(verts) > guard:
            raise MeshError(f"one-ring of vertex {center} never reaches {to_v}")
    if direction == "cw":
        verts.reverse()
    return Fan(center, tuple(verts))
