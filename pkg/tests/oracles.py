"""Independent reference implementations used to freeze expected values.

Everything here is deliberately written against different libraries or
formulations than the package code (scipy graph routines, brute-force
scans, counting arguments) so agreement is evidence, not tautology.
"""

from __future__ import annotations

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra


def undirected_edges(mesh) -> set[tuple[int, int]]:
    es = set()
    for a, b, c in mesh.T:
        for u, v in ((a, b), (b, c), (c, a)):
            es.add((u, v) if u < v else (v, u))
    return es


def euler_characteristic(mesh) -> int:
    return mesh.n_vertices - len(undirected_edges(mesh)) + mesh.n_triangles


def genus_of_closed(mesh) -> int:
    chi = euler_characteristic(mesh)
    assert chi % 2 == 0
    return (2 - chi) // 2


def signed_volume(mesh) -> float:
    """Sum of signed tetrahedron volumes; positive for outward orientation."""
    P = mesh.vertices_array()
    T = mesh.triangles_array()
    a, b, c = P[T[:, 0]], P[T[:, 1]], P[T[:, 2]]
    return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)


def graph_distances(mesh, root: int) -> np.ndarray:
    """Single-source Euclidean shortest-path distances over the edge graph."""
    P = mesh.vertices_array()
    rows, cols = [], []
    for u, v in undirected_edges(mesh):
        rows.append(u)
        cols.append(v)
    rows = np.array(rows)
    cols = np.array(cols)
    w = np.linalg.norm(P[rows] - P[cols], axis=1)
    n = mesh.n_vertices
    g = coo_matrix((np.concatenate([w, w]), (np.concatenate([rows, cols]), np.concatenate([cols, rows]))), shape=(n, n))
    return dijkstra(g.tocsr(), directed=False, indices=root)


def point_triangle_distance(p, a, b, c, grid: int = 400) -> float:
    """Brute barycentric-grid distance, refined once around the best cell."""
    p = np.asarray(p, float)
    a, b, c = (np.asarray(x, float) for x in (a, b, c))

    def scan(u0, u1, v0, v1, steps):
        us = np.linspace(u0, u1, steps)
        vs = np.linspace(v0, v1, steps)
        uu, vv = np.meshgrid(us, vs)
        keep = uu + vv <= 1.0
        uu, vv = uu[keep], vv[keep]
        q = a[None] * (1 - uu - vv)[:, None] + b[None] * uu[:, None] + c[None] * vv[:, None]
        d = np.linalg.norm(q - p[None], axis=1)
        i = int(np.argmin(d))
        return float(d[i]), float(uu[i]), float(vv[i])

    d, u, v = scan(0.0, 1.0, 0.0, 1.0, grid)
    h = 2.0 / grid
    d2, _, _ = scan(max(u - h, 0), min(u + h, 1), max(v - h, 0), min(v + h, 1), grid)
    return min(d, d2)


def boundary_cycles(mesh) -> list[list[int]]:
    """Boundary cycles of an open mesh, each CCW (surface on the left)."""
    nxt = {}
    for (u, v) in mesh._dedge:
        if (v, u) not in mesh._dedge:
            nxt[v] = u  # boundary edge v->u runs against the interior edge u->v
    cycles = []
    seen = set()
    for start in sorted(nxt):
        if start in seen:
            continue
        cyc = [start]
        seen.add(start)
        cur = nxt[start]
        while cur != start:
            cyc.append(cur)
            seen.add(cur)
            cur = nxt[cur]
        cycles.append(cyc)
    return cycles


def word_surface_invariants(word) -> tuple[int, int]:
    """(vertex orbits, genus) of the polygon-gluing surface for a schema word.

    Each side j of a 4g-gon carries (loop, sign); sides with equal loop ids are
    glued reversing orientation. Corner identifications follow from the edge
    gluing; Euler characteristic 2 - 2g then pins the genus.
    """
    n = len(word)
    partner = {}
    for i, (l, s) in enumerate(word):
        for j, (l2, s2) in enumerate(word):
            if i != j and l == l2:
                partner[i] = j
    parent = list(range(n))  # corner k = polygon vertex before side k

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        parent[find(x)] = find(y)

    for i in range(n):
        j = partner[i]
        # side i runs corner i -> corner i+1; its partner carries the same
        # loop in the opposite direction, so endpoints identify crosswise
        union(i, (j + 1) % n)
        union((i + 1) % n, j)
    orbits = len({find(k) for k in range(n)})
    chi = orbits - n // 2 + 1
    assert (2 - chi) % 2 == 0
    return orbits, (2 - chi) // 2


def loop_walk_length(mesh, vertices) -> float:
    P = mesh.vertices_array()
    idx = np.asarray(vertices)
    return float(np.linalg.norm(P[idx[1:]] - P[idx[:-1]], axis=1).sum())
