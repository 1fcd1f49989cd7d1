"""Greedy homotopy bases on closed orientable triangle meshes.

A basis rooted at a vertex is computed by the tree-cotree construction:
a shortest-path tree in the primal graph, a maximum-weight spanning tree in
the dual graph restricted to non-tree edges (weights are the lengths of the
candidate loops), and one loop per leftover edge. The 2g resulting loops form
the shortest system of loops through the root; each is the tree path to one
endpoint of its leftover edge, the edge itself, and the tree path back.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

from .errors import CapExceededError, LoopError, MeshError
from .mesh import TriMesh


@dataclass
class Loop:
    """A closed walk through the system origin, stored as a vertex list
    ``[origin, ..., origin]``. ``length`` is the geometric edge-length sum.
    ``edge`` is the non-tree edge that closed the loop, when known; loops
    read from a file or built by hand leave it ``None``."""

    vertices: list[int]
    length: float = 0.0
    edge: tuple[int, int] | None = None

    def edges(self) -> list[tuple[int, int]]:
        """Undirected edges of the walk, as (min, max) pairs, in order."""
        vs = self.vertices
        return [(vs[i], vs[i + 1]) if vs[i] < vs[i + 1] else (vs[i + 1], vs[i]) for i in range(len(vs) - 1)]

    def copy(self) -> "Loop":
        return Loop(list(self.vertices), self.length, self.edge)


@dataclass
class LoopSystem:
    origin: int
    loops: list[Loop] = field(default_factory=list)

    @property
    def genus(self) -> int:
        return len(self.loops) // 2

    def total_length(self) -> float:
        return sum(lp.length for lp in self.loops)

    def copy(self) -> "LoopSystem":
        return LoopSystem(self.origin, [lp.copy() for lp in self.loops])


def shortest_path_tree(mesh: TriMesh, root: int) -> tuple[list[int], list[float]]:
    """Dijkstra tree with Euclidean edge weights.

    Returns (parent, dist); parent[root] == -1. Equal-distance ties settle the
    smaller vertex index first, and among equal-length parent candidates the
    smaller index wins, so the tree is fully deterministic.
    """
    n = mesh.n_vertices
    adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for (u, v) in mesh._dedge:
        if u < v:
            w = mesh.edge_length(u, v)
            adj[u].append((v, w))
            adj[v].append((u, w))
    for lst in adj:
        lst.sort()

    dist = [math.inf] * n
    parent = [-1] * n
    done = [False] * n
    dist[root] = 0.0
    heap: list[tuple[float, int]] = [(0.0, root)]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for v, w in adj[u]:
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd, v))
            elif nd == dist[v] and not done[v] and u < parent[v]:
                parent[v] = u
    if any(not f for f in done):
        missing = done.index(False)
        raise MeshError(f"vertex {missing} unreachable from root {root}; mesh disconnected")
    return parent, dist


class _UnionFind:
    __slots__ = ("p",)

    def __init__(self, n: int):
        self.p = list(range(n))

    def find(self, x: int) -> int:
        p = self.p
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.p[rb] = ra
        return True


def _tree_path_to_root(parent: list[int], x: int) -> list[int]:
    path = [x]
    while parent[x] != -1:
        x = parent[x]
        path.append(x)
    return path


def _canonical_direction(walk: list[int]) -> list[int]:
    rev = walk[::-1]
    return walk if tuple(walk) <= tuple(rev) else rev


def greedy_basis(mesh: TriMesh, root: int) -> LoopSystem:
    """Shortest system of 2g loops through ``root``.

    Greedy selection order is equivalent to: sort non-tree edges by candidate
    loop length descending, grow a spanning tree of the dual graph (triangles
    as nodes) over them, and keep the 2g edges whose insertion would close a
    dual cycle. Loops are emitted shortest first, each in its lexicographically
    smaller traversal direction. Genus 0 yields an empty system.
    """
    n = mesh.n_vertices
    if not 0 <= root < n:
        raise LoopError(f"root vertex {root} out of range (mesh has {n} vertices)")
    g = mesh.genus()
    if g == 0:
        return LoopSystem(root, [])

    parent, dist = shortest_path_tree(mesh, root)
    tree_edges = set()
    for v in range(n):
        if parent[v] != -1:
            u = parent[v]
            tree_edges.add((u, v) if u < v else (v, u))

    candidates = []
    for (u, v) in mesh._dedge:
        if u < v and (u, v) not in tree_edges:
            w = dist[u] + mesh.edge_length(u, v) + dist[v]
            candidates.append((-w, u, v))
    candidates.sort()

    uf = _UnionFind(mesh.n_triangles)
    basis_edges = []
    for negw, u, v in candidates:
        t1 = mesh.tri_of(u, v)
        t2 = mesh.tri_of(v, u)
        if not uf.union(t1, t2):
            basis_edges.append((-negw, u, v))
    if len(basis_edges) != 2 * g:
        raise MeshError(f"tree-cotree decomposition left {len(basis_edges)} edges, expected {2 * g}")

    loops = []
    for w, u, v in basis_edges:
        up = _tree_path_to_root(parent, u)
        vp = _tree_path_to_root(parent, v)
        walk = up[::-1] + vp
        loops.append(Loop(_canonical_direction(walk), w, (u, v)))
    loops.sort(key=lambda lp: (lp.length, lp.vertices))
    return LoopSystem(root, loops)


def globally_shortest_basis(mesh: TriMesh, max_vertices: int = 5000) -> LoopSystem:
    """Greedy basis minimized over every possible root (brute force).

    Quadratic-plus work; refuses meshes above ``max_vertices`` to keep the
    API from being an accidental footgun. Ties between equally short roots
    resolve to the smallest root index.
    """
    n = mesh.n_vertices
    if n > max_vertices:
        raise CapExceededError(
            f"mesh has {n} vertices, above the cap of {max_vertices}; "
            "raise max_vertices explicitly to force the exhaustive search"
        )
    if mesh.genus() == 0:
        return LoopSystem(0, [])

    best_root = -1
    best_total = math.inf
    for root in range(n):
        total = _basis_total_length(mesh, root)
        if total < best_total:
            best_total = total
            best_root = root
    return greedy_basis(mesh, best_root)


def _basis_total_length(mesh: TriMesh, root: int) -> float:
    """Total basis length for one root, skipping loop materialization."""
    parent, dist = shortest_path_tree(mesh, root)
    n = mesh.n_vertices
    tree_edges = set()
    for v in range(n):
        if parent[v] != -1:
            u = parent[v]
            tree_edges.add((u, v) if u < v else (v, u))
    candidates = []
    for (u, v) in mesh._dedge:
        if u < v and (u, v) not in tree_edges:
            w = dist[u] + mesh.edge_length(u, v) + dist[v]
            candidates.append((-w, u, v))
    candidates.sort()
    uf = _UnionFind(mesh.n_triangles)
    total = 0.0
    for negw, u, v in candidates:
        if not uf.union(mesh.tri_of(u, v), mesh.tri_of(v, u)):
            total += -negw
    return total


# --------------------------------------------------------------- validation


def loop_length(mesh: TriMesh, vertices: list[int]) -> float:
    return sum(mesh.edge_length(vertices[i], vertices[i + 1]) for i in range(len(vertices) - 1))


def validate_system(mesh: TriMesh, system: LoopSystem, fill_lengths: bool = True) -> None:
    """Check that ``system`` is a structurally valid, detachable loop system.

    Verifies per-loop shape (closed walks through the origin over existing
    mesh edges), that the loop count matches the surface genus, that no two
    loops have identical edge sets, and the merge property: whenever two walk
    passages share a vertex they must share mesh edges, and every maximal
    shared run must extend to the origin (no transversal crossings, no
    mid-path forks). Raises :class:`LoopError` with the offending loop/vertex.
    """
    n = mesh.n_vertices
    o = system.origin
    if not 0 <= o < n:
        raise LoopError(f"origin {o} out of range")
    g = mesh.genus()
    if len(system.loops) != 2 * g:
        raise LoopError(f"system has {len(system.loops)} loops; surface of genus {g} needs {2 * g}")

    edge_sets = []
    for li, lp in enumerate(system.loops):
        vs = lp.vertices
        if len(vs) < 4:
            raise LoopError(f"loop {li} has fewer than three edges")
        if vs[0] != o or vs[-1] != o:
            raise LoopError(f"loop {li} does not start and end at the origin {o}")
        seen = set()
        for i in range(len(vs) - 1):
            a, b = vs[i], vs[i + 1]
            if i > 0 and a == o:
                raise LoopError(f"loop {li} passes through the origin mid-walk at step {i}")
            if i > 0 and vs[i - 1] == b:
                raise LoopError(f"loop {li} backtracks over edge ({a},{b}) at step {i}")
            if not mesh.has_edge(a, b):
                raise LoopError(f"loop {li} step {i}: ({a},{b}) is not a mesh edge")
            # repeated edges inside one loop are fine: a loop may descend a
            # shared stem and climb back (self-merge); the suffix check below
            # still applies to those passages
            seen.add((a, b) if a < b else (b, a))
        edge_sets.append(frozenset(seen))
        if fill_lengths:
            lp.length = loop_length(mesh, vs)

    for i in range(len(edge_sets)):
        for j in range(i + 1, len(edge_sets)):
            if edge_sets[i] == edge_sets[j]:
                raise LoopError(f"loops {i} and {j} are identical as edge sets")

    _check_merge_property(system)


def _check_merge_property(system: LoopSystem) -> None:
    o = system.origin
    # passages at each vertex: (loop index, step, prev vertex, next vertex)
    at: dict[int, list[tuple[int, int, int, int]]] = {}
    for li, lp in enumerate(system.loops):
        vs = lp.vertices
        for i in range(1, len(vs) - 1):
            at.setdefault(vs[i], []).append((li, i, vs[i - 1], vs[i + 1]))

    for v, passages in at.items():
        if len(passages) < 2:
            continue
        # every pair of passages through a shared vertex must share an edge;
        # a shared vertex with four distinct edges is a transversal crossing
        # that no local detachment can ever remove
        for a in range(len(passages)):
            for b in range(a + 1, len(passages)):
                _, _, pa, na = passages[a]
                _, _, pb, nb = passages[b]
                if {pa, na}.isdisjoint({pb, nb}):
                    raise LoopError(
                        f"loops cross transversally at vertex {v} without sharing a path "
                        "toward the origin; system is not detachable"
                    )
                _check_pair_suffix(system, v, passages[a], passages[b], o)
        # all merging at one vertex must drain over a single shared edge
        shared: dict[int, list[int]] = {}
        for _, _, p, q in passages:
            shared.setdefault(p, []).append(q)
            shared.setdefault(q, []).append(p)
        cands = [nb for nb, others in shared.items() if len(others) >= 2 and len(set(others)) >= 2]
        if len(cands) > 1:
            raise LoopError(f"vertex {v} has {len(cands)} merge directions; system is not detachable")


def _check_pair_suffix(system, v, pa, pb, origin) -> None:
    """The maximal shared run of two passages must end at the origin."""
    la, ia, preva, nexta = pa
    lb, ib, prevb, nextb = pb
    wa = system.loops[la].vertices
    wb = system.loops[lb].vertices
    shared = {preva, nexta} & {prevb, nextb}
    for s in shared:
        # walk both loops away from (v, s) in the direction of s while their
        # edges keep coinciding; the run must terminate at the origin
        a_dir = 1 if nexta == s else -1
        b_dir = 1 if nextb == s else -1
        ja, jb = ia, ib
        cur = v
        while True:
            ja += a_dir
            jb += b_dir
            va = wa[ja]
            vb = wb[jb]
            if va != vb:
                break
            cur = va
            if cur == origin:
                break
        if cur != origin:
            # diverged before reaching the origin on this side; the other
            # side must then reach it (checked from that side's own shared
            # edge), but a run diverging on both sides is invalid. Verify by
            # walking the opposite direction too.
            ja, jb = ia, ib
            back = v
            while True:
                ja -= a_dir
                jb -= b_dir
                va = wa[ja]
                vb = wb[jb]
                if va != vb:
                    break
                back = va
                if back == origin:
                    break
            if back != origin:
                raise LoopError(
                    f"loops {la} and {lb} share a run of edges through vertex {v} that "
                    "does not extend to the origin; system is not detachable"
                )
