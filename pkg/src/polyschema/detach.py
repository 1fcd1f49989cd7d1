"""Detaching overlapping loops by minimal local refinement.

A freshly computed system of loops overlaps itself: loops share whole runs of
edges that merge toward the origin. Each merging site is a vertex where two
or more bundles of strands arrive over distinct edges and leave over one
shared edge. Detaching rewires one bundle through a corridor of newly created
vertices inside a fan of triangles next to the shared edge, which moves the
merge one step closer to the origin; iterating drains every merge into the
origin and leaves the loops pairwise disjoint except at the origin itself.

Walks live in cyclic doubly-linked lists so a corridor splice is O(corridor),
and every site is re-derived from the current walks right before use; nothing
here caches stale topology.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .basis import LoopSystem, loop_length, validate_system
from .errors import CapExceededError, DetachError
from .mesh import Fan, TriMesh, _cross, _dot, _norm, _sub

STRATEGIES = ("edge", "vertex", "triangle", "hybrid")


@dataclass
class RefineConfig:
    theta_deg: float = 5.0          # hybrid flatness threshold, inclusive
    lam: float = 0.75               # initial placement fraction for vertex splits
    max_halvings: int = 30
    max_vertices: int = 5_000_000   # refinement abort cap
    validate_input: bool = True
    validate_result: bool = True


@dataclass(frozen=True)
class MergingSite:
    vertex: int
    out_vertex: int
    bundles: tuple[tuple[int, int], ...]  # (in-neighbor, strand count) per bundle


@dataclass
class OpRecord:
    kind: str                # "edge" | "vertex" | "triangle"
    site: int
    out_vertex: int
    fan_interior_edges: int
    dv: int
    dt: int


@dataclass
class RefinementReport:
    strategy: str
    theta_deg: float
    v_before: int
    t_before: int
    v_after: int = 0
    t_after: int = 0
    ops: list[OpRecord] = field(default_factory=list)
    site_valences: list[int] = field(default_factory=list)

    @property
    def n_ops(self) -> int:
        return len(self.ops)

    def _count(self, kind: str) -> int:
        return sum(1 for op in self.ops if op.kind == kind)

    @property
    def n_edge_splits(self) -> int:
        return self._count("edge")

    @property
    def n_vertex_splits(self) -> int:
        return self._count("vertex")

    @property
    def n_triangle_splits(self) -> int:
        return self._count("triangle")

    def _pct(self, kind: str) -> float:
        return 100.0 * self._count(kind) / self.n_ops if self.ops else 0.0

    @property
    def esplit_pct(self) -> float:
        return self._pct("edge")

    @property
    def vsplit_pct(self) -> float:
        return self._pct("vertex")

    @property
    def tsplit_pct(self) -> float:
        return self._pct("triangle")

    @property
    def new_vertices(self) -> int:
        return self.v_after - self.v_before

    @property
    def new_triangles(self) -> int:
        return self.t_after - self.t_before

    @property
    def growth_pct(self) -> float:
        return 100.0 * (self.v_after - self.v_before) / self.v_before

    @property
    def val_max(self) -> int:
        return max(self.site_valences, default=0)

    @property
    def val_avg(self) -> float:
        return sum(self.site_valences) / len(self.site_valences) if self.site_valences else 0.0


# ------------------------------------------------------------------- walks


class _Node:
    __slots__ = ("v", "prev", "next", "loop")


class _Walks:
    """Loop walks as cyclic linked lists plus a vertex -> nodes registry.

    Registry values are insertion-ordered dicts used as ordered sets, so every
    derived ordering is deterministic.
    """

    def __init__(self, system: LoopSystem):
        self.origin = system.origin
        self.at: dict[int, dict[_Node, None]] = {}
        self.roots: list[_Node] = []
        for li, lp in enumerate(system.loops):
            vs = lp.vertices
            nodes = []
            for v in vs[:-1]:
                n = _Node()
                n.v = v
                n.loop = li
                nodes.append(n)
            m = len(nodes)
            for i, n in enumerate(nodes):
                n.prev = nodes[i - 1]
                n.next = nodes[(i + 1) % m]
                self.at.setdefault(n.v, {})[n] = None
            self.roots.append(nodes[0])

    def splice(self, node: _Node, chain: list[int]) -> None:
        """Replace ``node`` with fresh nodes for ``chain`` (ordered from
        ``node.prev`` toward ``node.next``)."""
        del self.at[node.v][node]
        prev = node.prev
        for v in chain:
            nn = _Node()
            nn.v = v
            nn.loop = node.loop
            nn.prev = prev
            prev.next = nn
            self.at.setdefault(v, {})[nn] = None
            prev = nn
        prev.next = node.next
        node.next.prev = prev

    def derive_site(self, x: int):
        """Return (out_vertex, bundles) at x, or None if x is not a site.

        A site needs one edge shared by two or more passages whose far sides
        split into two or more groups; a second such edge would mean two merge
        directions at one vertex, which a valid system never has.
        """
        nodes = self.at.get(x)
        if not nodes or len(nodes) < 2:
            return None
        shared: dict[int, list[tuple[_Node, int]]] = {}
        for n in nodes:
            p, q = n.prev.v, n.next.v
            shared.setdefault(p, []).append((n, q))
            shared.setdefault(q, []).append((n, p))
        cands = []
        for nb in sorted(shared):
            members = shared[nb]
            if len(members) >= 2 and len({other for _, other in members}) >= 2:
                cands.append(nb)
        if not cands:
            return None
        if len(cands) > 1:
            raise DetachError(f"vertex {x} has {len(cands)} merge directions; system is not detachable")
        y = cands[0]
        bundles: dict[int, list[_Node]] = {}
        for n, other in shared[y]:
            bundles.setdefault(other, []).append(n)
        return y, bundles

    def loop_vertices(self, li: int) -> list[int]:
        root = self.roots[li]
        vs = [root.v]
        cur = root.next
        while cur is not root:
            vs.append(cur.v)
            cur = cur.next
        vs.append(root.v)
        return vs


def find_merging_sites(system: LoopSystem) -> list[MergingSite]:
    """All current merging sites of a loop system, sorted by vertex index.

    Purely combinatorial; the mesh is not consulted and nothing is modified.
    """
    walks = _Walks(system)
    out = []
    for x in sorted(walks.at):
        if x == walks.origin:
            continue
        site = walks.derive_site(x)
        if site is None:
            continue
        y, bundles = site
        out.append(MergingSite(x, y, tuple((k, len(v)) for k, v in bundles.items())))
    return out


# ---------------------------------------------------------------- geometry


def fan_planarity(mesh: TriMesh, fan: Fan) -> float:
    """Largest pairwise angle between fan triangle normals, in degrees.

    Raises :class:`DetachError` when a fan triangle is degenerate, since a
    meaningful normal does not exist there.
    """
    normals = []
    cx = mesh.V[fan.center]
    for i in range(len(fan.verts) - 1):
        n = _cross(_sub(mesh.V[fan.verts[i]], cx), _sub(mesh.V[fan.verts[i + 1]], cx))
        normals.append(n)
    mags = [_norm(n) for n in normals]
    top = max(mags)
    if top == 0.0 or min(mags) <= 1e-14 * top:
        raise DetachError(f"fan at vertex {fan.center} contains a degenerate triangle")
    worst = 0.0
    for i in range(len(normals)):
        for j in range(i + 1, len(normals)):
            a, b = normals[i], normals[j]
            ang = math.atan2(_norm(_cross(a, b)), _dot(a, b))
            if ang > worst:
                worst = ang
    return math.degrees(worst)


def _planarity_or_inf(mesh: TriMesh, fan: Fan) -> float:
    try:
        return fan_planarity(mesh, fan)
    except DetachError:
        return math.inf


def place_split_vertex(mesh: TriMesh, fan: Fan, lam: float = 0.75, max_halvings: int = 30):
    """Find a position for a vertex-split copy of the fan center.

    Candidate directions point from the center toward the median interior
    spoke endpoint, then the remaining spokes nearest the median first, then
    the midpoint of the fan's boundary ends. Each candidate is pulled toward
    the center by halving ``lam`` until every post-split triangle keeps a
    positive dot product with the pre-split triangle it replaces (the two cap
    triangles compare against the fan triangle they border) and none has
    degenerated. Returns the position, or None when every candidate fails.
    """
    verts = fan.verts
    cx = mesh.V[fan.center]
    pre = []
    for i in range(len(verts) - 1):
        pre.append(_cross(_sub(mesh.V[verts[i]], cx), _sub(mesh.V[verts[i + 1]], cx)))
    mags = [_norm(n) for n in pre]
    top = max(mags)
    if top == 0.0 or min(mags) <= 1e-14 * top:
        return None  # a degenerate fan triangle leaves no orientation reference
    scale = sum(mags) / len(mags)

    spokes = list(fan.spokes)
    if spokes:
        med = (len(spokes) - 1) // 2
        order = sorted(range(len(spokes)), key=lambda i: (abs(i - med), i))
        targets = [mesh.V[spokes[i]] for i in order]
    else:
        targets = []
    p0, pt = mesh.V[verts[0]], mesh.V[verts[-1]]
    targets.append(((p0[0] + pt[0]) / 2.0, (p0[1] + pt[1]) / 2.0, (p0[2] + pt[2]) / 2.0))

    # Analytic fallback for folded fans. The two cap triangles constrain the
    # placement direction d by d.u > 0 and d.w > 0 with u = n_first x s_first
    # and w = s_last x n_last; both are nonzero since each normal is
    # perpendicular to its boundary spoke, and the bisector of the unit pair
    # satisfies both strictly unless they are exactly opposite. Shrinking lam
    # then fixes the reattached triangles, whose normals converge to the
    # originals, so this candidate succeeds whenever any direction can.
    u = _cross(pre[0], _sub(p0, cx))
    w = _cross(_sub(pt, cx), pre[-1])
    nu, nw = _norm(u), _norm(w)
    d = (u[0] / nu + w[0] / nw, u[1] / nu + w[1] / nw, u[2] / nu + w[2] / nw)
    nd = _norm(d)
    if nd > 1e-9:
        r = sum(_norm(_sub(mesh.V[v], cx)) for v in verts) / len(verts)
        targets.append((cx[0] + r * d[0] / nd, cx[1] + r * d[1] / nd, cx[2] + r * d[2] / nd))

    eps = 1e-12 * scale
    for tgt in targets:
        lk = lam
        for _ in range(max_halvings + 1):
            w = (cx[0] + lk * (tgt[0] - cx[0]), cx[1] + lk * (tgt[1] - cx[1]), cx[2] + lk * (tgt[2] - cx[2]))
            if _placement_ok(mesh, cx, verts, w, pre, eps):
                return w
            lk *= 0.5
    return None


def _placement_ok(mesh, cx, verts, w, pre, eps) -> bool:
    corners = [(w, mesh.V[verts[i]], mesh.V[verts[i + 1]], pre[i]) for i in range(len(verts) - 1)]
    corners.append((cx, mesh.V[verts[0]], w, pre[0]))
    corners.append((cx, w, mesh.V[verts[-1]], pre[-1]))
    for a, b, c, ref in corners:
        n = _cross(_sub(b, a), _sub(c, a))
        if _norm(n) <= eps or _dot(n, ref) <= 0.0:
            return False
    return True


# --------------------------------------------------------------- operators


def edge_split_corridor(mesh: TriMesh, fan: Fan) -> list[int]:
    """Split every interior spoke of the fan at its midpoint.

    Adds exactly one vertex and two triangles per interior edge, and the new
    midpoints chain into a corridor between the fan's boundary ends. Returned
    in fan order: ``[verts[0], midpoints..., verts[-1]]``.
    """
    if fan.n_interior_edges == 0:
        raise DetachError("edge split needs at least one interior fan edge")
    mids = [mesh.split_edge(fan.center, s) for s in fan.spokes]
    return [fan.verts[0], *mids, fan.verts[-1]]


def triangle_split_corridor(mesh: TriMesh, fan: Fan) -> list[int]:
    """Split the single fan triangle at its barycenter (corridor of one)."""
    if len(fan.verts) != 2:
        raise DetachError("triangle split needs a single-triangle fan")
    ti = mesh.tri_of(fan.center, fan.verts[0])
    g = mesh.split_triangle(ti)
    return [fan.verts[0], g, fan.verts[-1]]


def vertex_split_corridor(mesh: TriMesh, fan: Fan, lam: float = 0.75, max_halvings: int = 30):
    """Split the fan center: fan triangles reattach to a fresh copy placed
    inside the fan. Returns the corridor, or None if placement fails."""
    pos = place_split_vertex(mesh, fan, lam, max_halvings)
    if pos is None:
        return None
    w = mesh.split_vertex(fan.center, list(fan.verts), pos)
    return [fan.verts[0], w, fan.verts[-1]]


# ------------------------------------------------------------------ driver


def detach_all(mesh: TriMesh, system: LoopSystem, strategy: str = "hybrid",
               config: RefineConfig | None = None) -> RefinementReport:
    """Detach every merging site, in place, until the loops are disjoint.

    Sites are processed in FIFO order; each extraction re-derives the site
    and detaches bundles one at a time (a site with k bundles takes k-1
    detachments), which moves the merge to the next vertex toward the origin;
    that vertex is queued in turn. Both ``mesh`` and ``system`` are mutated.
    Returns a :class:`RefinementReport` with per-operation accounting.
    """
    if strategy not in STRATEGIES:
        raise DetachError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    cfg = config or RefineConfig()
    if cfg.validate_input:
        validate_system(mesh, system)

    report = RefinementReport(strategy, cfg.theta_deg, mesh.n_vertices, mesh.n_triangles)
    walks = _Walks(system)
    origin = system.origin

    queue = deque(x for x in sorted(walks.at) if x != origin and len(walks.at[x]) >= 2)
    queued = set(queue)

    while queue:
        x = queue.popleft()
        queued.discard(x)
        first = True
        while True:
            site = walks.derive_site(x)
            if site is None:
                break
            y, bundles = site
            if len(bundles) < 2:
                break
            if first:
                report.site_valences.append(mesh.valence(x, y))
                first = False
            _detach_once(mesh, walks, x, y, bundles, strategy, cfg, report)
            if mesh.n_vertices > cfg.max_vertices:
                raise CapExceededError(
                    f"refinement grew past {cfg.max_vertices} vertices at site {x}; "
                    "raise RefineConfig.max_vertices to continue"
                )
            if y != origin and y not in queued:
                queue.append(y)
                queued.add(y)

    _check_disjoint(walks, origin)

    for li in range(len(system.loops)):
        vs = walks.loop_vertices(li)
        system.loops[li].vertices = vs
        system.loops[li].length = loop_length(mesh, vs)

    report.v_after = mesh.n_vertices
    report.t_after = mesh.n_triangles
    if cfg.validate_result:
        mesh.validate()
    return report


def _detach_once(mesh, walks, x, y, bundles, strategy, cfg, report) -> None:
    ring = mesh.ring(x, y)
    keys = set(bundles)
    i_ccw = next(i for i in range(1, len(ring)) if ring[i] in keys)
    j_cw = next(i for i in range(len(ring) - 1, 0, -1) if ring[i] in keys)
    fan_ccw = Fan(x, tuple(ring[: i_ccw + 1]))          # verts[0] == y
    fan_cw = Fan(x, tuple(ring[j_cw:]) + (y,))          # verts[-1] == y
    sides = ((fan_ccw, ring[i_ccw]), (fan_cw, ring[j_cw]))

    v0, t0 = mesh.n_vertices, mesh.n_triangles
    kind, fan, a, corridor = _apply_operator(mesh, sides, strategy, cfg)

    interior = corridor[1:-1]
    a_first = interior if corridor[0] == a else interior[::-1]
    for node in list(bundles[a]):
        if node.prev.v == a:
            chain = a_first
        elif node.next.v == a:
            chain = a_first[::-1]
        else:  # pragma: no cover - bundle membership guarantees one side is a
            raise DetachError(f"strand at {x} lost its bundle edge to {a}")
        walks.splice(node, chain)

    dv = mesh.n_vertices - v0
    dt = mesh.n_triangles - t0
    report.ops.append(OpRecord(kind, x, y, fan.n_interior_edges, dv, dt))


def _apply_operator(mesh, sides, strategy, cfg):
    """Pick fan and operator per strategy; returns (kind, fan, a, corridor)."""
    if strategy == "vertex":
        order = sorted(range(2), key=lambda i: (_planarity_or_inf(mesh, sides[i][0]),
                                                sides[i][0].n_interior_edges, i))
        for i in order:
            fan, a = sides[i]
            corridor = vertex_split_corridor(mesh, fan, cfg.lam, cfg.max_halvings)
            if corridor is not None:
                return "vertex", fan, a, corridor
        raise DetachError(
            f"vertex split placement failed on both fans at vertex {sides[0][0].center}"
        )

    if strategy == "triangle":
        # only legal when a fan is a single triangle, which shortest systems
        # never produce; kept for completeness and hand-built systems
        for fan, a in sides:
            if fan.n_triangles == 1:
                return "triangle", fan, a, triangle_split_corridor(mesh, fan)
        raise DetachError(
            f"triangle split needs a single-triangle fan at vertex {sides[0][0].center}; "
            "use the edge, vertex or hybrid strategy"
        )

    if strategy == "hybrid":
        planes = [_planarity_or_inf(mesh, sides[i][0]) for i in range(2)]
        i = min(range(2), key=lambda i: (planes[i], sides[i][0].n_interior_edges, i))
        if planes[i] <= cfg.theta_deg:
            fan, a = sides[i]
            corridor = vertex_split_corridor(mesh, fan, cfg.lam, cfg.max_halvings)
            if corridor is not None:
                return "vertex", fan, a, corridor
        # fall through to the edge path

    # min is stable, so an interior-edge tie keeps the first (CCW) fan
    fan, a = min(sides, key=lambda s: s[0].n_interior_edges)
    if fan.n_interior_edges == 0:
        return "triangle", fan, a, triangle_split_corridor(mesh, fan)
    return "edge", fan, a, edge_split_corridor(mesh, fan)


def _check_disjoint(walks: _Walks, origin: int) -> None:
    for v, nodes in walks.at.items():
        if v != origin and len(nodes) > 1:
            raise DetachError(f"internal error: vertex {v} still carries {len(nodes)} strands")
    seen: set[tuple[int, int]] = set()
    for li in range(len(walks.roots)):
        vs = walks.loop_vertices(li)
        for i in range(len(vs) - 1):
            a, b = vs[i], vs[i + 1]
            e = (a, b) if a < b else (b, a)
            if e in seen:
                raise DetachError(f"internal error: edge {e} is still shared after detachment")
            seen.add(e)
