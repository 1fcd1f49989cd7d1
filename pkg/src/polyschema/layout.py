"""Cutting a surface open along a disjoint loop system and flattening it.

Cutting a closed genus-g mesh along 2g loops that meet only at the origin
yields a topological disk whose boundary consists of 4g arcs: every loop
contributes one forward and one reverse copy, and the origin appears as 4g
corner copies. The disk is laid out on a regular 4g-gon inscribed in the
unit circle (corner j at angle 2*pi*j/4g): each arc is parameterized by 3D
arc length along its polygon side, and interior vertices solve the
uniform-weight Tutte system, which cannot flip triangles over a convex
boundary. Two layouts of same-genus surfaces overlap in the polygon, giving
a cross map with a 4g-fold rotational degree of freedom.
"""

from __future__ import annotations

import json
import math
import os
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import spsolve

from .basis import LoopSystem, validate_system
from .errors import LayoutError
from .mesh import TriMesh


@dataclass(frozen=True)
class Arc:
    """One boundary arc of the cut disk: a full copy of one loop.

    ``sign`` is +1 when the arc runs along the stored loop walk and -1
    against it; ``vertices`` are disk vertex ids, corners included at both
    ends, so ``len(vertices) - 1`` equals the loop's edge count.
    """

    loop: int
    sign: int
    vertices: tuple[int, ...]


@dataclass
class CutMesh:
    """A closed mesh cut open into a disk along a disjoint loop system.

    ``mesh`` is the open disk (positions copied from the input, so seam
    copies coincide geometrically), ``vertex_origin`` maps disk vertices
    back to input vertices, ``boundary`` is the full boundary cycle starting
    at the corner of arc 0, and ``arcs`` lists the 4g corner-to-corner runs
    in boundary order. Arc j is laid out on polygon side j.
    """

    mesh: TriMesh
    genus: int
    origin: int
    vertex_origin: tuple[int, ...]
    boundary: tuple[int, ...]
    arcs: tuple[Arc, ...]

    @property
    def corners(self) -> tuple[int, ...]:
        """Disk vertex id of each polygon corner (all copies of the origin)."""
        return tuple(arc.vertices[0] for arc in self.arcs)

    def word(self) -> tuple[tuple[int, int], ...]:
        """The gluing word: (loop, sign) per arc, in boundary order."""
        return tuple((arc.loop, arc.sign) for arc in self.arcs)


def cut_along(mesh: TriMesh, system: LoopSystem, validate: bool = True) -> CutMesh:
    """Cut ``mesh`` open along ``system`` into a disk.

    The system must be fully disjoint (every merge already detached): each
    non-origin vertex is visited at most once over all loops and every mesh
    edge carries at most one loop passage. Each cut vertex is duplicated
    once per wedge of triangles between consecutive loop edges around it,
    so interior loop vertices split in two and the origin splits into 4g
    corners. Raises :class:`LayoutError` if the system is not disjoint or
    the complement is not a single disk.
    """
    if validate:
        validate_system(mesh, system)
    g = system.genus
    if g == 0:
        raise LayoutError("a genus-0 surface has no loops to cut along")
    o = system.origin

    # direction labels per loop edge; collisions mean the system overlaps
    dirmap: dict[tuple[int, int], tuple[int, int]] = {}
    interior_seen: set[int] = set()
    for li, lp in enumerate(system.loops):
        vs = lp.vertices
        for i in range(1, len(vs) - 1):
            if vs[i] == o:
                raise LayoutError(f"loop {li} passes through the origin mid-walk")
            if vs[i] in interior_seen:
                raise LayoutError(
                    f"vertex {vs[i]} is shared by two loop passages; detach the system first"
                )
            interior_seen.add(vs[i])
        for i in range(len(vs) - 1):
            u, v = vs[i], vs[i + 1]
            if (u, v) in dirmap:
                raise LayoutError(f"edge ({u},{v}) carries two loop passages; detach the system first")
            dirmap[(u, v)] = (li, 1)
            dirmap[(v, u)] = (li, -1)

    cut_nbrs: dict[int, set[int]] = {}
    for (u, v) in dirmap:
        cut_nbrs.setdefault(u, set()).add(v)

    # duplicate each cut vertex once per wedge between consecutive cut spokes
    disk = TriMesh()
    vertex_origin: list[int] = []
    base: list[int] = []
    wedge_info: dict[int, tuple[dict[int, int], list[int]]] = {}
    for v in range(mesh.n_vertices):
        base.append(len(vertex_origin))
        spokes = cut_nbrs.get(v)
        if spokes is None:
            copies = 1
        else:
            ring = mesh.ring(v, min(spokes))
            idx = {w: i for i, w in enumerate(ring)}
            pos = sorted(idx[w] for w in spokes)
            wedge_info[v] = (idx, pos)
            copies = len(pos)
        for _ in range(copies):
            vertex_origin.append(v)
            disk.add_vertex(mesh.V[v])

    def disk_id(v: int, ccw_next: int) -> int:
        info = wedge_info.get(v)
        if info is None:
            return base[v]
        idx, pos = info
        return base[v] + bisect_right(pos, idx[ccw_next]) - 1

    for (a, b, c) in mesh.T:
        disk.add_triangle(disk_id(a, b), disk_id(b, c), disk_id(c, a))

    # boundary cycle, CCW (surface on the left): directed edges without a twin
    succ: dict[int, int] = {}
    n_bnd = 0
    for (u, v) in disk._dedge:
        if (v, u) not in disk._dedge:
            if u in succ:
                raise LayoutError(f"cut boundary is not a simple cycle at disk vertex {u}")
            succ[u] = v
            n_bnd += 1
    if not succ:
        raise LayoutError("cut produced a closed surface; the system is not a cut graph")
    start = min(succ)
    cycle = [start]
    cur = succ[start]
    while cur != start:
        cycle.append(cur)
        nxt = succ.get(cur)
        if nxt is None or len(cycle) > n_bnd:
            raise LayoutError("cut boundary walk does not close into a cycle")
        cur = nxt
    if len(cycle) != n_bnd:
        raise LayoutError("cut boundary has more than one cycle; complement is not a disk")

    n_edges = (len(disk._dedge) + n_bnd) // 2
    chi = disk.n_vertices - n_edges + disk.n_triangles
    if chi != 1:
        raise LayoutError(f"cut surface has Euler characteristic {chi}, expected 1 (a disk)")
    disk.validate(closed=False)

    # label boundary steps with (loop, direction) and split at origin corners
    nb = len(cycle)
    labels = []
    for i, u in enumerate(cycle):
        v = cycle[(i + 1) % nb]
        lab = dirmap.get((vertex_origin[u], vertex_origin[v]))
        if lab is None:
            raise LayoutError(
                f"boundary edge ({vertex_origin[u]},{vertex_origin[v]}) is not a loop edge"
            )
        labels.append(lab)
    corner_pos = [i for i, u in enumerate(cycle) if vertex_origin[u] == o]
    if len(corner_pos) != 4 * g:
        raise LayoutError(
            f"origin appears {len(corner_pos)} times on the boundary, expected {4 * g}"
        )
    r = corner_pos[0]
    cycle = cycle[r:] + cycle[:r]
    labels = labels[r:] + labels[:r]
    corner_pos = [i - r for i in corner_pos]

    arcs: list[Arc] = []
    for j, cp in enumerate(corner_pos):
        end = corner_pos[j + 1] if j + 1 < len(corner_pos) else nb
        if len(set(labels[cp:end])) != 1:
            raise LayoutError(f"boundary arc {j} mixes loops; cut is inconsistent")
        li, sgn = labels[cp]
        arcs.append(Arc(li, sgn, tuple(cycle[cp:end]) + (cycle[end % nb],)))

    per_loop: dict[int, list[int]] = {}
    for a in arcs:
        per_loop.setdefault(a.loop, []).append(a.sign)
        if len(a.vertices) - 1 != len(system.loops[a.loop].vertices) - 1:
            raise LayoutError(f"arc of loop {a.loop} does not span the whole loop")
    for li in range(len(system.loops)):
        if sorted(per_loop.get(li, ())) != [-1, 1]:
            raise LayoutError(f"loop {li} must contribute exactly one forward and one reverse arc")

    # gauge: the forward copy of the lexicographically smallest loop is side 0
    lex = min(range(len(system.loops)), key=lambda i: tuple(system.loops[i].vertices))
    k0 = next(j for j, a in enumerate(arcs) if a.loop == lex and a.sign == 1)
    arcs = arcs[k0:] + arcs[:k0]
    sp = corner_pos[k0]
    cycle = cycle[sp:] + cycle[:sp]

    return CutMesh(disk, g, o, tuple(vertex_origin), tuple(cycle), tuple(arcs))


def gluing_scheme(genus: int) -> tuple[tuple[int, int], ...]:
    """The canonical gluing word l0 l1 ~l0 ~l1 l2 l3 ~l2 ~l3 ..."""
    word = []
    for q in range(genus):
        a, b = 2 * q, 2 * q + 1
        word += [(a, 1), (b, 1), (a, -1), (b, -1)]
    return tuple(word)


def matches_gluing_scheme(word: tuple[tuple[int, int], ...]) -> bool:
    """True if ``word`` equals the canonical gluing word with these exact
    loop indices, up to cyclic rotation and global reversal.

    Whether this holds is a property of how the loops embed around the
    origin: every cut yields a valid one-vertex 4g-gon schema, but only
    some systems realize the canonical interleaving.
    """
    n = len(word)
    if n == 0 or n % 4:
        return False
    target = gluing_scheme(n // 4)
    reversal = tuple((l, -s) for (l, s) in reversed(word))
    for w in (word, reversal):
        for r in range(n):
            if w[r:] + w[:r] == target:
                return True
    return False


def is_canonical_word(word: tuple[tuple[int, int], ...]) -> bool:
    """True if the gluing word matches a b ~a ~b c d ~c ~d ... as a cyclic
    word, allowing global reversal and renaming of loops."""
    n = len(word)
    if n == 0 or n % 4:
        return False
    reversal = tuple((l, -s) for (l, s) in reversed(word))
    for w in (word, reversal):
        for r in range(n):
            ww = w[r:] + w[:r]
            if _canonical_quads(ww):
                return True
    return False


def _canonical_quads(w: tuple[tuple[int, int], ...]) -> bool:
    used = set()
    for q in range(0, len(w), 4):
        (a, sa), (b, sb), (a2, sa2), (b2, sb2) = w[q:q + 4]
        if a2 != a or b2 != b or a == b:
            return False
        if sa2 != -sa or sb2 != -sb:
            return False
        if a in used or b in used:
            return False
        used.add(a)
        used.add(b)
    return True


# ------------------------------------------------------------------ layout


def regular_polygon(genus: int) -> np.ndarray:
    """Corners of the regular 4g-gon inscribed in the unit circle,
    corner j at angle 2*pi*j/(4g)."""
    if genus < 1:
        raise LayoutError("polygon needs genus >= 1")
    n = 4 * genus
    ang = 2.0 * np.pi * np.arange(n) / n
    return np.stack([np.cos(ang), np.sin(ang)], axis=1)


@dataclass
class SchemaLayout:
    """A cut disk flattened onto the regular 4g-gon.

    ``pos`` holds one 2D position per disk vertex; corners sit exactly on
    the polygon corners and arc vertices on its sides.
    """

    cut: CutMesh
    pos: np.ndarray

    def __post_init__(self):
        self._locator = None

    @property
    def genus(self) -> int:
        return self.cut.genus

    def signed_areas(self) -> np.ndarray:
        t = np.asarray(self.cut.mesh.T, dtype=np.int64)
        p = self.pos
        a, b, c = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
        ab = b - a
        ac = c - a
        return 0.5 * (ab[:, 0] * ac[:, 1] - ab[:, 1] * ac[:, 0])

    def flipped_triangles(self) -> list[int]:
        """Indices of strictly inverted 2D triangles (negative signed area)."""
        return np.nonzero(self.signed_areas() < 0.0)[0].tolist()

    def polygon_area(self) -> float:
        n = 4 * self.genus
        return 0.5 * n * math.sin(2.0 * math.pi / n)

    def corner_positions(self) -> np.ndarray:
        return self.pos[list(self.cut.corners)]

    def locate(self, p, eps: float = 1e-12, boundary_eps: float = 1e-6) -> tuple[int, np.ndarray]:
        """Triangle index and barycentric coordinates of 2D point ``p``.

        Points within ``eps`` of an edge snap onto it; points outside every
        triangle are accepted up to ``boundary_eps`` (clamped), beyond that
        :class:`LayoutError` is raised.
        """
        if self._locator is None:
            self._locator = _TriLocator(self.pos, self.cut.mesh.T)
        return self._locator.locate(np.asarray(p, dtype=np.float64), eps, boundary_eps)


class _TriLocator:
    """Uniform-grid point locator over a 2D triangulation."""

    def __init__(self, pos: np.ndarray, tris):
        self.T = np.asarray(tris, dtype=np.int64)
        self.a = pos[self.T[:, 0]]
        self.e1 = pos[self.T[:, 1]] - self.a
        self.e2 = pos[self.T[:, 2]] - self.a
        self.det = self.e1[:, 0] * self.e2[:, 1] - self.e1[:, 1] * self.e2[:, 0]
        scale = float(np.max(np.abs(self.det))) if len(self.det) else 1.0
        self.ok = np.abs(self.det) > 1e-14 * max(scale, 1.0)

        nt = len(self.T)
        self.res = max(4, int(math.sqrt(nt)) + 1)
        lo = np.minimum(np.minimum(self.a, self.a + self.e1), self.a + self.e2)
        hi = np.maximum(np.maximum(self.a, self.a + self.e1), self.a + self.e2)
        self.x0, self.y0 = -1.001, -1.001
        self.h = 2.002 / self.res
        self.cells: dict[tuple[int, int], list[int]] = {}
        for t in range(nt):
            ix0, iy0 = self._cell(lo[t, 0], lo[t, 1])
            ix1, iy1 = self._cell(hi[t, 0], hi[t, 1])
            for ix in range(ix0, ix1 + 1):
                for iy in range(iy0, iy1 + 1):
                    self.cells.setdefault((ix, iy), []).append(t)

    def _cell(self, x: float, y: float) -> tuple[int, int]:
        ix = min(self.res - 1, max(0, int((x - self.x0) / self.h)))
        iy = min(self.res - 1, max(0, int((y - self.y0) / self.h)))
        return ix, iy

    def _bary(self, t: int, p: np.ndarray) -> np.ndarray:
        d = p - self.a[t]
        b1 = (d[0] * self.e2[t, 1] - d[1] * self.e2[t, 0]) / self.det[t]
        b2 = (self.e1[t, 0] * d[1] - self.e1[t, 1] * d[0]) / self.det[t]
        return np.array([1.0 - b1 - b2, b1, b2])

    @staticmethod
    def _clamp(bary: np.ndarray) -> np.ndarray:
        bary = np.maximum(bary, 0.0)
        return bary / bary.sum()

    def locate(self, p: np.ndarray, eps: float, boundary_eps: float) -> tuple[int, np.ndarray]:
        for t in sorted(self.cells.get(self._cell(p[0], p[1]), ())):
            if not self.ok[t]:
                continue
            bary = self._bary(t, p)
            if bary.min() >= -eps:
                return t, self._clamp(bary)
        # global fallback: nearest feasibility over all well-shaped triangles
        d = p[None, :] - self.a
        b1 = (d[:, 0] * self.e2[:, 1] - d[:, 1] * self.e2[:, 0]) / np.where(self.ok, self.det, 1.0)
        b2 = (self.e1[:, 0] * d[:, 1] - self.e1[:, 1] * d[:, 0]) / np.where(self.ok, self.det, 1.0)
        feas = np.minimum(1.0 - b1 - b2, np.minimum(b1, b2))
        feas = np.where(self.ok, feas, -np.inf)
        t = int(np.argmax(feas))
        if feas[t] < -boundary_eps:
            raise LayoutError(
                f"point ({p[0]:.6g},{p[1]:.6g}) lies outside the layout (deficit {-feas[t]:.3g})"
            )
        return t, self._clamp(np.array([1.0 - b1[t] - b2[t], b1[t], b2[t]]))


def layout_canonical(cut: CutMesh) -> SchemaLayout:
    """Flatten the cut disk: arcs to polygon sides by 3D arc length, interior
    by the uniform-weight Tutte system (solved sparse)."""
    g = cut.genus
    poly = regular_polygon(g)
    n_sides = 4 * g
    nv = cut.mesh.n_vertices
    pos = np.zeros((nv, 2))
    on_boundary = np.zeros(nv, dtype=bool)

    V = cut.mesh.V
    for j, arc in enumerate(cut.arcs):
        c0 = poly[j]
        c1 = poly[(j + 1) % n_sides]
        vs = arc.vertices
        cum = [0.0]
        for i in range(len(vs) - 1):
            cum.append(cum[-1] + math.dist(V[vs[i]], V[vs[i + 1]]))
        total = cum[-1]
        if total <= 0.0:
            raise LayoutError(f"arc {j} has zero length")
        for i in range(len(vs) - 1):  # the closing corner belongs to the next arc
            t = cum[i] / total
            pos[vs[i]] = c0 + t * (c1 - c0)
            on_boundary[vs[i]] = True

    interior = np.nonzero(~on_boundary)[0]
    if len(interior):
        idx = {int(v): i for i, v in enumerate(interior)}
        nbrs: dict[int, set[int]] = {}
        for (u, v) in cut.mesh._dedge:
            nbrs.setdefault(u, set()).add(v)
            nbrs.setdefault(v, set()).add(u)
        rows, cols, vals = [], [], []
        rhs = np.zeros((len(interior), 2))
        for v in interior:
            i = idx[int(v)]
            ns = nbrs[int(v)]
            rows.append(i)
            cols.append(i)
            vals.append(float(len(ns)))
            for w in sorted(ns):
                iw = idx.get(w)
                if iw is None:
                    rhs[i] += pos[w]
                else:
                    rows.append(i)
                    cols.append(iw)
                    vals.append(-1.0)
        A = csr_matrix((vals, (rows, cols)), shape=(len(interior), len(interior)))
        sol = spsolve(A, rhs)
        pos[interior] = sol.reshape(len(interior), 2)

    return SchemaLayout(cut, pos)


def map_point(layout_a: SchemaLayout, layout_b: SchemaLayout,
              point: tuple[int, np.ndarray], rotation: int = 0) -> tuple[int, np.ndarray]:
    """Map a surface point of A to B through their shared polygon.

    ``point`` is (triangle index, barycentric coords) on A's cut disk;
    ``rotation`` overlays B's polygon rotated by rotation * 2*pi/(4g), so a
    round trip with rotations k and 4g-k is the identity. Returns (triangle
    index, barycentric coords) on B's cut disk.
    """
    ga, gb = layout_a.genus, layout_b.genus
    if ga != gb:
        raise LayoutError(f"cannot map between genus {ga} and genus {gb} layouts")
    tri, bary = point
    tris = layout_a.cut.mesh.T
    if not 0 <= tri < len(tris):
        raise LayoutError(f"triangle index {tri} out of range")
    bary = np.asarray(bary, dtype=np.float64)
    if bary.shape != (3,) or bary.min() < -1e-9 or abs(bary.sum() - 1.0) > 1e-6:
        raise LayoutError("barycentric coordinates must be three nonnegative weights summing to 1")
    bary = np.maximum(bary, 0.0)
    bary = bary / bary.sum()

    p = bary @ layout_a.pos[list(tris[tri])]
    n = 4 * ga
    k = rotation % n
    if k:
        ang = 2.0 * math.pi * k / n
        c, s = math.cos(ang), math.sin(ang)
        p = np.array([c * p[0] + s * p[1], -s * p[0] + c * p[1]])
    return layout_b.locate(p)


# ---------------------------------------------------------------- file I/O


def save_layout(layout: SchemaLayout, path: str) -> None:
    """Write the flattened disk as OBJ (x y 0) plus a JSON sidecar.

    The sidecar carries genus, origin, the disk-to-input vertex map, the 3D
    positions, the boundary cycle, and per arc its loop id, copy direction
    and the arc-length parameter of every boundary vertex.
    """
    base, ext = os.path.splitext(path)
    if ext.lower() != ".obj":
        raise LayoutError(f"layout path must end in .obj, got {path!r}")
    cut = layout.cut
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# canonical schema layout, genus {cut.genus}\n")
        for x, y in layout.pos:
            f.write("v %.17g %.17g 0\n" % (x, y))
        for a, b, c in cut.mesh.T:
            f.write(f"f {a + 1} {b + 1} {c + 1}\n")

    V = cut.mesh.V
    arcs = []
    for arc in cut.arcs:
        vs = arc.vertices
        cum = [0.0]
        for i in range(len(vs) - 1):
            cum.append(cum[-1] + math.dist(V[vs[i]], V[vs[i + 1]]))
        total = cum[-1]
        arcs.append({
            "loop": arc.loop,
            "copy": "forward" if arc.sign > 0 else "reverse",
            "vertices": list(vs),
            "params": [c / total for c in cum],
        })
    sidecar = {
        "genus": cut.genus,
        "origin": cut.origin,
        "vertex_origin": list(cut.vertex_origin),
        "pos3d": [list(p) for p in V],
        "boundary": list(cut.boundary),
        "arcs": arcs,
    }
    with open(base + ".json", "w", encoding="utf-8") as f:
        json.dump(sidecar, f)
        f.write("\n")


def load_layout(path: str) -> SchemaLayout:
    """Read a layout written by :func:`save_layout`."""
    from .fileio import load_obj

    base, ext = os.path.splitext(path)
    if ext.lower() != ".obj":
        raise LayoutError(f"layout path must end in .obj, got {path!r}")
    flat = load_obj(path)
    try:
        with open(base + ".json", "r", encoding="utf-8") as f:
            side = json.load(f)
    except FileNotFoundError:
        raise LayoutError(f"layout sidecar {base + '.json'} is missing") from None
    except json.JSONDecodeError as e:
        raise LayoutError(f"layout sidecar {base + '.json'} is not valid JSON: {e}") from None

    try:
        genus = int(side["genus"])
        origin = int(side["origin"])
        vertex_origin = tuple(int(v) for v in side["vertex_origin"])
        pos3d = [tuple(float(x) for x in p) for p in side["pos3d"]]
        boundary = tuple(int(v) for v in side["boundary"])
        arcs = tuple(
            Arc(int(a["loop"]), 1 if a["copy"] == "forward" else -1,
                tuple(int(v) for v in a["vertices"]))
            for a in side["arcs"]
        )
    except (KeyError, TypeError, ValueError) as e:
        raise LayoutError(f"layout sidecar {base + '.json'} is malformed: {e}") from None

    if len(pos3d) != flat.n_vertices or len(vertex_origin) != flat.n_vertices:
        raise LayoutError("layout sidecar does not match the OBJ vertex count")
    if len(arcs) != 4 * genus:
        raise LayoutError(f"layout sidecar lists {len(arcs)} arcs, expected {4 * genus}")

    disk = TriMesh()
    for p in pos3d:
        disk.add_vertex(p)
    for (a, b, c) in flat.T:
        disk.add_triangle(a, b, c)
    disk.validate(closed=False)

    pos = flat.vertices_array()[:, :2].copy()
    cut = CutMesh(disk, genus, origin, vertex_origin, boundary, arcs)
    return SchemaLayout(cut, pos)
