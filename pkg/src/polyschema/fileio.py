"""Mesh and loop-system file formats.

Meshes travel as OBJ (``v``/``f`` records, 1-based indices) or OFF; loop
systems as a small line-oriented text format: the first line is
``origin <vertex>``, then one line of whitespace-separated vertex indices per
loop. All float output uses %.17g so geometry round-trips exactly.
"""

from __future__ import annotations

import logging
import math
import os

from .basis import Loop, LoopSystem
from .errors import LoopError, MeshFormatError
from .mesh import TriMesh

logger = logging.getLogger(__name__)

_FMT = "%.17g"


def load_mesh(path: str, validate: bool = True) -> TriMesh:
    """Load a triangle mesh, dispatching on the file extension.

    By default the result is fully validated (closed, manifold, connected,
    consistently oriented); pass ``validate=False`` to read meshes with
    boundary, e.g. cut-open disks.
    """
    ext = os.path.splitext(path)[1].lower()
    if ext == ".obj":
        mesh = load_obj(path)
    elif ext == ".off":
        mesh = load_off(path)
    else:
        raise MeshFormatError(f"unsupported mesh extension {ext!r} (expected .obj or .off)")
    if validate:
        mesh.validate()
    return mesh


def save_mesh(mesh: TriMesh, path: str) -> None:
    ext = os.path.splitext(path)[1].lower()
    if ext == ".obj":
        save_obj(mesh, path)
    elif ext == ".off":
        save_off(mesh, path)
    else:
        raise MeshFormatError(f"unsupported mesh extension {ext!r} (expected .obj or .off)")


def _parse_float(tok: str, path: str, lineno: int) -> float:
    try:
        x = float(tok)
    except ValueError:
        raise MeshFormatError(f"{path}:{lineno}: bad coordinate {tok!r}") from None
    if not math.isfinite(x):
        raise MeshFormatError(f"{path}:{lineno}: non-finite coordinate {tok!r}")
    return x


def _face_index(tok: str, path: str, lineno: int) -> int:
    # OBJ face tokens may carry /texture/normal refs; the vertex is the lead
    head = tok.split("/", 1)[0]
    try:
        idx = int(head)
    except ValueError:
        raise MeshFormatError(f"{path}:{lineno}: bad face index {tok!r}") from None
    if idx < 1:
        raise MeshFormatError(f"{path}:{lineno}: face index {idx} (negative/zero refs unsupported)")
    return idx - 1


def load_obj(path: str) -> TriMesh:
    mesh = TriMesh()
    ignored: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            toks = line.split()
            kind = toks[0]
            if kind == "v":
                if len(toks) < 4:
                    raise MeshFormatError(f"{path}:{lineno}: vertex needs three coordinates")
                x, y, z = (_parse_float(t, path, lineno) for t in toks[1:4])
                mesh.add_vertex((x, y, z))
            elif kind == "f":
                if len(toks) != 4:
                    raise MeshFormatError(
                        f"{path}:{lineno}: face has {len(toks) - 1} vertices; only triangles are supported"
                    )
                i, j, k = (_face_index(t, path, lineno) for t in toks[1:4])
                _checked_add(mesh, i, j, k, path, lineno)
            elif kind not in ignored:
                ignored.add(kind)
                logger.warning("%s:%d: ignoring OBJ record type %r", path, lineno, kind)
    if mesh.n_triangles == 0:
        raise MeshFormatError(f"{path}: no triangles found")
    return mesh


def _checked_add(mesh: TriMesh, i: int, j: int, k: int, path: str, lineno: int) -> None:
    nv = mesh.n_vertices
    for idx in (i, j, k):
        if idx >= nv:
            raise MeshFormatError(f"{path}:{lineno}: face references vertex {idx + 1} of {nv}")
    mesh.add_triangle(i, j, k)


def save_obj(mesh: TriMesh, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for x, y, z in mesh.V:
            fh.write(f"v {_FMT % x} {_FMT % y} {_FMT % z}\n")
        for a, b, c in mesh.T:
            fh.write(f"f {a + 1} {b + 1} {c + 1}\n")


def _off_lines(path: str):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line


def load_off(path: str) -> TriMesh:
    lines = _off_lines(path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise MeshFormatError(f"{path}: empty file") from None
    toks = header.split()
    if toks[0] != "OFF":
        raise MeshFormatError(f"{path}:{lineno}: missing OFF header")
    counts = toks[1:]
    if not counts:
        try:
            lineno, line = next(lines)
        except StopIteration:
            raise MeshFormatError(f"{path}: truncated header") from None
        counts = line.split()
    if len(counts) != 3:
        raise MeshFormatError(f"{path}:{lineno}: header needs vertex, face and edge counts")
    try:
        nv, nf, _ne = (int(t) for t in counts)
    except ValueError:
        raise MeshFormatError(f"{path}:{lineno}: bad counts {counts!r}") from None

    mesh = TriMesh()
    for _ in range(nv):
        try:
            lineno, line = next(lines)
        except StopIteration:
            raise MeshFormatError(f"{path}: expected {nv} vertices") from None
        toks = line.split()
        if len(toks) < 3:
            raise MeshFormatError(f"{path}:{lineno}: vertex needs three coordinates")
        x, y, z = (_parse_float(t, path, lineno) for t in toks[:3])
        mesh.add_vertex((x, y, z))
    for _ in range(nf):
        try:
            lineno, line = next(lines)
        except StopIteration:
            raise MeshFormatError(f"{path}: expected {nf} faces") from None
        toks = line.split()
        try:
            arity = int(toks[0])
        except ValueError:
            raise MeshFormatError(f"{path}:{lineno}: bad face record") from None
        if arity != 3 or len(toks) < 4:
            raise MeshFormatError(f"{path}:{lineno}: only triangles are supported")
        try:
            i, j, k = int(toks[1]), int(toks[2]), int(toks[3])
        except ValueError:
            raise MeshFormatError(f"{path}:{lineno}: bad face indices") from None
        for idx in (i, j, k):
            if not 0 <= idx < nv:
                raise MeshFormatError(f"{path}:{lineno}: face references vertex {idx} of {nv}")
        mesh.add_triangle(i, j, k)
    if mesh.n_triangles == 0:
        raise MeshFormatError(f"{path}: no triangles found")
    return mesh


def save_off(mesh: TriMesh, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("OFF\n")
        fh.write(f"{mesh.n_vertices} {mesh.n_triangles} {mesh.n_edges}\n")
        for x, y, z in mesh.V:
            fh.write(f"{_FMT % x} {_FMT % y} {_FMT % z}\n")
        for a, b, c in mesh.T:
            fh.write(f"3 {a} {b} {c}\n")


# ------------------------------------------------------------- loop systems


def load_loops(path: str) -> LoopSystem:
    """Read a loop system file. Structural validation against a mesh is the
    caller's job (see :func:`polyschema.basis.validate_system`)."""
    with open(path, encoding="utf-8") as fh:
        lines = [(no, ln.split("#", 1)[0].strip()) for no, ln in enumerate(fh, 1)]
    lines = [(no, ln) for no, ln in lines if ln]
    if not lines:
        raise LoopError(f"{path}: empty loop file")
    no, head = lines[0]
    toks = head.split()
    if len(toks) != 2 or toks[0] != "origin":
        raise LoopError(f"{path}:{no}: first line must be 'origin <vertex>'")
    try:
        origin = int(toks[1])
    except ValueError:
        raise LoopError(f"{path}:{no}: bad origin {toks[1]!r}") from None

    loops = []
    for no, ln in lines[1:]:
        try:
            vs = [int(t) for t in ln.split()]
        except ValueError:
            raise LoopError(f"{path}:{no}: loop lines must be vertex indices") from None
        if len(vs) < 2 or vs[0] != origin or vs[-1] != origin:
            raise LoopError(f"{path}:{no}: loop must start and end at the origin {origin}")
        loops.append(Loop(vs))
    return LoopSystem(origin, loops)


def save_loops(system: LoopSystem, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"origin {system.origin}\n")
        for lp in system.loops:
            fh.write(" ".join(str(v) for v in lp.vertices) + "\n")
