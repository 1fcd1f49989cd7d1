"""Synthetic benchmark surfaces and the growth benchmark harness.

Generators produce polycube chains of arbitrary genus and parametric torus
grids, plus a smooth warp for de-axis-aligning either. ``growth_bench``
sweeps the full pipeline over a genus range and strategy set and returns
table rows ready for CSV export; ``fit_growth_exponent`` summarizes each
strategy's refinement growth as a log-log slope, and
``render_growth_figure`` plots the sweep next to the delimited output.
"""

from __future__ import annotations

import concurrent.futures
import math
import time
import tracemalloc

from .errors import MeshError, PolyschemaError
from .mesh import TriMesh

# quad corner loops per face direction, CCW seen from outside the voxel
_FACE_CORNERS = {
    (1, 0, 0): ((1, 0, 0), (1, 1, 0), (1, 1, 1), (1, 0, 1)),
    (-1, 0, 0): ((0, 0, 0), (0, 0, 1), (0, 1, 1), (0, 1, 0)),
    (0, 1, 0): ((0, 1, 0), (0, 1, 1), (1, 1, 1), (1, 1, 0)),
    (0, -1, 0): ((0, 0, 0), (1, 0, 0), (1, 0, 1), (0, 0, 1)),
    (0, 0, 1): ((0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1)),
    (0, 0, -1): ((0, 0, 0), (0, 1, 0), (1, 1, 0), (1, 0, 0)),
}


def _voxel_surface(voxels: set[tuple[int, int, int]]) -> TriMesh:
    """Boundary surface of a voxel solid, quads split along the a-c diagonal.

    Vertices land on integer lattice points; the solid must be edge- and
    vertex-manifold (no checkerboard voxel pairs), which all generators here
    guarantee by construction.
    """
    mesh = TriMesh()
    vid: dict[tuple[int, int, int], int] = {}

    def vertex(p: tuple[int, int, int]) -> int:
        i = vid.get(p)
        if i is None:
            i = mesh.add_vertex((float(p[0]), float(p[1]), float(p[2])))
            vid[p] = i
        return i

    for (x, y, z) in sorted(voxels):
        for (dx, dy, dz), corners in _FACE_CORNERS.items():
            if (x + dx, y + dy, z + dz) in voxels:
                continue
            a, b, c, d = (vertex((x + cx, y + cy, z + cz)) for cx, cy, cz in corners)
            mesh.add_triangle(a, b, c)
            mesh.add_triangle(a, c, d)
    return mesh


def gen_polycube_chain(genus: int, cells_per_edge: int = 2) -> TriMesh:
    """Chain of ``genus`` square voxel frames sharing their side walls.

    Each frame is a (cells_per_edge+2)^2 x 1 voxel block with a square
    opening of cells_per_edge x cells_per_edge voxels; consecutive frames
    share one wall column, so the solid has ``genus`` tunnels and its
    boundary is a closed surface of exactly that genus, with all vertices
    on the integer lattice and every triangle normal axis aligned.
    """
    if genus < 1:
        raise MeshError("polycube chain genus must be at least 1")
    if cells_per_edge < 1:
        raise MeshError("cells_per_edge must be at least 1 voxel")
    side = cells_per_edge + 2
    voxels: set[tuple[int, int, int]] = set()
    for k in range(genus):
        x0 = k * (side - 1)
        for xl in range(side):
            for y in range(side):
                if 1 <= xl <= cells_per_edge and 1 <= y <= cells_per_edge:
                    continue
                voxels.add((x0 + xl, y, 0))
    return _voxel_surface(voxels)


def gen_torus_grid(nu: int = 24, nv: int = 12, big_radius: float = 2.0, small_radius: float = 1.0) -> TriMesh:
    """Structured torus: nu segments around the ring, nv around the tube."""
    if nu < 3 or nv < 3:
        raise MeshError("torus grid needs at least 3 segments in each direction")
    if not 0 < small_radius < big_radius:
        raise MeshError("torus radii must satisfy 0 < small_radius < big_radius")
    mesh = TriMesh()
    for i in range(nu):
        theta = 2.0 * math.pi * i / nu
        for j in range(nv):
            phi = 2.0 * math.pi * j / nv
            w = big_radius + small_radius * math.cos(phi)
            mesh.add_vertex((w * math.cos(theta), w * math.sin(theta), small_radius * math.sin(phi)))

    def vid(i: int, j: int) -> int:
        return (i % nu) * nv + (j % nv)

    for i in range(nu):
        for j in range(nv):
            a = vid(i, j)
            b = vid(i + 1, j)
            c = vid(i + 1, j + 1)
            d = vid(i, j + 1)
            mesh.add_triangle(a, b, c)
            mesh.add_triangle(a, c, d)
    return mesh


def warp(mesh: TriMesh, amplitude: float = 0.2, frequency: float = 0.6) -> TriMesh:
    """Smooth sinusoidal warp; breaks axis alignment while keeping the mesh
    combinatorics (and for small amplitudes, its embedding) intact."""
    out = mesh.copy()
    f = frequency
    for i, (x, y, z) in enumerate(out.V):
        out.V[i] = (
            x + amplitude * math.sin(f * y + 0.7 * f * z),
            y + amplitude * math.sin(f * z + 0.9 * f * x),
            z + amplitude * math.sin(f * x + 0.8 * f * y),
        )
    return out


# ----------------------------------------------------------------- benchmark

# conservative in-core footprint per mesh vertex (position tuple, ~2 triangle
# records, ~6 directed-edge dict slots); used to translate a memory budget
# into a refinement vertex cap
_BYTES_PER_VERTEX = 600


def vertex_cap_for_mem_mb(mem_cap_mb: float) -> int:
    """Refinement vertex cap equivalent to a memory budget in MiB."""
    if mem_cap_mb <= 0:
        raise MeshError("memory cap must be positive")
    return max(8, int(mem_cap_mb * 2**20) // _BYTES_PER_VERTEX)


def _bench_case(args: tuple) -> dict:
    """One (genus, strategy) pipeline run, returned as a table row.

    Module-level so process pools can pickle it. Failures of any pipeline
    stage become rows with an ``error:`` status instead of aborting the
    sweep; the base-mesh columns stay filled so the failure is attributable.
    """
    from .basis import greedy_basis
    from .detach import RefineConfig, detach_all
    from .metrics import growth_stats, hausdorff

    genus, strategy, cells_per_edge, cfg_fields, root, density, seed, timings = args
    config = RefineConfig(**cfg_fields)
    base = gen_polycube_chain(genus, cells_per_edge)
    row = {
        "model": f"polycube-g{genus}",
        "V": base.n_vertices,
        "T": base.n_triangles,
        "genus": genus,
        "strategy": strategy,
        "cop_deg": config.theta_deg,
        "runtime_s": 0.0,
        "peak_mem_mb": 0.0,
        "status": "ok",
    }
    if timings:
        tracemalloc.start()
    t0 = time.perf_counter()
    try:
        mesh = base.copy()
        system = greedy_basis(mesh, root)
        report = detach_all(mesh, system, strategy, config)
        haus = hausdorff(base, mesh, samples_per_area=density, seed=seed)
        row.update(
            {
                "V'": mesh.n_vertices,
                "T'": mesh.n_triangles,
                "growth%": growth_stats(base, mesh),
                "val_max": report.val_max,
                "val_avg": report.val_avg,
                "vsplit_pct": report.vsplit_pct,
                "esplit_pct": report.esplit_pct,
                "H_max": haus.max,
                "H_avg": haus.avg,
            }
        )
    except PolyschemaError as exc:
        row["status"] = f"error: {type(exc).__name__}: {exc}"
    finally:
        if timings:
            row["runtime_s"] = time.perf_counter() - t0
            row["peak_mem_mb"] = tracemalloc.get_traced_memory()[1] / 2**20
            tracemalloc.stop()
    return row


def growth_bench(
    genus_range,
    strategies,
    cells_per_edge: int = 2,
    config=None,
    root: int = 0,
    hausdorff_density: float = 10.0,
    seed: int = 0,
    timings: bool = False,
    jobs: int = 1,
) -> list[dict]:
    """Sweep the full pipeline over ``genus_range`` x ``strategies``.

    Returns one row dict per case in deterministic (genus, strategy) order;
    pipeline failures are recorded in the row's ``status`` and never abort
    the sweep. ``timings=False`` zeroes runtime and memory columns so equal
    inputs give byte-identical CSV output.
    """
    from dataclasses import asdict

    from .detach import STRATEGIES, RefineConfig

    for s in strategies:
        if s not in STRATEGIES:
            raise MeshError(f"unknown strategy {s!r}")
    cfg_fields = asdict(config if config is not None else RefineConfig())
    cases = [
        (g, s, cells_per_edge, cfg_fields, root, hausdorff_density, seed, timings)
        for g in genus_range
        for s in strategies
    ]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_bench_case, cases))
    return [_bench_case(c) for c in cases]


def fit_growth_exponent(rows: list[dict], strategy: str) -> float:
    """Least-squares slope of log(growth%) against log(genus) for one strategy.

    Only successful rows with strictly positive growth enter the fit; at
    least two such points are required.
    """
    import numpy as np

    pts = [
        (row["genus"], row["growth%"])
        for row in rows
        if row["strategy"] == strategy and row.get("status") == "ok" and row.get("growth%", 0) > 0
    ]
    if len(pts) < 2:
        raise MeshError(f"not enough data points to fit an exponent for {strategy!r}")
    g = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    return float(np.polyfit(g, y, 1)[0])


def render_growth_figure(rows: list[dict], path: str) -> None:
    """Log-log growth-versus-genus figure for a bench sweep, saved to file."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    strategies = sorted({row["strategy"] for row in rows})
    for strategy in strategies:
        pts = sorted(
            (row["genus"], row["growth%"])
            for row in rows
            if row["strategy"] == strategy and row.get("status") == "ok" and row.get("growth%", 0) > 0
        )
        if not pts:
            continue
        label = strategy
        if len(pts) >= 2:
            label = f"{strategy} (exp {fit_growth_exponent(rows, strategy):.2f})"
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=label)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("genus")
    ax.set_ylabel("vertex growth [%]")
    ax.set_title("refinement growth by strategy")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
