"""Command line pipeline: basis, detach, cut, layout, map, metrics, bench.

Every subcommand reads and writes only the files named by its arguments,
prints one JSON object on stdout, and reports failures as JSON on stderr
with a distinct exit code per error class. Runs are deterministic: the same
inputs with the same ``--seed`` produce byte-identical outputs (pass
``--timings`` to trade that away for real runtime and memory columns).
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
import tracemalloc
from pathlib import Path

from .basis import greedy_basis, globally_shortest_basis, validate_system
from .detach import STRATEGIES, RefineConfig, detach_all
from .errors import CapExceededError, MeshFormatError, PolyschemaError
from .fileio import load_loops, load_mesh, save_loops, save_mesh
from .layout import cut_along, layout_canonical, load_layout, map_point, save_layout
from .metrics import TABLE_COLUMNS, growth_stats, hausdorff, write_table
from .synth import (
    gen_polycube_chain,
    growth_bench,
    fit_growth_exponent,
    render_growth_figure,
    vertex_cap_for_mem_mb,
)

_EXIT_HELP = """\
exit codes:
  0  success
  1  unexpected internal error
  2  usage error
  3  file or format error
  4  mesh, loop or layout invariant violation
  5  refinement cap exceeded
"""

_DEFAULTS = RefineConfig()
try:
    from importlib.metadata import version as _pkg_version

    _VERSION = _pkg_version("polyschema")
except Exception:  # pragma: no cover - not installed
    _VERSION = "0.0.0"
_VERSION_TEXT = (
    f"polyschema {_VERSION} "
    f"(defaults: root=0, strategy=hybrid, planarity-deg={_DEFAULTS.theta_deg}, "
    f"lambda={_DEFAULTS.lam}, max-vertices={_DEFAULTS.max_vertices}, "
    f"hausdorff-density=10.0, seed=0)"
)


def _emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")


def _fail(exc: BaseException, code: int) -> int:
    sys.stderr.write(
        json.dumps(
            {"error": type(exc).__name__, "message": str(exc), "exit_code": code},
            sort_keys=True,
        )
        + "\n"
    )
    return code


def _resolve_root(spec: str, mesh, seed: int) -> int | None:
    """Root vertex from an index, 'random' (seeded) or 'global' (None)."""
    if spec == "global":
        return None
    if spec == "random":
        return random.Random(seed).randrange(mesh.n_vertices)
    try:
        root = int(spec)
    except ValueError:
        raise PolyschemaError(
            f"--root must be a vertex index, 'random' or 'global', not {spec!r}"
        ) from None
    if not 0 <= root < mesh.n_vertices:
        raise PolyschemaError(f"--root {root} out of range for {mesh.n_vertices} vertices")
    return root


def _compute_basis(mesh, args):
    root = _resolve_root(args.root, mesh, args.seed)
    if root is None:
        return globally_shortest_basis(mesh)
    return greedy_basis(mesh, root)


# ------------------------------------------------------------- subcommands


def _cmd_basis(args) -> int:
    mesh = load_mesh(args.mesh)
    system = _compute_basis(mesh, args)
    save_loops(system, args.out)
    _emit(
        {
            "origin": system.origin,
            "loops": len(system.loops),
            "lengths": [lp.length for lp in system.loops],
            "total_length": sum(lp.length for lp in system.loops),
            "out": args.out,
        }
    )
    return 0


def _report_payload(report, mesh_before, mesh_after) -> dict:
    return {
        "strategy": report.strategy,
        "planarity_deg": report.theta_deg,
        "v_before": report.v_before,
        "t_before": report.t_before,
        "v_after": report.v_after,
        "t_after": report.t_after,
        "growth_pct": growth_stats(mesh_before, mesh_after),
        "ops": report.n_ops,
        "vertex_splits": report.n_vertex_splits,
        "edge_splits": report.n_edge_splits,
        "triangle_splits": report.n_triangle_splits,
        "vsplit_pct": report.vsplit_pct,
        "esplit_pct": report.esplit_pct,
        "val_max": report.val_max,
        "val_avg": report.val_avg,
    }


def _cmd_detach(args) -> int:
    mesh = load_mesh(args.mesh)
    before = mesh.copy()
    system = load_loops(args.loops)
    validate_system(mesh, system)
    cfg = RefineConfig(
        theta_deg=args.planarity_deg, lam=getattr(args, "lambda"), max_vertices=args.max_vertices
    )
    report = detach_all(mesh, system, args.strategy, cfg)
    save_mesh(mesh, args.out_mesh)
    save_loops(system, args.out_loops)
    payload = _report_payload(report, before, mesh)
    payload.update({"out_mesh": args.out_mesh, "out_loops": args.out_loops})
    if args.report:
        Path(args.report).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    _emit(payload)
    return 0


def _cmd_cut(args) -> int:
    mesh = load_mesh(args.mesh)
    system = load_loops(args.loops)
    validate_system(mesh, system)
    cut = cut_along(mesh, system)
    if args.out:
        save_mesh(cut.mesh, args.out)
        sidecar = {
            "genus": cut.genus,
            "origin": cut.origin,
            "vertex_origin": list(cut.vertex_origin),
            "boundary": list(cut.boundary),
            "arcs": [
                {"loop": a.loop, "sign": a.sign, "vertices": list(a.vertices)} for a in cut.arcs
            ],
        }
        Path(args.out).with_suffix(".json").write_text(
            json.dumps(sidecar, sort_keys=True, indent=2) + "\n"
        )
    _emit(
        {
            "genus": cut.genus,
            "disk_vertices": cut.mesh.n_vertices,
            "disk_triangles": cut.mesh.n_triangles,
            "boundary_edges": len(cut.boundary),
            "arcs": len(cut.arcs),
            "word": ["%d%s" % (l, "+" if s > 0 else "-") for l, s in cut.word()],
            "out": args.out,
        }
    )
    return 0


def _cmd_layout(args) -> int:
    mesh = load_mesh(args.mesh)
    system = load_loops(args.loops)
    validate_system(mesh, system)
    layout = layout_canonical(cut_along(mesh, system))
    save_layout(layout, args.out)
    _emit(
        {
            "genus": layout.genus,
            "sides": 4 * layout.genus,
            "disk_vertices": len(layout.pos),
            "flipped_triangles": len(layout.flipped_triangles()),
            "polygon_area": layout.polygon_area(),
            "word": ["%d%s" % (l, "+" if s > 0 else "-") for l, s in layout.cut.word()],
            "out": args.out,
        }
    )
    return 0


def _cmd_map(args) -> int:
    import numpy as np

    la = load_layout(args.layout_a)
    lb = load_layout(args.layout_b)
    rng = np.random.default_rng(args.seed)
    tris = la.cut.mesh.triangles_array()
    areas = np.abs(la.signed_areas())
    probs = areas / areas.sum()
    picks = rng.choice(len(tris), size=args.points, p=probs)
    r1, r2 = rng.random(args.points), rng.random(args.points)
    su = np.sqrt(r1)
    barys = np.stack([1.0 - su, su * (1.0 - r2), su * r2], axis=1)

    worst = 0.0
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("tri_a,b0,b1,b2,x_a,y_a,tri_b,c0,c1,c2,x_b,y_b\n")
        for t, bary in zip(picks, barys):
            pa = bary @ la.pos[tris[t]]
            tb, bb = map_point(la, lb, (int(t), bary), rotation=args.rotation)
            pb = bb @ lb.pos[lb.cut.mesh.triangles_array()[tb]]
            ta_back, bb_back = map_point(lb, la, (tb, bb), rotation=-args.rotation)
            pa_back = bb_back @ la.pos[tris[ta_back]]
            worst = max(worst, float(np.hypot(*(pa_back - pa))))
            fh.write(
                "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n"
                % (t, *bary, *pa, tb, *bb, *pb)
            )
    _emit(
        {
            "points": args.points,
            "rotation": args.rotation,
            "max_roundtrip_error": worst,
            "out": args.out,
        }
    )
    return 0


def _cmd_hausdorff(args) -> int:
    a = load_mesh(args.mesh_a)
    b = load_mesh(args.mesh_b)
    res = hausdorff(a, b, samples_per_area=args.density, seed=args.seed)
    _emit({"max": res.max, "avg": res.avg, "n_samples": res.n_samples})
    return 0


def _cmd_gen_polycube(args) -> int:
    mesh = gen_polycube_chain(args.genus, args.cells)
    save_mesh(mesh, args.out)
    _emit(
        {
            "genus": mesh.genus(),
            "vertices": mesh.n_vertices,
            "triangles": mesh.n_triangles,
            "out": args.out,
        }
    )
    return 0


def _cmd_bench(args) -> int:
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    max_vertices = _DEFAULTS.max_vertices
    if args.mem_cap_mb is not None:
        max_vertices = vertex_cap_for_mem_mb(args.mem_cap_mb)
    cfg = RefineConfig(theta_deg=args.planarity_deg, max_vertices=max_vertices)
    rows = growth_bench(
        range(args.genus_min, args.genus_max + 1),
        strategies,
        cells_per_edge=args.cells,
        config=cfg,
        root=args.root,
        hausdorff_density=args.density,
        seed=args.seed,
        timings=args.timings,
        jobs=args.jobs,
    )
    with open(args.csv, "w", encoding="utf-8") as fh:
        write_table(rows, fh, TABLE_COLUMNS + ("status",))
    figure = None
    if not args.no_figure:
        figure = str(Path(args.csv).with_suffix(".png"))
        render_growth_figure(rows, figure)
    exponents = {}
    for s in strategies:
        try:
            exponents[s] = fit_growth_exponent(rows, s)
        except PolyschemaError:
            exponents[s] = None
    _emit(
        {
            "rows": len(rows),
            "ok": sum(1 for r in rows if r["status"] == "ok"),
            "errors": sum(1 for r in rows if r["status"] != "ok"),
            "growth_exponents": exponents,
            "csv": args.csv,
            "figure": figure,
        }
    )
    return 0


def _cmd_stats(args) -> int:
    mesh = load_mesh(args.mesh)
    before = mesh.copy()
    if args.timings:
        tracemalloc.start()
    t0 = time.perf_counter()
    system = _compute_basis(mesh, args)
    cfg = RefineConfig(theta_deg=args.planarity_deg, lam=getattr(args, "lambda"))
    report = detach_all(mesh, system, args.strategy, cfg)
    haus = hausdorff(before, mesh, samples_per_area=args.density, seed=args.seed)
    runtime = time.perf_counter() - t0 if args.timings else 0.0
    peak_mb = 0.0
    if args.timings:
        peak_mb = tracemalloc.get_traced_memory()[1] / 2**20
        tracemalloc.stop()
    row = {
        "model": Path(args.mesh).stem,
        "V": before.n_vertices,
        "T": before.n_triangles,
        "genus": before.genus(),
        "strategy": args.strategy,
        "V'": mesh.n_vertices,
        "T'": mesh.n_triangles,
        "growth%": growth_stats(before, mesh),
        "val_max": report.val_max,
        "val_avg": report.val_avg,
        "cop_deg": args.planarity_deg,
        "vsplit_pct": report.vsplit_pct,
        "esplit_pct": report.esplit_pct,
        "H_max": haus.max,
        "H_avg": haus.avg,
        "runtime_s": runtime,
        "peak_mem_mb": peak_mb,
    }
    with open(args.csv, "w", encoding="utf-8") as fh:
        write_table([row], fh)
    figure = None
    if not args.no_figure:
        figure = str(Path(args.csv).with_suffix(".png"))
        _render_layout_figure(layout_canonical(cut_along(mesh, system)), figure)
    payload = dict(row)
    payload.update({"csv": args.csv, "figure": figure})
    _emit(payload)
    return 0


def _render_layout_figure(layout, path: str) -> None:
    """Canonical polygon figure: interior edges gray, arcs colored by loop."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.5, 5.5))
    pos = layout.pos
    tris = layout.cut.mesh.triangles_array()
    ax.triplot(pos[:, 0], pos[:, 1], tris, color="0.8", linewidth=0.3)
    cmap = matplotlib.colormaps["tab10"]
    for arc in layout.cut.arcs:
        xy = pos[list(arc.vertices)]
        color = cmap(arc.loop % 10)
        ax.plot(xy[:, 0], xy[:, 1], color=color, linewidth=1.6)
        mid = xy[len(xy) // 2]
        label = "%d%s" % (arc.loop, "+" if arc.sign > 0 else "-")
        ax.annotate(label, mid, mid * 1.12, color=color, ha="center", va="center", fontsize=9)
    corners = layout.corner_positions()
    ax.plot(corners[:, 0], corners[:, 1], "k.", markersize=5)
    ax.set_aspect("equal")
    ax.set_axis_off()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


# ------------------------------------------------------------------ parser


def _add_seed(p) -> None:
    p.add_argument("--seed", type=int, default=0, help="seed for every random choice")


def _add_root(p) -> None:
    p.add_argument(
        "--root",
        default="0",
        help="basis root: vertex index, 'random' (seeded) or 'global' "
        "(exhaustive best root, small meshes only)",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyschema",
        description=__doc__,
        epilog=_EXIT_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=_VERSION_TEXT)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("basis", help="compute a greedy homotopy basis")
    p.add_argument("mesh")
    p.add_argument("--out", required=True, help="loop file to write")
    _add_root(p)
    _add_seed(p)
    p.set_defaults(func=_cmd_basis)

    p = sub.add_parser("detach", help="refine the mesh until loops are disjoint")
    p.add_argument("mesh")
    p.add_argument("loops")
    p.add_argument("--strategy", choices=STRATEGIES, default="hybrid")
    p.add_argument("--planarity-deg", type=float, default=_DEFAULTS.theta_deg,
                   help="hybrid flatness threshold in degrees")
    p.add_argument("--lambda", type=float, default=_DEFAULTS.lam,
                   help="initial vertex-split placement fraction")
    p.add_argument("--max-vertices", type=int, default=_DEFAULTS.max_vertices,
                   help="abort refinement beyond this vertex count")
    p.add_argument("--out-mesh", required=True)
    p.add_argument("--out-loops", required=True)
    p.add_argument("--report", help="also write the JSON report to this file")
    p.set_defaults(func=_cmd_detach)

    p = sub.add_parser("cut", help="cut the mesh open into a disk along disjoint loops")
    p.add_argument("mesh")
    p.add_argument("loops")
    p.add_argument("--out", help="disk OBJ to write (+ .json boundary sidecar)")
    p.set_defaults(func=_cmd_cut)

    p = sub.add_parser("layout", help="flatten the cut disk onto the regular 4g-gon")
    p.add_argument("mesh")
    p.add_argument("loops")
    p.add_argument("--out", required=True, help="layout OBJ to write (+ .json sidecar)")
    p.set_defaults(func=_cmd_layout)

    p = sub.add_parser("map", help="map sample points between two layouts of one surface")
    p.add_argument("layout_a")
    p.add_argument("layout_b")
    p.add_argument("--rotation", type=int, default=0, help="whole polygon sides to rotate by")
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--out", required=True, help="correspondence CSV to write")
    _add_seed(p)
    p.set_defaults(func=_cmd_map)

    p = sub.add_parser("hausdorff", help="sampled symmetric Hausdorff distance")
    p.add_argument("mesh_a")
    p.add_argument("mesh_b")
    p.add_argument("--density", type=float, default=10.0,
                   help="samples per average-triangle area")
    _add_seed(p)
    p.set_defaults(func=_cmd_hausdorff)

    p = sub.add_parser("gen-polycube", help="generate a polycube chain of given genus")
    p.add_argument("--genus", type=int, required=True)
    p.add_argument("--cells", type=int, default=2, help="tunnel width in voxels")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_polycube)

    p = sub.add_parser("bench", help="growth benchmark over a genus range")
    p.add_argument("--genus-min", type=int, default=1)
    p.add_argument("--genus-max", type=int, default=20)
    p.add_argument("--strategies", default="vertex,hybrid,edge",
                   help="comma-separated strategy list")
    p.add_argument("--cells", type=int, default=2)
    p.add_argument("--root", type=int, default=0)
    p.add_argument("--planarity-deg", type=float, default=_DEFAULTS.theta_deg)
    p.add_argument("--mem-cap-mb", type=float, default=None,
                   help="abort any run whose refined mesh would exceed this budget")
    p.add_argument("--density", type=float, default=10.0,
                   help="Hausdorff samples per average-triangle area (0 = vertices only)")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--timings", action="store_true",
                   help="fill runtime/memory columns (breaks byte-reproducibility)")
    p.add_argument("--csv", required=True, help="output CSV path")
    p.add_argument("--no-figure", action="store_true",
                   help="skip the growth figure next to the CSV")
    _add_seed(p)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("stats", help="full pipeline on one mesh, one CSV table row")
    p.add_argument("mesh")
    p.add_argument("--strategy", choices=STRATEGIES, default="hybrid")
    p.add_argument("--planarity-deg", type=float, default=_DEFAULTS.theta_deg)
    p.add_argument("--lambda", type=float, default=_DEFAULTS.lam)
    p.add_argument("--density", type=float, default=10.0)
    p.add_argument("--timings", action="store_true",
                   help="fill runtime/memory columns (breaks byte-reproducibility)")
    p.add_argument("--csv", required=True, help="output CSV path")
    p.add_argument("--no-figure", action="store_true",
                   help="skip the layout figure next to the CSV")
    _add_root(p)
    _add_seed(p)
    p.set_defaults(func=_cmd_stats)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CapExceededError as exc:
        return _fail(exc, 5)
    except MeshFormatError as exc:
        return _fail(exc, 3)
    except OSError as exc:
        return _fail(exc, 3)
    except PolyschemaError as exc:
        return _fail(exc, 4)
    except Exception as exc:  # pragma: no cover - last resort
        return _fail(exc, 1)


if __name__ == "__main__":
    sys.exit(main())
