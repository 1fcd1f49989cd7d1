"""Synthetic meshes and the growth benchmark harness."""

import math

import numpy as np
import pytest

from polyschema.detach import RefineConfig
from polyschema.errors import MeshError
from polyschema.mesh import TriMesh
from polyschema.metrics import TABLE_COLUMNS
from polyschema.synth import (
    fit_growth_exponent,
    gen_polycube_chain,
    gen_torus_grid,
    growth_bench,
    render_growth_figure,
    vertex_cap_for_mem_mb,
    warp,
)

from oracles import genus_of_closed, signed_volume


def test_polycube_counts_and_genus():
    for g in (1, 2, 4):
        mesh = gen_polycube_chain(g)
        assert mesh.n_vertices == 28 * g + 20
        assert mesh.n_triangles == 60 * g + 36
        assert genus_of_closed(mesh) == g
        mesh.validate(closed=True)


def test_polycube_normals_axis_aligned():
    mesh = gen_polycube_chain(2)
    V = mesh.vertices_array()
    T = mesh.triangles_array()
    n = np.cross(V[T[:, 1]] - V[T[:, 0]], V[T[:, 2]] - V[T[:, 0]])
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    # every face of an axis-aligned polycube is parallel to a coordinate plane
    aligned = np.isclose(np.abs(n), 1.0) | np.isclose(n, 0.0)
    assert aligned.all()
    assert signed_volume(mesh) > 0


def test_torus_grid_topology():
    mesh = gen_torus_grid(8, 6)
    assert mesh.n_vertices == 8 * 6
    assert mesh.n_triangles == 2 * 8 * 6
    assert genus_of_closed(mesh) == 1
    assert signed_volume(mesh) > 0
    mesh.validate(closed=True)


def test_warp_preserves_combinatorics():
    base = gen_polycube_chain(2)
    warped = warp(base, 0.2, 0.7)
    assert warped.triangles_array().tolist() == base.triangles_array().tolist()
    assert warped.n_vertices == base.n_vertices
    assert genus_of_closed(warped) == 2
    assert not np.allclose(warped.vertices_array(), base.vertices_array())


def test_generator_argument_errors():
    with pytest.raises(MeshError):
        gen_polycube_chain(0)
    with pytest.raises(MeshError):
        gen_polycube_chain(1, cells_per_edge=0)
    with pytest.raises(MeshError):
        gen_torus_grid(2, 6)


def test_vertex_cap_for_mem_mb():
    assert vertex_cap_for_mem_mb(600.0 / 2**20) == 8  # floor is 8
    assert vertex_cap_for_mem_mb(1.0) == 2**20 // 600
    with pytest.raises(MeshError):
        vertex_cap_for_mem_mb(0.0)


def test_growth_bench_rows():
    rows = growth_bench(range(1, 3), ["vertex", "hybrid"], hausdorff_density=0.0)
    assert len(rows) == 4
    assert [(r["model"], r["strategy"]) for r in rows] == [
        ("polycube-g1", "vertex"),
        ("polycube-g1", "hybrid"),
        ("polycube-g2", "vertex"),
        ("polycube-g2", "hybrid"),
    ]
    for row in rows:
        assert row["status"] == "ok"
        for col in TABLE_COLUMNS:
            assert col in row
        assert row["V'"] >= row["V"]
        assert row["runtime_s"] == 0 and row["peak_mem_mb"] == 0


def test_growth_bench_records_errors_without_aborting():
    # genus 1 from this root needs no refinement at all, so it stays under
    # the cap; genus 2 trips it, and the sweep still reports both rows
    cfg = RefineConfig(max_vertices=10)
    rows = growth_bench(range(1, 3), ["edge"], config=cfg, hausdorff_density=0.0)
    assert len(rows) == 2
    assert rows[0]["status"] == "ok"
    assert rows[1]["status"].startswith("error: CapExceededError")


def test_growth_bench_deterministic_and_parallel():
    kwargs = dict(strategies=["hybrid"], hausdorff_density=2.0, seed=7)
    a = growth_bench(range(1, 3), **kwargs)
    b = growth_bench(range(1, 3), **kwargs)
    c = growth_bench(range(1, 3), jobs=2, **kwargs)
    assert a == b == c


def test_growth_bench_rejects_unknown_strategy():
    with pytest.raises(MeshError):
        growth_bench(range(1, 2), ["bogus"])


def test_fit_growth_exponent_recovers_power_law():
    rows = [
        {"genus": g, "strategy": "edge", "growth%": 3.0 * g**2, "status": "ok"}
        for g in range(1, 9)
    ]
    assert math.isclose(fit_growth_exponent(rows, "edge"), 2.0, abs_tol=1e-12)
    with pytest.raises(MeshError):
        fit_growth_exponent(rows, "vertex")  # no usable points


def test_render_growth_figure(tmp_path):
    rows = growth_bench(range(1, 3), ["vertex"], hausdorff_density=0.0)
    out = tmp_path / "growth.png"
    render_growth_figure(rows, str(out))
    assert out.stat().st_size > 0
