"""Homotopy bases, loop detachment, and canonical polygonal schemas for
closed orientable triangle meshes."""

from .basis import Loop, LoopSystem, greedy_basis, globally_shortest_basis, shortest_path_tree, validate_system
from .detach import (
    MergingSite,
    OpRecord,
    RefineConfig,
    RefinementReport,
    STRATEGIES,
    detach_all,
    fan_planarity,
    find_merging_sites,
)
from .errors import (
    CapExceededError,
    DetachError,
    LayoutError,
    LoopError,
    MeshError,
    MeshFormatError,
    PolyschemaError,
)
from .fileio import load_loops, load_mesh, save_loops, save_mesh
from .layout import (
    Arc,
    CutMesh,
    SchemaLayout,
    cut_along,
    gluing_scheme,
    is_canonical_word,
    layout_canonical,
    load_layout,
    map_point,
    matches_gluing_scheme,
    regular_polygon,
    save_layout,
)
from .mesh import Fan, TriMesh, fan_between
from .metrics import TABLE_COLUMNS, HausdorffResult, growth_stats, hausdorff, write_table
from .synth import (
    fit_growth_exponent,
    gen_polycube_chain,
    gen_torus_grid,
    growth_bench,
    render_growth_figure,
    vertex_cap_for_mem_mb,
    warp,
)

__version__ = "0.1.0"

__all__ = [
    "Arc",
    "CapExceededError",
    "CutMesh",
    "DetachError",
    "Fan",
    "HausdorffResult",
    "LayoutError",
    "Loop",
    "LoopError",
    "LoopSystem",
    "MergingSite",
    "MeshError",
    "MeshFormatError",
    "OpRecord",
    "PolyschemaError",
    "RefineConfig",
    "RefinementReport",
    "STRATEGIES",
    "SchemaLayout",
    "TABLE_COLUMNS",
    "TriMesh",
    "__version__",
    "cut_along",
    "detach_all",
    "fan_between",
    "fan_planarity",
    "find_merging_sites",
    "fit_growth_exponent",
    "gen_polycube_chain",
    "gen_torus_grid",
    "globally_shortest_basis",
    "gluing_scheme",
    "greedy_basis",
    "growth_bench",
    "growth_stats",
    "hausdorff",
    "is_canonical_word",
    "layout_canonical",
    "load_layout",
    "load_loops",
    "load_mesh",
    "map_point",
    "matches_gluing_scheme",
    "regular_polygon",
    "render_growth_figure",
    "save_layout",
    "save_loops",
    "save_mesh",
    "shortest_path_tree",
    "validate_system",
    "vertex_cap_for_mem_mb",
    "warp",
    "write_table",
]
