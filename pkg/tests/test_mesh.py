import math

import pytest

from polyschema.errors import MeshError
from polyschema.mesh import Fan, TriMesh, fan_between
from polyschema.synth import gen_polycube_chain, gen_torus_grid

from oracles import euler_characteristic, genus_of_closed, signed_volume, undirected_edges


def test_counts_and_topology(tetrahedron, torus, pc2):
    assert (tetrahedron.n_vertices, tetrahedron.n_triangles, tetrahedron.n_edges) == (4, 4, 6)
    assert tetrahedron.euler_characteristic() == 2
    assert tetrahedron.genus() == 0
    assert torus.genus() == 1 == genus_of_closed(torus)
    assert pc2.genus() == 2 == genus_of_closed(pc2)
    for mesh in (tetrahedron, torus, pc2):
        assert mesh.euler_characteristic() == euler_characteristic(mesh)
        mesh.validate()


def test_orientation_outward(tetrahedron, torus, pc2):
    for mesh in (tetrahedron, torus, pc2):
        assert signed_volume(mesh) > 0


def test_duplicate_directed_edge_rejected():
    mesh = TriMesh([(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)])
    mesh.add_triangle(0, 1, 2)
    with pytest.raises(MeshError):
        mesh.add_triangle(0, 1, 3)  # (0,1) already owned: inconsistent orientation


def test_validate_rejects_open_mesh():
    mesh = TriMesh([(0, 0, 0), (1, 0, 0), (0, 1, 0)], [(0, 1, 2)])
    with pytest.raises(MeshError):
        mesh.validate()
    mesh.validate(closed=False)


def test_validate_rejects_isolated_vertex(tetrahedron):
    tetrahedron.add_vertex((5.0, 5.0, 5.0))
    with pytest.raises(MeshError):
        tetrahedron.validate()


def test_validate_rejects_pinched_vertex():
    # two triangle pairs sharing only vertex 0: a non-manifold pinch
    mesh = TriMesh(
        [(0, 0, 0), (1, 0, 0), (0, 1, 0), (-1, 0, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)],
        [(0, 1, 2), (0, 2, 1), (0, 3, 4), (0, 4, 3)],
    )
    with pytest.raises(MeshError):
        mesh.validate(closed=False)


def test_validate_rejects_zero_length_edge():
    mesh = TriMesh(
        [(0, 0, 0), (0, 0, 0), (0, 1, 0), (0, 0, 1)],
        [(0, 2, 1), (0, 1, 3), (1, 2, 3), (0, 3, 2)],
    )
    with pytest.raises(MeshError):
        mesh.validate()


def test_validate_rejects_disconnected():
    tets = []
    for off in (0.0, 10.0):
        tets.append(
            [
                (off, 0.0, 0.0),
                (off + 1.0, 0.0, 0.0),
                (off, 1.0, 0.0),
                (off, 0.0, 1.0),
            ]
        )
    mesh = TriMesh(tets[0] + tets[1], [(0, 2, 1), (0, 1, 3), (1, 2, 3), (0, 3, 2)])
    for a, b, c in [(0, 2, 1), (0, 1, 3), (1, 2, 3), (0, 3, 2)]:
        mesh.add_triangle(a + 4, b + 4, c + 4)
    with pytest.raises(MeshError):
        mesh.validate()


def test_ring_order_and_valence(torus):
    ring = torus.ring(0)
    assert len(ring) == torus.valence(0) == 6
    # CCW successor relation is consistent with the stored triangles
    for i in range(len(ring)):
        a, b = ring[i], ring[(i + 1) % len(ring)]
        assert torus.tri_of(0, a) is not None
        assert torus.next_ccw(0, a) == b


def test_fan_between(torus):
    ring = torus.ring(0)
    fan = fan_between(torus, 0, ring[0], ring[3], "ccw")
    assert isinstance(fan, Fan)
    assert fan.verts == tuple(ring[:4])
    assert fan.n_triangles == 3
    assert fan.n_interior_edges == 2
    # cw sweep covers the same wedge and is normalized to CCW storage order
    back = fan_between(torus, 0, ring[3], ring[0], "cw")
    assert back.verts == tuple(ring[:4])


def test_split_edge_counts_and_genus(torus):
    g0 = torus.genus()
    v0, t0 = torus.n_vertices, torus.n_triangles
    a, b, _ = torus.T[0]
    m = torus.split_edge(a, b)
    assert (torus.n_vertices, torus.n_triangles) == (v0 + 1, t0 + 2)
    pa, pb, pm = torus.V[a], torus.V[b], torus.V[m]
    assert all(math.isclose(pm[i], (pa[i] + pb[i]) / 2) for i in range(3))
    torus.validate()
    assert torus.genus() == g0
    assert not torus.has_edge(a, b)


def test_split_triangle_counts(pc2):
    v0, t0 = pc2.n_vertices, pc2.n_triangles
    pc2.split_triangle(0)
    assert (pc2.n_vertices, pc2.n_triangles) == (v0 + 1, t0 + 2)
    pc2.validate()
    assert pc2.genus() == 2


def test_split_vertex_counts(torus):
    ring = torus.ring(0)
    v0, t0 = torus.n_vertices, torus.n_triangles
    # displace slightly off-surface to keep the slit non-degenerate
    p = torus.V[0]
    w = torus.split_vertex(0, ring[:4], (p[0] * 1.01, p[1] * 1.01, p[2] * 1.01))
    assert (torus.n_vertices, torus.n_triangles) == (v0 + 1, t0 + 2)
    assert w == v0
    torus.validate()
    assert torus.genus() == 1


def test_split_vertex_rejects_bad_fan(torus):
    ring = torus.ring(0)
    with pytest.raises(MeshError):
        torus.split_vertex(0, [ring[0]], (0.0, 0.0, 0.0))
    with pytest.raises(MeshError):
        torus.split_vertex(0, [ring[0], ring[2]], (0.0, 0.0, 0.0))  # not consecutive


def test_copy_is_independent(pc2):
    cp = pc2.copy()
    cp.split_triangle(0)
    assert pc2.n_vertices + 1 == cp.n_vertices
    assert pc2.n_triangles + 2 == cp.n_triangles


def test_edges_match_oracle(pc2):
    assert pc2.n_edges == len(undirected_edges(pc2))


def test_polycube_counts_frozen():
    # V(g) = 28g + 20 and T(g) = 60g + 36 for the default two-cell tunnels
    for g in (1, 2, 3, 5):
        mesh = gen_polycube_chain(g)
        assert mesh.n_vertices == 28 * g + 20
        assert mesh.n_triangles == 60 * g + 36
        assert mesh.genus() == g


def test_generators_reject_bad_params():
    with pytest.raises(MeshError):
        gen_polycube_chain(0)
    with pytest.raises(MeshError):
        gen_polycube_chain(2, 0)
    with pytest.raises(MeshError):
        gen_torus_grid(2, 8)
    with pytest.raises(MeshError):
        gen_torus_grid(8, 8, big_radius=1.0, small_radius=2.0)
