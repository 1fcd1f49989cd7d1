import numpy as np
import pytest

from polyschema.mesh import TriMesh
from polyschema.synth import gen_polycube_chain, gen_torus_grid, warp


@pytest.fixture
def tetrahedron() -> TriMesh:
    return TriMesh(
        [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)],
        [(0, 2, 1), (0, 1, 3), (1, 2, 3), (0, 3, 2)],
    )


@pytest.fixture
def torus() -> TriMesh:
    return gen_torus_grid(8, 6)


@pytest.fixture
def pc2() -> TriMesh:
    return gen_polycube_chain(2)


@pytest.fixture
def double_torus() -> TriMesh:
    """Curved genus-2 surface: a smoothly warped two-hole polycube chain."""
    return warp(gen_polycube_chain(2), 0.2, 0.7)


def icosphere(subdivisions: int = 3) -> TriMesh:
    phi = (1 + 5**0.5) / 2
    verts = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    verts = [np.asarray(v, float) / np.linalg.norm(v) for v in verts]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    for _ in range(subdivisions):
        cache = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                w = verts[i] + verts[j]
                verts.append(w / np.linalg.norm(w))
                cache[key] = len(verts) - 1
            return cache[key]

        faces = [
            t
            for (a, b, c) in faces
            for t in (
                (a, midpoint(a, b), midpoint(c, a)),
                (b, midpoint(b, c), midpoint(a, b)),
                (c, midpoint(c, a), midpoint(b, c)),
                (midpoint(a, b), midpoint(b, c), midpoint(c, a)),
            )
        ]
    return TriMesh([tuple(v) for v in verts], faces)
