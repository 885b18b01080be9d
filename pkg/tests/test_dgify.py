import numpy as np
import pytest

from tfemdg.dgify import DgifyOptions, circular_front_selector, dgify, facet_jumps, write_provenance
from tfemdg.mesh import (
    BOUNDARY_DUMMY,
    INTERFACE_DUMMY,
    THICK,
    MalformedMeshError,
    extract_interfaces,
    format_mesh,
    generate_crisscross_square,
    generate_cube_tets,
    generate_interval_mesh,
)

GENS = {1: generate_interval_mesh, 2: generate_crisscross_square, 3: generate_cube_tets}


def counts(result):
    return np.bincount(result.mesh.tags, minlength=3).tolist()


def test_interval_example():
    r = dgify(generate_interval_mesh(10))
    assert counts(r) == [10, 9, 2]
    assert r.mesh.n_vertices - len(r.outer_boundary_vertices) == 20
    assert len(r.outer_boundary_vertices) == 2


def test_crisscross_n1_example():
    r = dgify(generate_crisscross_square(1))
    assert counts(r) == [2, 2, 8]
    assert r.mesh.n_vertices - len(r.outer_boundary_vertices) == 6


@pytest.mark.parametrize("dim,n", [(1, 5), (2, 3), (3, 2)])
def test_dof_identity_and_element_counts(dim, n):
    src = GENS[dim](n)
    f = extract_interfaces(src)
    r = dgify(src)
    assert r.mesh.n_vertices - len(r.outer_boundary_vertices) == (dim + 1) * src.n_elements
    assert r.mesh.n_elements == src.n_elements + dim * len(f.interior) + dim * len(f.boundary)


@pytest.mark.parametrize("dim,n", [(1, 4), (2, 2), (3, 1)])
def test_dummies_have_zero_measure_and_match_copies(dim, n):
    r = dgify(GENS[dim](n))
    dummy = r.mesh.tags != THICK
    assert np.all(r.mesh.determinants[dummy] == 0.0)
    V = r.mesh.vertices
    for itf in r.interfaces:
        assert len(itf.left) == len(itf.right) == dim
        np.testing.assert_array_equal(V[list(itf.left)], V[list(itf.right)])
        assert len(itf.dummies) == dim
        # each dummy only uses copies of this facet
        ids = set(r.mesh.elements[list(itf.dummies)].ravel().tolist())
        assert ids <= set(itf.left) | set(itf.right)


def test_2d_dummy_layout():
    r = dgify(generate_crisscross_square(1), DgifyOptions("all", boundary_layer=False))
    (itf,) = r.interfaces
    (am, bm), (ap, bp) = itf.left, itf.right
    np.testing.assert_array_equal(r.mesh.elements[list(itf.dummies)], [[ap, bm, am], [ap, bp, bm]])


def test_3d_dummy_layout():
    r = dgify(generate_cube_tets(1), DgifyOptions("all", boundary_layer=False))
    itf = r.interfaces[0]
    (p, q, s), (P, Q, S) = itf.left, itf.right
    np.testing.assert_array_equal(r.mesh.elements[list(itf.dummies)], [[p, q, s, P], [q, s, P, Q], [s, P, Q, S]])


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_noop(dim):
    src = GENS[dim](2)
    out = dgify(src, DgifyOptions("none", boundary_layer=False))
    assert format_mesh(out.mesh) == format_mesh(src)
    assert out.interfaces == []


def test_boundary_layer_only():
    src = generate_crisscross_square(2)
    r = dgify(src, DgifyOptions("none", boundary_layer=True))
    assert counts(r) == [8, 0, 16]
    # interior vertices are still shared
    assert r.mesh.n_vertices == src.n_vertices + len(r.outer_boundary_vertices)
    assert all(itf.is_boundary for itf in r.interfaces)


def test_circular_selector():
    src = generate_crisscross_square(8)
    total = len(extract_interfaces(src).interior)
    none = dgify(src, DgifyOptions(circular_front_selector((0.5, 0.5), 0.0), False))
    assert none.selected.sum() == 0
    some = dgify(src, DgifyOptions(circular_front_selector((0.5, 0.5), 0.5), False))
    assert 0 < some.selected.sum() < total
    every = dgify(src, DgifyOptions(circular_front_selector((0.5, 0.5), 3.0), False))
    assert every.selected.sum() == total
    with pytest.raises(ValueError):
        circular_front_selector((0, 0), -1.0)


def test_partial_selection_is_local():
    src = generate_crisscross_square(4)
    r1 = dgify(src, DgifyOptions(circular_front_selector((0, 0), 0.4), False))
    r2 = dgify(src, DgifyOptions(circular_front_selector((0, 0), 0.8), False))
    thick1 = r1.mesh.vertices[r1.mesh.elements[r1.mesh.thick]]
    thick2 = r2.mesh.vertices[r2.mesh.elements[r2.mesh.thick]]
    np.testing.assert_array_equal(thick1, thick2)
    assert r1.mesh.n_vertices < r2.mesh.n_vertices


def test_explicit_ids_and_bad_ids():
    src = generate_crisscross_square(2)
    r = dgify(src, DgifyOptions([0, 3], False))
    assert r.selected.sum() == 2
    assert counts(r)[INTERFACE_DUMMY] <= 4
    with pytest.raises(ValueError):
        dgify(src, DgifyOptions([999], False))


def test_rejects_dgified_input():
    r = dgify(generate_interval_mesh(3))
    with pytest.raises(MalformedMeshError):
        dgify(r.mesh)


def test_facet_jumps_zero_on_unselected():
    src = generate_crisscross_square(4)
    r = dgify(src, DgifyOptions(circular_front_selector((0, 0), 0.5), False))
    values = np.arange(r.mesh.n_vertices, dtype=float)
    for _, sel, jumps in facet_jumps(r, values):
        if not sel:
            assert np.all(jumps == 0)


def test_provenance(tmp_path):
    r = dgify(generate_crisscross_square(1))
    prov = r.vertex_provenance
    assert len(prov) == r.mesh.n_vertices
    for v in r.outer_boundary_vertices:
        assert prov[int(v)][1] is None
    for v, (orig, _) in prov.items():
        np.testing.assert_array_equal(r.mesh.vertices[v], r.source.vertices[orig])
    path = tmp_path / "p.txt"
    write_provenance(r, path)
    lines = path.read_text().splitlines()
    assert sum(l.startswith("vertex ") for l in lines) == r.mesh.n_vertices
    assert sum(l.startswith("interface ") for l in lines) == len(r.interfaces)
    assert BOUNDARY_DUMMY in r.mesh.tags
