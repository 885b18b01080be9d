import math

import numpy as np
import pytest

from tfemdg.mesh import (
    BOUNDARY_DUMMY,
    INTERFACE_DUMMY,
    THICK,
    MalformedMeshError,
    Mesh,
    extract_interfaces,
    format_mesh,
    generate_crisscross_square,
    generate_cube_tets,
    generate_interval_beta_mesh,
    generate_interval_mesh,
    mesh_size,
    parse_mesh,
    read_mesh,
    simplex_volumes,
    write_mesh,
)
from tfemdg.dgify import dgify


def test_interval_generator():
    m = generate_interval_mesh(1)
    assert m.n_vertices == 2 and m.n_elements == 1
    np.testing.assert_array_equal(m.vertices[:, 0], [0.0, 1.0])
    m = generate_interval_mesh(10)
    assert m.n_vertices == 11 and m.n_elements == 10
    np.testing.assert_allclose(simplex_volumes(m), 0.1, rtol=1e-14)
    assert generate_interval_mesh(4).vertices[2, 0] == 0.5


def test_crisscross_counts():
    m = generate_crisscross_square(1)
    assert (m.n_vertices, m.n_elements) == (4, 2)
    assert len(extract_interfaces(m).interior) == 1
    assert len(extract_interfaces(m).boundary) == 4
    m = generate_crisscross_square(2)
    assert (m.n_vertices, m.n_elements) == (9, 8)
    assert generate_crisscross_square(8).n_elements == 128


def test_cube_counts_and_volume():
    m = generate_cube_tets(1)
    assert m.n_elements == 6
    assert abs(simplex_volumes(m).sum() - 1) < 1e-12
    assert generate_cube_tets(2).n_elements == 48
    m4 = generate_cube_tets(4)
    assert m4.n_elements == 384
    assert abs(simplex_volumes(m4).sum() - 1) < 1e-12


def test_cube_interior_faces():
    # 6 tets x 4 faces = 24 = 2 * interior + 12 boundary triangles
    f = extract_interfaces(generate_cube_tets(1))
    assert len(f.boundary) == 12
    assert len(f.interior) == 6


@pytest.mark.parametrize("gen", [generate_interval_mesh, generate_crisscross_square, generate_cube_tets])
def test_zero_size_rejected(gen):
    with pytest.raises(ValueError):
        gen(0)


@pytest.mark.parametrize("gen,n", [(generate_interval_mesh, 7), (generate_crisscross_square, 5), (generate_cube_tets, 3)])
def test_volume_partition_and_conformity(gen, n):
    m = gen(n)
    assert abs(simplex_volumes(m).sum() - 1) < 1e-12
    assert np.all(np.abs(m.determinants) > 0)
    f = extract_interfaces(m)
    for _, left, right in f.interior:
        assert left < right


def test_interval_interior_facet():
    f = extract_interfaces(generate_interval_mesh(2))
    assert len(f.interior) == 1
    key, left, right = f.interior[0]
    assert (left, right) == (0, 1)


def test_three_owners_rejected():
    V = np.array([[0, 0], [1, 0], [0, 1], [0, -1], [1, 1.0]])
    E = np.array([[0, 1, 2], [0, 1, 3], [0, 1, 4]])
    with pytest.raises(MalformedMeshError):
        extract_interfaces(Mesh(2, V, E))


def test_mesh_size():
    assert abs(mesh_size(generate_interval_mesh(10)) - 0.1) < 1e-15
    assert abs(mesh_size(generate_crisscross_square(8)) - math.sqrt(2) / 8) < 1e-15
    src = generate_crisscross_square(4)
    assert mesh_size(dgify(src).mesh) == mesh_size(src)


def test_validation():
    with pytest.raises(MalformedMeshError):
        Mesh(2, np.zeros((3, 2)), np.array([[0, 1, 1]]))
    with pytest.raises(MalformedMeshError):
        Mesh(2, np.array([[0, 0], [1, 0], [np.nan, 1]]), np.array([[0, 1, 2]]))
    with pytest.raises(MalformedMeshError):
        Mesh(2, np.zeros((3, 2)), np.array([[0, 1, 5]]))


def test_determinism():
    assert format_mesh(generate_cube_tets(2)) == format_mesh(generate_cube_tets(2))


def test_round_trip(tmp_path):
    src = generate_crisscross_square(3)
    m = dgify(src).mesh
    path = tmp_path / "m.mesh"
    write_mesh(m, path)
    back = read_mesh(path)
    assert back.equals(m)
    np.testing.assert_array_equal(back.vertices, m.vertices)
    assert set(back.tags.tolist()) == {THICK, INTERFACE_DUMMY, BOUNDARY_DUMMY}


def test_round_trip_irrational_coordinates():
    V = np.array([[0.0, 0.0], [math.pi, 1 / 3], [math.e, math.sqrt(2)]])
    m = Mesh(2, V, np.array([[0, 1, 2]]), coefficient=np.array([0.1]))
    back = parse_mesh(format_mesh(m))
    np.testing.assert_array_equal(back.vertices, V)
    assert back.coefficient[0] == 0.1


def test_parse_comments_and_errors():
    text = "# a comment\n1 2 1\n0.0\n1.0  # right end\n0 1 T 2.5\n"
    m = parse_mesh(text)
    assert m.coefficient[0] == 2.5
    with pytest.raises(MalformedMeshError):
        parse_mesh("1 2 1\n0.0\n1.0\n0 1 X 1\n")
    with pytest.raises(MalformedMeshError):
        parse_mesh("1 3 1\n0.0\n1.0\n")


def test_beta_mesh_layout():
    m = generate_interval_beta_mesh(4, 1e-3, 100.0)
    assert m.n_elements == 4 + 5
    assert np.all(m.tags == THICK)
    assert m.vertices[0, 0] == 0.0 and m.vertices[-1, 0] == 1.0
    assert abs(simplex_volumes(m).sum() - 1) < 1e-12
