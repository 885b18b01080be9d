import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tfemdg.assembly import PenaltyConfig, assemble, assemble_matrix
from tfemdg.dg_oracle import VERTEX_WEIGHTS, DgScheme, assemble_dg, assemble_dg_matrix, facet_jump_matrix, jump_at_vertex
from tfemdg.dgify import DgifyOptions, dgify
from tfemdg.mesh import Mesh, generate_crisscross_square, generate_cube_tets, generate_interval_mesh
from tfemdg.solve import solve

GENS = {1: generate_interval_mesh, 2: generate_crisscross_square, 3: generate_cube_tets}


def rel_diff(A, B):
    return abs(A - B).max() / abs(A).max()


def face_penalty_block(points):
    """Penalty block that the flat elements put on the copies of the shared face of two tets.

    ``points`` are the 5 vertices of a tet pair sharing face (0, 1, 2).
    Returns (block in the jump basis, face area, j_min).
    """
    P = np.asarray(points, dtype=float)
    src = Mesh(3, P, np.array([[0, 1, 2, 3], [0, 1, 2, 4]]))
    r = dgify(src, DgifyOptions("all", boundary_layer=False))
    j_min = 1e-6
    (itf,) = r.interfaces
    A = assemble_matrix(r, PenaltyConfig(j_min=j_min)).toarray()
    # remove the Thick part
    vol = assemble_matrix(Mesh(3, r.mesh.vertices, r.mesh.elements[:2]), PenaltyConfig(j_min=j_min)).toarray()
    pen = A - vol
    L, R = list(itf.left), list(itf.right)
    # the flat block must be a pure jump form: [[M, -M], [-M, M]]
    np.testing.assert_allclose(pen[np.ix_(L, R)], -pen[np.ix_(L, L)], atol=1e-9 * abs(pen).max())
    np.testing.assert_allclose(pen[np.ix_(R, R)], pen[np.ix_(L, L)], atol=1e-9 * abs(pen).max())
    return pen[np.ix_(L, L)], itf.measure, j_min


def test_probe_derives_3d_vertex_weights():
    """Read off the 3D face rule from a two-tet probe: diagonal, weights 1/3, constant 2."""
    M, area, j_min = face_penalty_block([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0.2, 0.3, 1], [0.3, 0.2, -1]])
    assert np.max(np.abs(M - np.diag(np.diag(M)))) <= 1e-9 * np.abs(M).max()
    weights = np.diag(M) / np.trace(M)
    np.testing.assert_allclose(weights, VERTEX_WEIGHTS[3], rtol=1e-12)
    constant = np.trace(M) * j_min / area**2
    assert constant == pytest.approx(2.0, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1, 1, allow_nan=False), min_size=9, max_size=9))
def test_probe_weights_independent_of_face_shape(xs):
    face = np.array(xs).reshape(3, 3)
    n = np.cross(face[1] - face[0], face[2] - face[0])
    area = np.linalg.norm(n) / 2
    if area < 1e-2:
        return
    c = face.mean(axis=0)
    M, a, j_min = face_penalty_block(np.vstack([face, c + n, c - n]))
    assert a == pytest.approx(area)
    np.testing.assert_allclose(np.diag(M) * j_min / a**2, [2 / 3] * 3, rtol=1e-8)


@pytest.mark.parametrize("dim,n", [(1, 10), (2, 1), (2, 2), (2, 4), (3, 1), (3, 2)])
@pytest.mark.parametrize("j_min", [1e-2, 1e-4, 1e-8])
def test_matrix_equivalence(dim, n, j_min):
    r = dgify(GENS[dim](n))
    pen = PenaltyConfig(j_min=j_min, strict=False)
    assert rel_diff(assemble_matrix(r, pen), assemble_dg_matrix(r, DgScheme.matching(r, pen))) <= 1e-12


def test_matrix_equivalence_local_penalty():
    r = dgify(generate_crisscross_square(3))
    pen = PenaltyConfig(exponent=4.0, local=True)
    assert rel_diff(assemble_matrix(r, pen), assemble_dg_matrix(r, DgScheme.matching(r, pen))) <= 1e-12


def test_1d_solution_equivalence():
    n = 10
    D = n**3
    r = dgify(generate_interval_mesh(n))
    fem = assemble(r, PenaltyConfig(j_min=1 / D), 4.0)
    dg = assemble_dg(r, DgScheme("vertex", D), 4.0)
    x1, _ = solve(fem.A, fem.b)
    x2, _ = solve(dg.A, dg.b)
    assert np.max(np.abs(x1 - x2)) <= 1e-10


def test_large_penalty_limit():
    src = generate_crisscross_square(8)
    r = dgify(src, DgifyOptions("all", boundary_layer=True))
    base = DgScheme.matching(r, PenaltyConfig(j_min=(np.sqrt(2) / 8) ** 4))
    strong = DgScheme("vertex", base.penalties(len(r.interfaces)) * 1e8)
    s = assemble_dg(r, strong, 1.0)
    x, _ = solve(s.A, s.b)
    jumps = [abs(jump_at_vertex(x, itf, k)) for itf in r.interfaces for k in range(2)]
    assert max(jumps) < 1e-6
    # continuous P1 on the source mesh with homogeneous strong data
    fem = assemble(src, PenaltyConfig(j_min=1e-12), 1.0)
    xc, _ = solve(fem.A, fem.b)
    assert np.max(np.abs(x[: src.n_vertices] - xc)) <= 1e-5


def test_jump_at_vertex():
    r = dgify(generate_crisscross_square(2), DgifyOptions("all", False))
    ones = np.ones(r.mesh.n_vertices)
    itf = r.interfaces[0]
    assert jump_at_vertex(ones, itf, 0) == 0.0
    indicator = np.zeros(r.mesh.n_vertices)
    indicator[r.mesh.elements[itf.left_element]] = 1.0
    assert jump_at_vertex(indicator, itf, 0) == 1.0 and jump_at_vertex(indicator, itf, 1) == 1.0
    linear = r.mesh.vertices @ np.array([0.3, -1.7]) + 2.0
    assert max(abs(jump_at_vertex(linear, i, k)) for i in r.interfaces for k in range(2)) <= 1e-14


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_schemes_agree_on_constant_jumps(dim):
    g = np.ones(dim)
    vals = [g @ facet_jump_matrix(dim, q) @ g for q in ("vertex", "midpoint", "exact")]
    np.testing.assert_allclose(vals, 1.0, rtol=1e-14)


def test_exact_rule_matches_quadrature():
    # int over the reference triangle of products of linears, divided by the area
    from tfemdg.quadrature import barycentric, simplex_rule

    ref, w = simplex_rule(2, 2)
    phi = barycentric(ref)
    M = np.einsum("q,qi,qj->ij", w, phi, phi) / 0.5
    np.testing.assert_allclose(M, facet_jump_matrix(3, "exact"), rtol=1e-13)


def test_scheme_validation():
    with pytest.raises(ValueError):
        DgScheme("simpson", 1.0)
    with pytest.raises(ValueError):
        DgScheme("vertex", 0.0)


@settings(max_examples=1000, deadline=None)
@given(
    st.floats(-10, 10, allow_nan=False),
    st.floats(-10, 10, allow_nan=False),
    st.floats(1e-3, 10, allow_nan=False),
)
def test_edge_polynomial_inequality(ga, gb, length):
    """Trapezoid value of g^2 dominates its integral for linear g, with equality for constants."""
    trapezoid = length * (ga**2 + gb**2) / 2
    exact = length * (ga**2 + ga * gb + gb**2) / 3
    assert trapezoid >= exact - 1e-12 * (1 + trapezoid)
    assert math.isclose(trapezoid - exact, length * (ga - gb) ** 2 / 6, rel_tol=1e-9, abs_tol=1e-9)
