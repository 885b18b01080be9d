import numpy as np
import pytest
import scipy.sparse as sp

from tfemdg.assembly import PenaltyConfig, assemble
from tfemdg.dgify import dgify
from tfemdg.mesh import generate_crisscross_square
from tfemdg.solve import NotConvergedError, NotSPDError, cg_solve, dense_cholesky, solve


def test_identity_one_iteration():
    b = np.array([1.0, -2.0, 3.5])
    x, rep = cg_solve(sp.identity(3, format="csr"), b)
    np.testing.assert_array_equal(x, b)
    assert rep.iterations == 1


def test_two_by_two():
    A = sp.csr_matrix([[4.0, 1.0], [1.0, 3.0]])
    x, rep = cg_solve(A, np.array([1.0, 2.0]))
    np.testing.assert_allclose(x, [1 / 11, 7 / 11], rtol=1e-10)
    assert rep.residual <= 1e-10
    x, _ = cg_solve(A, np.array([1.0, 2.0]), preconditioner="none")
    np.testing.assert_allclose(x, [1 / 11, 7 / 11], rtol=1e-10)


def test_assembled_system_residual():
    s = assemble(dgify(generate_crisscross_square(8)), PenaltyConfig(exponent=4.0), 1.0)
    x, rep = cg_solve(s.A, s.b, tol=1e-10)
    assert rep.residual <= 1e-10
    assert np.linalg.norm(s.b - s.A @ x) / np.linalg.norm(s.b) == pytest.approx(rep.residual)
    y = dense_cholesky(s.A, s.b)
    assert np.max(np.abs(x - y)) <= 1e-8 * np.max(np.abs(y))


def test_cholesky_examples():
    np.testing.assert_allclose(dense_cholesky(2 * np.eye(5), np.ones(5)), 0.5)
    rng = np.random.default_rng(1)
    M = rng.normal(size=(50, 50))
    A = M.T @ M + np.eye(50)
    b = rng.normal(size=50)
    x1 = dense_cholesky(A, b)
    x2, _ = cg_solve(sp.csr_matrix(A), b, tol=1e-12)
    assert np.max(np.abs(x1 - x2)) <= 1e-8 * np.max(np.abs(x1))
    with pytest.raises(NotSPDError):
        dense_cholesky(np.array([[1.0, 1.0], [1.0, 1.0]]), np.ones(2))
    with pytest.raises(NotSPDError):
        dense_cholesky(np.diag([1.0, -1.0]), np.ones(2))


def test_errors():
    A = sp.csr_matrix([[0.0, 1.0], [1.0, 2.0]])
    with pytest.raises(ZeroDivisionError):
        cg_solve(A, np.ones(2))
    with pytest.raises(ValueError):
        cg_solve(sp.identity(2, format="csr"), np.ones(2), tol=1.5)
    s = assemble(dgify(generate_crisscross_square(4)), PenaltyConfig(exponent=4.0), 1.0)
    with pytest.raises(NotConvergedError) as info:
        cg_solve(s.A, s.b, max_iter=3)
    assert info.value.report.iterations == 3


def test_zero_rhs():
    x, rep = cg_solve(sp.identity(4, format="csr"), np.zeros(4))
    assert np.all(x == 0) and rep.iterations == 0


def test_auto_dispatch():
    A = sp.identity(10, format="csr")
    assert solve(A, np.ones(10))[1].method == "cholesky"
    assert solve(A, np.ones(10), solver="cg")[1].method == "cg-jacobi"
    with pytest.raises(ValueError):
        solve(A, np.ones(10), solver="lu")
