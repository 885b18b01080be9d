"""SPD solvers: Jacobi-preconditioned conjugate gradients and a dense Cholesky fallback."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

CHOLESKY_MAX_N = 2000


@dataclass
class SolveReport:
    iterations: int
    residual: float  # ||b - A x|| / ||b||, recomputed from x
    method: str
    seconds: float


class NotConvergedError(RuntimeError):
    def __init__(self, message: str, report: SolveReport):
        super().__init__(message)
        self.report = report


class NotSPDError(np.linalg.LinAlgError):
    pass


def _relative_residual(A, x, b) -> float:
    nb = np.linalg.norm(b)
    r = np.linalg.norm(b - A @ x)
    return float(r / nb) if nb > 0 else float(r)


def cg_solve(A, b, tol: float = 1e-10, max_iter: int | None = None, preconditioner: str = "jacobi", x0=None):
    """Preconditioned CG; stops when the true relative residual is below ``tol``."""
    if not 0 < tol < 1:
        raise ValueError("tol must lie in (0, 1)")
    start = time.perf_counter()
    A = sp.csr_matrix(A)
    b = np.asarray(b, dtype=float)
    N = len(b)
    max_iter = 20 * N if max_iter is None else max_iter
    if preconditioner == "jacobi":
        diag = A.diagonal()
        if np.any(diag == 0):
            raise ZeroDivisionError("zero diagonal entry, Jacobi preconditioner undefined")
        inv_diag = 1.0 / diag
    elif preconditioner == "none":
        inv_diag = np.ones(N)
    else:
        raise ValueError(f"unknown preconditioner {preconditioner!r}")

    nb = np.linalg.norm(b)
    x = np.zeros(N) if x0 is None else np.array(x0, dtype=float)
    if nb == 0:
        return np.zeros(N), SolveReport(0, 0.0, f"cg-{preconditioner}", time.perf_counter() - start)
    r = b - A @ x
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    it = 0
    while it < max_iter:
        if rz == 0:  # exact solution reached
            break
        if np.linalg.norm(r) <= tol * nb:
            # the recurrence drifts; confirm against the true residual
            r = b - A @ x
            if np.linalg.norm(r) <= tol * nb:
                break
            z = inv_diag * r
            p = z.copy()
            rz = r @ z
        Ap = A @ p
        pAp = p @ Ap
        if not pAp > 0:
            raise NotSPDError(f"CG breakdown at iteration {it}: p'Ap = {pAp:.3e}")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        z = inv_diag * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
        it += 1
    report = SolveReport(it, _relative_residual(A, x, b), f"cg-{preconditioner}", time.perf_counter() - start)
    if not report.residual <= tol:
        raise NotConvergedError(f"CG reached {it} iterations with residual {report.residual:.3e}", report)
    return x, report


def dense_cholesky(A, b) -> np.ndarray:
    """Dense Cholesky solve; raises :class:`NotSPDError` on a non-positive pivot."""
    M = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
    if M.shape[0] > CHOLESKY_MAX_N:
        raise ValueError(f"dense Cholesky limited to N <= {CHOLESKY_MAX_N}")
    try:
        L = scipy.linalg.cholesky(M, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NotSPDError(str(exc)) from exc
    pivots = np.diag(L) ** 2
    if pivots.min() <= 1e3 * np.finfo(float).eps * np.abs(np.diag(M)).max():
        raise NotSPDError("matrix is numerically singular (non-positive pivot)")
    return scipy.linalg.cho_solve((L, True), np.asarray(b, dtype=float))


def solve(A, b, solver: str = "auto", tol: float = 1e-10, max_iter: int | None = None):
    """Dispatch: ``auto`` uses Cholesky up to N = 2000 and CG above."""
    N = A.shape[0]
    if solver == "auto":
        solver = "cholesky" if N <= CHOLESKY_MAX_N else "cg"
    if solver == "cholesky":
        start = time.perf_counter()
        x = dense_cholesky(A, b)
        return x, SolveReport(0, _relative_residual(A, x, b), "cholesky", time.perf_counter() - start)
    if solver == "cg":
        return cg_solve(A, b, tol=tol, max_iter=max_iter)
    raise ValueError(f"unknown solver {solver!r}")
