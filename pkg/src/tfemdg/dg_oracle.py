"""Direct assembly of the jump-penalty (Babuska-Zlamal) DG system.

This assembler never looks at the flat elements.  Volume terms come from the
Thick elements; each interface contributes ``D * int [u][v]`` evaluated with
a vertex (trapezoid), midpoint, or exact rule.  It works on the vertex numbering
of a :class:`~tfemdg.dgify.DgifyResult`, so its matrix can be compared entry by
entry with the thresholded-FEM matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .assembly import LinearSystem, PenaltyConfig, ScalarField, apply_dirichlet, assemble_load, d_from_jmin, dirichlet_values, pinned_vertices
from .dgify import DgifyResult, Interface

QUADRATURES = ("vertex", "midpoint", "exact")

# Facet vertex weights of the vertex rule, as fractions of the facet measure.
# 3D: read off from the flat-tet split used by dgify (see tests/test_dg_oracle.py,
# which rederives them from a two-tet probe); the matching penalty is 2*area/j_min.
VERTEX_WEIGHTS = {1: (1.0,), 2: (0.5, 0.5), 3: (1 / 3, 1 / 3, 1 / 3)}


@dataclass(frozen=True)
class DgScheme:
    """Penalty rule: ``D`` is either one number or one value per interface."""

    quadrature: str = "vertex"
    D: float | np.ndarray = 1.0

    def __post_init__(self):
        if self.quadrature not in QUADRATURES:
            raise ValueError(f"quadrature must be one of {QUADRATURES}")
        if np.any(np.asarray(self.D) <= 0):
            raise ValueError("penalty must be positive on every interface")

    @classmethod
    def matching(cls, result: DgifyResult, penalty: PenaltyConfig, quadrature: str = "vertex") -> "DgScheme":
        """Per-interface penalties equivalent to the Jacobian floor of ``penalty``."""
        jmin = penalty.interface_jmin(result)
        dim = result.mesh.dim
        D = np.array([d_from_jmin(itf.measure, j, dim) for itf, j in zip(result.interfaces, jmin)])
        return cls(quadrature, D)

    def penalties(self, n: int) -> np.ndarray:
        D = np.asarray(self.D, dtype=float)
        return np.full(n, float(D)) if D.ndim == 0 else D


def jump_at_vertex(values, interface: Interface, k: int) -> float:
    """``u(left copy k) - u(right copy k)``."""
    values = getattr(values, "values", values)
    return float(values[interface.left[k]] - values[interface.right[k]])


def facet_jump_matrix(dim: int, quadrature: str) -> np.ndarray:
    """Quadratic form of ``int_facet g h / |facet|`` in the vertex values of linear g, h."""
    m = dim  # vertices per facet
    if quadrature == "vertex":
        return np.diag(VERTEX_WEIGHTS[dim])
    if quadrature == "midpoint":
        return np.full((m, m), 1.0 / m**2)
    return (np.eye(m) + np.ones((m, m))) / (m * (m + 1))


def _volume_stiffness(result: DgifyResult):
    mesh = result.mesh
    d = mesh.dim
    E = mesh.elements[mesh.thick]
    P = mesh.vertices[E]
    M = np.concatenate([np.ones(P.shape[:2] + (1,)), P], axis=2)  # rows [1, x_i]
    Minv = np.linalg.inv(M)
    grads = np.transpose(Minv[:, 1:, :], (0, 2, 1))  # (ne, d+1, d)
    vol = np.abs(np.linalg.det(M)) / math.factorial(d)
    K = vol[:, None, None] * np.einsum("eik,ejk->eij", grads, grads)
    K *= mesh.coefficient[mesh.thick][:, None, None]
    n = d + 1
    return np.repeat(E, n, axis=1).ravel(), np.tile(E, (1, n)).ravel(), K.ravel()


def assemble_dg_matrix(result: DgifyResult, scheme: DgScheme) -> sp.csr_matrix:
    mesh = result.mesh
    rows, cols, vals = [], [], []
    r, c, v = _volume_stiffness(result)
    rows.append(r)
    cols.append(c)
    vals.append(v)
    Q = facet_jump_matrix(mesh.dim, scheme.quadrature)
    D = scheme.penalties(len(result.interfaces))
    for itf, Dg in zip(result.interfaces, D):
        if len(itf.left) != len(itf.right):
            raise ValueError(f"interface on facet {itf.facet} has unmatched vertex copies")
        L, R = np.array(itf.left), np.array(itf.right)
        block = Dg * itf.measure * Q
        for a_ids, sa in ((L, 1.0), (R, -1.0)):
            for b_ids, sb in ((L, 1.0), (R, -1.0)):
                rows.append(np.repeat(a_ids, len(b_ids)))
                cols.append(np.tile(b_ids, len(a_ids)))
                vals.append((sa * sb * block).ravel())
    N = mesh.n_vertices
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))
    A.sum_duplicates()
    A.sort_indices()
    return A


def assemble_dg(result: DgifyResult, scheme: DgScheme, f: ScalarField, dirichlet: ScalarField | None = None) -> LinearSystem:
    """DG system on the DOFs of ``result``; Dirichlet data enters through the same pinned vertices as FEM."""
    A = assemble_dg_matrix(result, scheme)
    b = assemble_load(result, f)
    pinned = pinned_vertices(result)
    return apply_dirichlet(A, b, pinned, dirichlet_values(result, pinned, dirichlet))
