"""P1 stiffness and load assembly with a floor on the Jacobian determinant.

The element gradients are written as ``grad phi_i = adj(B)^T g_i / det(B)``, so the
stiffness is ``adj-gradient products / det``.  The adjugate stays finite for flat
simplices; replacing ``|det|`` by ``j_min`` in that one denominator turns a zero
measure simplex into a penalty on the difference of its coincident vertices.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp

from .dgify import DgifyResult
from .mesh import BOUNDARY_DUMMY, THICK, Mesh, affine_determinants, mesh_size
from .quadrature import barycentric, simplex_rule

log = logging.getLogger(__name__)

ScalarField = Union[float, Callable[[np.ndarray], np.ndarray]]


class ThresholdError(ValueError):
    """A Thick element is flatter than the Jacobian floor."""


def reference_gradients(dim: int) -> np.ndarray:
    """Gradients of the barycentric basis on the reference simplex, shape (dim+1, dim)."""
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
    return np.vstack([-np.ones(dim), np.eye(dim)])


def adjugates(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Adjugate and determinant of ``B = [p_1 - p_0, ..., p_d - p_0]`` for a stack of simplices."""
    cols = points[:, 1:, :] - points[:, :1, :]  # cols[:, i] is column i of B
    ne, d = cols.shape[0], cols.shape[2]
    det = affine_determinants(points)
    if d == 1:
        return np.ones((ne, 1, 1)), det
    if d == 2:
        adj = np.empty((ne, 2, 2))
        adj[:, 0, 0] = cols[:, 1, 1]
        adj[:, 0, 1] = -cols[:, 1, 0]
        adj[:, 1, 0] = -cols[:, 0, 1]
        adj[:, 1, 1] = cols[:, 0, 0]
        return adj, det
    c0, c1, c2 = cols[:, 0], cols[:, 1], cols[:, 2]
    return np.stack([np.cross(c1, c2), np.cross(c2, c0), np.cross(c0, c1)], axis=1), det


def _stiffness_batch(points: np.ndarray, denominators: np.ndarray, coeff: np.ndarray) -> np.ndarray:
    d = points.shape[2]
    adj, _ = adjugates(points)
    G = np.einsum("id,edk->eik", reference_gradients(d), adj)
    scale = coeff / (math.factorial(d) * denominators)
    return scale[:, None, None] * np.einsum("eik,ejk->eij", G, G)


def element_stiffness(points, j_min: float, coeff: float = 1.0) -> np.ndarray:
    """Thresholded P1 stiffness of one simplex: ``|det|`` is floored at ``j_min``."""
    if not j_min > 0:
        raise ValueError("j_min must be positive")
    P = np.asarray(points, dtype=float)
    P = P.reshape(1, len(P), -1)
    det = abs(affine_determinants(P)[0])
    return _stiffness_batch(P, np.array([max(det, j_min)]), np.array([float(coeff)]))[0]


def _evaluate(f: ScalarField, X: np.ndarray) -> np.ndarray:
    if callable(f):
        return np.broadcast_to(np.asarray(f(X), dtype=float), X.shape[:1])
    return np.full(X.shape[0], float(f))


def _load_batch(points: np.ndarray, f: ScalarField, degree: int) -> np.ndarray:
    ne, _, d = points.shape
    ref, w = simplex_rule(d, degree)
    phi = barycentric(ref)  # (nq, d+1)
    X = np.einsum("qi,eid->eqd", phi, points)
    fx = _evaluate(f, X.reshape(-1, d)).reshape(ne, len(w))
    det = np.abs(affine_determinants(points))
    return det[:, None] * np.einsum("eq,q,qi->ei", fx, w, phi)


def element_load(points, f: ScalarField, quadrature_degree: int = 4) -> np.ndarray:
    """``int f phi_i`` over one simplex with the true (unfloored) determinant."""
    P = np.asarray(points, dtype=float)
    return _load_batch(P.reshape(1, len(P), -1), f, quadrature_degree)[0]


def jmin_from_exponent(h: float, p: float) -> float:
    if not h > 0:
        raise ValueError("h must be positive")
    return h**p


def d_from_jmin(measure: float, j_min: float, dim: int) -> float:
    """Jump penalty matching a floor ``j_min`` on a facet of the given measure.

    1D: ``1/j_min``; 2D: ``|edge|/j_min``; 3D: ``2*area/j_min``.  The factor
    ``(dim-1)!`` comes from the reference volume of the flat simplices.
    """
    return math.factorial(dim - 1) * measure / j_min


@dataclass(frozen=True)
class PenaltyConfig:
    """Jacobian floor for flat elements.

    Give ``j_min`` directly or an ``exponent`` p for ``j_min = h^p``; with
    ``local=True`` each flat element uses its own diameter as ``h``.  ``strict``
    rejects Thick elements whose determinant lies below the floor.
    """

    j_min: float | None = None
    exponent: float | None = None
    local: bool = False
    strict: bool = True

    def __post_init__(self):
        if self.j_min is None and self.exponent is None:
            raise ValueError("PenaltyConfig needs j_min or exponent")
        if self.j_min is not None and not self.j_min > 0:
            raise ValueError("j_min must be positive")
        if self.local and self.exponent is None:
            raise ValueError("local penalty needs an exponent")

    def global_jmin(self, mesh: Mesh) -> float:
        if self.j_min is not None:
            return self.j_min
        return jmin_from_exponent(mesh_size(mesh), self.exponent)

    def element_jmin(self, mesh: Mesh) -> np.ndarray:
        if not self.local:
            return np.full(mesh.n_elements, self.global_jmin(mesh))
        P = mesh.vertices[mesh.elements]
        diam = np.zeros(mesh.n_elements)
        for i in range(mesh.dim + 1):
            for j in range(i + 1, mesh.dim + 1):
                diam = np.maximum(diam, np.linalg.norm(P[:, i] - P[:, j], axis=1))
        # a 1D flat element has no extent of its own
        diam = np.where(diam > 0, diam, mesh_size(mesh))
        return diam**self.exponent

    def interface_jmin(self, result: DgifyResult) -> np.ndarray:
        """Floor used on each interface of ``result``, in interface order."""
        if not self.local:
            return np.full(len(result.interfaces), self.global_jmin(result.mesh))
        V = result.mesh.vertices
        h = mesh_size(result.mesh)
        out = []
        for itf in result.interfaces:
            pts = V[list(itf.left)]
            diam = max(float(np.linalg.norm(a - b)) for a in pts for b in pts)
            out.append((diam if diam > 0 else h) ** self.exponent)
        return np.array(out)


@dataclass
class LinearSystem:
    A: sp.csr_matrix
    b: np.ndarray
    pinned: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    pinned_values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def N(self) -> int:
        return self.A.shape[0]

    @property
    def dirichlet(self) -> dict[int, float]:
        return dict(zip(self.pinned.tolist(), self.pinned_values.tolist()))


def _as_mesh(mesh) -> Mesh:
    return mesh.mesh if isinstance(mesh, DgifyResult) else mesh


def pinned_vertices(mesh) -> np.ndarray:
    """Vertices that carry Dirichlet data.

    With a boundary dummy layer these are the outer copies; without one, every
    vertex on a boundary facet of the Thick elements.
    """
    if isinstance(mesh, DgifyResult) and len(mesh.outer_boundary_vertices):
        return mesh.outer_boundary_vertices
    mesh = _as_mesh(mesh)
    bnd = mesh.tags == BOUNDARY_DUMMY
    if np.any(bnd):
        outer = np.setdiff1d(np.unique(mesh.elements[bnd]), np.unique(mesh.elements[mesh.thick]))
        return outer.astype(np.int64)
    return mesh.boundary_vertices


def element_denominators(mesh: Mesh, penalty: PenaltyConfig) -> np.ndarray:
    """``|det|`` on Thick elements, ``max(|det|, j_min)`` on flat ones."""
    det = np.abs(mesh.determinants)
    jmin = penalty.element_jmin(mesh)
    thick = mesh.tags == THICK
    low = np.flatnonzero(thick & (det < jmin))
    if len(low):
        e = int(low[0])
        msg = f"Thick element {e} has |det| = {det[e]:.3e} below j_min = {jmin[e]:.3e} ({len(low)} such elements)"
        if penalty.strict:
            raise ThresholdError(msg)
        log.warning("%s; Thick elements keep their true determinant", msg)
    if np.any(thick & (det == 0)):
        raise ThresholdError(f"Thick element {int(np.flatnonzero(thick & (det == 0))[0])} is degenerate")
    return np.where(thick, det, np.maximum(det, jmin))


def assemble_matrix(mesh, penalty: PenaltyConfig) -> sp.csr_matrix:
    """Global stiffness before any boundary treatment."""
    mesh = _as_mesh(mesh)
    E = mesh.elements
    K = _stiffness_batch(mesh.vertices[E], element_denominators(mesh, penalty), mesh.coefficient)
    n = mesh.dim + 1
    rows = np.repeat(E, n, axis=1).ravel()
    cols = np.tile(E, (1, n)).ravel()
    A = sp.csr_matrix((K.ravel(), (rows, cols)), shape=(mesh.n_vertices,) * 2)
    A.sum_duplicates()
    A.sort_indices()
    return A


def assemble_load(mesh, f: ScalarField, degree: int = 4) -> np.ndarray:
    mesh = _as_mesh(mesh)
    thick = np.flatnonzero(mesh.thick)
    E = mesh.elements[thick]
    be = _load_batch(mesh.vertices[E], f, degree)
    return np.bincount(E.ravel(), weights=be.ravel(), minlength=mesh.n_vertices)


def apply_dirichlet(A: sp.csr_matrix, b: np.ndarray, pinned, values) -> LinearSystem:
    """Symmetric elimination: pinned rows/columns zeroed, unit diagonal, RHS lifted."""
    pinned = np.asarray(pinned, dtype=np.int64)
    values = np.asarray(values, dtype=float)
    N = A.shape[0]
    g = np.zeros(N)
    g[pinned] = values
    b = b - A @ g
    keep = np.ones(N)
    keep[pinned] = 0.0
    Dk = sp.diags(keep)
    A = (Dk @ A @ Dk + sp.diags(1.0 - keep)).tocsr()
    A.eliminate_zeros()
    A.sort_indices()
    b[pinned] = values
    return LinearSystem(A, b, pinned, values)


def dirichlet_values(mesh, pinned: np.ndarray, dirichlet: ScalarField | None) -> np.ndarray:
    if dirichlet is None:
        return np.zeros(len(pinned))
    return _evaluate(dirichlet, _as_mesh(mesh).vertices[pinned])


def assemble(mesh, penalty: PenaltyConfig, f: ScalarField, dirichlet: ScalarField | None = None, pinned=None) -> LinearSystem:
    """Thresholded-FEM system on a (possibly dgified) mesh with Dirichlet data eliminated."""
    A = assemble_matrix(mesh, penalty)
    b = assemble_load(mesh, f)
    pinned = pinned_vertices(mesh) if pinned is None else np.asarray(pinned, dtype=np.int64)
    return apply_dirichlet(A, b, pinned, dirichlet_values(mesh, pinned, dirichlet))
