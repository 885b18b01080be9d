"""Simplicial meshes in 1, 2 and 3 dimensions.

A :class:`Mesh` is an immutable bundle of numpy arrays.  Every element carries a
class tag: ``THICK`` cells are the real, full-measure simplices; the two dummy
classes are zero-measure simplices inserted by :func:`tfemdg.dgify.dgify`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np

THICK = 0
INTERFACE_DUMMY = 1
BOUNDARY_DUMMY = 2

TAG_CHARS = {THICK: "T", INTERFACE_DUMMY: "I", BOUNDARY_DUMMY: "B"}
CHAR_TAGS = {c: t for t, c in TAG_CHARS.items()}


class MalformedMeshError(ValueError):
    """Raised for meshes that violate conformity or basic shape rules."""


@dataclass(frozen=True, eq=False)
class Mesh:
    dim: int
    vertices: np.ndarray
    elements: np.ndarray
    tags: np.ndarray = None
    coefficient: np.ndarray = None

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise MalformedMeshError(f"dimension must be 1, 2 or 3, got {self.dim}")
        vertices = np.array(self.vertices, dtype=float).reshape(-1, self.dim)
        elements = np.array(self.elements, dtype=np.int64).reshape(-1, self.dim + 1)
        ne = len(elements)
        tags = np.full(ne, THICK, dtype=np.int8) if self.tags is None else np.array(self.tags, dtype=np.int8)
        coeff = np.ones(ne) if self.coefficient is None else np.array(self.coefficient, dtype=float)
        if tags.shape != (ne,) or coeff.shape != (ne,):
            raise MalformedMeshError("tags and coefficient need one entry per element")
        if not np.all(np.isfinite(vertices)):
            raise MalformedMeshError("vertex coordinates must be finite")
        if ne and (elements.min() < 0 or elements.max() >= len(vertices)):
            raise MalformedMeshError("element references a nonexistent vertex")
        srt = np.sort(elements, axis=1)
        if np.any(srt[:, 1:] == srt[:, :-1]):
            raise MalformedMeshError("element with repeated vertex id")
        if not set(np.unique(tags)) <= set(TAG_CHARS):
            raise MalformedMeshError("unknown element class tag")
        for name, arr in (("vertices", vertices), ("elements", elements), ("tags", tags), ("coefficient", coeff)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def thick(self) -> np.ndarray:
        """Boolean mask of full-measure elements."""
        return self.tags == THICK

    @property
    def n_thick(self) -> int:
        return int(np.count_nonzero(self.thick))

    @cached_property
    def determinants(self) -> np.ndarray:
        return affine_determinants(self.vertices[self.elements])

    @cached_property
    def boundary_facets(self) -> list[tuple[tuple[int, ...], int]]:
        """Facets of Thick elements on the domain boundary, as ``(vertex ids, owner)``.

        Facets are matched by their coordinates, not their vertex ids, so the
        result is the same before and after vertex duplication.
        """
        counts: dict = {}
        records = []
        for e in np.flatnonzero(self.thick):
            elem = self.elements[e]
            for local in range(self.dim + 1):
                ids = tuple(sorted(int(v) for i, v in enumerate(elem) if i != local))
                key = tuple(sorted(tuple(self.vertices[v]) for v in ids))
                counts[key] = counts.get(key, 0) + 1
                records.append((key, ids, int(e)))
        return [(ids, e) for key, ids, e in records if counts[key] == 1]

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        ids = {v for facet, _ in self.boundary_facets for v in facet}
        return np.array(sorted(ids), dtype=np.int64)

    def equals(self, other: "Mesh") -> bool:
        return (
            self.dim == other.dim
            and np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.elements, other.elements)
            and np.array_equal(self.tags, other.tags)
            and np.array_equal(self.coefficient, other.coefficient)
        )


def affine_determinants(points: np.ndarray) -> np.ndarray:
    """Determinants of the affine maps for a stack of simplices, shape (ne, d+1, d)."""
    B = points[:, 1:, :] - points[:, :1, :]  # rows are p_i - p_0
    d = points.shape[2]
    if d == 1:
        return B[:, 0, 0].copy()
    if d == 2:
        return B[:, 0, 0] * B[:, 1, 1] - B[:, 0, 1] * B[:, 1, 0]
    return np.einsum("ij,ij->i", B[:, 0], np.cross(B[:, 1], B[:, 2]))


def simplex_volumes(mesh: Mesh) -> np.ndarray:
    return np.abs(mesh.determinants) / math.factorial(mesh.dim)


def _positive(n) -> int:
    if int(n) != n or n < 1:
        raise ValueError(f"number of cells per direction must be a positive integer, got {n!r}")
    return int(n)


def generate_interval_mesh(n: int) -> Mesh:
    """Uniform mesh of [0, 1] with ``n`` elements."""
    n = _positive(n)
    x = np.linspace(0.0, 1.0, n + 1)
    elements = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    return Mesh(1, x[:, None], elements)


def generate_crisscross_square(n: int) -> Mesh:
    """Unit square, ``n`` x ``n`` cells, each cut by its lower-left to upper-right diagonal."""
    n = _positive(n)
    t = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(t, t, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    elements = []
    for j in range(n):
        for i in range(n):
            v00 = j * (n + 1) + i
            v10, v01, v11 = v00 + 1, v00 + n + 1, v00 + n + 2
            elements.append((v00, v10, v11))
            elements.append((v00, v11, v01))
    return Mesh(2, vertices, elements)


# Kuhn split of the unit cube: one tet per permutation of the axes, all sharing
# the main diagonal (0,0,0)-(1,1,1).
_KUHN_PERMS = ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0))


def generate_cube_tets(n: int) -> Mesh:
    """Unit cube, ``n``^3 cells, each split into the 6 Kuhn tetrahedra."""
    n = _positive(n)
    t = np.linspace(0.0, 1.0, n + 1)
    Z, Y, X = np.meshgrid(t, t, t, indexing="ij")
    vertices = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])

    def vid(i, j, k):
        return (k * (n + 1) + j) * (n + 1) + i

    elements = []
    for k in range(n):
        for j in range(n):
            for i in range(n):
                for perm in _KUHN_PERMS:
                    corner = [i, j, k]
                    tet = [vid(*corner)]
                    for axis in perm:
                        corner[axis] += 1
                        tet.append(vid(*corner))
                    elements.append(tet)
    return Mesh(3, vertices, elements)


def generate_interval_beta_mesh(n: int, beta: float, penalty: float) -> Mesh:
    """1D mesh with explicit interface intervals of length ``beta``.

    Vertex order is ``y_0, x_0, y_1, x_1, ..., y_n, x_n``: interval ``[y_k, x_k]``
    has length ``beta`` and diffusion ``beta * penalty``, the intervals
    ``[x_k, y_{k+1}]`` carry the original cells (shortened by ``beta``).  The two
    outer intervals sit inside [0, 1], so ``y_0 = 0`` and ``x_n = 1``.
    """
    n = _positive(n)
    h = 1.0 / n
    if not 0 < beta < h:
        raise ValueError("beta must lie in (0, h)")
    nodes = np.linspace(0.0, 1.0, n + 1)
    y = nodes - beta / 2
    x = nodes + beta / 2
    y[0], x[0] = 0.0, beta
    y[-1], x[-1] = 1.0 - beta, 1.0
    vertices = np.column_stack([y, x]).ravel()
    elements, coeff, tags = [], [], []
    for k in range(n + 1):
        elements.append((2 * k, 2 * k + 1))
        coeff.append(beta * penalty)
        tags.append(THICK)
        if k < n:
            elements.append((2 * k + 1, 2 * k + 2))
            coeff.append(1.0)
            tags.append(THICK)
    return Mesh(1, vertices[:, None], elements, tags, coeff)


@dataclass(frozen=True)
class Facets:
    interior: list[tuple[tuple[int, ...], int, int]] = field(default_factory=list)
    boundary: list[tuple[tuple[int, ...], int]] = field(default_factory=list)


def extract_interfaces(mesh: Mesh) -> Facets:
    """Interior and boundary facets of the Thick elements, keyed by vertex ids.

    Interior facets are ``(sorted vertex ids, left, right)`` with ``left < right``;
    facets are ordered by first appearance in element order.
    """
    d = mesh.dim
    thick = np.flatnonzero(mesh.thick)
    E = mesh.elements[thick]
    # facet `local` of an element omits its local vertex `local`
    omit = np.array([[i for i in range(d + 1) if i != k] for k in range(d + 1)])
    F = np.sort(E[:, omit], axis=2).reshape(-1, d)  # row = element * (d+1) + local
    owner = np.repeat(thick, d + 1)
    if len(F) == 0:
        return Facets()
    keys, first, inverse, counts = np.unique(F, axis=0, return_index=True, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    if np.any(counts > 2):
        k = int(np.flatnonzero(counts > 2)[0])
        raise MalformedMeshError(f"facet {tuple(keys[k].tolist())} is shared by {counts[k]} elements")
    # for shared facets: the two owners are the min and max over the occurrences
    lo = np.full(len(keys), np.iinfo(np.int64).max)
    hi = np.full(len(keys), -1)
    np.minimum.at(lo, inverse, owner)
    np.maximum.at(hi, inverse, owner)
    result = Facets()
    key_list = keys.tolist()
    for k in np.argsort(first, kind="stable").tolist():
        key = tuple(key_list[k])
        if counts[k] == 2:
            result.interior.append((key, int(lo[k]), int(hi[k])))
        else:
            result.boundary.append((key, int(lo[k])))
    return result


def mesh_size(mesh: Mesh) -> float:
    """Longest edge over the Thick elements."""
    pts = mesh.vertices[mesh.elements[mesh.thick]]
    longest = 0.0
    for i in range(mesh.dim + 1):
        for j in range(i + 1, mesh.dim + 1):
            longest = max(longest, float(np.max(np.linalg.norm(pts[:, i] - pts[:, j], axis=1))))
    return longest


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def format_mesh(mesh: Mesh) -> str:
    lines = [f"{mesh.dim} {mesh.n_vertices} {mesh.n_elements}"]
    lines += [" ".join(_fmt(c) for c in v) for v in mesh.vertices]
    for elem, tag, coeff in zip(mesh.elements, mesh.tags, mesh.coefficient):
        lines.append(" ".join(str(int(v)) for v in elem) + f" {TAG_CHARS[int(tag)]} {_fmt(coeff)}")
    return "\n".join(lines) + "\n"


def write_mesh(mesh: Mesh, path) -> None:
    Path(path).write_text(format_mesh(mesh))


def parse_mesh(text: str | Iterable[str]) -> Mesh:
    if isinstance(text, str):
        text = text.splitlines()
    rows = []
    for line in text:
        line = line.split("#", 1)[0].split()
        if line:
            rows.append(line)
    if not rows:
        raise MalformedMeshError("empty mesh file")
    try:
        dim, nv, ne = (int(t) for t in rows[0])
        if len(rows) != 1 + nv + ne:
            raise MalformedMeshError(f"expected {nv} vertices and {ne} elements, found {len(rows) - 1} data lines")
        vertices = np.array([[float(t) for t in r] for r in rows[1 : 1 + nv]], dtype=float).reshape(nv, dim)
        elements, tags, coeff = [], [], []
        for r in rows[1 + nv :]:
            if len(r) != dim + 3:
                raise MalformedMeshError(f"bad element line: {' '.join(r)}")
            elements.append([int(t) for t in r[: dim + 1]])
            tags.append(CHAR_TAGS[r[dim + 1]])
            coeff.append(float(r[dim + 2]))
    except (ValueError, KeyError) as exc:
        if isinstance(exc, MalformedMeshError):
            raise
        raise MalformedMeshError(str(exc)) from exc
    return Mesh(dim, vertices, np.array(elements, dtype=np.int64).reshape(ne, dim + 1), tags, coeff)


def read_mesh(path) -> Mesh:
    return parse_mesh(Path(path).read_text())
