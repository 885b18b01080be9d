"""Vertex duplication and insertion of zero-measure interface simplices.

Each selected facet between two Thick elements gets its vertices split into a
left copy and a right copy, and ``dim`` flat simplices spanning the two copies
are added.  On the edited mesh an ordinary P1 assembler with a Jacobian floor
produces the jump-penalty DG system; unselected facets keep shared vertices and
stay continuous.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .mesh import BOUNDARY_DUMMY, INTERFACE_DUMMY, THICK, MalformedMeshError, Mesh, extract_interfaces

Selector = Union[str, Iterable[int], Callable[[np.ndarray], bool]]


@dataclass(frozen=True)
class DgifyOptions:
    """``selector`` is ``"all"``, ``"none"``, a collection of interior facet ids
    (indices into ``extract_interfaces(mesh).interior``) or a predicate on the
    facet midpoint."""

    selector: Selector = "all"
    boundary_layer: bool = True


class Interface(NamedTuple):
    facet: tuple[int, ...]  # vertex ids in the source mesh, sorted
    left: tuple[int, ...]  # copies on the left (smaller element id) side
    right: tuple[int, ...]  # copies on the right side; outer pinned copies for boundary facets
    left_element: int
    right_element: int | None
    dummies: tuple[int, ...]
    measure: float
    kind: str = "interior"

    @property
    def is_boundary(self) -> bool:
        return self.kind == "boundary"


@dataclass(frozen=True, eq=False)
class DgifyResult:
    mesh: Mesh
    source: Mesh
    interfaces: list[Interface]
    vertex_origin: np.ndarray  # source vertex id of every new vertex
    vertex_owner: np.ndarray  # lowest Thick element using the vertex, -1 for outer copies
    outer_boundary_vertices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    selected: np.ndarray = None  # mask over extract_interfaces(source).interior

    @property
    def vertex_provenance(self) -> dict[int, tuple[int, int | None]]:
        return {
            i: (int(o), None if w < 0 else int(w))
            for i, (o, w) in enumerate(zip(self.vertex_origin, self.vertex_owner))
        }

    @property
    def n_thick(self) -> int:
        return self.mesh.n_thick


def facet_measures(points: np.ndarray) -> np.ndarray:
    """Measures of a stack of facets, shape (nf, d, dim); 1 for points."""
    points = np.asarray(points, dtype=float)
    m = points.shape[1] - 1
    if m == 0:
        return np.ones(len(points))
    E = points[:, 1:] - points[:, :1]
    if m == 1:
        return np.linalg.norm(E[:, 0], axis=1)
    return np.linalg.norm(np.cross(E[:, 0], E[:, 1]), axis=1) / 2


def facet_measure(points: np.ndarray) -> float:
    """Measure of one facet given its d vertex coordinates (1 for a point)."""
    return float(facet_measures(np.asarray(points, dtype=float)[None])[0])


def circular_front_selector(center, radius: float) -> Callable[[np.ndarray], bool]:
    """Predicate selecting facets whose midpoint lies strictly inside a disc/ball."""
    if radius < 0:
        raise ValueError("radius must be non-negative")
    c = np.asarray(center, dtype=float)

    def inside(midpoint: np.ndarray) -> bool:
        return bool(np.linalg.norm(np.asarray(midpoint) - c[: len(midpoint)]) < radius)

    inside.center, inside.radius = c, radius
    return inside


def _selection_mask(selector: Selector, mesh: Mesh, interior) -> np.ndarray:
    n = len(interior)
    if isinstance(selector, str):
        if selector == "all":
            return np.ones(n, dtype=bool)
        if selector == "none":
            return np.zeros(n, dtype=bool)
        raise ValueError(f"unknown selector {selector!r}")
    if callable(selector):
        return np.array([bool(selector(mesh.vertices[list(key)].mean(axis=0))) for key, _, _ in interior], dtype=bool)
    mask = np.zeros(n, dtype=bool)
    for i in selector:
        if not 0 <= int(i) < n:
            raise ValueError(f"selector references nonexistent interface {i} (mesh has {n})")
        mask[int(i)] = True
    return mask


# local vertex order of the flat simplices; each one has exactly one coincident
# pair (minus[k], plus[k]), listed as k
_SPLITS = {
    1: [((("m", 0), ("p", 0)), 0)],
    2: [((("p", 0), ("m", 1), ("m", 0)), 0), ((("p", 0), ("p", 1), ("m", 1)), 1)],
    3: [
        ((("m", 0), ("m", 1), ("m", 2), ("p", 0)), 0),
        ((("m", 1), ("m", 2), ("p", 0), ("p", 1)), 1),
        ((("m", 2), ("p", 0), ("p", 1), ("p", 2)), 2),
    ],
}


def _dummy_simplices(minus: np.ndarray, plus: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flat simplices joining two copies of the same facets, one row of ``minus``/``plus`` per facet.

    2D: (a+, b-, a-), (a+, b+, b-).  3D: (p-, q-, r-, p+), (q-, r-, p+, q+),
    (r-, p+, q+, r+).  Each simplex has one pair of coincident vertices, so its
    thresholded stiffness couples exactly one copy pair; pairs whose two copies
    are the same vertex (continuous there) are skipped.  Returns the simplices
    in facet order and the number kept per facet.
    """
    minus = np.asarray(minus, dtype=np.int64).reshape(-1, np.shape(minus)[-1])
    plus = np.asarray(plus, dtype=np.int64).reshape(minus.shape)
    d = minus.shape[1]
    src = {"m": minus, "p": plus}
    cand = np.stack([np.stack([src[side][:, j] for side, j in verts], axis=1) for verts, _ in _SPLITS[d]], axis=1)
    live = np.stack([minus[:, k] != plus[:, k] for _, k in _SPLITS[d]], axis=1)
    return cand[live].reshape(-1, d + 1), live.sum(axis=1)


def _local_positions(elems: np.ndarray, owners: np.ndarray, keys: np.ndarray) -> np.ndarray:
    """Position of each facet vertex inside its owner element, shape like ``keys``."""
    return np.argmax(elems[owners][:, None, :] == keys[:, :, None], axis=2)


def dgify(mesh: Mesh, options: DgifyOptions | None = None) -> DgifyResult:
    """Split vertices along selected facets and insert flat interface simplices.

    Vertex copies are made per group of Thick elements that stay connected
    around the vertex through unselected facets; with every facet selected this
    is one copy per element corner.  The group containing the lowest element id
    keeps the original vertex id, further copies are appended in element order.
    """
    options = options or DgifyOptions()
    if np.any(mesh.tags != THICK):
        raise MalformedMeshError("dgify expects a mesh of Thick elements only")
    d = mesh.dim
    facets = extract_interfaces(mesh)
    interior = facets.interior
    selected = _selection_mask(options.selector, mesh, interior)

    ne, nc = mesh.n_elements, d + 1
    elems = mesh.elements
    corner_vertex = elems.ravel()  # corner e * (d+1) + k holds vertex elems[e, k]

    # corners joined across unselected facets form one vertex copy
    int_keys = np.array([key for key, _, _ in interior], dtype=np.int64).reshape(-1, d)
    int_L = np.array([L for _, L, _ in interior], dtype=np.int64)
    int_R = np.array([R for _, _, R in interior], dtype=np.int64)
    pos_L, pos_R = _local_positions(elems, int_L, int_keys), _local_positions(elems, int_R, int_keys)
    keep = ~selected
    a = (int_L[keep, None] * nc + pos_L[keep]).ravel()
    b = (int_R[keep, None] * nc + pos_R[keep]).ravel()
    graph = sp.coo_matrix((np.ones(len(a)), (a, b)), shape=(ne * nc, ne * nc))
    _, label = connected_components(graph, directed=False)

    # number components by their first corner in element order
    first_corner = np.full(label.max() + 1 if len(label) else 0, ne * nc)
    np.minimum.at(first_corner, label, np.arange(ne * nc))
    comps = np.argsort(first_corner, kind="stable")
    comp_vertex = corner_vertex[first_corner[comps]]
    _, first_of_vertex = np.unique(comp_vertex, return_index=True)
    keeps_id = np.zeros(len(comps), dtype=bool)
    keeps_id[first_of_vertex] = True
    comp_id = np.empty(len(comps), dtype=np.int64)
    comp_id[keeps_id] = comp_vertex[keeps_id]
    n_new = int(np.count_nonzero(~keeps_id))
    comp_id[~keeps_id] = mesh.n_vertices + np.arange(n_new)
    id_of_label = np.empty_like(comp_id)
    id_of_label[comps] = comp_id
    new_elems = id_of_label[label].reshape(ne, nc)

    origin = np.concatenate([np.arange(mesh.n_vertices), comp_vertex[~keeps_id]])
    owner = np.full(mesh.n_vertices, -1, dtype=np.int64)
    owner[comp_vertex[keeps_id]] = first_corner[comps][keeps_id] // nc
    owner = np.concatenate([owner, first_corner[comps][~keeps_id] // nc])

    # interior interfaces
    sel = np.flatnonzero(selected)
    minus = new_elems[int_L[sel, None], pos_L[sel]]
    plus = new_elems[int_R[sel, None], pos_R[sel]]
    blocks = [(int_keys[sel], minus, plus, int_L[sel], int_R[sel], INTERFACE_DUMMY)]

    outer_ids = np.zeros(0, dtype=np.int64)
    if options.boundary_layer and facets.boundary:
        bnd_keys = np.array([key for key, _ in facets.boundary], dtype=np.int64).reshape(-1, d)
        bnd_owner = np.array([e for _, e in facets.boundary], dtype=np.int64)
        flat = bnd_keys.ravel()
        uniq, first = np.unique(flat, return_index=True)
        order = np.argsort(first, kind="stable")
        outer_of = np.empty(mesh.n_vertices, dtype=np.int64)
        outer_ids = len(origin) + np.arange(len(uniq))
        outer_of[uniq[order]] = outer_ids
        origin = np.concatenate([origin, uniq[order]])
        owner = np.concatenate([owner, np.full(len(uniq), -1, dtype=np.int64)])
        bminus = new_elems[bnd_owner[:, None], _local_positions(elems, bnd_owner, bnd_keys)]
        blocks.append((bnd_keys, bminus, outer_of[bnd_keys], bnd_owner, None, BOUNDARY_DUMMY))

    dummy_elems, dummy_tags, interfaces = [], [], []
    next_id = ne
    for keys, lm, rp, L, R, tag in blocks:
        simplices, counts = _dummy_simplices(lm, rp)
        dummy_elems.append(simplices)
        dummy_tags.append(np.full(len(simplices), tag, dtype=np.int8))
        starts = next_id + np.concatenate([[0], np.cumsum(counts)[:-1]]).astype(np.int64)
        next_id += len(simplices)
        measures = facet_measures(mesh.vertices[keys])
        kind = "interior" if tag == INTERFACE_DUMMY else "boundary"
        for i, (key, m_row, p_row) in enumerate(zip(keys.tolist(), lm.tolist(), rp.tolist())):
            interfaces.append(
                Interface(
                    facet=tuple(key),
                    left=tuple(m_row),
                    right=tuple(p_row),
                    left_element=int(L[i]),
                    right_element=None if R is None else int(R[i]),
                    dummies=tuple(range(int(starts[i]), int(starts[i]) + int(counts[i]))),
                    measure=float(measures[i]),
                    kind=kind,
                )
            )

    dummies = np.vstack(dummy_elems)
    new_mesh = Mesh(
        d,
        mesh.vertices[origin],
        np.vstack([new_elems, dummies]),
        np.concatenate([mesh.tags, *dummy_tags]),
        np.concatenate([mesh.coefficient, np.ones(len(dummies))]),
    )
    return DgifyResult(
        mesh=new_mesh,
        source=mesh,
        interfaces=interfaces,
        vertex_origin=origin.astype(np.int64),
        vertex_owner=owner,
        outer_boundary_vertices=outer_ids,
        selected=selected,
    )


def facet_jumps(result: DgifyResult, values: np.ndarray) -> list[tuple[tuple[int, ...], bool, np.ndarray]]:
    """Vertex jumps (left minus right) over every interior facet of the source mesh.

    Returns ``(facet, selected, jumps)`` triples; unselected facets share their
    vertices, so their jumps are exactly zero.
    """
    src = result.source
    elems = result.mesh.elements
    out = []
    for (key, L, R), sel in zip(extract_interfaces(src).interior, result.selected):
        lpos = [int(np.flatnonzero(src.elements[L] == v)[0]) for v in key]
        rpos = [int(np.flatnonzero(src.elements[R] == v)[0]) for v in key]
        jumps = values[elems[L, lpos]] - values[elems[R, rpos]]
        out.append((key, bool(sel), jumps))
    return out


def write_provenance(result: DgifyResult, path) -> None:
    """Plain-text provenance map: one ``vertex`` line per new vertex, one ``interface`` line per interface."""
    lines = ["# vertex <new id> <source vertex id> <owner Thick element | outer>"]
    for i, (o, w) in enumerate(zip(result.vertex_origin, result.vertex_owner)):
        lines.append(f"vertex {i} {o} {'outer' if w < 0 else w}")
    lines.append("# interface <kind> <left element> <right element|-> facet=<ids> left=<ids> right=<ids> dummies=<ids>")
    join = lambda xs: ",".join(str(x) for x in xs)  # noqa: E731
    for itf in result.interfaces:
        right_el = "-" if itf.right_element is None else itf.right_element
        lines.append(
            f"interface {itf.kind} {itf.left_element} {right_el} facet={join(itf.facet)} "
            f"left={join(itf.left)} right={join(itf.right)} dummies={join(itf.dummies)}"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
