"""Legacy ASCII VTK output for P1 fields."""

from __future__ import annotations

import numpy as np

from .mesh import Mesh

CELL_TYPES = {1: 3, 2: 5, 3: 10}  # VTK_LINE, VTK_TRIANGLE, VTK_TETRA


def format_vtk(mesh: Mesh, point_data: dict | None = None, include_dummies: bool = False, title: str = "tfemdg") -> str:
    """Unstructured grid with every mesh vertex as a point.

    Only Thick cells are written unless ``include_dummies`` is set; flat cells
    then appear with their (zero-measure) geometry and a ``class`` cell array.
    """
    cells = np.flatnonzero(np.ones(mesh.n_elements, bool) if include_dummies else mesh.thick)
    pts = np.zeros((mesh.n_vertices, 3))
    pts[:, : mesh.dim] = mesh.vertices
    out = ["# vtk DataFile Version 3.0", title.replace("\n", " ")[:255], "ASCII", "DATASET UNSTRUCTURED_GRID"]
    out.append(f"POINTS {mesh.n_vertices} double")
    out += [" ".join(format(c, ".17g") for c in p) for p in pts]
    k = mesh.dim + 1
    out.append(f"CELLS {len(cells)} {len(cells) * (k + 1)}")
    out += [f"{k} " + " ".join(str(int(v)) for v in mesh.elements[e]) for e in cells]
    out.append(f"CELL_TYPES {len(cells)}")
    out += [str(CELL_TYPES[mesh.dim])] * len(cells)
    if include_dummies:
        out.append(f"CELL_DATA {len(cells)}")
        out.append("SCALARS class int 1")
        out.append("LOOKUP_TABLE default")
        out += [str(int(mesh.tags[e])) for e in cells]
    if point_data:
        out.append(f"POINT_DATA {mesh.n_vertices}")
        for name, values in point_data.items():
            values = np.asarray(values, dtype=float)
            if values.shape != (mesh.n_vertices,):
                raise ValueError(f"point data {name!r} needs one value per vertex")
            out.append(f"SCALARS {name} double 1")
            out.append("LOOKUP_TABLE default")
            out += [format(v, ".17g") for v in values]
    return "\n".join(out) + "\n"


def write_vtk(path, mesh: Mesh, point_data: dict | None = None, include_dummies: bool = False) -> None:
    with open(path, "w") as fh:
        fh.write(format_vtk(mesh, point_data, include_dummies))
