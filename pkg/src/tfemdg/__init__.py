"""Discontinuous Galerkin on top of a plain P1 finite element assembler.

A mesh edit (:func:`dgify`) inserts zero-measure simplices along element
interfaces; thresholding the Jacobian determinant of those simplices in the
stiffness denominator turns continuous FEM into a jump-penalty DG method.
"""

from .mesh import (
    BOUNDARY_DUMMY,
    INTERFACE_DUMMY,
    THICK,
    MalformedMeshError,
    Mesh,
    extract_interfaces,
    generate_crisscross_square,
    generate_cube_tets,
    generate_interval_mesh,
    mesh_size,
    read_mesh,
    write_mesh,
)
from .dgify import DgifyOptions, DgifyResult, Interface, circular_front_selector, dgify
from .assembly import (
    LinearSystem,
    PenaltyConfig,
    ThresholdError,
    assemble,
    d_from_jmin,
    element_load,
    element_stiffness,
    jmin_from_exponent,
    reference_gradients,
)
from .dg_oracle import DgScheme, assemble_dg, jump_at_vertex
from .solve import NotConvergedError, NotSPDError, SolveReport, cg_solve, dense_cholesky
from .analysis import (
    Field,
    ManufacturedCase,
    StudyRecord,
    error_H1_broken,
    error_L2,
    exponent_sweep,
    fit_rate,
    jump_norm,
    manufactured,
)

__version__ = "0.1.0"
