"""Manufactured solutions, error norms, rate fits and penalty-exponent sweeps."""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import asdict, dataclass, fields
from typing import Callable, Sequence

import numpy as np

from . import assembly, dg_oracle
from .assembly import PenaltyConfig, ThresholdError, adjugates, assemble
from .dgify import DgifyOptions, DgifyResult, dgify
from .mesh import Mesh, generate_crisscross_square, generate_cube_tets, generate_interval_beta_mesh, generate_interval_mesh, mesh_size
from .quadrature import barycentric, simplex_rule
from .solve import NotConvergedError, NotSPDError, SolveReport, solve

log = logging.getLogger(__name__)

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class ManufacturedCase:
    name: str
    dim: int
    u: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    f: Callable[[np.ndarray], np.ndarray]


def _parabola():
    return ManufacturedCase(
        "interval_parabola",
        1,
        lambda X: 2 * X[:, 0] * (1 - X[:, 0]),
        lambda X: (2 - 4 * X[:, 0])[:, None],
        lambda X: np.full(len(X), 4.0),
    )


def _square_trig():
    def u(X):
        return np.cos(TWO_PI * X[:, 0]) * np.sin(TWO_PI * X[:, 1])

    def grad(X):
        x, y = X[:, 0], X[:, 1]
        return TWO_PI * np.column_stack([-np.sin(TWO_PI * x) * np.sin(TWO_PI * y), np.cos(TWO_PI * x) * np.cos(TWO_PI * y)])

    return ManufacturedCase("square_trig", 2, u, grad, lambda X: 2 * TWO_PI**2 * u(X))


def _square_trig_x():
    # cos(2 pi x) sin(2 pi x) = sin(4 pi x) / 2, independent of y
    def u(X):
        return np.cos(TWO_PI * X[:, 0]) * np.sin(TWO_PI * X[:, 0])

    def grad(X):
        return np.column_stack([TWO_PI * np.cos(2 * TWO_PI * X[:, 0]), np.zeros(len(X))])

    return ManufacturedCase("square_trig_x", 2, u, grad, lambda X: 4 * TWO_PI**2 * u(X))


def _cube_trig():
    def u(X):
        return np.cos(TWO_PI * X[:, 0]) * np.sin(TWO_PI * X[:, 1]) * np.cos(TWO_PI * X[:, 2])

    def grad(X):
        cx, sx = np.cos(TWO_PI * X[:, 0]), np.sin(TWO_PI * X[:, 0])
        cy, sy = np.cos(TWO_PI * X[:, 1]), np.sin(TWO_PI * X[:, 1])
        cz, sz = np.cos(TWO_PI * X[:, 2]), np.sin(TWO_PI * X[:, 2])
        return TWO_PI * np.column_stack([-sx * sy * cz, cx * cy * cz, -cx * sy * sz])

    return ManufacturedCase("cube_trig", 3, u, grad, lambda X: 3 * TWO_PI**2 * u(X))


CASES = {
    "interval_parabola": _parabola,
    "square_trig": _square_trig,
    "square_trig_x": _square_trig_x,
    "cube_trig": _cube_trig,
}


def manufactured(case_id: str) -> ManufacturedCase:
    try:
        return CASES[case_id]()
    except KeyError:
        raise ValueError(f"unknown case {case_id!r}; known: {', '.join(CASES)}") from None


@dataclass(frozen=True, eq=False)
class Field:
    """Nodal values of a P1 function on ``mesh`` (one value per vertex)."""

    mesh: Mesh
    values: np.ndarray

    @classmethod
    def interpolate(cls, mesh: Mesh, func) -> "Field":
        return cls(mesh, np.asarray(func(mesh.vertices), dtype=float))

    def thick_gradients(self) -> np.ndarray:
        """Constant gradient on every Thick element, shape (n_thick, dim)."""
        E = self.mesh.elements[self.mesh.thick]
        adj, det = adjugates(self.mesh.vertices[E])
        G = np.einsum("id,edk->eik", assembly.reference_gradients(self.mesh.dim), adj)
        return np.einsum("ei,eik->ek", self.values[E], G) / det[:, None]


def _thick_quadrature(mesh: Mesh, degree: int):
    E = mesh.elements[mesh.thick]
    P = mesh.vertices[E]
    ref, w = simplex_rule(mesh.dim, degree)
    phi = barycentric(ref)
    X = np.einsum("qi,eid->eqd", phi, P)
    jw = np.abs(assembly.affine_determinants(P))[:, None] * w[None, :]
    return E, phi, X, jw


def error_L2(field: Field, case: ManufacturedCase, quadrature_degree: int = 5) -> float:
    E, phi, X, jw = _thick_quadrature(field.mesh, quadrature_degree)
    uh = np.einsum("qi,ei->eq", phi, field.values[E])
    u = case.u(X.reshape(-1, field.mesh.dim)).reshape(uh.shape)
    return math.sqrt(float(np.sum(jw * (u - uh) ** 2)))


def error_H1_broken(field: Field, case: ManufacturedCase, quadrature_degree: int = 5) -> float:
    _, _, X, jw = _thick_quadrature(field.mesh, quadrature_degree)
    d = field.mesh.dim
    gu = case.grad(X.reshape(-1, d)).reshape(X.shape)
    gh = field.thick_gradients()
    return math.sqrt(float(np.sum(jw * np.sum((gu - gh[:, None, :]) ** 2, axis=2))))


def jump_norm(field, result: DgifyResult, weighted_by_D: bool = False, penalty: PenaltyConfig | None = None) -> float:
    """``sqrt(sum over interfaces of int [u]^2)``, exact for linear jumps.

    Boundary interfaces compare the inner trace with the pinned outer copy.
    With ``weighted_by_D`` each facet is scaled by its penalty, which ``penalty``
    must then supply.
    """
    values = getattr(field, "values", field)
    Q = dg_oracle.facet_jump_matrix(result.mesh.dim, "exact")
    if weighted_by_D:
        if penalty is None:
            raise ValueError("weighted jump norm needs the penalty configuration")
        D = dg_oracle.DgScheme.matching(result, penalty).penalties(len(result.interfaces))
    else:
        D = np.ones(len(result.interfaces))
    total = 0.0
    for itf, Dg in zip(result.interfaces, D):
        g = values[list(itf.left)] - values[list(itf.right)]
        total += Dg * itf.measure * float(g @ Q @ g)
    return math.sqrt(total)


@dataclass
class StudyRecord:
    case: str
    dim: int
    p: float
    n: int
    h: float
    jmin: float
    dofs: int
    err_l2: float
    err_h1: float
    jump: float
    iters: int
    seconds: float
    status: str = "ok"


CSV_COLUMNS = ["case", "dim", "p", "n", "h", "jmin", "dofs", "err_l2", "err_h1", "jump", "iters", "seconds"]


def fit_rate(records: Sequence, which: str = "err_l2", min_points: int = 3) -> float:
    """Least-squares slope of ``log(error)`` against ``log(h)``.

    ``records`` holds :class:`StudyRecord` rows or ``(h, error)`` pairs.  Rows with
    zero or non-finite error are dropped with a warning.
    """
    pairs = [(r.h, getattr(r, which)) if isinstance(r, StudyRecord) else tuple(r) for r in records]
    kept = [(h, e) for h, e in pairs if e > 0 and math.isfinite(e)]
    if len(kept) < len(pairs):
        log.warning("dropping %d rows with zero or non-finite %s", len(pairs) - len(kept), which)
    if len(kept) < min_points:
        raise ValueError(f"need at least {min_points} usable points to fit a rate, got {len(kept)}")
    h, e = np.log(np.array(kept)).T
    if np.ptp(h) == 0:
        raise ValueError("rate fit needs distinct mesh sizes")
    return float(np.polyfit(h, e, 1)[0])


GENERATORS = {1: generate_interval_mesh, 2: generate_crisscross_square, 3: generate_cube_tets}


@dataclass
class CaseRun:
    result: DgifyResult
    field: Field
    report: SolveReport
    jmin: float
    penalty: PenaltyConfig


def solve_case(
    case: ManufacturedCase,
    n: int,
    p: float | None = None,
    j_min: float | None = None,
    options: DgifyOptions | None = None,
    solver: str = "auto",
    tol: float = 1e-12,
    strict: bool = False,
    local: bool = False,
) -> CaseRun:
    """Generate, dgify, assemble with the floor ``h^p`` (or ``j_min``) and solve."""
    source = GENERATORS[case.dim](n)
    result = dgify(source, options or DgifyOptions())
    penalty = PenaltyConfig(j_min=j_min, exponent=p, local=local, strict=strict)
    system = assemble(result, penalty, case.f, case.u)
    x, report = solve(system.A, system.b, solver=solver, tol=tol)
    return CaseRun(result, Field(result.mesh, x), report, penalty.global_jmin(result.mesh), penalty)


def run_record(case: ManufacturedCase, n: int, p: float, **kwargs) -> StudyRecord:
    start = time.perf_counter()
    h = mesh_size(GENERATORS[case.dim](n))
    try:
        run = solve_case(case, n, p, **kwargs)
    except (NotConvergedError, NotSPDError, ThresholdError, ValueError) as exc:
        log.error("case %s n=%d p=%g failed: %s", case.name, n, p, exc)
        nan = float("nan")
        return StudyRecord(case.name, case.dim, p, n, h, h**p, 0, nan, nan, nan, -1, time.perf_counter() - start, f"failed: {exc}")
    dofs = run.result.mesh.n_vertices - len(assembly.pinned_vertices(run.result))
    return StudyRecord(
        case.name,
        case.dim,
        p,
        n,
        h,
        run.jmin,
        dofs,
        error_L2(run.field, case),
        error_H1_broken(run.field, case),
        jump_norm(run.field, run.result),
        run.report.iterations,
        time.perf_counter() - start,
    )


def exponent_sweep(case, p_values, n_values, csv_path=None, svg_path=None, **kwargs) -> list[StudyRecord]:
    """All ``(p, n)`` combinations in that order; a failing row is recorded and the sweep continues."""
    case = manufactured(case) if isinstance(case, str) else case
    if not n_values:
        raise ValueError("empty list of mesh sizes")
    records = [run_record(case, n, p, **kwargs) for p in p_values for n in n_values]
    if csv_path is not None:
        write_csv(records, csv_path)
    if svg_path is not None:
        write_svg(records, svg_path)
    return records


def write_csv(records: Sequence[StudyRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in records:
            row = asdict(r)
            writer.writerow([row[c] if not isinstance(row[c], float) else format(row[c], ".10g") for c in CSV_COLUMNS])


def read_csv(path) -> list[StudyRecord]:
    types = {f.name: f.type for f in fields(StudyRecord)}
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            conv = {k: (int(v) if types[k] in ("int", int) else v if types[k] in ("str", str) else float(v)) for k, v in row.items()}
            out.append(StudyRecord(**conv))
    return out


def write_svg(records: Sequence[StudyRecord], path) -> None:
    """Log-log error curves per exponent with slope-1 and slope-2 guides."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    ps = sorted({r.p for r in records})
    for ax, which, label in ((axes[0], "err_l2", "L2 error"), (axes[1], "err_h1", "broken H1 error")):
        hs_all = []
        for p in ps:
            rows = sorted((r for r in records if r.p == p and math.isfinite(getattr(r, which))), key=lambda r: r.h)
            if rows:
                hs_all += [r.h for r in rows]
                ax.loglog([r.h for r in rows], [getattr(r, which) for r in rows], "o-", label=f"p = {p:g}")
        if hs_all:
            h = np.array([min(hs_all), max(hs_all)])
            ref = [getattr(r, which) for r in records if r.h == max(hs_all) and math.isfinite(getattr(r, which))]
            top = max(ref) if ref else 1.0
            for slope in (1, 2):
                ax.loglog(h, top * (h / h[1]) ** slope, "k--", lw=0.8, alpha=0.6)
                ax.annotate(f"O(h^{slope})", (h[0], top * (h[0] / h[1]) ** slope), fontsize=8)
        ax.set_xlabel("h")
        ax.set_title(label)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def interval_beta_gap(n: int, beta: float, penalty: float, f: float = 4.0) -> float:
    """Max nodal gap between FEM on an explicit interface-interval mesh and the flat-element limit.

    The interval mesh carries intervals of length ``beta`` with diffusion
    ``beta * penalty`` at every node (boundary nodes included); the limit is the
    dgified mesh with floor ``1 / penalty``.  Node ``y_k`` of the interval mesh is
    matched with the left copy of node k, ``x_k`` with the right copy.
    """
    beta_mesh = generate_interval_beta_mesh(n, beta, penalty)
    sys_b = assemble(beta_mesh, PenaltyConfig(j_min=min(beta, 1.0 / n) * 1e-6), f)
    u_beta, _ = solve(sys_b.A, sys_b.b, solver="cholesky")

    result = dgify(generate_interval_mesh(n), DgifyOptions("all", True))
    sys_0 = assemble(result, PenaltyConfig(j_min=1.0 / penalty), f)
    u_0, _ = solve(sys_0.A, sys_0.b, solver="cholesky")

    elems = result.mesh.elements
    outer = result.outer_boundary_vertices  # outer copies at x = 0 and x = 1, in that order
    left_copy = np.concatenate([[outer[0]], elems[:n, 1]])  # x_k^- for k = 0..n
    right_copy = np.concatenate([elems[:n, 0], [outer[1]]])  # x_k^+
    limit = np.column_stack([u_0[left_copy], u_0[right_copy]]).ravel()
    return float(np.max(np.abs(u_beta - limit)))
