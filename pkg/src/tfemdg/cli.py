"""Command line interface.

Exit codes: 0 success, 2 usage error, 3 solver failure, 4 equivalence failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .analysis import GENERATORS, Field, error_H1_broken, error_L2, exponent_sweep, manufactured
from .assembly import PenaltyConfig, ThresholdError, assemble, assemble_matrix
from .dg_oracle import DgScheme, assemble_dg, assemble_dg_matrix
from .dgify import DgifyOptions, DgifyResult, circular_front_selector, dgify, facet_jumps, write_provenance
from .mesh import INTERFACE_DUMMY, MalformedMeshError, Mesh, mesh_size, read_mesh, write_mesh
from .solve import NotConvergedError, NotSPDError, solve
from .vtk import write_vtk

log = logging.getLogger("tfemdg")

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_EQUIVALENCE = 0, 2, 3, 4
EQUIVALENCE_TOL = 1e-10
DEFAULT_CASE = {1: "interval_parabola", 2: "square_trig", 3: "cube_trig"}


class UsageError(ValueError):
    pass


def parse_selector(text: str):
    """``all`` | ``none`` | ``circle:cx,cy[,cz],r`` | ``ids:i,j,...``"""
    if text in ("all", "none"):
        return text
    kind, _, rest = text.partition(":")
    try:
        nums = [float(t) for t in rest.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad selector {text!r}") from None
    if kind == "circle" and len(nums) >= 2:
        return circular_front_selector(nums[:-1], nums[-1])
    if kind == "ids":
        return [int(t) for t in nums]
    raise UsageError(f"bad selector {text!r}")


def penalty_from_args(args, default_exponent: float | None = None) -> PenaltyConfig:
    j_min, exponent = getattr(args, "jmin", None), getattr(args, "jmin_exp", None)
    if j_min is not None and exponent is not None:
        raise UsageError("give --jmin or --jmin-exp, not both")
    if j_min is None and exponent is None:
        exponent = default_exponent
    if j_min is None and exponent is None:
        raise UsageError("a penalty is required: --jmin or --jmin-exp")
    return PenaltyConfig(j_min=j_min, exponent=exponent, local=getattr(args, "local_penalty", False), strict=not getattr(args, "lenient", False))


def max_dummy_jump(mesh: Mesh, values: np.ndarray) -> float:
    """Largest value difference between coincident vertices of interface dummies."""
    worst = 0.0
    for e in np.flatnonzero(mesh.tags == INTERFACE_DUMMY):
        ids = mesh.elements[e]
        P = mesh.vertices[ids]
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                if np.array_equal(P[i], P[j]):
                    worst = max(worst, abs(values[ids[i]] - values[ids[j]]))
    return worst


# ---------------------------------------------------------------- commands


def cmd_generate(args) -> int:
    mesh = GENERATORS[args.dim](args.n)
    write_mesh(mesh, args.out)
    print(f"wrote {args.out}: dim={mesh.dim} vertices={mesh.n_vertices} elements={mesh.n_elements}")
    return EXIT_OK


def cmd_dgify(args) -> int:
    mesh = read_mesh(args.mesh)
    result = dgify(mesh, DgifyOptions(parse_selector(args.selector), args.boundary_layer == "on"))
    write_mesh(result.mesh, args.out)
    prov = args.provenance or f"{args.out}.prov"
    write_provenance(result, prov)
    counts = np.bincount(result.mesh.tags, minlength=3)
    print(f"wrote {args.out} and {prov}: thick={counts[0]} interface={counts[1]} boundary={counts[2]} vertices={result.mesh.n_vertices}")
    return EXIT_OK


@dataclass
class SolveOutput:
    mesh: Mesh
    values: np.ndarray
    report: object
    pinned: np.ndarray


def run_solve(mesh_or_result, case, penalty: PenaltyConfig, solver="auto", tol=1e-10, max_iter=None) -> SolveOutput:
    system = assemble(mesh_or_result, penalty, case.f, case.u)
    x, report = solve(system.A, system.b, solver=solver, tol=tol, max_iter=max_iter)
    mesh = mesh_or_result.mesh if isinstance(mesh_or_result, DgifyResult) else mesh_or_result
    return SolveOutput(mesh, x, report, system.pinned)


def _mesh_from_args(args):
    if args.mesh:
        return read_mesh(args.mesh)
    if args.dim is None or args.n is None:
        raise UsageError("give a mesh file or --dim and --n")
    source = GENERATORS[args.dim](args.n)
    return dgify(source, DgifyOptions(parse_selector(args.selector), args.boundary_layer == "on"))


def cmd_solve(args) -> int:
    target = _mesh_from_args(args)
    mesh = target.mesh if isinstance(target, DgifyResult) else target
    case = manufactured(args.case or DEFAULT_CASE[mesh.dim])
    if case.dim != mesh.dim:
        raise UsageError(f"case {case.name} is {case.dim}D, mesh is {mesh.dim}D")
    penalty = penalty_from_args(args, default_exponent=mesh.dim + 2)
    try:
        out = run_solve(target, case, penalty, args.solver, args.tol, args.max_iter)
    except (NotConvergedError, NotSPDError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    field = Field(mesh, out.values)
    lines = [
        f"case            {case.name}",
        f"h               {mesh_size(mesh):.6g}",
        f"j_min           {penalty.global_jmin(mesh):.6g}",
        f"vertices        {mesh.n_vertices}",
        f"dofs            {mesh.n_vertices - len(out.pinned)}",
        f"solver          {out.report.method}",
        f"iterations      {out.report.iterations}",
        f"residual        {out.report.residual:.3e}",
        f"err_l2          {error_L2(field, case):.6e}",
        f"err_h1          {error_H1_broken(field, case):.6e}",
        f"max_jump        {max_dummy_jump(mesh, out.values):.6e}",
    ]
    print("\n".join(lines))
    if args.out:
        write_vtk(args.out, mesh, {"u": out.values}, include_dummies=args.include_dummies)
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_convergence(args) -> int:
    if not args.ns:
        raise UsageError("--ns needs at least one mesh size")
    case = manufactured(args.case or DEFAULT_CASE[args.dim or 2])
    out = Path(args.out or f"convergence_{case.name}")
    records = exponent_sweep(
        case, args.ps, args.ns, out.with_suffix(".csv"), out.with_suffix(".svg"), solver=args.solver, tol=args.tol, local=args.local_penalty
    )
    for r in records:
        print(f"p={r.p:<5g} n={r.n:<4d} h={r.h:.4g} dofs={r.dofs:<7d} L2={r.err_l2:.4e} H1={r.err_h1:.4e} jump={r.jump:.3e} {r.status}")
    print(f"wrote {out.with_suffix('.csv')} and {out.with_suffix('.svg')}")
    return EXIT_OK if all(r.status == "ok" for r in records) else EXIT_SOLVER


@dataclass
class Frame:
    radius: float
    result: DgifyResult
    values: np.ndarray
    max_jump_selected: float
    max_jump_unselected: float
    n_selected: int


def front_demo(n=16, radii=(0.0, 0.25, 0.5, 0.75, 1.0, 1.5), exponent=3.0, center=(0.0, 0.0), case="square_trig", out_dir=None, solver="auto", tol=1e-12):
    """One dgify + solve per radius; facets with midpoint inside the disc become DG.

    Strong Dirichlet data on the Thick boundary vertices, so radius 0 is plain
    continuous FEM.  ``exponent`` 3 gives a weak penalty ``D ~ h^-2``.
    """
    if any(b < a for a, b in zip(radii, radii[1:])):
        raise UsageError("radii must be nondecreasing")
    mc = manufactured(case)
    source = GENERATORS[mc.dim](n)
    penalty = PenaltyConfig(j_min=mesh_size(source) ** exponent)
    frames = []
    for k, r in enumerate(radii):
        result = dgify(source, DgifyOptions(circular_front_selector(center, r), boundary_layer=False))
        out = run_solve(result, mc, penalty, solver, tol)
        sel = [np.max(np.abs(j)) for _, s, j in facet_jumps(result, out.values) if s]
        unsel = [np.max(np.abs(j)) for _, s, j in facet_jumps(result, out.values) if not s]
        frames.append(Frame(r, result, out.values, max(sel, default=0.0), max(unsel, default=0.0), len(sel)))
        if out_dir is not None:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            write_vtk(Path(out_dir) / f"front_{k:03d}.vtk", result.mesh, {"u": out.values})
    return frames


def cmd_front_demo(args) -> int:
    center = tuple(args.center) if args.center else (0.0, 0.0)
    try:
        frames = front_demo(args.n or 16, args.radii, args.jmin_exp or 3.0, center, args.case or "square_trig", args.out, args.solver, args.tol)
    except (NotConvergedError, NotSPDError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    for k, fr in enumerate(frames):
        print(f"frame {k:3d} r={fr.radius:<6g} dg_facets={fr.n_selected:<5d} max_jump_dg={fr.max_jump_selected:.3e} max_jump_fem={fr.max_jump_unselected:.3e}")
    return EXIT_OK


@dataclass
class Comparison:
    matrix_rel_diff: float
    solution_diff: float


def compare(source: Mesh, penalty: PenaltyConfig, case=None) -> Comparison:
    """Thresholded FEM against the direct DG assembler on the fully dgified mesh."""
    mc = manufactured(case or DEFAULT_CASE[source.dim])
    result = dgify(source, DgifyOptions("all", True))
    A_fem = assemble_matrix(result, penalty)
    A_dg = assemble_dg_matrix(result, DgScheme.matching(result, penalty))
    rel = abs(A_fem - A_dg).max() / abs(A_fem).max()
    s_fem = assemble(result, penalty, mc.f, mc.u)
    s_dg = assemble_dg(result, DgScheme.matching(result, penalty), mc.f, mc.u)
    x_fem, _ = solve(s_fem.A, s_fem.b)
    x_dg, _ = solve(s_dg.A, s_dg.b)
    return Comparison(float(rel), float(np.max(np.abs(x_fem - x_dg))))


def cmd_compare(args) -> int:
    source = read_mesh(args.mesh) if args.mesh else GENERATORS[args.dim or 2](args.n or 4)
    # equivalence holds whatever the Thick determinants are, so never reject them here
    penalty = replace(penalty_from_args(args, default_exponent=source.dim + 2), strict=False)
    try:
        cmp = compare(source, penalty, args.case)
    except (NotConvergedError, NotSPDError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    print(f"max_rel_matrix_diff {cmp.matrix_rel_diff:.3e}")
    print(f"max_solution_diff   {cmp.solution_diff:.3e}")
    return EXIT_OK if max(cmp.matrix_rel_diff, cmp.solution_diff) <= EQUIVALENCE_TOL else EXIT_EQUIVALENCE


# ---------------------------------------------------------------- parser


def _floats(text):
    return [float(t) for t in text.replace(",", " ").split()]


def _ints(text):
    return [int(t) for t in text.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dim", type=int, choices=(1, 2, 3))
    common.add_argument("--n", type=int)
    common.add_argument("--case")
    common.add_argument("--jmin", type=float)
    common.add_argument("--jmin-exp", type=float, dest="jmin_exp")
    common.add_argument("--local-penalty", action="store_true", dest="local_penalty")
    common.add_argument("--lenient", action="store_true", help="allow Thick elements below j_min (kept unfloored)")
    common.add_argument("--selector", default="all")
    common.add_argument("--boundary-layer", choices=("on", "off"), default="on", dest="boundary_layer")
    common.add_argument("--solver", choices=("auto", "cg", "cholesky"), default="auto")
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--max-iter", type=int, dest="max_iter")
    common.add_argument("--out")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="tfemdg", description="DG through flat interface elements and a Jacobian floor.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="write a structured mesh")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("dgify", parents=[common], help="insert flat interface elements")
    p.add_argument("mesh")
    p.add_argument("--provenance")
    p.set_defaults(func=cmd_dgify)

    p = sub.add_parser("solve", parents=[common], help="assemble, solve, report and write VTK")
    p.add_argument("mesh", nargs="?")
    p.add_argument("--include-dummies", action="store_true", dest="include_dummies")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("convergence", parents=[common], help="penalty-exponent sweep with CSV and SVG output")
    p.add_argument("--ps", type=_floats, default=[4.0])
    p.add_argument("--ns", type=_ints, default=[8, 16, 32])
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("front-demo", parents=[common], help="moving circular FEM/DG front")
    p.add_argument("--radii", type=_floats, default=[0.0, 0.25, 0.5, 0.75, 1.0, 1.5])
    p.add_argument("--center", type=_floats)
    p.set_defaults(func=cmd_front_demo)

    p = sub.add_parser("compare", parents=[common], help="thresholded FEM against the direct DG assembler")
    p.add_argument("mesh", nargs="?")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.n is not None and args.n < 1:
        parser.error("--n must be a positive integer")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "generate" and (args.dim is None or args.n is None or not args.out):
        parser.error("generate needs --dim, --n and --out")
    if args.command == "dgify" and not args.out:
        parser.error("dgify needs --out")
    try:
        return args.func(args)
    except (UsageError, MalformedMeshError, ThresholdError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
