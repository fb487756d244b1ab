from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any
from typing import Dict
from typing import List
from typing import Optional

import numpy as np

from meshfree_poisson.assembly.assemble import assemble
from meshfree_poisson.assembly.export import export_system
from meshfree_poisson.assembly.export import load_system
from meshfree_poisson.assembly.structure import analyze_matrix
from meshfree_poisson.assembly.structure import discrete_max_principle_check
from meshfree_poisson.bench.problems import PROBLEMS
from meshfree_poisson.bench.problems import TestProblem
from meshfree_poisson.bench.studies import SolverSpec
from meshfree_poisson.bench.studies import build_system
from meshfree_poisson.bench.studies import convergence_study
from meshfree_poisson.bench.studies import scaling_study
from meshfree_poisson.bench.studies import solve_matrix
from meshfree_poisson.bench.studies import solver_matrix
from meshfree_poisson.bench.studies import sparsity_report
from meshfree_poisson.bench.verify import CRITERIA
from meshfree_poisson.bench.verify import run_verify
from meshfree_poisson.config import Settings
from meshfree_poisson.config import StencilConfig
from meshfree_poisson.geometry.cloud import export_cloud_csv
from meshfree_poisson.geometry.cloud import generate_cloud
from meshfree_poisson.geometry.cloud import load_cloud
from meshfree_poisson.geometry.cloud import save_cloud
from meshfree_poisson.geometry.domains import BoxDomain
from meshfree_poisson.geometry.domains import DiskDomain
from meshfree_poisson.geometry.domains import DomainSpec
from meshfree_poisson.models.kinds import PointKind
from meshfree_poisson.models.system import eliminate_dirichlet

logger = logging.getLogger("meshfree_poisson")

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_USAGE = 2

RESOLUTIONS = {
    "reduced": [200, 800, 3200],
    "full": [250, 1000, 4000, 16000],
}


def _emit(payload: Dict[str, Any], json_out: Optional[Path]) -> None:
    text = json.dumps(payload, indent=2, default=str)
    print(text)
    if json_out is not None:
        json_out.parent.mkdir(parents=True, exist_ok=True)
        json_out.write_text(text)


def _settings(args: argparse.Namespace) -> Settings:
    settings = Settings()
    if args.config is not None:
        settings = Settings.model_validate_json(Path(args.config).read_text())
    if args.seed is not None:
        settings = settings.model_copy(update={"seed": args.seed})

    return settings


def _domain(args: argparse.Namespace, seed: int) -> DomainSpec:
    if args.domain == "disk":
        return DiskDomain(
            interior_points=args.interior_points if args.spacing is None else None,
            spacing=args.spacing,
            boundary_points=args.boundary_points,
            jitter=args.jitter,
            boundary=args.disk_boundary,
            seed=seed,
        )

    return BoxDomain(
        lower=[0.0] * args.dim,
        upper=[1.0] * args.dim,
        interior_points=args.interior_points if args.spacing is None else None,
        spacing=args.spacing,
        jitter=args.jitter,
        boundary={face: "neumann" for face in args.neumann},
        seed=seed,
    )


def _stencil(args: argparse.Namespace, settings: Settings) -> StencilConfig:
    update = {
        "method": args.method,
        "alpha": args.alpha,
        "neighbors": args.neighbors,
        "radius": args.radius,
        "radius_factor": args.radius_factor,
    }
    merged = {**settings.stencil.model_dump(), **update}
    return StencilConfig.model_validate(merged)


def _problem(name: str, interior_points: int, seed: int) -> TestProblem:
    problem = PROBLEMS[name]()
    if name == "box3d":
        return problem

    return problem.with_interior_points(interior_points, seed)


def run_cloud(args: argparse.Namespace, settings: Settings) -> Dict[str, Any]:
    cloud = generate_cloud(_domain(args, settings.seed), settings.geometry)
    out = Path(args.out)
    if out.suffix == ".csv":
        export_cloud_csv(cloud, out)
    else:
        save_cloud(cloud, out)

    return {
        "n": cloud.n,
        "interior": int(cloud.indices_of(PointKind.INTERIOR).size),
        "dirichlet": int(cloud.indices_of(PointKind.DIRICHLET).size),
        "neumann": int(cloud.indices_of(PointKind.NEUMANN).size),
        "cloud_hash": cloud.content_hash(),
        "path": str(out),
    }


def run_assemble(args: argparse.Namespace, settings: Settings) -> Dict[str, Any]:
    stencil = _stencil(args, settings)
    if args.cloud is not None:
        system = assemble(load_cloud(args.cloud), stencil, geometry=settings.geometry)
    else:
        problem = _problem(args.problem, args.interior_points, settings.seed)
        system = build_system(problem, stencil, settings)

    paths = export_system(system, args.out)
    return {
        "n": system.n,
        "nnz": int(system.A.nnz),
        "method": args.method,
        "files": {key: str(path) for key, path in paths.items()},
    }


def run_check(args: argparse.Namespace, settings: Settings) -> Dict[str, Any]:
    A, _, metadata = load_system(args.system)
    dirichlet = metadata.get("dirichlet_rows")
    report = analyze_matrix(
        A,
        None if dirichlet is None else np.asarray(dirichlet, dtype=np.int64),
        run_oracles=args.oracle,
        cap=settings.oracle.cap,
    )
    payload = report.model_dump()
    if args.max_principle:
        payload["max_principle"] = discrete_max_principle_check(
            A,
            seed=settings.seed,
            cap=settings.oracle.cap,
        )

    return payload


def run_solve(args: argparse.Namespace, settings: Settings) -> Dict[str, Any]:
    A, rhs, metadata = load_system(args.system)
    reduced = eliminate_dirichlet(
        A,
        rhs,
        np.asarray(metadata.get("dirichlet_rows", []), dtype=np.int64),
    )
    spec = SolverSpec(
        solver=args.solver,
        variant=args.variant,
        coarsening=args.coarsening,
        fine=args.fine,
    )
    if args.max_iter is not None:
        limit = {"max_iter": args.max_iter}
        settings = settings.model_copy(
            update={
                "krylov": settings.krylov.model_copy(update=limit),
                "two_grid": settings.two_grid.model_copy(update=limit),
            },
        )

    u, report = solve_matrix(reduced.A, reduced.rhs, spec, settings, args.tol)
    if args.solution is not None:
        np.savetxt(args.solution, reduced.expand(u), fmt="%.17g")
    if args.history is not None:
        report.write_history_csv(args.history)

    payload = report.model_dump()
    payload["final_residual"] = report.final_residual
    return payload


def run_bench(args: argparse.Namespace, settings: Settings) -> Dict[str, Any]:
    resolutions = args.resolutions or RESOLUTIONS[args.scale]
    problem = _problem(args.problem, resolutions[0], settings.seed)
    stencil = _stencil(args, settings)

    if args.study == "convergence":
        report = convergence_study(problem, stencil, resolutions, settings=settings)
    elif args.study == "sparsity":
        cloud = problem.prepare(generate_cloud(problem.domain, settings.geometry))
        systems = {
            "l1": assemble(cloud, StencilConfig(method="l1"), domain=problem.domain),
            f"lsq{args.lsq_neighbors}": assemble(
                cloud,
                StencilConfig(method="lsq", neighbors=args.lsq_neighbors),
            ),
        }
        report = sparsity_report(systems, settings)
    elif args.study == "solvers":
        report = solver_matrix(problem, settings=settings)
    else:
        report = scaling_study(problem, resolutions, stencil, settings=settings)

    path = report.write(args.out)
    return {"report": str(path), "derived": report.derived}


def run_verify_command(args: argparse.Namespace, settings: Settings) -> Dict[str, Any]:
    report = run_verify(settings, args.scale, tuple(args.only or ()))
    if args.out is not None:
        report.write(args.out)

    return report.model_dump()


def _add_stencil_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--method", choices=("lsq", "l1"), default="l1")
    parser.add_argument("--alpha", type=float, default=None)
    rule = parser.add_mutually_exclusive_group()
    rule.add_argument("--neighbors", type=int, default=None)
    rule.add_argument("--radius", type=float, default=None)
    rule.add_argument("--radius-factor", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meshfree-poisson",
        description="Meshfree finite difference Poisson discretizations and solvers.",
    )
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--json-out", type=Path, default=None)
    parser.add_argument("--quiet", action="store_true")
    parser.add_argument("--config", type=Path, default=None, help="settings JSON")
    commands = parser.add_subparsers(dest="command", required=True)

    cloud = commands.add_parser("cloud", help="generate a point cloud")
    cloud.add_argument("--domain", choices=("disk", "box"), default="disk")
    cloud.add_argument("--interior-points", type=int, default=1000)
    cloud.add_argument("--spacing", type=float, default=None)
    cloud.add_argument("--boundary-points", type=int, default=256)
    cloud.add_argument("--jitter", type=float, default=0.0)
    cloud.add_argument(
        "--disk-boundary",
        choices=("dirichlet", "neumann"),
        default="dirichlet",
    )
    cloud.add_argument("--dim", type=int, choices=(1, 2, 3), default=2)
    cloud.add_argument("--neumann", nargs="*", default=[], help="Neumann box faces")
    cloud.add_argument("--out", required=True, help=".json or .csv")
    cloud.set_defaults(handler=run_cloud)

    assemble_cmd = commands.add_parser("assemble", help="assemble a linear system")
    source = assemble_cmd.add_mutually_exclusive_group()
    source.add_argument("--cloud", type=Path, default=None)
    source.add_argument("--problem", choices=sorted(PROBLEMS), default="disk")
    assemble_cmd.add_argument("--interior-points", type=int, default=1000)
    _add_stencil_arguments(assemble_cmd)
    assemble_cmd.add_argument("--out", required=True, help="output prefix")
    assemble_cmd.set_defaults(handler=run_assemble)

    check = commands.add_parser("check", help="structure report of a system")
    check.add_argument("system", help="prefix or .mtx file")
    check.add_argument("--oracle", action="store_true")
    check.add_argument("--max-principle", action="store_true")
    check.set_defaults(handler=run_check)

    solve = commands.add_parser("solve", help="solve an exported system")
    solve.add_argument("system", help="prefix or .mtx file")
    solve.add_argument(
        "--solver",
        choices=("bicgstab", "amg", "amli", "direct"),
        default="bicgstab",
    )
    solve.add_argument(
        "--variant",
        choices=("amli", "mamli", "rmamli", "smamli"),
        default="amli",
    )
    solve.add_argument("--coarsening", choices=("default", "rs"), default="default")
    solve.add_argument(
        "--fine",
        choices=("jacobi", "gs", "ilu0", "exact"),
        default="gs",
    )
    solve.add_argument("--tol", type=float, default=None)
    solve.add_argument("--max-iter", type=int, default=None)
    solve.add_argument("--solution", type=Path, default=None)
    solve.add_argument("--history", type=Path, default=None)
    solve.set_defaults(handler=run_solve)

    bench = commands.add_parser("bench", help="run a benchmark study")
    bench.add_argument(
        "study",
        choices=("convergence", "sparsity", "solvers", "scaling"),
    )
    bench.add_argument("--problem", choices=("disk", "quadratic"), default="disk")
    bench.add_argument("--scale", choices=("reduced", "full"), default="reduced")
    bench.add_argument("--resolutions", type=int, nargs="+", default=None)
    bench.add_argument("--lsq-neighbors", type=int, default=12)
    _add_stencil_arguments(bench)
    bench.add_argument("--out", type=Path, default=Path("reports"))
    bench.set_defaults(handler=run_bench)

    verify = commands.add_parser("verify", help="run the acceptance criteria")
    verify.add_argument("--scale", choices=("reduced", "full"), default="reduced")
    verify.add_argument("--only", nargs="+", choices=sorted(CRITERIA), default=None)
    verify.add_argument("--out", type=Path, default=None)
    verify.set_defaults(handler=run_verify_command)

    return parser


def _failed(command: str, payload: Dict[str, Any]) -> bool:
    if command == "solve":
        return not payload["converged"]
    if command == "verify":
        return payload["derived"]["passed"] != payload["derived"]["total"]

    return False


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        settings = _settings(args)
        payload = args.handler(args, settings)
    except ArithmeticError as e:
        logger.error("numerical failure: %s", e)
        _emit({"error": str(e), "kind": type(e).__name__}, args.json_out)
        return EXIT_NUMERICAL
    except (ValueError, OSError, NotImplementedError) as e:
        logger.error("%s", e)
        return EXIT_USAGE

    _emit(payload, args.json_out)
    return EXIT_NUMERICAL if _failed(args.command, payload) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
