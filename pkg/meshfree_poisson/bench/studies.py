from __future__ import annotations

import logging
import time
from typing import Any
from typing import Dict
from typing import List
from typing import Literal
from typing import Mapping
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel

from meshfree_poisson.assembly.assemble import assemble
from meshfree_poisson.bench.problems import TestProblem
from meshfree_poisson.config import Settings
from meshfree_poisson.config import StencilConfig
from meshfree_poisson.errors import MeshfreeError
from meshfree_poisson.geometry.cloud import generate_cloud
from meshfree_poisson.geometry.neighbors import mesh_size
from meshfree_poisson.krylov.bicgstab import bicgstab
from meshfree_poisson.krylov.ilu0 import ilu0
from meshfree_poisson.krylov.stationary import direct_solve
from meshfree_poisson.models.kinds import AmliVariant
from meshfree_poisson.models.kinds import ConstraintKind
from meshfree_poisson.models.kinds import FineKind
from meshfree_poisson.models.kinds import PointKind
from meshfree_poisson.models.reports import BenchReport
from meshfree_poisson.models.reports import SolveReport
from meshfree_poisson.models.system import LinearSystem
from meshfree_poisson.multilevel.amg import build_amg
from meshfree_poisson.multilevel.analysis import amli_iterate
from meshfree_poisson.multilevel.coarsening import default_coarsening
from meshfree_poisson.multilevel.coarsening import ruge_stueben_coarsening
from meshfree_poisson.multilevel.two_grid import build_two_grid
from meshfree_poisson.stencils.constraints import constraint_count
from meshfree_poisson.stencils.least_squares import lsq_flops

logger = logging.getLogger(__name__)

# solves inside studies run to this relative residual
STUDY_TOLERANCE = 1e-11


class SolverSpec(BaseModel):
    solver: Literal["direct", "bicgstab", "amg", "amli"] = "bicgstab"
    variant: Literal["amli", "mamli", "rmamli", "smamli"] = "amli"
    coarsening: Literal["default", "rs"] = "default"
    fine: Literal["jacobi", "gs", "ilu0", "exact"] = "gs"

    @property
    def label(self) -> str:
        if self.solver == "bicgstab":
            return "bicgstab-ilu0"
        if self.solver == "amg":
            return "bicgstab-amg"
        if self.solver == "amli":
            return f"{self.variant}-{self.coarsening}-{self.fine}"

        return self.solver


DEFAULT_METHODS: Dict[str, StencilConfig] = {
    "l1": StencilConfig(method="l1"),
    "lsq5": StencilConfig(method="lsq", neighbors=5),
    "lsq12": StencilConfig(method="lsq", neighbors=12),
    "lsq36": StencilConfig(method="lsq", neighbors=36),
}

DEFAULT_SOLVERS: List[SolverSpec] = [
    SolverSpec(solver="bicgstab"),
    SolverSpec(solver="amg"),
] + [
    SolverSpec(solver="amli", variant=variant, coarsening=coarsening)
    for coarsening in ("default", "rs")
    for variant in ("amli", "mamli", "rmamli", "smamli")
]


def solve_matrix(
    A: sp.csr_matrix,
    b: np.ndarray,
    spec: SolverSpec = SolverSpec(),
    settings: Settings = Settings(),
    tol: Optional[float] = None,
) -> Tuple[np.ndarray, SolveReport]:
    """Numerical failures come back in the report; construction failures of the
    preconditioner raise."""
    if spec.solver == "direct":
        return direct_solve(A, b)

    if spec.solver == "bicgstab":
        tol = settings.krylov.tol if tol is None else tol
        u, report = bicgstab(
            A,
            b,
            ilu0(A).aslinearoperator(),
            tol=tol,
            max_iter=settings.krylov.max_iter,
            seed=settings.krylov.seed,
        )
    elif spec.solver == "amg":
        tol = settings.krylov.tol if tol is None else tol
        hierarchy = build_amg(A, settings.amg)
        u, report = bicgstab(
            A,
            b,
            hierarchy.aspreconditioner(),
            tol=tol,
            max_iter=settings.krylov.max_iter,
            seed=settings.krylov.seed,
        )
    else:
        tol = settings.two_grid.tol if tol is None else tol
        if spec.coarsening == "rs":
            split = ruge_stueben_coarsening(A, settings.two_grid.theta)
        else:
            split = default_coarsening(A.shape[0])
        op = build_two_grid(
            A,
            split,
            FineKind.parse(spec.fine),
            AmliVariant.parse(spec.variant),
        )
        u, report = amli_iterate(op, A, b, tol=tol, max_iter=settings.two_grid.max_iter)

    return u, report.model_copy(update={"solver": spec.label})


def solve_system(
    system: LinearSystem,
    spec: SolverSpec = SolverSpec(),
    settings: Settings = Settings(),
    tol: Optional[float] = None,
) -> Tuple[np.ndarray, SolveReport]:
    """Solves with the Dirichlet unknowns eliminated and returns the full solution."""
    if spec.solver == "direct":
        return solve_matrix(system.A, system.rhs, spec, settings, tol)

    reduced = system.reduced()
    u, report = solve_matrix(reduced.A, reduced.rhs, spec, settings, tol)
    return reduced.expand(u), report


def nnz_per_interior_row(system: LinearSystem) -> float:
    interior = system.cloud.indices_of(PointKind.INTERIOR)
    if interior.size == 0:
        return 0.0

    return float(np.diff(system.A.indptr)[interior].mean())


def setup_metrics(system: LinearSystem) -> Dict[str, Any]:
    metrics: Dict[str, Any] = {
        "n": system.n,
        "nnz": int(system.A.nnz),
        "nnz_per_interior_row": nnz_per_interior_row(system),
    }

    pivots = system.pivot_counts
    if pivots is not None and np.any(pivots >= 0):
        metrics["mean_pivots"] = float(pivots[pivots >= 0].mean())
        metrics["max_pivots"] = int(pivots.max())
    else:
        k = constraint_count(system.cloud.dim, ConstraintKind.LAPLACE)
        interior = system.cloud.indices_of(PointKind.INTERIOR)
        neighbors = np.diff(system.A.indptr)[interior] - 1
        metrics["lsq_flops"] = int(sum(lsq_flops(k, int(m)) for m in neighbors))

    return metrics


def max_error(system: LinearSystem, u: np.ndarray, problem: TestProblem) -> float:
    """Discrete max-norm error at the points that carry unknowns."""
    free = np.flatnonzero(system.cloud.kinds != PointKind.DIRICHLET)
    exact = problem.exact(system.cloud.points[free])
    return float(np.abs(u[free] - exact).max(initial=0.0))


def build_system(
    problem: TestProblem,
    stencil: StencilConfig,
    settings: Settings,
) -> LinearSystem:
    cloud = problem.prepare(generate_cloud(problem.domain, settings.geometry))
    return assemble(
        cloud,
        stencil,
        source=problem.source,
        domain=problem.domain,
        geometry=settings.geometry,
    )


def _method_label(stencil: StencilConfig) -> str:
    if stencil.neighbors is not None:
        return f"{stencil.method}{stencil.neighbors}"

    return stencil.method


def fit_order(h: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(h)."""
    if len(h) < 3:
        raise ValueError("a convergence order needs at least three resolutions")

    slope, _ = np.polyfit(np.log(h), np.log(errors), 1)
    return float(slope)


def convergence_study(
    problem: TestProblem,
    stencil: StencilConfig,
    resolutions: Sequence[int],
    solver: SolverSpec = SolverSpec(solver="direct"),
    settings: Settings = Settings(),
) -> BenchReport:
    """Error against the exact solution for each interior point count."""
    if len(resolutions) < 3:
        raise ValueError("a convergence study needs at least three resolutions")

    records: List[Dict[str, Any]] = []
    for count in resolutions:
        started = time.perf_counter()
        case = problem.with_interior_points(count, settings.seed)
        record: Dict[str, Any] = {
            "interior_points": count,
            "method": _method_label(stencil),
            "solver": solver.label,
        }
        try:
            system = build_system(case, stencil, settings)
            record["h"] = mesh_size(
                system.cloud,
                case.domain,
                settings.geometry.mesh_size_samples,
            )
            record.update(setup_metrics(system))

            u, report = solve_system(system, solver, settings, STUDY_TOLERANCE)
            record["iterations"] = report.iterations
            record["relres"] = report.final_residual
            record["converged"] = report.converged
            record["error"] = max_error(system, u, case)
        except MeshfreeError as e:
            logger.warning("%s with %d interior points: %s", problem.name, count, e)
            record["failure"] = str(e)
        record["wall_time"] = time.perf_counter() - started
        records.append(record)

    usable = [r for r in records if r.get("converged") and r.get("error", 0.0) > 0.0]
    derived: Dict[str, Any] = {"order": None}
    if len(usable) >= 3:
        derived["order"] = fit_order(
            [r["h"] for r in usable],
            [r["error"] for r in usable],
        )

    return BenchReport(
        study=f"convergence_{problem.name}_{_method_label(stencil)}",
        seed=settings.seed,
        config_hash=settings.config_hash(),
        records=records,
        derived=derived,
    )


def sparsity_report(
    systems: Mapping[str, LinearSystem],
    settings: Settings = Settings(),
) -> BenchReport:
    """nnz totals, interior row means and their pairwise ratios."""
    if len(systems) < 2:
        raise ValueError("a sparsity comparison needs at least two systems")

    hashes = {system.cloud.content_hash() for system in systems.values()}
    if len(hashes) != 1:
        raise ValueError("all systems must be assembled on the same cloud")

    records = [
        {"method": label, **setup_metrics(system)} for label, system in systems.items()
    ]
    ratios = {
        f"{a['method']}/{b['method']}": a["nnz"] / b["nnz"]
        for a in records
        for b in records
        if a is not b
    }
    return BenchReport(
        study="sparsity",
        seed=settings.seed,
        config_hash=settings.config_hash(),
        records=records,
        derived={"nnz_ratios": ratios},
    )


def solver_matrix(
    problem: TestProblem,
    methods: Optional[Mapping[str, StencilConfig]] = None,
    solvers: Optional[Sequence[SolverSpec]] = None,
    settings: Settings = Settings(),
) -> BenchReport:
    """Every solver on the system of every stencil method. Failing runs are
    recorded and the grid continues."""
    methods = DEFAULT_METHODS if methods is None else methods
    solvers = DEFAULT_SOLVERS if solvers is None else solvers

    records: List[Dict[str, Any]] = []
    for label, stencil in methods.items():
        try:
            system = build_system(problem, stencil, settings)
        except MeshfreeError as e:
            logger.warning("assembling %s failed: %s", label, e)
            records.extend(
                {"method": label, "solver": spec.label, "failure": str(e)}
                for spec in solvers
            )
            continue

        metrics = setup_metrics(system)
        for spec in solvers:
            record: Dict[str, Any] = {"method": label, "solver": spec.label, **metrics}
            started = time.perf_counter()
            try:
                u, report = solve_system(system, spec, settings)
            except MeshfreeError as e:
                record["failure"] = str(e)
            else:
                record["iterations"] = report.iterations
                record["relres"] = report.final_residual
                record["converged"] = report.converged
                record["error"] = max_error(system, u, problem)
                if not report.converged:
                    record["failure"] = (
                        "diverged" if report.diverged else "no convergence"
                    )
            record["wall_time"] = time.perf_counter() - started
            records.append(record)

    failures = sum("failure" in record for record in records)
    return BenchReport(
        study=f"solvers_{problem.name}",
        seed=settings.seed,
        config_hash=settings.config_hash(),
        records=records,
        derived={"runs": len(records), "failures": failures},
    )


def scaling_study(
    problem: TestProblem,
    resolutions: Sequence[int],
    stencil: StencilConfig = StencilConfig(),
    solver: SolverSpec = SolverSpec(solver="amg"),
    settings: Settings = Settings(),
) -> BenchReport:
    """Iteration counts of one solver as the cloud is refined."""
    records: List[Dict[str, Any]] = []
    for count in resolutions:
        case = problem.with_interior_points(count, settings.seed)
        record: Dict[str, Any] = {"interior_points": count, "solver": solver.label}
        try:
            system = build_system(case, stencil, settings)
            _, report = solve_system(system, solver, settings)
        except MeshfreeError as e:
            record["failure"] = str(e)
        else:
            record["n"] = system.n
            record["iterations"] = report.iterations
            record["converged"] = report.converged
            record["wall_time"] = report.wall_time
        records.append(record)

    iterations = [r.get("iterations") for r in records]
    growth = None
    if all(isinstance(i, int) and i > 0 for i in iterations) and len(iterations) > 1:
        growth = [b / a for a, b in zip(iterations, iterations[1:])]

    return BenchReport(
        study=f"scaling_{problem.name}_{solver.label}",
        seed=settings.seed,
        config_hash=settings.config_hash(),
        records=records,
        derived={"iteration_growth": growth},
    )
