from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable
from typing import Optional
from typing import Sequence

import numpy as np
import sympy

from meshfree_poisson.geometry.domains import BoxDomain
from meshfree_poisson.geometry.domains import DiskDomain
from meshfree_poisson.geometry.domains import DomainSpec
from meshfree_poisson.models.cloud import PointCloud

# how far the hand-written source may be from -Laplace(u) at the sample points
SOURCE_TOLERANCE = 1e-8
SOURCE_SAMPLES = 100

PointFunction = Callable[[np.ndarray], np.ndarray]

SYMBOLS = sympy.symbols("x y z")


def _vectorize(expr: sympy.Expr, symbols: Sequence[sympy.Symbol]) -> PointFunction:
    compiled = sympy.lambdify(symbols, expr, "numpy")

    def evaluate(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        values = compiled(*points.T)
        return np.broadcast_to(np.asarray(values, dtype=float), points.shape[:1]).copy()

    return evaluate


def _sample(domain: DomainSpec, count: int, seed: int) -> np.ndarray:
    lo, hi = domain.bounds()
    rng = np.random.default_rng(seed)
    samples = np.empty((0, domain.dim))
    while samples.shape[0] < count:
        batch = lo + (hi - lo) * rng.random((4 * count, domain.dim))
        samples = np.vstack((samples, batch[domain.contains(batch)]))

    return samples[:count]


@dataclass(frozen=True, eq=False)
class TestProblem:
    """-Laplace(u) = f in the domain, u = g on Dirichlet and du/dn = h on Neumann
    points, with a closed-form exact solution u."""

    __test__ = False

    name: str
    domain: DomainSpec
    exact: PointFunction
    source: PointFunction
    gradient: Sequence[PointFunction]

    def dirichlet(self, points: np.ndarray) -> np.ndarray:
        return self.exact(points)

    def neumann(self, points: np.ndarray, normals: np.ndarray) -> np.ndarray:
        columns = [partial(points) for partial in self.gradient]
        return np.sum(np.column_stack(columns) * normals, axis=1)

    def prepare(self, cloud: PointCloud) -> PointCloud:
        """The cloud with this problem's boundary data."""
        return cloud.with_boundary_values(self.dirichlet, self.neumann)

    def with_domain(self, domain: DomainSpec) -> TestProblem:
        return TestProblem(self.name, domain, self.exact, self.source, self.gradient)

    def with_interior_points(
        self,
        count: int,
        seed: Optional[int] = None,
    ) -> TestProblem:
        update = {"interior_points": count, "spacing": None}
        if isinstance(self.domain, DiskDomain):
            update["boundary_points"] = disk_boundary_points(count, self.domain.radius)
        if seed is not None:
            update["seed"] = seed

        return self.with_domain(self.domain.model_copy(update=update))


def disk_boundary_points(interior_points: int, radius: float = 1.0) -> int:
    """Boundary count whose spacing matches the interior spacing."""
    spacing = math.sqrt(math.pi * radius**2 / interior_points)
    return max(16, round(2.0 * math.pi * radius / spacing))


def make_problem(
    name: str,
    domain: DomainSpec,
    solution: sympy.Expr,
    source: Optional[sympy.Expr] = None,
    seed: int = 0,
) -> TestProblem:
    """Compiles u and f = -Laplace(u). A given `source` is checked against the
    symbolic Laplacian at random points of the domain."""
    symbols = SYMBOLS[: domain.dim]
    laplacian = -sum(sympy.diff(solution, s, 2) for s in symbols)
    derived = _vectorize(laplacian, symbols)

    if source is None:
        f = derived
    else:
        f = _vectorize(source, symbols)
        points = _sample(domain, SOURCE_SAMPLES, seed)
        error = float(np.abs(f(points) - derived(points)).max())
        if error > SOURCE_TOLERANCE:
            raise ValueError(f"source of {name} differs from -Laplace(u) by {error:g}")

    return TestProblem(
        name=name,
        domain=domain,
        exact=_vectorize(solution, symbols),
        source=f,
        gradient=[_vectorize(sympy.diff(solution, s), symbols) for s in symbols],
    )


def disk_problem(interior_points: int = 1000, seed: int = 1) -> TestProblem:
    """Unit disk, Dirichlet everywhere, f = sin(4x + 0.1) + x cos(2y + 0.4)."""
    x, y = SYMBOLS[:2]
    domain = DiskDomain(
        interior_points=interior_points,
        boundary_points=disk_boundary_points(interior_points),
        seed=seed,
    )
    return make_problem(
        "disk",
        domain,
        sympy.sin(4 * x + sympy.Rational(1, 10)) / 16
        + x * sympy.cos(2 * y + sympy.Rational(2, 5)) / 4,
        sympy.sin(4 * x + sympy.Rational(1, 10))
        + x * sympy.cos(2 * y + sympy.Rational(2, 5)),
        seed,
    )


def quadratic_problem(domain: Optional[DomainSpec] = None) -> TestProblem:
    """u = x^2 + y^2, reproduced exactly by every consistent stencil."""
    if domain is None:
        domain = DiskDomain(
            interior_points=300,
            boundary_points=disk_boundary_points(300),
        )
    x, y = SYMBOLS[:2]
    return make_problem("quadratic", domain, x**2 + y**2, sympy.Integer(-4))


def box3d_problem(spacing: float = 0.1, seed: int = 1) -> TestProblem:
    """Unit cube with a Dirichlet outlet on x+ and Neumann conditions elsewhere."""
    x, y, z = SYMBOLS
    domain = BoxDomain(
        lower=[0.0, 0.0, 0.0],
        upper=[1.0, 1.0, 1.0],
        spacing=spacing,
        boundary={face: "neumann" for face in ("x-", "y-", "y+", "z-", "z+")},
        seed=seed,
    )
    solution = sympy.exp(x / 2) * sympy.cos(y) + z**2 / 4
    source = 3 * sympy.exp(x / 2) * sympy.cos(y) / 4 - sympy.Rational(1, 2)
    return make_problem("box3d", domain, solution, source, seed)


PROBLEMS = {
    "disk": disk_problem,
    "quadratic": quadratic_problem,
    "box3d": box3d_problem,
}
