from __future__ import annotations

import logging
import math
from typing import Callable
from typing import Dict
from typing import List
from typing import Optional
from typing import Tuple

import numpy as np
import scipy.sparse as sp

from meshfree_poisson.config import GeometryConfig
from meshfree_poisson.config import StencilConfig
from meshfree_poisson.errors import EmptyNeighborhoodError
from meshfree_poisson.errors import InfeasibleStencilError
from meshfree_poisson.errors import RankDeficientError
from meshfree_poisson.errors import RankDeficientStencilError
from meshfree_poisson.geometry.domains import DomainSpec
from meshfree_poisson.geometry.feasibility import candidate_radius
from meshfree_poisson.geometry.neighbors import find_nearest
from meshfree_poisson.geometry.neighbors import find_neighbors
from meshfree_poisson.geometry.neighbors import mesh_size
from meshfree_poisson.linalg.sparse import compact
from meshfree_poisson.models.cloud import NeighborSet
from meshfree_poisson.models.cloud import PointCloud
from meshfree_poisson.models.kinds import ConstraintKind
from meshfree_poisson.models.kinds import PointKind
from meshfree_poisson.models.kinds import StencilMethod
from meshfree_poisson.models.stencil import Infeasible
from meshfree_poisson.models.stencil import Stencil
from meshfree_poisson.models.stencil import StencilGenerator
from meshfree_poisson.models.system import LinearSystem
from meshfree_poisson.stencils.constraints import build_constraints
from meshfree_poisson.stencils.least_squares import LeastSquaresStencilGenerator
from meshfree_poisson.stencils.linear_minimization import (
    LinearMinimizationStencilGenerator,
)

logger = logging.getLogger(__name__)

Source = Callable[[np.ndarray], np.ndarray]


def make_generator(config: StencilConfig) -> StencilGenerator:
    method = StencilMethod.parse(config.method)
    if method == StencilMethod.LSQ:
        return LeastSquaresStencilGenerator(config.effective_alpha)

    return LinearMinimizationStencilGenerator(config.effective_alpha)


def typical_spacing(cloud: PointCloud) -> float:
    """Median distance from a point to its nearest neighbor."""
    distances, _ = cloud.tree.query(cloud.points, k=2)
    return float(np.median(distances[:, 1]))


def default_radius(
    cloud: PointCloud,
    domain: Optional[DomainSpec],
    geometry: GeometryConfig,
) -> float:
    """Candidate radius derived from the mesh size. Without a domain the mesh size of
    a grid-like cloud with the typical spacing is assumed."""
    if domain is not None:
        h = mesh_size(cloud, domain, geometry.mesh_size_samples)
    else:
        h = math.sqrt(cloud.dim) * typical_spacing(cloud)

    if cloud.dim == 1:
        return h * (1.0 + geometry.radius_margin)

    return candidate_radius(h, cloud.dim, geometry.radius_margin)


class _Neighborhoods:
    def __init__(
        self,
        cloud: PointCloud,
        config: StencilConfig,
        domain: Optional[DomainSpec],
        geometry: GeometryConfig,
    ) -> None:
        self.cloud = cloud
        self.count = config.neighbors
        self.radius: Optional[float] = None

        if config.neighbors is None:
            if config.radius is not None:
                self.radius = config.radius
            elif config.radius_factor is not None:
                self.radius = config.radius_factor * typical_spacing(cloud)
            else:
                self.radius = default_radius(cloud, domain, geometry)

    @property
    def can_grow(self) -> bool:
        return self.radius is not None

    def around(self, center: int, growth: float = 1.0) -> NeighborSet:
        if self.count is not None:
            return find_nearest(self.cloud, center, self.count)

        return find_neighbors(self.cloud, center, self.radius * growth)


def _point_stencil(
    generator: StencilGenerator,
    neighborhoods: _Neighborhoods,
    cloud: PointCloud,
    center: int,
    config: StencilConfig,
) -> Tuple[Optional[Stencil], str]:
    if cloud.kinds[center] == PointKind.NEUMANN:
        kind = ConstraintKind.NEUMANN_DERIVATIVE
        # inward normal derivative, the row is negated afterwards
        normal = -cloud.normals[center]
    else:
        kind = ConstraintKind.LAPLACE
        normal = None

    growth = 1.0
    growths = 0
    while True:
        neigh = neighborhoods.around(center, growth)
        if neigh.m == 0:
            return None, "empty"

        system = build_constraints(neigh, kind, generator.alpha, normal)
        try:
            result = generator.calculate(system)
        except RankDeficientError:
            return None, "rank"

        if not isinstance(result, Infeasible):
            return result, ""

        if not neighborhoods.can_grow or growths >= config.max_radius_growths:
            return None, "infeasible"

        growths += 1
        growth *= config.radius_growth
        logger.debug("growing the radius of point %d by %.3g", center, growth)


def assemble(
    cloud: PointCloud,
    config: StencilConfig = StencilConfig(),
    source: Optional[Source] = None,
    domain: Optional[DomainSpec] = None,
    geometry: GeometryConfig = GeometryConfig(),
) -> LinearSystem:
    """Builds A u = f with A approximating -Laplace.

    Interior rows hold the negated Laplace stencil and f(x_i), Dirichlet rows are
    identity rows with the boundary value, Neumann rows the negated inward derivative
    stencil with the prescribed normal derivative.
    """
    generator = make_generator(config)
    neighborhoods = _Neighborhoods(cloud, config, domain, geometry)

    rows: List[int] = []
    cols: List[int] = []
    vals: List[float] = []
    rhs = np.array(cloud.bc_values, dtype=float)
    pivot_counts = np.full(cloud.n, -1, dtype=np.int64)
    failures: Dict[str, List[int]] = {"empty": [], "rank": [], "infeasible": []}

    interior = cloud.indices_of(PointKind.INTERIOR)
    rhs[interior] = 0.0
    if source is not None and interior.size:
        rhs[interior] = source(cloud.points[interior])

    for i in range(cloud.n):
        if cloud.kinds[i] == PointKind.DIRICHLET:
            rows.append(i)
            cols.append(i)
            vals.append(1.0)
            continue

        stencil, reason = _point_stencil(generator, neighborhoods, cloud, i, config)
        if stencil is None:
            failures[reason].append(i)
            continue

        rows.append(i)
        cols.append(i)
        vals.append(-stencil.center_coeff)
        rows.extend([i] * stencil.m)
        cols.extend(stencil.neighbors.tolist())
        vals.extend((-stencil.coeffs).tolist())
        if stencil.pivot_count is not None:
            pivot_counts[i] = stencil.pivot_count

    if failures["empty"]:
        raise EmptyNeighborhoodError(failures["empty"])
    if failures["rank"]:
        raise RankDeficientStencilError(failures["rank"])
    if failures["infeasible"]:
        raise InfeasibleStencilError(failures["infeasible"])

    A = compact(sp.csr_matrix((vals, (rows, cols)), shape=(cloud.n, cloud.n)))
    logger.info(
        "assembled %s system: n=%d, nnz=%d",
        config.method,
        cloud.n,
        A.nnz,
    )

    params = config.model_dump()
    if neighborhoods.radius is not None:
        params["search_radius"] = neighborhoods.radius

    return LinearSystem(
        A=A,
        rhs=rhs,
        cloud=cloud,
        method=StencilMethod.parse(config.method),
        params=params,
        pivot_counts=pivot_counts,
    )


def consistency_error(
    system: LinearSystem,
    u: Callable[[np.ndarray], np.ndarray],
) -> float:
    """Largest interior residual |(A u)_i - f_i| for the exact solution u."""
    values = u(system.cloud.points)
    residual = system.A @ values - system.rhs
    interior = system.cloud.indices_of(PointKind.INTERIOR)
    if interior.size == 0:
        return 0.0

    return float(np.abs(residual[interior]).max())
