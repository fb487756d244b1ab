from __future__ import annotations

import itertools
from typing import List
from typing import Optional

import numpy as np

from meshfree_poisson.models.cloud import NeighborSet
from meshfree_poisson.models.constraints import ConstraintSystem
from meshfree_poisson.models.kinds import ConstraintKind
from meshfree_poisson.models.stencil import Stencil

# relative bound on |V s - b| for an accepted stencil
CONSISTENCY_TOLERANCE = 1e-10


def constraint_count(dim: int, kind: ConstraintKind = ConstraintKind.LAPLACE) -> int:
    if kind == ConstraintKind.NEUMANN_DERIVATIVE:
        return dim

    return dim * (dim + 3) // 2


def build_constraints(
    neigh: NeighborSet,
    kind: ConstraintKind = ConstraintKind.LAPLACE,
    alpha: float = 2.0,
    normal: Optional[np.ndarray] = None,
) -> ConstraintSystem:
    """Exactness conditions for one point.

    Laplace rows are ordered linear (x, y, z), diagonal quadratic (xx, yy, zz), then
    mixed quadratic (xy, xz, yz). Neumann rows are the linear ones with the normal as
    right-hand side.
    """
    if neigh.m == 0:
        raise ValueError("cannot build constraints without neighbors")
    if alpha < 1.0:
        raise ValueError("weight exponent must be at least 1")
    if np.any(neigh.distances <= 0.0):
        raise ValueError("neighbor coincides with the center point")

    x = neigh.offsets
    dim = neigh.dim

    rows: List[np.ndarray] = [x[:, j] for j in range(dim)]
    rhs: List[float] = [0.0] * dim
    degrees: List[int] = [1] * dim

    if kind == ConstraintKind.LAPLACE:
        for j in range(dim):
            rows.append(x[:, j] ** 2)
            rhs.append(2.0)
            degrees.append(2)
        for p, q in itertools.combinations(range(dim), 2):
            rows.append(x[:, p] * x[:, q])
            rhs.append(0.0)
            degrees.append(2)
    else:
        if normal is None:
            raise ValueError("Neumann constraints need a normal vector")
        normal = np.asarray(normal, dtype=float).reshape(dim)
        rhs = list(normal)

    weights = neigh.distances ** (-alpha)
    if not np.all(np.isfinite(weights)):
        raise ValueError("stencil weights must be finite")

    return ConstraintSystem(
        V=np.array(rows),
        b=np.array(rhs),
        weights=weights,
        kind=kind,
        neighbors=np.array(neigh.neighbors),
        dim=dim,
        degrees=np.array(degrees),
        scale=float(neigh.distances.max()),
        normal=None if normal is None else np.array(normal),
    )


def consistency_residual(system: ConstraintSystem, stencil: Stencil) -> float:
    return float(np.abs(system.V @ stencil.coeffs - system.b).max())


def residual_bound(system: ConstraintSystem) -> float:
    b_norm = float(np.abs(system.b).max())
    return CONSISTENCY_TOLERANCE * max(1.0, b_norm, system.scale**3)


def make_stencil(
    system: ConstraintSystem,
    coeffs: np.ndarray,
    pivot_count: Optional[int] = None,
) -> Stencil:
    coeffs = np.array(coeffs, dtype=float)
    coeffs.setflags(write=False)
    neighbors = np.array(system.neighbors, dtype=np.int64)
    neighbors.setflags(write=False)
    return Stencil(
        center_coeff=-float(coeffs.sum()),
        coeffs=coeffs,
        neighbors=neighbors,
        positive=bool(np.all(coeffs >= 0.0)),
        minimal=int(np.count_nonzero(coeffs)) <= system.k,
        pivot_count=pivot_count,
        objective=float(np.sum(coeffs / system.weights)),
    )
