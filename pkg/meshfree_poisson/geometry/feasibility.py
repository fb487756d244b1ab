from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict
from typing import Optional
from typing import Tuple

import numpy as np
from scipy.optimize import linprog

from meshfree_poisson.config import GeometryConfig
from meshfree_poisson.models.cloud import NeighborSet

# angle of one edge of the base icosahedron, in degrees
ICOSAHEDRON_EDGE_DEG = 63.43494882292201
HALF_SPACE_TOLERANCE = 1e-10


@dataclass(frozen=True)
class ConeConstants:
    dim: int
    beta: float
    opening_angle_deg: float
    radius_ratio: float

    @classmethod
    def for_dim(cls, dim: int) -> ConeConstants:
        if dim == 2:
            beta = math.sqrt(2.0) - 1.0
        elif dim == 3:
            beta = math.sqrt((3.0 - math.sqrt(6.0)) / 6.0)
        else:
            raise ValueError(f"cone constants are defined for 2d and 3d, not {dim}d")

        # the cone half angle satisfies tan(half) = beta
        half = math.atan(beta)
        return cls(
            dim=dim,
            beta=beta,
            opening_angle_deg=math.degrees(2.0 * half),
            radius_ratio=1.0 / math.sin(half),
        )

    @property
    def half_angle(self) -> float:
        return math.radians(self.opening_angle_deg) / 2.0


def _max_angular_gap(offsets: np.ndarray) -> float:
    angles = np.sort(np.arctan2(offsets[:, 1], offsets[:, 0]))
    gaps = np.diff(angles, append=angles[0] + 2.0 * math.pi)
    return float(gaps.max())


def _positively_spans(offsets: np.ndarray) -> bool:
    """True when the offsets span the space and some strictly positive combination
    of them vanishes, i.e. no closed half-space holds them all."""
    m, dim = offsets.shape
    if np.linalg.matrix_rank(offsets) < dim:
        return False

    scaled = offsets / np.linalg.norm(offsets, axis=1).max()
    # variables: lambda_1..lambda_m, t; maximize t with lambda_i >= t
    c = np.zeros(m + 1)
    c[-1] = -1.0
    a_eq = np.zeros((dim + 1, m + 1))
    a_eq[:dim, :m] = scaled.T
    a_eq[dim, :m] = 1.0
    b_eq = np.zeros(dim + 1)
    b_eq[dim] = 1.0
    a_ub = np.hstack((-np.eye(m), np.ones((m, 1))))
    b_ub = np.zeros(m)
    bounds = [(0.0, None)] * m + [(None, None)]

    result = linprog(
        c,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=bounds,
        method="highs",
    )
    return bool(result.status == 0 and -result.fun > HALF_SPACE_TOLERANCE)


def half_space_violation(neigh: NeighborSet) -> bool:
    """True if all offsets lie in one closed half-space through the center. No positive
    Laplace stencil exists in that case."""
    if neigh.m == 0:
        raise ValueError("half-space test needs at least one neighbor")

    offsets = neigh.offsets
    if neigh.dim == 1:
        return bool(np.all(offsets[:, 0] > 0.0) or np.all(offsets[:, 0] < 0.0))
    if neigh.dim == 2:
        return _max_angular_gap(offsets) >= math.pi - 1e-12

    return not _positively_spans(offsets)


def _icosahedron() -> Tuple[np.ndarray, np.ndarray]:
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    vertices = np.array(
        [
            [-1, phi, 0],
            [1, phi, 0],
            [-1, -phi, 0],
            [1, -phi, 0],
            [0, -1, phi],
            [0, 1, phi],
            [0, -1, -phi],
            [0, 1, -phi],
            [phi, 0, -1],
            [phi, 0, 1],
            [-phi, 0, -1],
            [-phi, 0, 1],
        ],
        dtype=float,
    )
    faces = np.array(
        [
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ],
    )
    return vertices / np.linalg.norm(vertices, axis=1, keepdims=True), faces


@lru_cache(maxsize=None)
def icosphere_directions(level: int) -> np.ndarray:
    """Unit vectors of a subdivided icosahedron: 10 * 4^level + 2 directions."""
    vertices, faces = _icosahedron()
    points = list(vertices)

    for _ in range(level):
        midpoints: Dict[Tuple[int, int], int] = {}

        def midpoint(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            if key not in midpoints:
                mid = points[a] + points[b]
                points.append(mid / np.linalg.norm(mid))
                midpoints[key] = len(points) - 1
            return midpoints[key]

        refined = []
        for a, b, c in faces:
            ab = midpoint(a, b)
            bc = midpoint(b, c)
            ca = midpoint(c, a)
            refined.extend(([a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]))
        faces = np.array(refined)

    directions = np.array(points)
    directions.setflags(write=False)
    return directions


def cone_criterion(
    neigh: NeighborSet,
    consts: ConeConstants,
    config: GeometryConfig = GeometryConfig(),
) -> Optional[bool]:
    """True if every cone of the given opening angle around the center contains a
    neighbor, which guarantees a positive stencil.

    2d is decided exactly from the angular gaps. 3d sweeps the directions of an
    icosphere and returns None when the sampled worst case lies within the sweep
    resolution of the threshold.
    """
    if neigh.dim not in (2, 3):
        raise ValueError("the cone criterion is defined for 2d and 3d only")
    if neigh.dim != consts.dim:
        raise ValueError("cone constants do not match the neighbor dimension")
    if neigh.m == 0:
        return False

    if neigh.dim == 2:
        return _max_angular_gap(neigh.offsets) < math.radians(consts.opening_angle_deg)

    directions = icosphere_directions(config.cone_sweep_level)
    units = neigh.offsets / neigh.distances[:, None]
    # worst direction: the one farthest, in angle, from its closest neighbor
    closest = np.clip((directions @ units.T).max(axis=1), -1.0, 1.0)
    worst = float(np.arccos(closest).max())

    band = math.radians(
        max(
            config.cone_unknown_band_deg,
            ICOSAHEDRON_EDGE_DEG / (1 << config.cone_sweep_level),
        ),
    )
    if worst >= consts.half_angle:
        return False
    if worst + band < consts.half_angle:
        return True

    return None


def candidate_radius(h: float, dim: int, margin: float = 0.05) -> float:
    """Search radius that holds a positive stencil for points away from the boundary
    of a cloud with mesh size h."""
    if h <= 0.0:
        raise ValueError("mesh size must be positive")

    return ConeConstants.for_dim(dim).radius_ratio * h / 2.0 * (1.0 + margin)
