from __future__ import annotations

import hashlib
from dataclasses import dataclass
from dataclasses import field
from functools import cached_property
from typing import Callable
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from meshfree_poisson.models.kinds import PointKind

NORMAL_TOLERANCE = 1e-12
DUPLICATE_TOLERANCE = 1e-14


def _frozen(array: np.ndarray, dtype: type) -> np.ndarray:
    array = np.array(array, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Points of a domain with their boundary classification.

    Indices 0..n-1 identify points for the lifetime of the cloud; the arrays are
    read-only after construction.
    """

    dim: int
    points: np.ndarray
    kinds: np.ndarray
    normals: np.ndarray
    bc_values: np.ndarray

    def __post_init__(self) -> None:
        if self.dim not in (1, 2, 3):
            raise ValueError(f"unsupported dimension {self.dim}")

        points = _frozen(self.points, float).reshape(-1, self.dim)
        n = points.shape[0]
        kinds = _frozen(self.kinds, np.int8).reshape(n)
        normals = _frozen(self.normals, float).reshape(n, self.dim)
        bc_values = _frozen(self.bc_values, float).reshape(n)

        object.__setattr__(self, "points", points)
        object.__setattr__(self, "kinds", kinds)
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "bc_values", bc_values)

        if not np.all(np.isfinite(points)):
            raise ValueError("point coordinates must be finite")

        neumann = kinds == PointKind.NEUMANN
        norms = np.linalg.norm(normals[neumann], axis=1)
        if np.any(np.abs(norms - 1.0) > NORMAL_TOLERANCE):
            raise ValueError("Neumann normals must have unit length")

        if n > 1 and self.tree.query_pairs(DUPLICATE_TOLERANCE):
            raise ValueError("point cloud contains duplicate positions")

    @classmethod
    def create(
        cls,
        points: np.ndarray,
        kinds: np.ndarray,
        normals: Optional[np.ndarray] = None,
        bc_values: Optional[np.ndarray] = None,
    ) -> PointCloud:
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]

        n, dim = points.shape
        if normals is None:
            normals = np.zeros((n, dim))
        if bc_values is None:
            bc_values = np.zeros(n)

        return cls(dim, points, np.asarray(kinds), normals, bc_values)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @cached_property
    def tree(self) -> cKDTree:
        return cKDTree(self.points)

    def indices_of(self, kind: PointKind) -> np.ndarray:
        return np.flatnonzero(self.kinds == kind)

    def with_boundary_values(
        self,
        dirichlet: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        neumann: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None,
    ) -> PointCloud:
        """Returns a copy whose boundary values are evaluated from `dirichlet(x)`
        and `neumann(x, normal)`."""
        values = np.array(self.bc_values)

        dirichlet_idx = self.indices_of(PointKind.DIRICHLET)
        if dirichlet is not None and dirichlet_idx.size:
            values[dirichlet_idx] = dirichlet(self.points[dirichlet_idx])

        neumann_idx = self.indices_of(PointKind.NEUMANN)
        if neumann is not None and neumann_idx.size:
            values[neumann_idx] = neumann(
                self.points[neumann_idx],
                self.normals[neumann_idx],
            )

        return PointCloud(self.dim, self.points, self.kinds, self.normals, values)

    def content_hash(self) -> str:
        digest = hashlib.sha256()
        digest.update(np.ascontiguousarray(self.points).tobytes())
        digest.update(np.ascontiguousarray(self.kinds).tobytes())
        digest.update(np.ascontiguousarray(self.normals).tobytes())
        return digest.hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class NeighborSet:
    center: int
    neighbors: np.ndarray
    offsets: np.ndarray
    distances: np.ndarray
    radius: Optional[float] = field(default=None)

    @property
    def m(self) -> int:
        return int(self.neighbors.shape[0])

    @property
    def dim(self) -> int:
        return int(self.offsets.shape[1])

    @classmethod
    def from_indices(
        cls,
        cloud: PointCloud,
        center: int,
        indices: np.ndarray,
        radius: Optional[float] = None,
    ) -> NeighborSet:
        indices = np.asarray(indices, dtype=np.int64)
        offsets = cloud.points[indices] - cloud.points[center]
        distances = np.linalg.norm(offsets, axis=1)

        order = np.lexsort((indices, distances))
        return cls(
            center=center,
            neighbors=indices[order],
            offsets=offsets[order],
            distances=distances[order],
            radius=radius,
        )

    @classmethod
    def from_offsets(cls, offsets: np.ndarray) -> NeighborSet:
        """A neighborhood of the origin given only by its offsets, for stencil studies
        that are detached from a point cloud."""
        offsets = np.asarray(offsets, dtype=float)
        if offsets.ndim == 1:
            offsets = offsets[:, None]

        m = offsets.shape[0]
        return cls(
            center=-1,
            neighbors=np.arange(m, dtype=np.int64),
            offsets=offsets,
            distances=np.linalg.norm(offsets, axis=1),
        )
