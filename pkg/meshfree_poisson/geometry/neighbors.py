from __future__ import annotations

import numpy as np

from meshfree_poisson.errors import DimensionMismatchError
from meshfree_poisson.errors import EmptyDomainError
from meshfree_poisson.geometry.domains import DomainSpec
from meshfree_poisson.models.cloud import NeighborSet
from meshfree_poisson.models.cloud import PointCloud

# the kd-tree query is widened by this factor, the exact test happens afterwards
QUERY_SLACK = 1e-12


def find_neighbors(cloud: PointCloud, center: int, radius: float) -> NeighborSet:
    """All points with 0 < |x_i - x_0| <= radius, by ascending distance then index."""
    if radius <= 0.0:
        raise ValueError("search radius must be positive")
    if not 0 <= center < cloud.n:
        raise IndexError(f"point {center} is not part of the cloud")

    x0 = cloud.points[center]
    candidates = np.asarray(
        cloud.tree.query_ball_point(x0, radius * (1.0 + QUERY_SLACK)),
        dtype=np.int64,
    )

    distances = np.linalg.norm(cloud.points[candidates] - x0, axis=1)
    keep = (distances > 0.0) & (distances <= radius)
    return NeighborSet.from_indices(cloud, center, candidates[keep], radius)


def find_nearest(cloud: PointCloud, center: int, count: int) -> NeighborSet:
    if count < 1:
        raise ValueError("neighbor count must be at least 1")

    k = min(count + 1, cloud.n)
    distances, indices = cloud.tree.query(cloud.points[center], k=k)
    distances = np.atleast_1d(distances)
    indices = np.atleast_1d(indices)

    keep = (indices != center) & (distances > 0.0)
    indices = indices[keep][:count]
    radius = float(distances[keep][:count].max()) if indices.size else None
    return NeighborSet.from_indices(cloud, center, indices, radius)


def _sample_grid(domain: DomainSpec, samples_per_dim: int) -> np.ndarray:
    # 2^j + 1 points per axis, so a finer sampling contains every coarser one
    intervals = 1 << (int(samples_per_dim).bit_length() - 1)
    lo, hi = domain.bounds()
    axes = [np.linspace(lo[i], hi[i], intervals + 1) for i in range(domain.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    samples = np.column_stack([m.ravel() for m in mesh])
    return samples[domain.contains(samples)]


def mesh_size(
    cloud: PointCloud,
    domain: DomainSpec,
    samples_per_dim: int = 128,
) -> float:
    """Estimates the smallest h with the closed domain covered by balls of radius
    h/2 around the cloud points. The estimate approaches h from below."""
    if samples_per_dim < 16:
        raise ValueError("at least 16 samples per dimension are required")
    if cloud.n == 0:
        raise EmptyDomainError("cannot estimate the mesh size of an empty cloud")
    if cloud.dim != domain.dim:
        raise DimensionMismatchError(
            f"cloud is {cloud.dim}d but the domain is {domain.dim}d",
        )

    samples = _sample_grid(domain, samples_per_dim)
    distances, _ = cloud.tree.query(samples, k=1)
    return 2.0 * float(np.max(distances))
