from __future__ import annotations

import csv
import itertools
import json
import logging
import math
from pathlib import Path
from typing import Dict
from typing import List
from typing import Tuple
from typing import Union

import numpy as np

from meshfree_poisson.config import GeometryConfig
from meshfree_poisson.errors import CloudGenerationError
from meshfree_poisson.geometry.domains import BoxDomain
from meshfree_poisson.geometry.domains import DiskDomain
from meshfree_poisson.geometry.domains import DomainSpec
from meshfree_poisson.geometry.domains import FACE_NAMES
from meshfree_poisson.models.cloud import PointCloud
from meshfree_poisson.models.kinds import PointKind

logger = logging.getLogger(__name__)

RNG_BATCH = 4096


class _DartBoard:
    """Bucket grid with cell size equal to the separation, so a candidate only has
    to be compared with the points of the 3^d surrounding cells."""

    def __init__(self, separation: float, dim: int) -> None:
        self.separation = separation
        self.dim = dim
        self.cells: Dict[Tuple[int, ...], List[np.ndarray]] = {}
        self.offsets = list(itertools.product((-1, 0, 1), repeat=dim))

    def _cell(self, x: np.ndarray) -> Tuple[int, ...]:
        return tuple(int(c) for c in np.floor(x / self.separation))

    def add(self, x: np.ndarray) -> None:
        self.cells.setdefault(self._cell(x), []).append(x)

    def accepts(self, x: np.ndarray) -> bool:
        cell = self._cell(x)
        limit = self.separation * self.separation
        for offset in self.offsets:
            key = tuple(c + o for c, o in zip(cell, offset))
            for y in self.cells.get(key, ()):
                d = x - y
                if float(d @ d) < limit:
                    return False

        return True


def _random_fill(
    domain: DomainSpec,
    fixed: np.ndarray,
    target: int,
    config: GeometryConfig,
    accept_region,
) -> np.ndarray:
    rng = np.random.default_rng(domain.seed)
    separation = config.min_separation_factor * domain.nominal_spacing()
    board = _DartBoard(separation, domain.dim)
    for x in fixed:
        board.add(x)

    lo, hi = domain.bounds()
    accepted: List[np.ndarray] = []
    attempts = 0
    budget = config.rejection_attempts_per_point * target

    while len(accepted) < target and attempts < budget:
        batch = rng.uniform(lo, hi, size=(RNG_BATCH, domain.dim))
        for x in batch:
            attempts += 1
            if accept_region(x) and board.accepts(x):
                board.add(x)
                accepted.append(x)
                if len(accepted) == target:
                    break
            if attempts >= budget:
                break

    if len(accepted) < target:
        raise CloudGenerationError(
            f"could not place {target} points with separation {separation:.4g}",
            achieved=len(accepted),
        )

    return np.array(accepted).reshape(-1, domain.dim)


def _disk_cloud(domain: DiskDomain, config: GeometryConfig) -> PointCloud:
    center = np.asarray(domain.center, dtype=float)
    angles = 2.0 * np.pi * np.arange(domain.boundary_points) / domain.boundary_points
    unit = np.column_stack((np.cos(angles), np.sin(angles)))
    boundary = center + domain.radius * unit

    if domain.interior_points is not None:
        separation = config.min_separation_factor * domain.nominal_spacing()
        inner_radius = domain.radius - 0.5 * separation

        def inside(x: np.ndarray) -> bool:
            return float(np.linalg.norm(x - center)) < inner_radius

        interior = _random_fill(
            domain,
            boundary,
            domain.interior_points,
            config,
            inside,
        )
    else:
        h = domain.spacing
        count = int(math.floor(domain.radius / h))
        ticks = h * np.arange(-count, count + 1)
        grid = np.array(list(itertools.product(ticks, repeat=2))) + center
        keep = np.linalg.norm(grid - center, axis=1) < domain.radius - h * (
            domain.jitter + 0.35
        )
        interior = grid[keep]
        if domain.jitter > 0.0:
            rng = np.random.default_rng(domain.seed)
            interior = interior + rng.uniform(
                -domain.jitter * h,
                domain.jitter * h,
                size=interior.shape,
            )

    kind = PointKind.DIRICHLET if domain.boundary == "dirichlet" else PointKind.NEUMANN
    n_boundary = boundary.shape[0]
    points = np.vstack((boundary, interior))
    kinds = np.full(points.shape[0], PointKind.INTERIOR, dtype=np.int8)
    kinds[:n_boundary] = kind

    normals = np.zeros_like(points)
    if kind == PointKind.NEUMANN:
        normals[:n_boundary] = unit

    return PointCloud.create(points, kinds, normals)


def _box_faces(domain: BoxDomain, x: np.ndarray, tol: float) -> List[int]:
    lo, hi = domain.bounds()
    faces = []
    for axis in range(domain.dim):
        if abs(x[axis] - lo[axis]) <= tol:
            faces.append(2 * axis)
        if abs(x[axis] - hi[axis]) <= tol:
            faces.append(2 * axis + 1)

    return faces


def _classify_box_boundary(
    domain: BoxDomain,
    points: np.ndarray,
    tol: float,
) -> Tuple[np.ndarray, np.ndarray]:
    kinds = np.full(points.shape[0], PointKind.INTERIOR, dtype=np.int8)
    normals = np.zeros_like(points)

    for i, x in enumerate(points):
        faces = _box_faces(domain, x, tol)
        if not faces:
            continue

        conditions = [domain.condition(FACE_NAMES[face]) for face in faces]
        if "dirichlet" in conditions:
            kinds[i] = PointKind.DIRICHLET
            continue

        normal = np.zeros(domain.dim)
        for face in faces:
            normal[face // 2] += -1.0 if face % 2 == 0 else 1.0

        kinds[i] = PointKind.NEUMANN
        normals[i] = normal / np.linalg.norm(normal)

    return kinds, normals


def _box_grid(domain: BoxDomain, spacing: float) -> np.ndarray:
    lo, hi = domain.bounds()
    axes = []
    for axis in range(domain.dim):
        cells = max(1, int(round((hi[axis] - lo[axis]) / spacing)))
        axes.append(np.linspace(lo[axis], hi[axis], cells + 1))

    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def _box_cloud(domain: BoxDomain, config: GeometryConfig) -> PointCloud:
    h = domain.nominal_spacing()
    tol = 1e-9 * h
    grid = _box_grid(domain, h)
    kinds, normals = _classify_box_boundary(domain, grid, tol)

    if domain.interior_points is None:
        points = np.array(grid)
        interior = kinds == PointKind.INTERIOR
        if domain.jitter > 0.0:
            rng = np.random.default_rng(domain.seed)
            points[interior] += rng.uniform(
                -domain.jitter * h,
                domain.jitter * h,
                size=(int(interior.sum()), domain.dim),
            )

        return PointCloud.create(points, kinds, normals)

    on_boundary = kinds != PointKind.INTERIOR
    boundary = grid[on_boundary]
    lo, hi = domain.bounds()
    margin = 0.5 * config.min_separation_factor * h

    def inside(x: np.ndarray) -> bool:
        return bool(np.all(x > lo + margin) and np.all(x < hi - margin))

    interior = _random_fill(domain, boundary, domain.interior_points, config, inside)

    points = np.vstack((boundary, interior))
    all_kinds = np.concatenate(
        (kinds[on_boundary], np.full(interior.shape[0], PointKind.INTERIOR)),
    )
    all_normals = np.vstack((normals[on_boundary], np.zeros_like(interior)))
    return PointCloud.create(points, all_kinds, all_normals)


def generate_cloud(
    domain: DomainSpec,
    config: GeometryConfig = GeometryConfig(),
) -> PointCloud:
    if isinstance(domain, DiskDomain):
        cloud = _disk_cloud(domain, config)
    elif isinstance(domain, BoxDomain):
        cloud = _box_cloud(domain, config)
    else:
        raise NotImplementedError(f"no cloud generator for {type(domain).__name__}")

    logger.info(
        "generated %dd cloud: %d points (%d interior)",
        cloud.dim,
        cloud.n,
        len(cloud.indices_of(PointKind.INTERIOR)),
    )
    return cloud


def cloud_to_json(cloud: PointCloud) -> str:
    neumann = cloud.kinds == PointKind.NEUMANN
    payload = {
        "dim": cloud.dim,
        "points": cloud.points.tolist(),
        "kinds": [PointKind(k).letter for k in cloud.kinds],
        "normals": [
            normal.tolist() if is_neumann else None
            for normal, is_neumann in zip(cloud.normals, neumann)
        ],
        "bc_values": cloud.bc_values.tolist(),
    }
    return json.dumps(payload)


def cloud_from_json(text: str) -> PointCloud:
    payload = json.loads(text)
    dim = int(payload["dim"])
    letters = {kind.letter: kind for kind in PointKind}
    kinds = np.array([letters[k] for k in payload["kinds"]], dtype=np.int8)
    normals = np.array(
        [n if n is not None else [0.0] * dim for n in payload["normals"]],
        dtype=float,
    )
    return PointCloud(
        dim,
        np.array(payload["points"], dtype=float),
        kinds,
        normals,
        np.array(payload["bc_values"], dtype=float),
    )


def save_cloud(cloud: PointCloud, path: Union[str, Path]) -> None:
    Path(path).write_text(cloud_to_json(cloud))


def load_cloud(path: Union[str, Path]) -> PointCloud:
    return cloud_from_json(Path(path).read_text())


def export_cloud_csv(cloud: PointCloud, path: Union[str, Path]) -> None:
    header = ["x", "y", "z"][: cloud.dim] + ["kind"]
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for x, kind in zip(cloud.points, cloud.kinds):
            writer.writerow([repr(float(c)) for c in x] + [PointKind(kind).letter])
