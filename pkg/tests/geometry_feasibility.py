from __future__ import annotations

import math

import numpy as np
import pytest

from meshfree_poisson.config import GeometryConfig
from meshfree_poisson.geometry.feasibility import ConeConstants
from meshfree_poisson.geometry.feasibility import candidate_radius
from meshfree_poisson.geometry.feasibility import cone_criterion
from meshfree_poisson.geometry.feasibility import half_space_violation
from meshfree_poisson.geometry.feasibility import icosphere_directions
from meshfree_poisson.models.cloud import NeighborSet
from meshfree_poisson.models.stencil import Infeasible
from meshfree_poisson.stencils.constraints import build_constraints
from meshfree_poisson.stencils.linear_minimization import lp_stencil

# how far the radii can be from the rounded reference values
RADIUS_TOLERANCE = 1e-3


def _on_circle(degrees) -> NeighborSet:
    angles = np.radians(np.asarray(degrees, dtype=float))
    return NeighborSet.from_offsets(np.column_stack((np.cos(angles), np.sin(angles))))


def test_quarter_plane_violates() -> None:
    neigh = NeighborSet.from_offsets([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])

    assert half_space_violation(neigh)
    assert isinstance(lp_stencil(build_constraints(neigh)), Infeasible)


def test_axis_star_does_not_violate() -> None:
    neigh = NeighborSet.from_offsets(
        [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]],
    )

    assert not half_space_violation(neigh)


def test_skewed_configuration_does_not_violate() -> None:
    assert not half_space_violation(_on_circle([0, 90, 180, 270, 9, 18]))


def test_half_space_on_a_line() -> None:
    assert half_space_violation(NeighborSet.from_offsets([0.5, 1.0]))
    assert not half_space_violation(NeighborSet.from_offsets([-0.5, 1.0]))


def test_cone_criterion_2d() -> None:
    consts = ConeConstants.for_dim(2)

    assert cone_criterion(_on_circle(np.arange(16) * 22.5), consts)
    assert not cone_criterion(_on_circle([0, 90, 180, 270]), consts)


def test_cone_criterion_needs_matching_dimension() -> None:
    with pytest.raises(ValueError):
        cone_criterion(_on_circle([0, 120, 240]), ConeConstants.for_dim(3))


def test_cone_constants() -> None:
    planar = ConeConstants.for_dim(2)
    spatial = ConeConstants.for_dim(3)

    assert abs(planar.opening_angle_deg - 45.0) <= 1e-9
    assert abs(planar.radius_ratio - 1.0 / math.sin(math.radians(22.5))) <= 1e-12
    assert spatial.opening_angle_deg < planar.opening_angle_deg

    with pytest.raises(ValueError):
        ConeConstants.for_dim(1)


def test_candidate_radius() -> None:
    assert abs(candidate_radius(0.1, 2) - 0.1370) <= RADIUS_TOLERANCE
    assert abs(candidate_radius(0.1, 3) - 0.1811) <= RADIUS_TOLERANCE

    with pytest.raises(ValueError):
        candidate_radius(0.0, 2)


def test_icosphere_directions_are_unit_vectors() -> None:
    directions = icosphere_directions(2)

    assert directions.shape[1] == 3
    assert np.allclose(np.linalg.norm(directions, axis=1), 1.0)


def test_random_configurations_agree_with_the_linear_program() -> None:
    rng = np.random.default_rng(3)
    consts = ConeConstants.for_dim(2)

    for _ in range(200):
        m = int(rng.integers(5, 12))
        angles = rng.uniform(0.0, 2.0 * np.pi, m)
        radii = rng.uniform(0.5, 1.0, m)
        neigh = NeighborSet.from_offsets(
            np.column_stack((radii * np.cos(angles), radii * np.sin(angles))),
        )
        result = lp_stencil(build_constraints(neigh, alpha=4.0))

        if half_space_violation(neigh):
            assert isinstance(result, Infeasible)
        if cone_criterion(neigh, consts):
            assert not isinstance(result, Infeasible)


def _axes_3d() -> NeighborSet:
    return NeighborSet.from_offsets(np.vstack((np.eye(3), -np.eye(3))))


def test_half_space_in_3d() -> None:
    assert not half_space_violation(_axes_3d())

    above = [[1.0, 0.0, 1.0], [-1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [0.0, -1.0, 1.0]]
    assert half_space_violation(NeighborSet.from_offsets(above))

    # closed half-space: the plane itself plus one point above it
    flat = [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0]]
    assert half_space_violation(NeighborSet.from_offsets(flat + [[0.0, 0.0, 1.0]]))


def test_cone_criterion_3d() -> None:
    consts = ConeConstants.for_dim(3)
    dense = NeighborSet.from_offsets(icosphere_directions(3))

    assert cone_criterion(_axes_3d(), consts) is False
    assert cone_criterion(dense, consts, GeometryConfig(cone_sweep_level=4)) is True


def test_cone_criterion_3d_unknown_band() -> None:
    consts = ConeConstants.for_dim(3)
    dense = NeighborSet.from_offsets(icosphere_directions(3))
    config = GeometryConfig(cone_sweep_level=4, cone_unknown_band_deg=20.0)

    assert cone_criterion(dense, consts, config) is None
