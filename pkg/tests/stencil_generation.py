from __future__ import annotations

import itertools
from dataclasses import replace
from typing import Optional

import numpy as np
import pytest

from meshfree_poisson import calculate_stencil
from meshfree_poisson.errors import RankDeficientError
from meshfree_poisson.models.cloud import NeighborSet
from meshfree_poisson.models.kinds import ConstraintKind
from meshfree_poisson.models.kinds import StencilMethod
from meshfree_poisson.models.stencil import Infeasible
from meshfree_poisson.models.stencil import Stencil
from meshfree_poisson.stencils.constraints import build_constraints
from meshfree_poisson.stencils.constraints import constraint_count
from meshfree_poisson.stencils.constraints import consistency_residual
from meshfree_poisson.stencils.constraints import residual_bound
from meshfree_poisson.stencils.least_squares import lsq_flops
from meshfree_poisson.stencils.least_squares import lsq_stencil
from meshfree_poisson.stencils.linear_minimization import lp_stencil

# how far the least squares values can be from the rounded reference values
REFERENCE_TOLERANCE = 1e-3
# how far exact values can be off after round-off
TOLERANCE = 1e-9
# how far the stencils can be from a dense reference solve, relative
ORACLE_TOLERANCE = 1e-8

SKEWED_ANGLES = [0.0, 90.0, 180.0, 270.0, 9.0, 18.0]
SKEWED_LSQ = [0.846, 1.005, 0.998, 1.003, 0.312, -0.164]


def _skewed() -> NeighborSet:
    angles = np.radians(SKEWED_ANGLES)
    return NeighborSet.from_offsets(np.column_stack((np.cos(angles), np.sin(angles))))


def _grid_ring(h: float) -> NeighborSet:
    offsets = [
        [h, 0.0],
        [-h, 0.0],
        [0.0, h],
        [0.0, -h],
        [h, h],
        [-h, h],
        [h, -h],
        [-h, -h],
    ]
    return NeighborSet.from_offsets(offsets)


def test_constraint_counts() -> None:
    assert constraint_count(1) == 2
    assert constraint_count(2) == 5
    assert constraint_count(3) == 9
    assert constraint_count(3, ConstraintKind.NEUMANN_DERIVATIVE) == 3


def test_interval_constraints() -> None:
    h = 0.5
    system = build_constraints(NeighborSet.from_offsets([-h, h]))

    assert np.allclose(system.V, [[-h, h], [h**2, h**2]])
    assert np.allclose(system.b, [0.0, 2.0])


def test_skewed_constraints() -> None:
    system = build_constraints(_skewed())

    assert system.V.shape == (5, 6)
    assert np.allclose(system.b, [0.0, 0.0, 2.0, 2.0, 0.0])
    assert np.allclose(system.weights, 1.0)


def test_neumann_constraints() -> None:
    system = build_constraints(
        _grid_ring(0.1),
        ConstraintKind.NEUMANN_DERIVATIVE,
        normal=[1.0, 0.0],
    )

    assert system.V.shape == (2, 8)
    assert np.allclose(system.b, [1.0, 0.0])

    with pytest.raises(ValueError):
        build_constraints(_grid_ring(0.1), ConstraintKind.NEUMANN_DERIVATIVE)


def test_invalid_constraint_inputs() -> None:
    with pytest.raises(ValueError):
        build_constraints(_skewed(), alpha=0.5)
    with pytest.raises(ValueError):
        build_constraints(NeighborSet.from_offsets(np.zeros((0, 2))))


def test_skewed_least_squares() -> None:
    stencil = lsq_stencil(build_constraints(_skewed()))

    assert np.all(np.abs(stencil.coeffs - SKEWED_LSQ) <= REFERENCE_TOLERANCE)
    assert not stencil.positive
    assert abs(stencil.center_coeff + stencil.coeffs.sum()) <= TOLERANCE


def test_interval_least_squares() -> None:
    h = 0.1
    stencil = lsq_stencil(build_constraints(NeighborSet.from_offsets([-h, h])))

    assert np.allclose(stencil.coeffs, 1.0 / h**2)
    assert abs(stencil.center_coeff + 2.0 / h**2) <= TOLERANCE / h**2


def test_grid_least_squares_spreads_over_all_neighbors() -> None:
    h = 0.1
    system = build_constraints(_grid_ring(h), alpha=2.0)
    stencil = lsq_stencil(system)

    assert np.allclose(stencil.coeffs, 1.0 / (3.0 * h**2))
    assert abs(stencil.center_coeff + 8.0 / (3.0 * h**2)) <= TOLERANCE / h**2
    assert stencil.positive
    assert not stencil.minimal
    assert consistency_residual(system, stencil) <= TOLERANCE


def test_least_squares_needs_enough_neighbors() -> None:
    neigh = NeighborSet.from_offsets([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])

    with pytest.raises(RankDeficientError):
        lsq_stencil(build_constraints(neigh))


def test_collinear_neighbors_are_rank_deficient() -> None:
    neigh = NeighborSet.from_offsets([[x, 0.0] for x in (-2, -1, 1, 2, 3, 4)])

    with pytest.raises(RankDeficientError):
        lsq_stencil(build_constraints(neigh))


def test_lsq_flops() -> None:
    assert lsq_flops(5, 12) == 401
    assert lsq_flops(9, 40) == 3843
    assert lsq_flops(1, 1) == 2

    with pytest.raises(ValueError):
        lsq_flops(0, 4)


def test_skewed_linear_minimization() -> None:
    system = build_constraints(_skewed(), alpha=4.0)
    stencil = lp_stencil(system)

    assert isinstance(stencil, Stencil)
    assert stencil.positive
    assert stencil.minimal
    assert stencil.nnz <= 5
    # every feasible stencil of these unit offsets has coefficient sum 4
    assert abs(stencil.objective - 4.0) <= TOLERANCE
    assert abs(stencil.center_coeff + 4.0) <= TOLERANCE
    assert consistency_residual(system, stencil) <= TOLERANCE


def test_grid_linear_minimization_picks_five_points() -> None:
    h = 0.1
    stencil = lp_stencil(build_constraints(_grid_ring(h), alpha=4.0))

    assert isinstance(stencil, Stencil)
    assert np.allclose(stencil.coeffs[:4], 1.0 / h**2)
    assert np.allclose(stencil.coeffs[4:], 0.0, atol=TOLERANCE / h**2)
    assert np.count_nonzero(np.abs(stencil.coeffs) > TOLERANCE) == 4
    assert abs(stencil.center_coeff + 4.0 / h**2) <= TOLERANCE / h**2
    assert stencil.pivot_count is not None and stencil.pivot_count > 0


def test_one_sided_neighbors_are_infeasible() -> None:
    neigh = NeighborSet.from_offsets([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 1.0]])

    assert isinstance(lp_stencil(build_constraints(neigh)), Infeasible)


def test_neumann_linear_minimization() -> None:
    h = 0.1
    # inward normal of a point on the x- face
    system = build_constraints(
        NeighborSet.from_offsets([[h, 0.0], [h, h], [h, -h], [0.0, h], [0.0, -h]]),
        ConstraintKind.NEUMANN_DERIVATIVE,
        normal=[1.0, 0.0],
    )
    stencil = lp_stencil(system)

    assert isinstance(stencil, Stencil)
    assert stencil.positive
    assert consistency_residual(system, stencil) <= TOLERANCE


def test_calculate_stencil() -> None:
    system = build_constraints(_grid_ring(0.1), alpha=4.0)

    l1 = calculate_stencil(system, "l1")
    lsq = calculate_stencil(system, StencilMethod.LSQ)

    assert isinstance(l1, Stencil) and l1.minimal
    assert isinstance(lsq, Stencil) and lsq.nnz == 8


def test_calculate_stencil_unknown_method() -> None:
    system = build_constraints(_grid_ring(0.1))

    with pytest.raises(NotImplementedError):
        calculate_stencil(system, "rbf")


def _random_ring(rng: np.random.Generator, m: int, jitter: float) -> NeighborSet:
    angles = np.arange(m) * 2.0 * np.pi / m + rng.uniform(-jitter, jitter, m)
    radii = rng.uniform(0.4, 1.0, m)
    return NeighborSet.from_offsets(
        np.column_stack((radii * np.cos(angles), radii * np.sin(angles))),
    )


def _kkt_solution(V: np.ndarray, b: np.ndarray, weights: np.ndarray) -> np.ndarray:
    k, m = V.shape
    kkt = np.zeros((m + k, m + k))
    kkt[:m, :m] = np.diag(1.0 / weights)
    kkt[:m, m:] = V.T
    kkt[m:, :m] = V
    rhs = np.concatenate((np.zeros(m), b))
    return np.linalg.solve(kkt, rhs)[:m]


def _best_vertex(V: np.ndarray, b: np.ndarray, cost: np.ndarray) -> Optional[float]:
    k, m = V.shape
    best = None
    for basis in itertools.combinations(range(m), k):
        B = V[:, basis]
        if np.linalg.cond(B) > 1e10:
            continue
        values = np.linalg.solve(B, b)
        if values.min() < -1e-10:
            continue
        objective = float(cost[list(basis)] @ values)
        best = objective if best is None else min(best, objective)

    return best


def test_least_squares_matches_the_kkt_system() -> None:
    rng = np.random.default_rng(11)

    for _ in range(40):
        m = int(rng.integers(6, 13))
        system = build_constraints(_random_ring(rng, m, 0.3), alpha=2.0)
        stencil = lsq_stencil(system)

        expected = _kkt_solution(system.V, system.b, system.weights)
        error = np.abs(stencil.coeffs - expected).max()
        assert error <= ORACLE_TOLERANCE * np.abs(expected).max()


def test_linear_minimization_matches_basis_enumeration() -> None:
    rng = np.random.default_rng(12)
    feasible = 0

    for _ in range(40):
        m = int(rng.integers(6, 10))
        system = build_constraints(_random_ring(rng, m, 0.6), alpha=4.0)
        stencil = lp_stencil(system)

        best = _best_vertex(system.V, system.b, 1.0 / system.weights)
        if best is None:
            assert isinstance(stencil, Infeasible)
            continue

        feasible += 1
        assert isinstance(stencil, Stencil)
        assert stencil.positive
        assert abs(stencil.objective - best) <= ORACLE_TOLERANCE * max(1.0, best)

    assert feasible > 0


def test_weight_scaling_keeps_the_stencils() -> None:
    rng = np.random.default_rng(13)

    for _ in range(20):
        system = build_constraints(_random_ring(rng, 10, 0.2), alpha=4.0)
        scaled = replace(system, weights=7.3 * system.weights)

        lsq, lsq_scaled = lsq_stencil(system), lsq_stencil(scaled)
        scale = np.abs(lsq.coeffs).max()
        assert np.abs(lsq.coeffs - lsq_scaled.coeffs).max() <= TOLERANCE * scale

        lp, lp_scaled = lp_stencil(system), lp_stencil(scaled)
        if isinstance(lp, Infeasible):
            assert isinstance(lp_scaled, Infeasible)
            continue
        scale = np.abs(lp.coeffs).max()
        assert np.abs(lp.coeffs - lp_scaled.coeffs).max() <= TOLERANCE * scale
        assert abs(lp_scaled.objective * 7.3 - lp.objective) <= TOLERANCE * scale


def test_random_stencils_meet_the_residual_bound() -> None:
    rng = np.random.default_rng(14)

    for h in (1.0, 0.05, 0.002):
        for _ in range(20):
            m = int(rng.integers(6, 13))
            offsets = h * _random_ring(rng, m, 0.3).offsets
            system = build_constraints(NeighborSet.from_offsets(offsets))

            for stencil in (lsq_stencil(system), lp_stencil(system)):
                if isinstance(stencil, Infeasible):
                    continue
                assert consistency_residual(system, stencil) <= residual_bound(system)


def test_equal_weight_grid_least_squares() -> None:
    h = 0.1
    system = build_constraints(_grid_ring(h))
    stencil = lsq_stencil(replace(system, weights=np.ones(system.m)))

    assert np.allclose(stencil.coeffs[:4], 1.0 / (5.0 * h**2))
    assert np.allclose(stencil.coeffs[4:], 2.0 / (5.0 * h**2))
    assert abs(stencil.center_coeff + 12.0 / (5.0 * h**2)) <= TOLERANCE / h**2


def test_calculate_stencil_rebuilds_weights() -> None:
    h = 0.1
    system = build_constraints(_grid_ring(h), alpha=2.0)

    default = calculate_stencil(system, "lsq")
    steep = calculate_stencil(system, "lsq", alpha=7.0)
    expected = lsq_stencil(build_constraints(_grid_ring(h), alpha=7.0))

    assert np.allclose(default.coeffs, 1.0 / (3.0 * h**2))
    assert np.allclose(steep.coeffs, expected.coeffs, rtol=ORACLE_TOLERANCE)
    assert not np.allclose(steep.coeffs, default.coeffs)
    assert steep.coeffs[0] > steep.coeffs[4]

    l1 = calculate_stencil(system, "l1", alpha=7.0)
    reference = lp_stencil(build_constraints(_grid_ring(h), alpha=7.0))
    assert abs(l1.objective - reference.objective) <= TOLERANCE * reference.objective

    with pytest.raises(ValueError):
        calculate_stencil(system, "lsq", alpha=0.5)
