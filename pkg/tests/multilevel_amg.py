from __future__ import annotations

import numpy as np
import pytest

from meshfree_poisson.bench.corpus import poisson_1d
from meshfree_poisson.bench.corpus import poisson_2d
from meshfree_poisson.config import AmgConfig
from meshfree_poisson.krylov.bicgstab import bicgstab
from meshfree_poisson.models.system import CfSplitting
from meshfree_poisson.multilevel.amg import build_amg
from meshfree_poisson.multilevel.amg import direct_interpolation
from meshfree_poisson.multilevel.coarsening import strength_of_connection

# how far Galerkin products can differ after round-off
TOLERANCE = 1e-12


def test_line_hierarchy() -> None:
    hierarchy = build_amg(poisson_1d(63), AmgConfig(coarsest_cap=10))
    summary = hierarchy.summary()

    assert summary.levels >= 3
    assert summary.sizes[0] == 63
    assert summary.sizes[1] == 31
    assert summary.sizes[-1] <= 10
    assert not summary.truncated
    assert all(a > b for a, b in zip(summary.sizes, summary.sizes[1:]))
    assert summary.operator_complexity > 1.0


def test_line_hierarchy_with_default_cap() -> None:
    summary = build_amg(poisson_1d(63)).summary()

    assert AmgConfig().coarsest_cap == 40
    assert summary.sizes == [63, 31]
    assert not summary.truncated


def test_line_interpolation_weights() -> None:
    A = poisson_1d(7)
    split = CfSplitting.from_coarse(7, [1, 3, 5])

    P = direct_interpolation(A, strength_of_connection(A, 0.25), split).toarray()

    expected = np.array(
        [
            [0.5, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.5, 0.5, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.5, 0.5],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, 0.5],
        ],
    )
    assert np.allclose(P, expected)


def test_galerkin_coarse_matrices() -> None:
    hierarchy = build_amg(poisson_2d(10), AmgConfig(coarsest_cap=10))

    first = hierarchy.levels[0]
    coarse = hierarchy.matrices[1].toarray()
    galerkin = (first.R @ first.A @ first.P).toarray()
    scale = np.abs(galerkin).max()
    assert np.allclose(coarse, galerkin, atol=TOLERANCE * scale)

    # symmetric input gives R = P^T
    assert np.allclose(first.R.toarray(), first.P.T.toarray())


def test_small_matrix_is_solved_directly() -> None:
    A = poisson_1d(20)
    hierarchy = build_amg(A)
    b = np.ones(20)

    assert hierarchy.summary().levels == 1
    assert np.allclose(A @ hierarchy.cycle(b), b)


@pytest.mark.parametrize("cycle", ["V", "F"])
def test_preconditioned_solve(cycle: str) -> None:
    A = poisson_1d(63)
    b = np.ones(63)
    hierarchy = build_amg(A, AmgConfig(coarsest_cap=10, cycle=cycle))

    x, report = bicgstab(A, b, hierarchy.aspreconditioner(), tol=1e-10)

    assert report.converged
    assert report.iterations <= 15
    assert np.allclose(A @ x, b, atol=1e-8)


def test_cycles_reduce_the_error_on_a_grid() -> None:
    A = poisson_2d(12)
    b = np.ones(144)
    hierarchy = build_amg(A, AmgConfig(coarsest_cap=20))

    x = np.zeros(144)
    residuals = [np.linalg.norm(b)]
    for _ in range(5):
        x = hierarchy.cycle(b, x)
        residuals.append(np.linalg.norm(b - A @ x))

    assert residuals[-1] < 0.1 * residuals[0]


def test_level_cap() -> None:
    hierarchy = build_amg(poisson_1d(63), AmgConfig(coarsest_cap=2, max_levels=2))
    summary = hierarchy.summary()

    assert summary.levels == 2
    assert summary.truncated


def test_jacobi_smoothed_preconditioner() -> None:
    A = poisson_2d(12)
    b = np.ones(144)
    hierarchy = build_amg(A, AmgConfig(coarsest_cap=20, smoother="jacobi"))

    x, report = bicgstab(A, b, hierarchy.aspreconditioner(), tol=1e-10)

    assert report.converged
    assert np.allclose(A @ x, b, atol=1e-8)
