from __future__ import annotations

import math

import numpy as np
import pytest
import scipy.sparse as sp

from meshfree_poisson.bench.corpus import poisson_1d
from meshfree_poisson.bench.corpus import poisson_2d
from meshfree_poisson.errors import CapExceededError
from meshfree_poisson.errors import SingularFineBlockError
from meshfree_poisson.krylov.bicgstab import bicgstab
from meshfree_poisson.models.kinds import AmliVariant
from meshfree_poisson.models.kinds import FineKind
from meshfree_poisson.models.system import CfSplitting
from meshfree_poisson.multilevel.analysis import amli_iterate
from meshfree_poisson.multilevel.analysis import induced_inverse
from meshfree_poisson.multilevel.analysis import iteration_matrix
from meshfree_poisson.multilevel.analysis import weak_regular_first_type
from meshfree_poisson.multilevel.coarsening import default_coarsening
from meshfree_poisson.multilevel.coarsening import ruge_stueben_coarsening
from meshfree_poisson.multilevel.coarsening import strength_of_connection
from meshfree_poisson.multilevel.two_grid import build_two_grid

# how far dense operators can be from their hand-assembled counterparts
TOLERANCE = 1e-12


def _radius(T: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvals(T)).max())


def _last_two_coarse() -> CfSplitting:
    return CfSplitting.from_coarse(4, [2, 3])


def test_default_coarsening() -> None:
    assert default_coarsening(10).coarse.tolist() == [0, 1, 2, 3, 4]
    assert default_coarsening(3).coarse.tolist() == [0, 1]
    assert default_coarsening(2).fine.tolist() == [1]

    with pytest.raises(ValueError):
        default_coarsening(1)


def test_strength_of_connection() -> None:
    A = sp.csr_matrix(np.array([[4.0, -1.0, -0.1], [-1.0, 4.0, 0.5], [0.0, -2.0, 4.0]]))

    S = strength_of_connection(A, 0.25).toarray()

    assert np.array_equal(S, [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


def test_ruge_stueben_on_a_line() -> None:
    split = ruge_stueben_coarsening(poisson_1d(7))

    assert split.coarse.tolist() == [1, 3, 5]
    assert not split.fallback


def test_ruge_stueben_on_a_grid() -> None:
    split = ruge_stueben_coarsening(poisson_2d(4))

    assert 4 <= split.n_coarse <= 12
    S = strength_of_connection(poisson_2d(4), 0.25)
    for i in split.fine:
        strong = S.indices[S.indptr[i] : S.indptr[i + 1]]
        assert np.isin(strong, split.coarse).any()


def test_ruge_stueben_falls_back_without_couplings() -> None:
    split = ruge_stueben_coarsening(sp.identity(6, format="csr"))

    assert split.fallback
    assert split.coarse.tolist() == [0, 1, 2]


def test_exact_two_grid_on_two_unknowns() -> None:
    A = np.array([[2.0, -1.0], [-1.0, 2.0]])
    split = CfSplitting.from_coarse(2, [1])

    op = build_two_grid(A, split, FineKind.EXACT)
    assert np.allclose(op.schur, [[1.5]])
    assert np.allclose(iteration_matrix(op), 0.0, atol=TOLERANCE)

    # a 1x1 fine block is solved exactly by Jacobi as well
    jacobi = build_two_grid(A, split, FineKind.JACOBI)
    assert np.allclose(iteration_matrix(jacobi), 0.0, atol=TOLERANCE)

    x, report = amli_iterate(op, None, np.array([1.0, 0.0]))
    assert report.converged
    assert report.iterations == 1
    assert np.allclose(x, np.linalg.solve(A, [1.0, 0.0]))


def test_amli_jacobi_by_hand() -> None:
    A = poisson_1d(4)
    op = build_two_grid(A, _last_two_coarse(), FineKind.JACOBI, AmliVariant.AMLI)

    # S~ = [[1.5, -1], [-1, 2]] with the diagonal of A_FF as fine approximation
    assert np.allclose(op.schur, [[1.5, -1.0], [-1.0, 2.0]])

    expected_inverse = np.array(
        [
            [0.5, 0.0, 0.0, 0.0],
            [0.0, 0.75, 0.5, 0.25],
            [0.0, 0.5, 1.0, 0.5],
            [0.0, 0.25, 0.5, 0.75],
        ],
    )
    assert np.allclose(induced_inverse(op), expected_inverse, atol=TOLERANCE)

    T = iteration_matrix(op)
    expected = np.zeros((4, 4))
    expected[0, 1] = 0.5
    expected[1, 0] = 0.75
    expected[2, 0] = 0.5
    expected[3, 0] = 0.25
    assert np.allclose(T, expected, atol=TOLERANCE)
    assert abs(_radius(T) - math.sqrt(3.0 / 8.0)) <= 1e-10


def test_iteration_matrices_are_nonnegative_contractions() -> None:
    A = poisson_1d(4)

    for variant in (AmliVariant.AMLI, AmliVariant.MAMLI, AmliVariant.SMAMLI):
        op = build_two_grid(A, _last_two_coarse(), FineKind.JACOBI, variant)
        T = iteration_matrix(op)
        assert np.all(T >= -TOLERANCE)
        assert _radius(T) < 1.0

    # the reverse order is not sign preserving, only its radius is bounded
    op = build_two_grid(A, _last_two_coarse(), FineKind.JACOBI, AmliVariant.RMAMLI)
    assert _radius(iteration_matrix(op)) < 1.0


def test_multiplicative_orders_share_the_spectrum() -> None:
    A = poisson_2d(4)
    split = ruge_stueben_coarsening(A)

    forward = build_two_grid(A, split, FineKind.GAUSS_SEIDEL, AmliVariant.MAMLI)
    reverse = build_two_grid(A, split, FineKind.GAUSS_SEIDEL, AmliVariant.RMAMLI)

    forward_radius = _radius(iteration_matrix(forward))
    assert abs(forward_radius - _radius(iteration_matrix(reverse))) <= 1e-8


def test_fine_kinds_agree_when_exact() -> None:
    A = poisson_1d(8)
    split = default_coarsening(8)
    b = np.arange(8, dtype=float)

    exact = build_two_grid(A, split, FineKind.EXACT, AmliVariant.MAMLI)
    # the fine block of a tridiagonal matrix is factored exactly by ILU(0)
    ilu = build_two_grid(A, split, FineKind.ILU0, AmliVariant.MAMLI)

    assert np.allclose(exact.apply(b), ilu.apply(b), atol=1e-10)


def test_amli_iteration_converges_on_a_grid() -> None:
    A = poisson_2d(6)
    b = np.ones(36)

    for fine in (FineKind.JACOBI, FineKind.GAUSS_SEIDEL, FineKind.ILU0):
        op = build_two_grid(A, ruge_stueben_coarsening(A), fine, AmliVariant.SMAMLI)
        x, report = amli_iterate(op, A, b, tol=1e-10)

        assert report.converged
        assert report.solver == f"smamli-{fine.name.lower()}"
        assert np.allclose(A @ x, b, atol=1e-8)


def test_two_grid_as_preconditioner() -> None:
    A = poisson_2d(8)
    b = np.ones(64)
    op = build_two_grid(A, ruge_stueben_coarsening(A), FineKind.GAUSS_SEIDEL)

    x, report = bicgstab(A, b, op.aspreconditioner(), tol=1e-10)

    assert report.converged
    assert report.iterations <= 30
    assert np.allclose(A @ x, b, atol=1e-8)


def test_zero_right_hand_side() -> None:
    op = build_two_grid(poisson_1d(4), _last_two_coarse(), FineKind.JACOBI)

    x, report = amli_iterate(op, None, np.zeros(4))

    assert report.converged
    assert report.iterations == 0
    assert np.array_equal(x, np.zeros(4))


def test_singular_fine_block() -> None:
    A = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 2.0]]))

    with pytest.raises(SingularFineBlockError):
        build_two_grid(A, CfSplitting.from_coarse(2, [1]), FineKind.JACOBI)


def test_iteration_matrix_cap() -> None:
    op = build_two_grid(poisson_1d(12), default_coarsening(12), FineKind.JACOBI)

    with pytest.raises(CapExceededError):
        iteration_matrix(op, cap=10)


def test_weak_regular_splittings() -> None:
    A = poisson_1d(6)
    dense = A.toarray()

    # Jacobi: M = D
    M = np.diag(np.diag(dense))
    assert weak_regular_first_type(lambda X: np.linalg.solve(M, X), M - dense, 6)

    # Gauss-Seidel: M = D + L
    M = np.tril(dense)
    assert weak_regular_first_type(lambda X: np.linalg.solve(M, X), M - dense, 6)

    # positive off-diagonal coupling
    B = np.array([[1.0, 2.0], [0.0, 1.0]])
    assert not weak_regular_first_type(lambda X: X, np.eye(2) - B, 2)
