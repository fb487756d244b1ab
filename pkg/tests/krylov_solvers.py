from __future__ import annotations

import numpy as np
import pytest
import scipy.sparse as sp

from meshfree_poisson.bench.corpus import poisson_1d
from meshfree_poisson.bench.corpus import poisson_2d
from meshfree_poisson.errors import DimensionMismatchError
from meshfree_poisson.errors import ZeroPivotError
from meshfree_poisson.krylov.bicgstab import bicgstab
from meshfree_poisson.krylov.ilu0 import ilu0
from meshfree_poisson.krylov.stationary import direct_solve
from meshfree_poisson.krylov.stationary import gauss_seidel_iterate
from meshfree_poisson.krylov.stationary import gauss_seidel_iteration_matrix
from meshfree_poisson.krylov.stationary import jacobi_iterate

# how far solutions can be from a dense reference solve
TOLERANCE = 1e-8


def test_identity_converges_at_once() -> None:
    b = np.array([1.0, -2.0, 3.0])
    x, report = bicgstab(sp.identity(3, format="csr"), b)

    assert np.allclose(x, b)
    assert report.converged
    assert report.iterations <= 1


def test_zero_right_hand_side() -> None:
    x, report = bicgstab(poisson_1d(5), np.zeros(5))

    assert np.array_equal(x, np.zeros(5))
    assert report.converged
    assert report.iterations == 0


def test_poisson_against_dense_solve() -> None:
    A = poisson_1d(50)
    b = np.linspace(-1.0, 1.0, 50)

    x, report = bicgstab(A, b, tol=1e-12, max_iter=500)

    assert report.converged
    assert report.residual_history[-1] <= 1e-12
    assert np.allclose(x, np.linalg.solve(A.toarray(), b), rtol=1e-6, atol=TOLERANCE)


def test_non_symmetric_system() -> None:
    A = poisson_2d(8) + sp.diags([0.3], [1], shape=(64, 64))
    b = np.ones(64)

    x, report = bicgstab(A, b, ilu0(A).aslinearoperator(), tol=1e-12)

    assert report.converged
    assert np.allclose(A @ x, b, atol=TOLERANCE)


def test_size_mismatch() -> None:
    with pytest.raises(DimensionMismatchError):
        bicgstab(poisson_1d(4), np.ones(5))


def test_ilu0_is_exact_on_tridiagonal_matrices() -> None:
    A = poisson_1d(20)
    factors = ilu0(A)

    assert np.allclose((factors.L @ factors.U).toarray(), A.toarray())
    assert np.allclose(factors.L.diagonal(), 1.0)

    b = np.arange(20, dtype=float)
    _, report = bicgstab(A, b, factors.aslinearoperator(), tol=1e-10)
    assert report.converged
    assert report.iterations <= 2


def test_ilu0_keeps_the_pattern() -> None:
    A = poisson_2d(5)
    factors = ilu0(A)

    pattern = A.copy()
    pattern.data[:] = 1.0
    product = factors.L @ factors.U
    # ILU(0) matches A on its own pattern
    assert np.allclose(product.multiply(pattern).toarray(), A.toarray())
    assert factors.L.nnz + factors.U.nnz == A.nnz + 25


def test_ilu0_zero_pivot() -> None:
    with pytest.raises(ZeroPivotError) as info:
        ilu0(sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 1.0]])))

    assert info.value.row == 0


def test_jacobi_on_a_diagonal_matrix() -> None:
    A = sp.diags([2.0, 4.0, 8.0]).tocsr()

    x = jacobi_iterate(A, np.array([2.0, 4.0, 8.0]), sweeps=1)

    assert np.allclose(x, 1.0)


def test_gauss_seidel_contracts() -> None:
    A = poisson_1d(10)
    b = np.ones(10)
    exact = np.linalg.solve(A.toarray(), b)

    x = gauss_seidel_iterate(A, b, sweeps=400)
    assert np.allclose(x, exact, atol=1e-6)

    T = gauss_seidel_iteration_matrix(A)
    assert np.abs(np.linalg.eigvals(T)).max() < 1.0


def test_direct_solve() -> None:
    A = poisson_1d(10)
    b = np.ones(10)

    x, report = direct_solve(A, b)

    assert report.converged
    assert report.solver == "direct"
    assert np.allclose(A @ x, b)


def test_gauss_seidel_beats_jacobi() -> None:
    A = poisson_1d(30)
    rng = np.random.default_rng(2)
    expected = rng.uniform(-1.0, 1.0, 30)
    b = A @ expected

    jacobi_error = np.linalg.norm(jacobi_iterate(A, b, sweeps=100) - expected)
    gs_error = np.linalg.norm(gauss_seidel_iterate(A, b, sweeps=100) - expected)

    assert gs_error < jacobi_error


def test_exact_preconditioner_converges_in_one_iteration() -> None:
    A = poisson_1d(30)
    b = np.linspace(1.0, 2.0, 30)

    x, report = bicgstab(A, b, np.linalg.inv(A.toarray()), tol=1e-10)

    assert report.converged
    assert report.iterations <= 1
    assert np.allclose(x, np.linalg.solve(A.toarray(), b), rtol=1e-8)
