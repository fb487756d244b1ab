from __future__ import annotations

import logging
import time
from typing import Callable
from typing import Optional
from typing import Tuple

import numpy as np
import scipy.sparse as sp

from meshfree_poisson.errors import CapExceededError
from meshfree_poisson.errors import DimensionMismatchError
from meshfree_poisson.linalg.dense import DEFAULT_ORACLE_CAP
from meshfree_poisson.linalg.dense import to_dense
from meshfree_poisson.linalg.sparse import as_csr
from meshfree_poisson.models.reports import SolveReport
from meshfree_poisson.multilevel.two_grid import TwoGridOperator

logger = logging.getLogger(__name__)

# relative residuals above this count as divergence
DIVERGENCE_THRESHOLD = 1e6
# entries above minus this count as nonnegative
NONNEGATIVE_TOLERANCE = 1e-12


def amli_iterate(
    op: TwoGridOperator,
    A: Optional[sp.spmatrix],
    b: np.ndarray,
    x0: Optional[np.ndarray] = None,
    tol: float = 1e-10,
    max_iter: int = 500,
) -> Tuple[np.ndarray, SolveReport]:
    """Stationary iteration x <- x + M^-1 (b - A x)."""
    started = time.perf_counter()
    A = op.A if A is None else as_csr(A)
    b = np.asarray(b, dtype=float)
    if A.shape[0] != b.shape[0] or A.shape != op.A.shape:
        raise DimensionMismatchError("operator, matrix and right-hand side differ")

    solver = f"{op.variant.name.lower()}-{op.fine_kind.name.lower()}"
    x = np.zeros(b.shape[0]) if x0 is None else np.array(x0, dtype=float)

    norm_b = float(np.linalg.norm(b))
    if norm_b == 0.0:
        return np.zeros_like(b), SolveReport(
            solver=solver,
            converged=True,
            iterations=0,
            residual_history=[0.0],
        )

    history = [float(np.linalg.norm(b - A @ x)) / norm_b]
    converged = history[0] <= tol
    diverged = False
    iterations = 0
    while not converged and iterations < max_iter:
        x = op.step(x, b)
        iterations += 1
        relres = float(np.linalg.norm(b - A @ x)) / norm_b
        history.append(relres)

        if not np.isfinite(relres) or relres > DIVERGENCE_THRESHOLD:
            diverged = True
            logger.info("%s diverged after %d steps", solver, iterations)
            break
        converged = relres <= tol

    return x, SolveReport(
        solver=solver,
        converged=converged,
        iterations=iterations,
        residual_history=history,
        diverged=diverged,
        wall_time=time.perf_counter() - started,
    )


def iteration_matrix(
    op: TwoGridOperator,
    A: Optional[sp.spmatrix] = None,
    cap: int = DEFAULT_ORACLE_CAP,
) -> np.ndarray:
    """Dense T = I - M^-1 A, column j being one step applied to e_j with b = 0."""
    n = op.n
    if n > cap:
        raise CapExceededError(n, cap)
    if A is not None and as_csr(A).shape != op.A.shape:
        raise DimensionMismatchError("matrix does not match the operator")

    return op.step(np.eye(n), np.zeros((n, n)))


def weak_regular_first_type(
    M_inv_apply: Callable[[np.ndarray], np.ndarray],
    N,
    n: int,
    cap: int = DEFAULT_ORACLE_CAP,
) -> bool:
    """A = M - N is weak regular of the first type iff M^-1 >= 0 and M^-1 N >= 0.

    `M_inv_apply` maps the identity (or any n x k block) to M^-1 applied columnwise.
    """
    if n > cap:
        raise CapExceededError(n, cap)

    M_inv = np.asarray(M_inv_apply(np.eye(n)), dtype=float).reshape(n, n)
    product = M_inv @ to_dense(N)
    return bool(
        np.all(M_inv >= -NONNEGATIVE_TOLERANCE)
        and np.all(product >= -NONNEGATIVE_TOLERANCE),
    )


def induced_inverse(op: TwoGridOperator, cap: int = DEFAULT_ORACLE_CAP) -> np.ndarray:
    if op.n > cap:
        raise CapExceededError(op.n, cap)

    return op.apply(np.eye(op.n))
