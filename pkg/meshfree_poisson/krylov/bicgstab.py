from __future__ import annotations

import logging
import time
from typing import Optional
from typing import Tuple

import numpy as np
from scipy.sparse.linalg import LinearOperator
from scipy.sparse.linalg import aslinearoperator

from meshfree_poisson.errors import DimensionMismatchError
from meshfree_poisson.models.reports import SolveReport

logger = logging.getLogger(__name__)

BREAKDOWN_TOLERANCE = 1e-30


def _identity(n: int) -> LinearOperator:
    return LinearOperator((n, n), matvec=lambda v: v, dtype=float)


def bicgstab(
    A,
    b: np.ndarray,
    precond=None,
    tol: float = 1e-10,
    max_iter: int = 1000,
    x0: Optional[np.ndarray] = None,
    seed: int = 0,
) -> Tuple[np.ndarray, SolveReport]:
    """BiCGstab with right preconditioning: iterates on A M y = b with x = M y, so the
    recurrence residual is the true residual of x.

    Breakdown (|rho|, |omega| or the step denominator below 1e-30) triggers one
    restart with a seeded random shadow residual before it is reported.
    """
    started = time.perf_counter()
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if A.shape != (n, n):
        raise DimensionMismatchError(f"matrix {A.shape} does not match rhs size {n}")
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")

    A = aslinearoperator(A)
    M = _identity(n) if precond is None else aslinearoperator(precond)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)

    def report(converged: bool, iterations: int, **kwargs) -> SolveReport:
        return SolveReport(
            solver="bicgstab",
            converged=converged,
            iterations=iterations,
            residual_history=history,
            wall_time=time.perf_counter() - started,
            **kwargs,
        )

    norm_b = float(np.linalg.norm(b))
    if norm_b == 0.0:
        history = [0.0]
        return np.zeros(n), report(True, 0)

    r = b - A.matvec(x)
    history = [float(np.linalg.norm(r)) / norm_b]
    if history[-1] <= tol:
        return x, report(True, 0)

    rng = np.random.default_rng(seed)
    shadow = r.copy()
    p = r.copy()
    rho = float(shadow @ r)
    restarted = False
    iterations = 0

    while iterations < max_iter:
        iterations += 1

        Mp = M.matvec(p)
        AMp = A.matvec(Mp)
        denominator = float(shadow @ AMp)
        breakdown: Optional[str] = None
        if (
            abs(rho) < BREAKDOWN_TOLERANCE
            or not abs(denominator) >= BREAKDOWN_TOLERANCE
        ):
            breakdown = "rho"
        else:
            alpha = rho / denominator
            s = r - alpha * AMp

            norm_s = float(np.linalg.norm(s))
            if norm_s / norm_b <= tol:
                x = x + alpha * Mp
                true_relres = float(np.linalg.norm(b - A.matvec(x))) / norm_b
                history.append(true_relres)
                if true_relres <= tol:
                    return x, report(True, iterations)

                # residual drift: continue from the true residual
                r = b - A.matvec(x)
                p = r.copy()
                rho = float(shadow @ r)
                continue

            Ms = M.matvec(s)
            AMs = A.matvec(Ms)
            norm_AMs = float(AMs @ AMs)
            omega = float(AMs @ s) / norm_AMs if norm_AMs > 0.0 else 0.0
            if not np.isfinite(omega) or abs(omega) < BREAKDOWN_TOLERANCE:
                breakdown = "omega"
            else:
                x = x + alpha * Mp + omega * Ms
                r = s - omega * AMs

                relres = float(np.linalg.norm(r)) / norm_b
                if not np.isfinite(relres):
                    history.append(relres)
                    return x, report(False, iterations, diverged=True)

                history.append(relres)
                if relres <= tol:
                    r = b - A.matvec(x)
                    true_relres = float(np.linalg.norm(r)) / norm_b
                    if true_relres <= tol:
                        history[-1] = true_relres
                        return x, report(True, iterations)
                    p = r.copy()
                    rho = float(shadow @ r)
                    continue

                rho_next = float(shadow @ r)
                beta = (rho_next / rho) * (alpha / omega)
                rho = rho_next
                p = r + beta * (p - omega * AMp)
                continue

        if restarted:
            logger.warning(
                "bicgstab breakdown (%s) after %d iterations",
                breakdown,
                iterations,
            )
            return x, report(
                False,
                iterations,
                breakdown=True,
                breakdown_reason=f"{breakdown} below {BREAKDOWN_TOLERANCE:g}",
            )

        logger.info("bicgstab breakdown (%s), restarting with a new shadow", breakdown)
        restarted = True
        r = b - A.matvec(x)
        shadow = rng.standard_normal(n)
        p = r.copy()
        rho = float(shadow @ r)

    return x, report(False, iterations)
