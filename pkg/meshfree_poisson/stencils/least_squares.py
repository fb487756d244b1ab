from __future__ import annotations

import numpy as np
import scipy.linalg

from meshfree_poisson.errors import RankDeficientError
from meshfree_poisson.models.constraints import ConstraintSystem
from meshfree_poisson.models.stencil import Stencil
from meshfree_poisson.models.stencil import StencilGenerator
from meshfree_poisson.stencils.constraints import make_stencil

# pivots of V W V^T below this fraction of its norm mean degenerate geometry
RANK_TOLERANCE = 1e-12


def lsq_flops(k: int, m: int) -> int:
    if k < 1 or m < 1:
        raise ValueError("k and m must be positive")

    return k * (k + 1) * m + k**3 // 3


class LeastSquaresStencilGenerator(StencilGenerator):
    """Minimizes sum s_i^2 / w_i subject to V s = b:

        s = W V^T (V W V^T)^-1 b
    """

    def calculate(self, system: ConstraintSystem) -> Stencil:
        if system.m < system.k:
            raise RankDeficientError(
                f"{system.m} neighbors cannot satisfy {system.k} constraints",
            )

        scaled = system.scaled()
        weighted = scaled.V * scaled.weights
        gram = weighted @ scaled.V.T

        lu, piv = scipy.linalg.lu_factor(gram, check_finite=False)
        pivots = np.abs(np.diag(lu))
        if pivots.min() < RANK_TOLERANCE * np.abs(gram).sum(axis=1).max():
            raise RankDeficientError("V W V^T is numerically singular")

        multipliers = scipy.linalg.lu_solve((lu, piv), scaled.b)
        coeffs = weighted.T @ multipliers / scaled.unit_factor
        return make_stencil(system, coeffs)


def lsq_stencil(system: ConstraintSystem) -> Stencil:
    return LeastSquaresStencilGenerator().calculate(system)
