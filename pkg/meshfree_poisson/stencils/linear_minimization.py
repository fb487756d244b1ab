from __future__ import annotations

from meshfree_poisson.models.constraints import ConstraintSystem
from meshfree_poisson.models.stencil import Infeasible
from meshfree_poisson.models.stencil import StencilGenerator
from meshfree_poisson.models.stencil import StencilResult
from meshfree_poisson.stencils.constraints import make_stencil
from meshfree_poisson.stencils.simplex import simplex_solve


class LinearMinimizationStencilGenerator(StencilGenerator):
    """Minimizes sum s_i / w_i subject to V s = b and s >= 0.

    The simplex returns a vertex of the feasible polyhedron, so at most k of the m
    coefficients are nonzero.
    """

    def calculate(self, system: ConstraintSystem) -> StencilResult:
        scaled = system.scaled()
        result = simplex_solve(scaled.V, scaled.b, 1.0 / scaled.weights)
        if isinstance(result, Infeasible):
            return result

        coeffs = result.x / scaled.unit_factor
        return make_stencil(system, coeffs, pivot_count=result.pivot_count)


def lp_stencil(system: ConstraintSystem) -> StencilResult:
    return LinearMinimizationStencilGenerator().calculate(system)
