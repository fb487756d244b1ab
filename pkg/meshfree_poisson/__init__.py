from __future__ import annotations

from typing import Optional
from typing import Union

from meshfree_poisson.assembly.assemble import assemble
from meshfree_poisson.assembly.structure import analyze_matrix
from meshfree_poisson.geometry.cloud import generate_cloud
from meshfree_poisson.models.constraints import ConstraintSystem
from meshfree_poisson.models.kinds import StencilMethod
from meshfree_poisson.models.stencil import StencilResult
from meshfree_poisson.stencils.least_squares import LeastSquaresStencilGenerator
from meshfree_poisson.stencils.linear_minimization import (
    LinearMinimizationStencilGenerator,
)

__name__ = "meshfree_poisson"
__author__ = "tsunyoku"
__version__ = "0.1.0"
__all__ = (
    "analyze_matrix",
    "assemble",
    "calculate_stencil",
    "generate_cloud",
)


def _calculate_lsq(system: ConstraintSystem, alpha: Optional[float]) -> StencilResult:
    generator = LeastSquaresStencilGenerator(alpha)
    return generator.calculate(system)


def _calculate_l1(system: ConstraintSystem, alpha: Optional[float]) -> StencilResult:
    generator = LinearMinimizationStencilGenerator(alpha)
    return generator.calculate(system)


def calculate_stencil(
    system: ConstraintSystem,
    method: Union[StencilMethod, str] = StencilMethod.L1,
    alpha: Optional[float] = None,
) -> StencilResult:
    """`alpha` rebuilds the weights as distance^-alpha, otherwise the system's own
    weights are used."""
    if isinstance(method, str):
        method = StencilMethod.parse(method)
    if alpha is not None:
        system = system.reweighted(alpha)

    if method == StencilMethod.LSQ:
        result = _calculate_lsq(system, alpha)
    elif method == StencilMethod.L1:
        result = _calculate_l1(system, alpha)
    else:
        raise NotImplementedError(
            f"no stencil generator found for method {method}",
        )

    return result
