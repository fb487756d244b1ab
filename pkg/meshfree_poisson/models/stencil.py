from __future__ import annotations

from abc import ABC
from abc import abstractmethod
from dataclasses import dataclass
from typing import Optional
from typing import Union

import numpy as np

from meshfree_poisson.models.constraints import ConstraintSystem


@dataclass(frozen=True, eq=False)
class Stencil:
    center_coeff: float
    coeffs: np.ndarray
    neighbors: np.ndarray
    positive: bool
    minimal: bool
    pivot_count: Optional[int] = None
    objective: Optional[float] = None

    @property
    def m(self) -> int:
        return int(self.coeffs.shape[0])

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.coeffs))


@dataclass(frozen=True)
class Infeasible:
    """The constraint polyhedron {V s = b, s >= 0} is empty."""

    phase_one_objective: float
    pivot_count: int = 0


StencilResult = Union[Stencil, Infeasible]


class StencilGenerator(ABC):
    def __init__(self, alpha: Optional[float] = None) -> None:
        # exponent the systems are built with, None when they arrive prebuilt
        self.alpha = alpha

    @abstractmethod
    def calculate(self, system: ConstraintSystem) -> StencilResult:
        ...
