from __future__ import annotations

from dataclasses import dataclass
from dataclasses import replace
from typing import Optional

import numpy as np

from meshfree_poisson.models.kinds import ConstraintKind


@dataclass(frozen=True, eq=False)
class ConstraintSystem:
    """Equality constraints V s = b for the m coefficients of one stencil, with the
    weights w_i = distance_i^-alpha. Column i belongs to point `neighbors[i]`,
    `degrees` holds the polynomial degree of every row and `scale` the largest
    neighbor distance."""

    V: np.ndarray
    b: np.ndarray
    weights: np.ndarray
    kind: ConstraintKind
    neighbors: np.ndarray
    dim: int
    degrees: np.ndarray
    scale: float
    normal: Optional[np.ndarray] = None

    @property
    def k(self) -> int:
        return int(self.V.shape[0])

    @property
    def m(self) -> int:
        return int(self.V.shape[1])

    @property
    def order(self) -> int:
        # derivative order of the approximated operator
        return 2 if self.kind == ConstraintKind.LAPLACE else 1

    @property
    def distances(self) -> np.ndarray:
        # the first dim rows are the offsets
        return np.linalg.norm(self.V[: self.dim], axis=0)

    def reweighted(self, alpha: float) -> ConstraintSystem:
        if alpha < 1.0:
            raise ValueError("weight exponent must be at least 1")

        return replace(self, weights=self.distances ** (-alpha))

    def scaled(self) -> ScaledConstraints:
        """The same problem in units of `scale`: row i is divided by scale^degree_i,
        the unknowns become scale^order * s and the weights (distance/scale)^-alpha
        up to a common factor."""
        row_scale = self.scale ** self.degrees.astype(float)
        V = self.V / row_scale[:, None]
        b = self.b * self.scale ** (self.order - self.degrees.astype(float))
        weights = self.weights / self.weights.min()
        return ScaledConstraints(V, b, weights, self.scale**self.order)


@dataclass(frozen=True, eq=False)
class ScaledConstraints:
    V: np.ndarray
    b: np.ndarray
    weights: np.ndarray
    # scaled unknowns are unit_factor * s
    unit_factor: float
