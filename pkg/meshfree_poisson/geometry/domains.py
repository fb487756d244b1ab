from __future__ import annotations

import math
from typing import Dict
from typing import List
from typing import Literal
from typing import Optional
from typing import Tuple
from typing import Union

import numpy as np
from pydantic import BaseModel
from pydantic import Field
from pydantic import model_validator

from meshfree_poisson.errors import EmptyDomainError

BoundaryCondition = Literal["dirichlet", "neumann"]

FACE_NAMES = ("x-", "x+", "y-", "y+", "z-", "z+")


class DiskDomain(BaseModel):
    """Disk with equidistant boundary points and either a random interior fill
    (`interior_points`) or a, possibly jittered, grid fill (`spacing`)."""

    kind: Literal["disk"] = "disk"
    center: Tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0
    boundary_points: int = Field(256, ge=3)
    interior_points: Optional[int] = Field(None, ge=1)
    spacing: Optional[float] = Field(None, gt=0.0)
    jitter: float = 0.0
    boundary: BoundaryCondition = "dirichlet"
    seed: int = 1

    @model_validator(mode="after")
    def _check(self) -> DiskDomain:
        if self.radius <= 0.0:
            raise EmptyDomainError("disk radius must be positive")
        if not 0.0 <= self.jitter < 0.5:
            raise ValueError("jitter must lie in [0, 0.5)")
        if (self.interior_points is None) == (self.spacing is None):
            raise ValueError("give exactly one of interior_points and spacing")

        return self

    @property
    def dim(self) -> int:
        return 2

    @property
    def measure(self) -> float:
        return math.pi * self.radius**2

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        center = np.asarray(self.center)
        return center - self.radius, center + self.radius

    def contains(self, x: np.ndarray) -> np.ndarray:
        distance = np.linalg.norm(np.asarray(x) - np.asarray(self.center), axis=-1)
        return distance <= self.radius * (1.0 + 1e-12)

    def nominal_spacing(self) -> float:
        if self.spacing is not None:
            return self.spacing

        return math.sqrt(self.measure / self.interior_points)


class BoxDomain(BaseModel):
    """Axis-aligned box in 1, 2 or 3 dimensions. Faces are named x-, x+, y-, y+, z-,
    z+; faces missing from `boundary` are Dirichlet."""

    kind: Literal["box"] = "box"
    lower: List[float] = Field(default_factory=lambda: [0.0, 0.0])
    upper: List[float] = Field(default_factory=lambda: [1.0, 1.0])
    spacing: Optional[float] = Field(None, gt=0.0)
    interior_points: Optional[int] = Field(None, ge=1)
    jitter: float = 0.0
    boundary: Dict[str, BoundaryCondition] = Field(default_factory=dict)
    seed: int = 1

    @model_validator(mode="after")
    def _check(self) -> BoxDomain:
        if len(self.lower) != len(self.upper) or len(self.lower) not in (1, 2, 3):
            raise ValueError("box bounds must have 1, 2 or 3 matching coordinates")
        if any(hi <= lo for lo, hi in zip(self.lower, self.upper)):
            raise EmptyDomainError("box has an empty extent")
        if not 0.0 <= self.jitter < 0.5:
            raise ValueError("jitter must lie in [0, 0.5)")
        if (self.interior_points is None) == (self.spacing is None):
            raise ValueError("give exactly one of interior_points and spacing")

        unknown = set(self.boundary) - set(FACE_NAMES[: 2 * len(self.lower)])
        if unknown:
            raise ValueError(f"unknown box faces {sorted(unknown)}")

        return self

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def measure(self) -> float:
        return float(np.prod(np.subtract(self.upper, self.lower)))

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.lower, dtype=float), np.asarray(self.upper, dtype=float)

    def contains(self, x: np.ndarray) -> np.ndarray:
        lo, hi = self.bounds()
        x = np.asarray(x)
        return np.all((x >= lo) & (x <= hi), axis=-1)

    def nominal_spacing(self) -> float:
        if self.spacing is not None:
            return self.spacing

        return (self.measure / self.interior_points) ** (1.0 / self.dim)

    def condition(self, face: str) -> BoundaryCondition:
        return self.boundary.get(face, "dirichlet")


DomainSpec = Union[DiskDomain, BoxDomain]


class DomainEnvelope(BaseModel):
    domain: DomainSpec = Field(discriminator="kind")
