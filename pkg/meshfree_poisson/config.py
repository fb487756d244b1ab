from __future__ import annotations

import hashlib
from typing import Literal
from typing import Optional

from pydantic import BaseModel
from pydantic import Field
from pydantic import model_validator


class GeometryConfig(BaseModel):
    # rounded down to a power of two so that the sample grids nest
    mesh_size_samples: int = Field(128, ge=16)
    # icosphere subdivision level for the 3d cone sweep (level 6: 40962 directions)
    cone_sweep_level: int = Field(6, ge=4, le=8)
    # verdicts within this many degrees of the cone threshold are "unknown"
    cone_unknown_band_deg: float = Field(1.0, gt=0.0)
    radius_margin: float = Field(0.05, ge=0.0)
    min_separation_factor: float = Field(0.7, gt=0.0, lt=1.0)
    rejection_attempts_per_point: int = Field(200, ge=1)


class StencilConfig(BaseModel):
    method: Literal["lsq", "l1"] = "l1"
    # None picks the method default: 2 for lsq, 4 for l1
    alpha: Optional[float] = Field(None, ge=1.0)
    # exactly one neighborhood rule applies: neighbors, radius, radius_factor, or the
    # candidate radius derived from the estimated mesh size when none are given
    neighbors: Optional[int] = Field(None, ge=1)
    radius: Optional[float] = Field(None, gt=0.0)
    radius_factor: Optional[float] = Field(None, gt=0.0)
    radius_growth: float = Field(1.5, gt=1.0)
    max_radius_growths: int = Field(2, ge=0)

    @model_validator(mode="after")
    def _single_neighborhood_rule(self) -> StencilConfig:
        rules = [self.neighbors, self.radius, self.radius_factor]
        if sum(rule is not None for rule in rules) > 1:
            raise ValueError("choose at most one of neighbors, radius, radius_factor")

        return self

    @property
    def effective_alpha(self) -> float:
        if self.alpha is not None:
            return self.alpha

        return 2.0 if self.method == "lsq" else 4.0


class KrylovConfig(BaseModel):
    tol: float = Field(1e-10, gt=0.0)
    max_iter: int = Field(1000, ge=1)
    seed: int = 0


class TwoGridConfig(BaseModel):
    variant: Literal["amli", "mamli", "rmamli", "smamli"] = "amli"
    coarsening: Literal["default", "rs"] = "default"
    fine: Literal["jacobi", "gs", "ilu0", "exact"] = "gs"
    theta: float = Field(0.25, gt=0.0, lt=1.0)
    tol: float = Field(1e-10, gt=0.0)
    max_iter: int = Field(500, ge=1)


class AmgConfig(BaseModel):
    theta: float = Field(0.25, gt=0.0, lt=1.0)
    smoother: Literal["gs", "jacobi"] = "gs"
    pre_sweeps: int = Field(1, ge=0)
    post_sweeps: int = Field(1, ge=0)
    coarsest_cap: int = Field(40, ge=1)
    cycle: Literal["V", "F"] = "V"
    max_levels: int = Field(25, ge=1)


class OracleConfig(BaseModel):
    cap: int = Field(600, ge=1)


class Settings(BaseModel):
    seed: int = 1
    geometry: GeometryConfig = Field(default_factory=GeometryConfig)
    stencil: StencilConfig = Field(default_factory=StencilConfig)
    krylov: KrylovConfig = Field(default_factory=KrylovConfig)
    two_grid: TwoGridConfig = Field(default_factory=TwoGridConfig)
    amg: AmgConfig = Field(default_factory=AmgConfig)
    oracle: OracleConfig = Field(default_factory=OracleConfig)

    def config_hash(self) -> str:
        canonical = self.model_dump_json()
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]
