from __future__ import annotations

from enum import IntEnum


class PointKind(IntEnum):
    INTERIOR = 0
    DIRICHLET = 1
    NEUMANN = 2

    @property
    def letter(self) -> str:
        return "IDN"[self]


class ConstraintKind(IntEnum):
    LAPLACE = 0
    NEUMANN_DERIVATIVE = 1


class StencilMethod(IntEnum):
    LSQ = 0
    L1 = 1

    @classmethod
    def parse(cls, name: str) -> StencilMethod:
        try:
            return cls[name.upper()]
        except KeyError:
            raise NotImplementedError(f"no stencil method named {name!r}") from None


class FineKind(IntEnum):
    JACOBI = 0
    GAUSS_SEIDEL = 1
    ILU0 = 2
    EXACT = 3

    @classmethod
    def parse(cls, name: str) -> FineKind:
        aliases = {"gs": cls.GAUSS_SEIDEL, "gaussseidel": cls.GAUSS_SEIDEL}
        key = name.lower().replace("-", "").replace("_", "")
        if key in aliases:
            return aliases[key]
        try:
            return cls[name.upper()]
        except KeyError:
            raise NotImplementedError(f"no fine block approximation {name!r}") from None


class AmliVariant(IntEnum):
    AMLI = 0
    MAMLI = 1
    RMAMLI = 2
    SMAMLI = 3

    @classmethod
    def parse(cls, name: str) -> AmliVariant:
        try:
            return cls[name.upper()]
        except KeyError:
            raise NotImplementedError(f"no AMLI variant named {name!r}") from None
