from __future__ import annotations

from typing import Sequence


class MeshfreeError(Exception):
    ...


class EmptyDomainError(MeshfreeError, ValueError):
    ...


class CloudGenerationError(MeshfreeError, ValueError):
    def __init__(self, message: str, achieved: int) -> None:
        super().__init__(f"{message} (achieved {achieved} points)")
        self.achieved = achieved


class DimensionMismatchError(MeshfreeError, ValueError):
    ...


class RankDeficientError(MeshfreeError, ArithmeticError):
    ...


class CycleLimitError(MeshfreeError, ArithmeticError):
    ...


class UnboundedError(MeshfreeError, ArithmeticError):
    ...


class SingularMatrixError(MeshfreeError, ArithmeticError):
    ...


class CapExceededError(MeshfreeError, ValueError):
    def __init__(self, n: int, cap: int) -> None:
        super().__init__(f"matrix size {n} exceeds the dense oracle cap {cap}")
        self.n = n
        self.cap = cap


class ZeroPivotError(MeshfreeError, ArithmeticError):
    def __init__(self, row: int) -> None:
        super().__init__(f"zero pivot in row {row}")
        self.row = row


class MatrixMarketError(MeshfreeError, ValueError):
    ...


class UnsupportedSymmetryError(MatrixMarketError):
    ...


class InvalidSplittingError(MeshfreeError, ValueError):
    ...


class SingularFineBlockError(SingularMatrixError):
    ...


class SingularSchurError(SingularMatrixError):
    ...


class AssemblyError(MeshfreeError, ArithmeticError):
    reason = "assembly failed"

    def __init__(self, points: Sequence[int]) -> None:
        self.points = list(points)
        shown = ", ".join(str(p) for p in self.points[:20])
        more = "" if len(self.points) <= 20 else f", ... ({len(self.points)} total)"
        super().__init__(f"{self.reason} at points [{shown}{more}]")


class InfeasibleStencilError(AssemblyError):
    reason = "no positive stencil exists"


class RankDeficientStencilError(AssemblyError):
    reason = "degenerate neighbor geometry"


class EmptyNeighborhoodError(AssemblyError):
    reason = "empty neighborhood"


class SolverFailureError(MeshfreeError, ArithmeticError):
    ...
