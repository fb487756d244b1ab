from __future__ import annotations

import csv
from pathlib import Path
from typing import Any
from typing import Dict
from typing import List
from typing import Optional
from typing import Union

from pydantic import BaseModel
from pydantic import Field


class StructureReport(BaseModel):
    n: int
    nnz: int
    is_z: bool
    is_l: bool
    weakly_dd: bool
    strictly_dd_rows: List[int]
    essentially_irreducible: bool
    essentially_dd: bool
    m_matrix_by_sufficient_condition: bool
    # None when the dense oracle was not run
    m_matrix_by_oracle: Optional[bool] = None
    inverse_positive_by_oracle: Optional[bool] = None
    # false when the oracle certifies an M-matrix that is not a Z-matrix
    consistent: bool = True
    offending_rows: Dict[str, List[int]] = Field(default_factory=dict)


class SolveReport(BaseModel):
    solver: str
    converged: bool
    iterations: int
    residual_history: List[float] = Field(default_factory=list)
    breakdown: bool = False
    breakdown_reason: Optional[str] = None
    diverged: bool = False
    wall_time: float = 0.0

    @property
    def final_residual(self) -> float:
        if not self.residual_history:
            return float("nan")

        return self.residual_history[-1]

    def write_history_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["iteration", "relres"])
            for iteration, relres in enumerate(self.residual_history):
                writer.writerow([iteration, repr(relres)])


class HierarchySummary(BaseModel):
    levels: int
    sizes: List[int]
    nnz: List[int]
    operator_complexity: float
    cycle: str
    truncated: bool = False


class BenchReport(BaseModel):
    study: str
    seed: int
    config_hash: str
    records: List[Dict[str, Any]] = Field(default_factory=list)
    derived: Dict[str, Any] = Field(default_factory=dict)

    def file_stem(self) -> str:
        return f"{self.study}_{self.seed}"

    def write(self, directory: Union[str, Path]) -> Path:
        """Writes `<study>_<seed>.json` and `<study>_<seed>.csv` into `directory`."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)

        json_path = directory / f"{self.file_stem()}.json"
        json_path.write_text(self.model_dump_json(indent=2))

        columns: List[str] = []
        for record in self.records:
            columns.extend(key for key in record if key not in columns)

        with open(directory / f"{self.file_stem()}.csv", "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=columns)
            writer.writeheader()
            writer.writerows(self.records)

        return json_path
