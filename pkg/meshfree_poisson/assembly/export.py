from __future__ import annotations

import json
from pathlib import Path
from typing import Any
from typing import Dict
from typing import Tuple
from typing import Union

import numpy as np
import scipy.sparse as sp

from meshfree_poisson.linalg.matrix_market import mm_read
from meshfree_poisson.linalg.matrix_market import mm_write
from meshfree_poisson.models.kinds import PointKind
from meshfree_poisson.models.system import LinearSystem


def _side(prefix: Path, extension: str) -> Path:
    return prefix.with_name(prefix.name + extension)


def export_system(system: LinearSystem, prefix: Union[str, Path]) -> Dict[str, Path]:
    """Writes `<prefix>.mtx`, `<prefix>.rhs` (one value per line) and
    `<prefix>.json`."""
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    paths = {
        "matrix": _side(prefix, ".mtx"),
        "rhs": _side(prefix, ".rhs"),
        "metadata": _side(prefix, ".json"),
    }

    mm_write(paths["matrix"], system.A)
    paths["rhs"].write_text("".join(f"{value!r}\n" for value in system.rhs.tolist()))

    metadata = {
        "method": system.method.name.lower(),
        "params": system.params,
        "cloud_hash": system.cloud.content_hash(),
        "n": system.n,
        "nnz": int(system.A.nnz),
        "dirichlet_rows": system.cloud.indices_of(PointKind.DIRICHLET).tolist(),
    }
    paths["metadata"].write_text(json.dumps(metadata, indent=2))
    return paths


def load_system(
    prefix: Union[str, Path],
) -> Tuple[sp.csr_matrix, np.ndarray, Dict[str, Any]]:
    """Matrix, right-hand side and metadata of an exported system. Missing side files
    give a zero right-hand side and empty metadata."""
    prefix = Path(prefix)
    if prefix.suffix == ".mtx":
        prefix = prefix.with_name(prefix.stem)

    A = mm_read(_side(prefix, ".mtx"))

    rhs_path = _side(prefix, ".rhs")
    if rhs_path.exists():
        rhs = np.array([float(line) for line in rhs_path.read_text().split()])
    else:
        rhs = np.zeros(A.shape[0])

    metadata_path = _side(prefix, ".json")
    metadata = json.loads(metadata_path.read_text()) if metadata_path.exists() else {}
    return A, rhs, metadata
