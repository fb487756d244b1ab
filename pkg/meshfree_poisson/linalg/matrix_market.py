from __future__ import annotations

from pathlib import Path
from typing import Union

import numpy as np
import scipy.io
import scipy.sparse as sp

from meshfree_poisson.errors import MatrixMarketError
from meshfree_poisson.errors import UnsupportedSymmetryError
from meshfree_poisson.linalg.sparse import as_csr

# enough significant digits to reproduce every double exactly
MM_PRECISION = 17


def mm_write(path: Union[str, Path], A: sp.spmatrix) -> None:
    """Writes a `matrix coordinate real general` file with 1-based indices."""
    scipy.io.mmwrite(
        str(path),
        sp.coo_matrix(as_csr(A)),
        field="real",
        precision=MM_PRECISION,
        symmetry="general",
    )


def mm_read(path: Union[str, Path]) -> sp.csr_matrix:
    try:
        _, _, _, layout, field, symmetry = scipy.io.mminfo(str(path))
    except (ValueError, OSError, IndexError, RuntimeError) as exc:
        raise MatrixMarketError(f"malformed Matrix Market header in {path}") from exc

    if layout != "coordinate":
        raise MatrixMarketError(f"expected a coordinate matrix, found {layout!r}")
    if field not in ("real", "integer"):
        raise MatrixMarketError(f"unsupported value field {field!r}")
    if symmetry != "general":
        raise UnsupportedSymmetryError(
            f"only general matrices are supported, not {symmetry}",
        )

    try:
        coo = sp.coo_matrix(scipy.io.mmread(str(path)))
    except (ValueError, IndexError, RuntimeError) as exc:
        raise MatrixMarketError(f"cannot parse {path}: {exc}") from exc

    positions = coo.row.astype(np.int64) * coo.shape[1] + coo.col
    if np.unique(positions).size != positions.size:
        raise MatrixMarketError(f"{path} contains duplicate entries")

    return as_csr(coo)
