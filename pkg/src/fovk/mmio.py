"""Matrix Market input/output.

Reads both coordinate and array files (real, general or symmetric) and always
returns a dense array: sparse coordinate storage is accepted as an input
format only and densified on load.  Writing picks coordinate format for
mostly-zero matrices and array format otherwise, and uses symmetric storage
when the matrix is exactly symmetric.
"""

from __future__ import annotations

import numpy as np
import scipy.io
import scipy.sparse as sp

from .exceptions import MatrixMarketFormatError
from .linalg import as_matrix

__all__ = ["read_matrix", "write_matrix"]


def read_matrix(path):
    """Read a Matrix Market file into a dense ndarray."""
    try:
        M = scipy.io.mmread(str(path))
    except Exception as exc:  # scipy raises ValueError on malformed headers
        raise MatrixMarketFormatError(f"{path}: {exc}") from exc
    if sp.issparse(M):
        M = M.toarray()
    M = np.asarray(M)
    if np.iscomplexobj(M):
        raise MatrixMarketFormatError(f"{path}: complex matrices are not supported")
    return as_matrix(M, str(path))


def write_matrix(path, M, comment=""):
    """Write a dense matrix as a Matrix Market file.

    Coordinate format (1-based indices) when more than half the entries are
    zero, array format otherwise; symmetric storage when applicable.
    """
    M = as_matrix(M, "M")
    square = M.shape[0] == M.shape[1]
    symmetric = square and np.array_equal(M, M.T)
    symmetry = "symmetric" if symmetric else "general"
    nnz = np.count_nonzero(M)
    if nnz < 0.5 * M.size:
        scipy.io.mmwrite(str(path), sp.coo_matrix(M), comment=comment, symmetry=symmetry)
    else:
        scipy.io.mmwrite(str(path), M, comment=comment, symmetry=symmetry)
