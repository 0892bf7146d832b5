"""Compressed column-major sparse storage and the kernels shared by every module.

Matrices are ``scipy.sparse.csc_matrix`` values in double precision, real or
complex.  The canonical form used throughout the package has sorted row
indices within each column and summed duplicates; explicitly stored zeros are
legal and are never pruned by the kernels here.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

REAL = np.dtype(np.float64)
COMPLEX = np.dtype(np.complex128)


def scalar_dtype(*operands) -> np.dtype:
    """Working scalar field (float64 or complex128) for a set of operands."""
    dt = np.result_type(np.float64, *[getattr(op, "dtype", np.asarray(op).dtype) for op in operands])
    return COMPLEX if np.issubdtype(dt, np.complexfloating) else REAL


def as_csc(A, dtype=None) -> sp.csc_matrix:
    """Coerce ``A`` (sparse or dense) to a canonical CSC matrix.

    Canonical means: per-column row indices sorted and strictly increasing,
    duplicates summed.  Stored zeros are preserved.
    """
    if sp.issparse(A):
        M = A.tocsc(copy=False)
    else:
        M = sp.csc_matrix(np.atleast_2d(np.asarray(A)))
    want = dtype if dtype is not None else scalar_dtype(M)
    if M.dtype != want:
        M = M.astype(want)
    if not M.has_canonical_format:
        M = M.copy()
        M.sum_duplicates()
        M.sort_indices()
    return M


def _check_same_shape(A, B, op: str):
    if A.shape != B.shape:
        raise ValueError(f"{op}: shape mismatch {A.shape} vs {B.shape}")


@dataclass
class TripletBuffer:
    """Coordinate-format staging area for assembling a sparse matrix.

    All three index/value arrays have equal length; duplicates are allowed
    and are summed on conversion.
    """

    nrows: int
    ncols: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64)
        self.cols = np.asarray(self.cols, dtype=np.int64)
        self.values = np.asarray(self.values)
        if not (self.rows.shape == self.cols.shape == self.values.shape):
            raise ValueError("triplet arrays must have equal length")


def from_triplets(t: TripletBuffer) -> sp.csc_matrix:
    """Assemble a canonical CSC matrix from coordinate triplets.

    Duplicate positions are summed; a duplicate pair summing to zero is kept
    as an explicitly stored zero.
    """
    if t.rows.size:
        if t.rows.min() < 0 or t.rows.max() >= t.nrows:
            raise ValueError(f"row index out of range for {t.nrows}x{t.ncols} matrix")
        if t.cols.min() < 0 or t.cols.max() >= t.ncols:
            raise ValueError(f"column index out of range for {t.nrows}x{t.ncols} matrix")
    dt = scalar_dtype(t.values)
    coo = sp.coo_matrix(
        (t.values.astype(dt), (t.rows, t.cols)), shape=(t.nrows, t.ncols)
    )
    M = coo.tocsc()
    M.sort_indices()
    return M


def to_triplets(A) -> TripletBuffer:
    coo = as_csc(A).tocoo()
    return TripletBuffer(A.shape[0], A.shape[1], coo.row.astype(np.int64),
                         coo.col.astype(np.int64), coo.data.copy())


def matvec(A, x: np.ndarray) -> np.ndarray:
    """y = A x with a fixed column-sweep accumulation order."""
    x = np.asarray(x).ravel()
    if A.shape[1] != x.shape[0]:
        raise ValueError(f"matvec: matrix has {A.shape[1]} columns, vector has length {x.shape[0]}")
    return A.dot(x)


def spmm(A, B) -> sp.csc_matrix:
    """Exact sparse matrix product A B in canonical CSC form."""
    if A.shape[1] != B.shape[0]:
        raise ValueError(f"spmm: inner dimensions differ, {A.shape} x {B.shape}")
    C = (A @ B).tocsc()
    C.sum_duplicates()
    C.sort_indices()
    return C


def extract_dense_submatrix(A, rows, cols) -> np.ndarray:
    """Dense block A[rows, cols]; positions not stored in A read as zero."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    for idx, n, name in ((rows, A.shape[0], "row"), (cols, A.shape[1], "column")):
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise IndexError(f"{name} index out of range for shape {A.shape}")
    if rows.size == 0 or cols.size == 0:
        return np.zeros((rows.size, cols.size), dtype=A.dtype)
    return np.asarray(A[np.ix_(rows, cols)].todense())


def shifted_combine(alpha, E, A) -> sp.csc_matrix:
    """alpha * E + A with the union of both sparsity patterns stored.

    Goes through triplets rather than scipy's ``+`` so that positions whose
    sum cancels (including alpha = 0) stay in the pattern as stored zeros.
    """
    _check_same_shape(E, A, "shifted_combine")
    E = as_csc(E)
    A = as_csc(A)
    dt = scalar_dtype(np.asarray(alpha), E, A)
    ec = E.tocoo()
    ac = A.tocoo()
    rows = np.concatenate([ec.row, ac.row])
    cols = np.concatenate([ec.col, ac.col])
    vals = np.concatenate([dt.type(alpha) * ec.data.astype(dt), ac.data.astype(dt)])
    return from_triplets(TripletBuffer(A.shape[0], A.shape[1], rows, cols, vals))


def frobenius_norm_diff(A, B=None) -> float:
    """Frobenius norm of A - B (or of A when B is omitted)."""
    if B is None:
        return float(np.linalg.norm(as_csc(A).data))
    _check_same_shape(A, B, "frobenius_norm_diff")
    D = as_csc(A) - as_csc(B)
    return float(np.linalg.norm(D.data))


def identity(n: int, dtype=REAL) -> sp.csc_matrix:
    return sp.identity(n, dtype=dtype, format="csc")
