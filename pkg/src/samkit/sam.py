"""Sparse approximate maps: sparse least-squares maps between nearby matrices.

Given a sequence matrix A and a reference matrix A_ref with a trusted
preconditioner, the map N minimizes ||A N - A_ref||_F over all matrices
supported on a chosen sparsity pattern.  The minimization decouples into one
small dense least-squares problem per column, sized by the pattern rather
than by the matrix, so maps stay cheap even for large systems.  Composing N
with the reference preconditioner (apply the preconditioner, then multiply by
N) recycles it for the new matrix.
"""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .patterns import SparsityPattern
from .sparse import TripletBuffer, as_csc, from_triplets, frobenius_norm_diff, matvec, scalar_dtype, spmm

# Rank cutoff handed to the column-pivoted orthogonal LS solver; blocks whose
# triangular factor falls below this relative size get a minimum-norm solution.
RANK_TOL = 1e-12


@dataclass
class SamPlan:
    """Preprocessed per-column index sets for computing maps on a fixed pattern.

    For column l, ``cols`` holds the pattern row indices (the unknown
    positions of column l of the map) and ``rows`` the union of stored-entry
    rows of the planning matrix's columns referenced by ``cols``.  Both are
    stored CSC-style as one index array plus offsets.  The plan is built once
    per pattern/structure and reused for every matrix with that structure.
    """

    n: int
    col_ptr: np.ndarray
    col_idx: np.ndarray
    row_ptr: np.ndarray
    row_idx: np.ndarray
    max_block_cols: int
    max_block_rows: int
    include_rhs_rows: bool
    degenerate_columns: np.ndarray
    struct_indptr: np.ndarray = field(repr=False)
    struct_indices: np.ndarray = field(repr=False)

    def block_shape(self, l):
        """(rows, cols) sizes of column l's least-squares block."""
        return (int(self.row_ptr[l + 1] - self.row_ptr[l]),
                int(self.col_ptr[l + 1] - self.col_ptr[l]))


@dataclass
class SamMap:
    """A computed map plus its residual bookkeeping."""

    N: sp.csc_matrix
    rel_residual: float | None = None
    column_residuals: np.ndarray | None = None
    degenerate_columns: np.ndarray | None = None


def plan(S: SparsityPattern, A, include_rhs_rows: bool = True, A_ref=None) -> SamPlan:
    """Preprocess pattern S against the structure of A.

    ``A`` is the structural prototype of the matrices the map will be
    computed for.  With ``include_rhs_rows`` set (the default), each column's
    row set also unions the stored-entry rows of the reference matrix's
    column, which makes the residual norms reported by :func:`compute_map`
    exact; ``A_ref`` defaults to ``A`` itself.  Columns with an empty pattern
    get an empty row set and are flagged degenerate.
    """
    A = as_csc(A)
    n = A.shape[0]
    if A.shape[0] != A.shape[1] or (S.nrows, S.ncols) != A.shape:
        raise ValueError(f"plan: pattern {S.nrows}x{S.ncols} does not match matrix {A.shape}")
    ref = A if A_ref is None else as_csc(A_ref)
    if ref.shape != A.shape:
        raise ValueError(f"plan: reference shape {ref.shape} does not match matrix {A.shape}")

    counts = S.column_counts()
    degenerate = np.flatnonzero(counts == 0)
    if degenerate.size:
        warnings.warn(
            f"{degenerate.size} pattern column(s) are empty; the map will have zero columns there",
            stacklevel=2,
        )

    # Row sets for all columns at once: the structural product A * S gives,
    # per column l, the union of stored rows of the A-columns selected by S.
    a_ind = sp.csc_matrix(
        (np.ones(A.nnz), A.indices, A.indptr), shape=A.shape
    )
    r_struct = (a_ind @ S.indicator()).tocsc()
    if include_rhs_rows:
        ref_ind = sp.csc_matrix(
            (np.ones(ref.nnz), ref.indices, ref.indptr), shape=ref.shape
        )
        if degenerate.size:
            # degenerate columns keep an empty row set
            mask = np.ones(n)
            mask[degenerate] = 0.0
            ref_ind = ref_ind @ sp.diags(mask, format="csc")
        r_struct = r_struct + ref_ind
    r_struct = r_struct.tocsc()
    r_struct.sum_duplicates()
    r_struct.sort_indices()

    row_ptr = r_struct.indptr.astype(np.int64)
    row_counts = np.diff(row_ptr)
    return SamPlan(
        n=n,
        col_ptr=S.indptr.copy(),
        col_idx=S.indices.copy(),
        row_ptr=row_ptr,
        row_idx=r_struct.indices.astype(np.int64),
        max_block_cols=int(counts.max()) if n else 0,
        max_block_rows=int(row_counts.max()) if n else 0,
        include_rhs_rows=include_rhs_rows,
        degenerate_columns=degenerate,
        struct_indptr=A.indptr.copy(),
        struct_indices=A.indices.copy(),
    )


def _check_structure(A, pl: SamPlan):
    if np.array_equal(A.indptr, pl.struct_indptr) and np.array_equal(A.indices, pl.struct_indices):
        return
    for j in range(pl.n):
        a = A.indices[A.indptr[j]:A.indptr[j + 1]]
        b = pl.struct_indices[pl.struct_indptr[j]:pl.struct_indptr[j + 1]]
        if not np.array_equal(a, b):
            raise ValueError(f"matrix structure differs from the plan, first offending column: {j}")
    raise ValueError("matrix structure differs from the plan")


def _solve_columns(lo, hi, A, A_ref, pl, valN, col_res, dtype):
    """Solve the least-squares problems for columns lo..hi-1.

    Results land in preassigned slices of ``valN`` (and ``col_res``), so the
    output is identical no matter how columns are split across workers.
    """
    block = np.zeros((pl.max_block_rows, max(pl.max_block_cols, 1)), dtype=dtype)
    for l in range(lo, hi):
        k0, k1 = pl.col_ptr[l], pl.col_ptr[l + 1]
        r0, r1 = pl.row_ptr[l], pl.row_ptr[l + 1]
        ncol = k1 - k0
        nrow = r1 - r0
        rows = pl.row_idx[r0:r1]

        # right-hand side: the reference column scattered onto the row set
        g0, g1 = A_ref.indptr[l], A_ref.indptr[l + 1]
        ref_rows = A_ref.indices[g0:g1]
        ref_vals = A_ref.data[g0:g1]
        if nrow:
            pos = np.searchsorted(rows, ref_rows)
            pos_c = np.minimum(pos, nrow - 1)
            inside = rows[pos_c] == ref_rows
        else:
            pos = pos_c = np.empty(0, dtype=np.int64)
            inside = np.zeros(ref_rows.shape, dtype=bool)
        # reference rows the row set cannot reach still count toward the residual
        out_sq = float(np.sum(np.abs(ref_vals[~inside]) ** 2))

        if ncol == 0:
            if col_res is not None:
                col_res[l] = math.sqrt(out_sq)
            continue

        f = np.zeros(nrow, dtype=dtype)
        f[pos_c[inside]] = ref_vals[inside]

        if nrow == 0:
            valN[k0:k1] = 0
            if col_res is not None:
                col_res[l] = math.sqrt(out_sq)
            continue

        B = block[:nrow, :ncol]
        B[:] = 0
        sel = pl.col_idx[k0:k1]
        for t in range(ncol):
            j = sel[t]
            a0, a1 = A.indptr[j], A.indptr[j + 1]
            B[np.searchsorted(rows, A.indices[a0:a1]), t] = A.data[a0:a1]

        z = sla.lstsq(B, f, cond=RANK_TOL, lapack_driver="gelsy", check_finite=False)[0]
        valN[k0:k1] = z
        if col_res is not None:
            col_res[l] = math.sqrt(float(np.sum(np.abs(B @ z - f) ** 2)) + out_sq)


def compute_map(A, A_ref, pl: SamPlan, workers: int = 1, want_residual: bool = True) -> SamMap:
    """Minimize ||A N - A_ref||_F over the plan's pattern, column by column.

    Each column is an independent dense least-squares problem on the plan's
    index sets, solved by a column-pivoted orthogonal factorization with a
    minimum-norm solution on rank-deficient blocks.  The map is assembled
    from per-column triplets whose slices are preassigned by the plan, so the
    result is bit-identical for any ``workers`` count.
    """
    A = as_csc(A)
    A_ref = as_csc(A_ref)
    if A.shape != (pl.n, pl.n) or A_ref.shape != (pl.n, pl.n):
        raise ValueError(f"compute_map: matrices must be {pl.n}x{pl.n}")
    _check_structure(A, pl)

    dtype = scalar_dtype(A, A_ref)
    if A.dtype != dtype:
        A = A.astype(dtype)
    if A_ref.dtype != dtype:
        A_ref = A_ref.astype(dtype)

    nnz = int(pl.col_ptr[-1])
    valN = np.zeros(nnz, dtype=dtype)
    col_res = np.zeros(pl.n) if want_residual else None

    workers = max(1, int(workers))
    if workers == 1 or pl.n < 2:
        _solve_columns(0, pl.n, A, A_ref, pl, valN, col_res, dtype)
    else:
        bounds = np.linspace(0, pl.n, workers + 1, dtype=int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = [
                pool.submit(_solve_columns, int(bounds[i]), int(bounds[i + 1]),
                            A, A_ref, pl, valN, col_res, dtype)
                for i in range(workers)
            ]
            for fut in futs:
                fut.result()

    cols = np.repeat(np.arange(pl.n, dtype=np.int64), np.diff(pl.col_ptr))
    N = from_triplets(TripletBuffer(pl.n, pl.n, pl.col_idx.copy(), cols, valN))

    rel = None
    if want_residual:
        ref_norm = float(np.linalg.norm(A_ref.data))
        total = float(np.linalg.norm(col_res))
        if ref_norm > 0:
            rel = total / ref_norm
        else:
            rel = 0.0 if total == 0 else math.inf
    return SamMap(N=N, rel_residual=rel, column_residuals=col_res,
                  degenerate_columns=pl.degenerate_columns.copy())


def map_residual_norm(A, N, A_ref) -> float:
    """||A N - A_ref||_F / ||A_ref||_F computed from the full sparse product.

    Independent of the running residual accumulation in :func:`compute_map`;
    intended as the expensive cross-check.
    """
    if A.shape[1] != N.shape[0] or A.shape[0] != A_ref.shape[0] or N.shape[1] != A_ref.shape[1]:
        raise ValueError("map_residual_norm: incompatible dimensions")
    ref_norm = frobenius_norm_diff(A_ref)
    if ref_norm == 0:
        raise ValueError("reference matrix has zero norm, relative residual undefined")
    return frobenius_norm_diff(spmm(as_csc(A), as_csc(N)), as_csc(A_ref)) / ref_norm


class PreconditionerChain:
    """Composition of operator stages applied right-to-left.

    Each stage is a sparse matrix (applied as a matvec), an object exposing
    ``apply_solve`` or ``apply``, a callable, or None for identity.  A chain
    is itself a valid stage, so compositions nest.
    """

    def __init__(self, stages):
        self.stages = list(stages)
        shapes = [getattr(s, "shape", None) for s in self.stages]
        for left, right in zip(shapes, shapes[1:]):
            if left is not None and right is not None and left[1] != right[0]:
                raise ValueError(f"chain stages have incompatible shapes {left} and {right}")

    @staticmethod
    def _apply_stage(stage, v):
        if stage is None:
            return v
        if sp.issparse(stage):
            return matvec(stage, v)
        if isinstance(stage, np.ndarray):
            return stage @ v
        if hasattr(stage, "apply_solve"):
            return stage.apply_solve(v)
        if hasattr(stage, "apply"):
            return stage.apply(v)
        if callable(stage):
            return stage(v)
        raise TypeError(f"cannot apply stage of type {type(stage).__name__}")

    def apply(self, v):
        for stage in reversed(self.stages):
            v = self._apply_stage(stage, v)
        return v

    __call__ = apply


def compose(N, P) -> PreconditionerChain:
    """Recycled preconditioner: apply P, then multiply by the map N."""
    N = as_csc(N)
    pshape = getattr(P, "shape", None)
    if pshape is not None and N.shape[1] != pshape[0]:
        raise ValueError(f"compose: map shape {N.shape} incompatible with operator shape {pshape}")
    return PreconditionerChain([N, P])


__all__ = [
    "SamPlan", "SamMap", "plan", "compute_map", "map_residual_norm",
    "PreconditionerChain", "compose", "RANK_TOL",
]
