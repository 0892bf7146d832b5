"""A-priori sparsity patterns: the index structures a map is minimized over."""

import numpy as np
import scipy.sparse as sp

from .sparse import as_csc


class SparsityPattern:
    """Per-column sorted row-index sets, stored as CSC structure without values."""

    __slots__ = ("nrows", "ncols", "indptr", "indices")

    def __init__(self, nrows, ncols, indptr, indices):
        self.nrows = int(nrows)
        self.ncols = int(ncols)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        if self.indptr.shape != (self.ncols + 1,) or self.indptr[0] != 0:
            raise ValueError("bad column pointer array")
        if self.indptr[-1] != self.indices.size or np.any(np.diff(self.indptr) < 0):
            raise ValueError("column pointers inconsistent with index array")
        if self.indices.size:
            if self.indices.min() < 0 or self.indices.max() >= self.nrows:
                raise ValueError("row index out of range")
            for j in range(self.ncols):
                col = self.indices[self.indptr[j]:self.indptr[j + 1]]
                if col.size > 1 and np.any(np.diff(col) <= 0):
                    raise ValueError(f"column {j} not strictly increasing")

    @classmethod
    def from_positions(cls, nrows, ncols, rows, cols) -> "SparsityPattern":
        """Build from (row, col) pairs in any order; duplicates collapse."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if rows.size:
            if rows.min() < 0 or rows.max() >= nrows or cols.min() < 0 or cols.max() >= ncols:
                raise ValueError("position out of range")
        ind = sp.csc_matrix(
            (np.ones(rows.size), (rows, cols)), shape=(nrows, ncols)
        )
        ind.sum_duplicates()
        ind.sort_indices()
        return cls(nrows, ncols, ind.indptr.astype(np.int64), ind.indices.astype(np.int64))

    @property
    def nnz(self) -> int:
        return int(self.indptr[-1])

    def column(self, j) -> np.ndarray:
        return self.indices[self.indptr[j]:self.indptr[j + 1]]

    def column_counts(self) -> np.ndarray:
        return np.diff(self.indptr)

    def positions(self):
        """(rows, cols) arrays of all stored positions, column-major order."""
        cols = np.repeat(np.arange(self.ncols, dtype=np.int64), self.column_counts())
        return self.indices.copy(), cols

    def indicator(self, dtype=np.float64) -> sp.csc_matrix:
        """All-ones CSC matrix on this pattern (for structural products)."""
        return sp.csc_matrix(
            (np.ones(self.nnz, dtype=dtype), self.indices.copy(), self.indptr.copy()),
            shape=(self.nrows, self.ncols),
        )

    def __eq__(self, other):
        return (
            isinstance(other, SparsityPattern)
            and self.nrows == other.nrows
            and self.ncols == other.ncols
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    def __repr__(self):
        return f"SparsityPattern({self.nrows}x{self.ncols}, nnz={self.nnz})"


def pattern_of(A) -> SparsityPattern:
    """Positions of all stored entries of A, stored zeros included."""
    A = as_csc(A)
    return SparsityPattern(A.shape[0], A.shape[1],
                           A.indptr.astype(np.int64), A.indices.astype(np.int64))


def offset_pattern(n: int, offsets) -> SparsityPattern:
    """Pattern with position (s + o, s) for every column s and offset o.

    Out-of-range offsets are clipped at the boundaries, so offset 0 gives the
    diagonal and offsets (-1, 0, 1) the tridiagonal pattern.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    offsets = sorted(set(int(o) for o in offsets))
    rows = []
    cols = []
    s = np.arange(n, dtype=np.int64)
    for o in offsets:
        r = s + o
        keep = (r >= 0) & (r < n)
        rows.append(r[keep])
        cols.append(s[keep])
    if not rows:
        return SparsityPattern(n, n, np.zeros(n + 1, dtype=np.int64), np.empty(0, dtype=np.int64))
    return SparsityPattern.from_positions(n, n, np.concatenate(rows), np.concatenate(cols))


def symbolic_power(P: SparsityPattern, p: int) -> SparsityPattern:
    """Structural pattern of the p-th power, by repeated boolean products."""
    if P.nrows != P.ncols:
        raise ValueError("symbolic_power needs a square pattern")
    if not 1 <= p <= 5:
        raise ValueError("power must be between 1 and 5")
    base = P.indicator()
    acc = base.copy()
    for _ in range(p - 1):
        acc = (acc @ base).tocsc()
        acc.sum_duplicates()
        acc.sort_indices()
        acc.data[:] = 1.0  # keep counts from growing across repeated products
    return SparsityPattern(P.nrows, P.ncols,
                           acc.indptr.astype(np.int64), acc.indices.astype(np.int64))


def sparsified_power(A, p: int, tau: float, absolute: bool = False) -> SparsityPattern:
    """Pattern of A^p thresholded at tau.

    By default the threshold is relative: A^p is scaled to unit maximum
    magnitude before comparing against tau, so tau is scale-free.  With
    ``absolute=True`` the raw magnitudes are compared instead.  tau = 0 keeps
    the full structural pattern of A^p.
    """
    A = as_csc(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError("sparsified_power needs a square matrix")
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if tau == 0:
        return symbolic_power(pattern_of(A), p)
    if not 1 <= p <= 5:
        raise ValueError("power must be between 1 and 5")
    Ap = A.copy()
    for _ in range(p - 1):
        Ap = (Ap @ A).tocsc()
    Ap.sum_duplicates()
    Ap.sort_indices()
    mags = np.abs(Ap.data)
    cutoff = tau if absolute else tau * (mags.max() if mags.size else 0.0)
    keep = mags >= cutoff
    coo = Ap.tocoo()
    return SparsityPattern.from_positions(A.shape[0], A.shape[1],
                                          coo.row[keep], coo.col[keep])


def _check_dims(P: SparsityPattern, Q: SparsityPattern):
    if (P.nrows, P.ncols) != (Q.nrows, Q.ncols):
        raise ValueError(f"pattern dimension mismatch {P.nrows}x{P.ncols} vs {Q.nrows}x{Q.ncols}")


def pattern_union(P: SparsityPattern, Q: SparsityPattern) -> SparsityPattern:
    _check_dims(P, Q)
    u = (P.indicator() + Q.indicator()).tocsc()
    u.sum_duplicates()
    u.sort_indices()
    return SparsityPattern(P.nrows, P.ncols,
                           u.indptr.astype(np.int64), u.indices.astype(np.int64))


def pattern_intersection(P: SparsityPattern, Q: SparsityPattern) -> SparsityPattern:
    _check_dims(P, Q)
    m = P.indicator().multiply(Q.indicator()).tocsc()
    m.sum_duplicates()
    m.sort_indices()
    return SparsityPattern(P.nrows, P.ncols,
                           m.indptr.astype(np.int64), m.indices.astype(np.int64))


def is_subset(P: SparsityPattern, Q: SparsityPattern) -> bool:
    """True when every position of P also appears in Q."""
    _check_dims(P, Q)
    return pattern_intersection(P, Q).nnz == P.nnz


def write_pattern(P: SparsityPattern, path):
    """Write as text: a "nrows ncols nnz" header then one "row col" line per entry."""
    rows, cols = P.positions()
    with open(path, "w") as fh:
        fh.write(f"{P.nrows} {P.ncols} {P.nnz}\n")
        for r, c in zip(rows, cols):
            fh.write(f"{r} {c}\n")


def read_pattern(path) -> SparsityPattern:
    """Read the text format written by :func:`write_pattern`.

    Entries need not be sorted on disk; indices are 0-based.
    """
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise ValueError(f"{path}: malformed pattern header, expected 'nrows ncols nnz'")
        try:
            nrows, ncols, nnz = (int(tok) for tok in header)
        except ValueError:
            raise ValueError(f"{path}: malformed pattern header, expected three integers") from None
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        for k in range(nnz):
            line = fh.readline()
            if not line:
                raise ValueError(f"{path}: header promises {nnz} entries, file ends after {k}")
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}: malformed entry line {k + 2}: {line.strip()!r}")
            rows[k] = int(parts[0])
            cols[k] = int(parts[1])
        if rows.size and (rows.min() < 0 or rows.max() >= nrows or cols.min() < 0 or cols.max() >= ncols):
            raise ValueError(f"{path}: entry outside the {nrows}x{ncols} header dimensions")
    return SparsityPattern.from_positions(nrows, ncols, rows, cols)
