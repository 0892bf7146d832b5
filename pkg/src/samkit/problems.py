"""Test-problem generators, shift lists, and Matrix Market I/O.

Covers the built-in system sequences: a 2D Laplacian whose downward diagonal
shifts sweep through indefiniteness, stiffness/mass pairs shifted along a
complex quadrature contour, and externally supplied Matrix Market sequences.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .sparse import as_csc, identity, shifted_combine

# Modified Talbot contour constants (sigma, mu, alpha, nu).  These defaults
# come from the published optimized-contour literature, not from any property
# of this package; override them to match whatever source your application
# uses.
TALBOT_CONSTANTS = (0.6122, 0.5017, 0.6407, 0.2645)


def laplace2d_dirichlet(nx: int, ny: int):
    """Unscaled 5-point Laplacian on an nx-by-ny interior grid of the unit square.

    Dirichlet data is 1 on the south and west boundaries and 0 on the north
    and east boundaries; the returned right-hand side carries those boundary
    contributions.  Coefficients are the raw stencil values (4 on the
    diagonal, -1 off it).  Unknowns are ordered lexicographically, x fastest.
    """
    if nx < 2 or ny < 2:
        raise ValueError("grid must be at least 2x2")
    tx = sp.diags([-np.ones(nx - 1), 2 * np.ones(nx), -np.ones(nx - 1)], [-1, 0, 1])
    ty = sp.diags([-np.ones(ny - 1), 2 * np.ones(ny), -np.ones(ny - 1)], [-1, 0, 1])
    K = sp.kron(sp.identity(ny), tx) + sp.kron(ty, sp.identity(nx))
    b = np.zeros(nx * ny)
    b[:nx] += 1.0       # south edge, u = 1
    b[0::nx] += 1.0     # west edge, u = 1
    return as_csc(K), b


def helmholtz_sequence(K0, delta_s: float, count: int):
    """Matrices K0 - (i * delta_s) * I for i = 1..count.

    The base matrix itself is system 0 of the sweep; the returned list holds
    only the shifted systems.  Patterns always include the diagonal.
    """
    K0 = as_csc(K0)
    if K0.shape[0] != K0.shape[1]:
        raise ValueError("base matrix must be square")
    if delta_s <= 0:
        raise ValueError("delta_s must be positive")
    eye = identity(K0.shape[0], dtype=K0.dtype)
    return [shifted_combine(-(i * delta_s), eye, K0) for i in range(1, count + 1)]


def fem_pair_2d(nx: int, ny: int, kappa=None):
    """Variable-coefficient stiffness and lumped mass pair on the unit square.

    ``kappa(x, y)`` samples a positive conductivity field at the interior
    nodes; edge coefficients between neighbors are harmonic means of the two
    node values, and edges meeting the (zero Dirichlet) boundary use the
    node's own value.  With kappa constant 1 the stiffness equals
    :func:`laplace2d_dirichlet`.  The mass matrix is diagonal with the cell
    area at every node.
    """
    if nx < 2 or ny < 2:
        raise ValueError("grid must be at least 2x2")
    if kappa is None:
        kappa = lambda x, y: 1.0
    hx = 1.0 / (nx + 1)
    hy = 1.0 / (ny + 1)
    xs = (np.arange(nx) + 1) * hx
    ys = (np.arange(ny) + 1) * hy
    kap = np.empty((ny, nx))
    for j in range(ny):
        for i in range(nx):
            kap[j, i] = kappa(xs[i], ys[j])
    if np.any(kap <= 0) or not np.all(np.isfinite(kap)):
        raise ValueError("kappa must be positive and finite at every node")

    def hmean(a, b):
        return 2.0 * a * b / (a + b)

    n = nx * ny
    rows, cols, vals = [], [], []
    diag = np.zeros(n)
    for j in range(ny):
        for i in range(nx):
            k = j * nx + i
            # east/west edges
            for di in (-1, 1):
                ii = i + di
                if 0 <= ii < nx:
                    c = hmean(kap[j, i], kap[j, ii])
                    rows.append(k)
                    cols.append(j * nx + ii)
                    vals.append(-c)
                else:
                    c = kap[j, i]
                diag[k] += c
            # north/south edges
            for dj in (-1, 1):
                jj = j + dj
                if 0 <= jj < ny:
                    c = hmean(kap[j, i], kap[jj, i])
                    rows.append(k)
                    cols.append(jj * nx + i)
                    vals.append(-c)
                else:
                    c = kap[j, i]
                diag[k] += c
    rows.extend(range(n))
    cols.extend(range(n))
    vals.extend(diag)
    K = sp.csc_matrix((vals, (rows, cols)), shape=(n, n))
    K.sort_indices()
    M = sp.diags(np.full(n, hx * hy), format="csc")
    return as_csc(K), as_csc(M)


def talbot_shifts(n_z: int, t: float, constants=TALBOT_CONSTANTS) -> np.ndarray:
    """Upper-half shifts of a modified Talbot contour for time t.

    Evaluates z(theta) = (n_z / t) * (-sigma + mu * theta * cot(alpha * theta)
    + i * nu * theta) at the n_z/2 midpoints of a uniform partition of
    (0, pi).  The lower half of the contour is the conjugate of the returned
    values and is omitted.
    """
    if n_z % 2 != 0:
        raise ValueError("n_z must be even")
    if n_z <= 0 or t <= 0:
        raise ValueError("n_z and t must be positive")
    sigma, mu, alpha, nu = constants
    theta = (2 * np.arange(n_z // 2) + 1) * np.pi / n_z
    return (n_z / t) * (-sigma + mu * theta / np.tan(alpha * theta) + 1j * nu * theta)


# --- Matrix Market coordinate files ---------------------------------------

_MM_HEADER = "%%MatrixMarket"


def matrix_market_read(path):
    """Read a coordinate-format Matrix Market file into a CSC matrix.

    Supports real/complex general/symmetric files (symmetric storage is
    expanded).  Indices are converted from the 1-based file convention.
    """
    with open(path) as fh:
        header = fh.readline().strip()
        parts = header.split()
        if len(parts) != 5 or parts[0] != _MM_HEADER or parts[1].lower() != "matrix":
            raise ValueError(f"{path}: malformed Matrix Market header: {header!r}")
        fmt, fieldkind, symmetry = (p.lower() for p in parts[2:5])
        if fmt != "coordinate":
            raise ValueError(f"{path}: unsupported format {fmt!r}, only 'coordinate' is handled")
        if fieldkind not in ("real", "complex"):
            raise ValueError(f"{path}: unsupported field {fieldkind!r}, only real/complex are handled")
        if symmetry not in ("general", "symmetric"):
            raise ValueError(f"{path}: unsupported symmetry {symmetry!r}, only general/symmetric are handled")

        line = fh.readline()
        while line and line.lstrip().startswith("%"):
            line = fh.readline()
        dims = line.split()
        if len(dims) != 3:
            raise ValueError(f"{path}: malformed dimension line: {line.strip()!r}")
        nrows, ncols, nnz = (int(tok) for tok in dims)

        want = 4 if fieldkind == "complex" else 3
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=np.complex128 if fieldkind == "complex" else np.float64)
        for k in range(nnz):
            line = fh.readline()
            if not line:
                raise ValueError(f"{path}: header promises {nnz} entries, file ends after {k}")
            toks = line.split()
            if len(toks) != want:
                raise ValueError(f"{path}: bad entry line: {line.strip()!r}")
            r = int(toks[0]) - 1
            c = int(toks[1]) - 1
            if not (0 <= r < nrows and 0 <= c < ncols):
                raise ValueError(
                    f"{path}: entry ({toks[0]}, {toks[1]}) outside declared size {nrows}x{ncols}")
            rows[k] = r
            cols[k] = c
            if fieldkind == "complex":
                vals[k] = complex(float(toks[2]), float(toks[3]))
            else:
                vals[k] = float(toks[2])

    if symmetry == "symmetric":
        off = rows != cols
        rows, cols, vals = (np.concatenate([rows, cols[off]]),
                            np.concatenate([cols, rows[off]]),
                            np.concatenate([vals, vals[off]]))
    M = sp.csc_matrix((vals, (rows, cols)), shape=(nrows, ncols))
    M.sum_duplicates()
    M.sort_indices()
    return M


def matrix_market_write(A, path):
    """Write a CSC matrix as a general coordinate Matrix Market file.

    Values are printed with 17 significant digits so that a read round trip
    reproduces them exactly.
    """
    A = as_csc(A)
    coo = A.tocoo()
    complex_kind = np.iscomplexobj(A.data)
    kind = "complex" if complex_kind else "real"
    with open(path, "w") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate {kind} general\n")
        fh.write(f"{A.shape[0]} {A.shape[1]} {A.nnz}\n")
        if complex_kind:
            for r, c, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{r + 1} {c + 1} {v.real:.16e} {v.imag:.16e}\n")
        else:
            for r, c, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{r + 1} {c + 1} {v:.16e}\n")


# --- sequence descriptions --------------------------------------------------


@dataclass
class SequenceSpec:
    """A fully materialized sequence of systems sharing one right-hand side.

    ``shifts[k]`` is the scalar reported for system k (0 for file-based
    sequences without shift data).
    """

    kind: str
    matrices: list = field(repr=False)
    shifts: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)

    def __post_init__(self):
        if len(self.matrices) == 0:
            raise ValueError("a sequence needs at least one system")
        if len(self.shifts) != len(self.matrices):
            raise ValueError("one shift per system required")
        n = self.matrices[0].shape[0]
        for A in self.matrices:
            if A.shape != (n, n):
                raise ValueError("all systems must be square with one common size")
        if self.rhs.shape[0] != n:
            raise ValueError("right-hand side length mismatch")

    def __len__(self):
        return len(self.matrices)

    @property
    def n(self):
        return self.matrices[0].shape[0]

    @classmethod
    def helmholtz(cls, nx=10, ny=10, delta_s=0.01, count=200):
        """Downward diagonal sweep of the 2D Laplacian; system 0 is the unshifted base."""
        K0, b = laplace2d_dirichlet(nx, ny)
        mats = [K0] + helmholtz_sequence(K0, delta_s, count)
        shifts = np.concatenate([[0.0], delta_s * np.arange(1, count + 1)]).astype(complex)
        return cls("helmholtz_sweep", mats, shifts, b)

    @classmethod
    def shifted_pair(cls, K, M, shifts, rhs=None):
        """Systems K + z M for each shift z, with a point-source default rhs."""
        K = as_csc(K)
        M = as_csc(M)
        shifts = np.asarray(shifts, dtype=complex)
        if shifts.size == 0:
            raise ValueError("shift list must be nonempty")
        mats = [shifted_combine(z, M, K) for z in shifts]
        if rhs is None:
            rhs = point_source_rhs(K.shape[0])
        return cls("shifted_pair", mats, shifts, np.asarray(rhs))

    @classmethod
    def matrix_files(cls, paths, rhs=None, shifts=None):
        """Sequence read from Matrix Market files, in the given order."""
        mats = [matrix_market_read(p) for p in paths]
        if shifts is None:
            shifts = np.zeros(len(mats), dtype=complex)
        else:
            shifts = np.asarray(shifts, dtype=complex)
        if rhs is None:
            rhs = point_source_rhs(mats[0].shape[0])
        return cls("matrix_files", mats, shifts, np.asarray(rhs))


def point_source_rhs(n: int, index=None) -> np.ndarray:
    """Unit-norm vector with a single nonzero, centered by default."""
    b = np.zeros(n)
    b[n // 2 if index is None else index] = 1.0
    return b
