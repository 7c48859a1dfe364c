"""Sparse symmetric matrices in CSR layout, Matrix Market I/O and test operators."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .exceptions import MatrixFormatError

__all__ = [
    "SparseMatrix",
    "matvec",
    "read_matrix_market",
    "write_matrix_market",
    "make_diag_descending",
    "make_diag_indefinite",
    "make_diag_half",
]

# relative tolerance for accepting a `general` file as symmetric
_SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Real symmetric operator stored fully expanded in compressed sparse row form.

    Parameters
    ----------
    n : int
        Dimension.
    row_ptr : ndarray of int, shape (n + 1,)
        Row offsets into `col_idx` / `values`.
    col_idx : ndarray of int, shape (nnz,)
        Column index of each stored entry, strictly increasing within a row.
    values : ndarray of float, shape (nnz,)
        Stored entries.

    Both triangles are stored, so the product is a plain row-by-row CSR
    product. Instances are immutable and safe to share between threads.
    """

    n: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        row_ptr = np.ascontiguousarray(self.row_ptr, dtype=np.int64)
        col_idx = np.ascontiguousarray(self.col_idx, dtype=np.int64)
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        n = int(self.n)
        if n < 0:
            raise ValueError("dimension must be non-negative")
        if row_ptr.shape != (n + 1,):
            raise ValueError(f"row_ptr must have length n + 1 = {n + 1}")
        nnz = col_idx.size
        if row_ptr[0] != 0 or row_ptr[-1] != nnz or values.size != nnz:
            raise ValueError("row_ptr must start at 0 and end at nnz")
        if np.any(np.diff(row_ptr) < 0):
            raise ValueError("row_ptr must be nondecreasing")
        if nnz and (col_idx.min() < 0 or col_idx.max() >= n):
            raise ValueError("column index out of range")
        if nnz > 1:
            # within a row columns strictly increase; across a row boundary anything goes
            step = np.diff(col_idx)
            starts = np.zeros(nnz - 1, dtype=bool)
            inner = row_ptr[1:-1]
            starts[inner[(inner > 0) & (inner < nnz)] - 1] = True
            if np.any((step <= 0) & ~starts):
                raise ValueError("column indices must be strictly increasing within a row")
        if not np.all(np.isfinite(values)):
            raise ValueError("matrix entries must be finite")
        for name, arr in (("row_ptr", row_ptr), ("col_idx", col_idx), ("values", values)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "n", n)
        if not _is_symmetric(self._csr):
            raise ValueError("matrix is not symmetric")

    @cached_property
    def _csr(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.values, self.col_idx, self.row_ptr), shape=(self.n, self.n))

    @property
    def nnz(self) -> int:
        return int(self.col_idx.size)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    @classmethod
    def from_scipy(cls, A) -> "SparseMatrix":
        """Build from any scipy sparse matrix or dense array holding a symmetric matrix."""
        csr = sp.csr_matrix(A, dtype=np.float64)
        if csr.shape[0] != csr.shape[1]:
            raise ValueError(f"matrix must be square, got shape {csr.shape}")
        csr.sum_duplicates()
        csr.eliminate_zeros()
        csr.sort_indices()
        return cls(csr.shape[0], csr.indptr, csr.indices, csr.data)

    @classmethod
    def from_diagonal(cls, diag) -> "SparseMatrix":
        d = np.asarray(diag, dtype=np.float64)
        n = d.size
        return cls(n, np.arange(n + 1), np.arange(n), d)

    def to_scipy(self) -> sp.csr_matrix:
        return self._csr.copy()

    def toarray(self) -> np.ndarray:
        return self._csr.toarray()

    @cached_property
    def is_diagonal(self) -> bool:
        rows = np.repeat(np.arange(self.n), np.diff(self.row_ptr))
        return bool(np.all(rows == self.col_idx))

    def diagonal(self) -> np.ndarray:
        return self._csr.diagonal()

    def matvec(self, x) -> np.ndarray:
        """Return ``A @ x``; raises ValueError on a length mismatch."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise ValueError(f"vector of shape {x.shape} does not match dimension {self.n}")
        return self._csr @ x

    def __matmul__(self, x):
        return self.matvec(x)


def _is_symmetric(csr: sp.csr_matrix) -> bool:
    if csr.nnz == 0:
        return True
    diff = abs(csr - csr.T)
    scale = abs(csr).max()
    return diff.nnz == 0 or diff.max() <= _SYMMETRY_RTOL * scale


def matvec(A: SparseMatrix, x) -> np.ndarray:
    """Functional form of :meth:`SparseMatrix.matvec`."""
    return A.matvec(x)


def read_matrix_market(path) -> SparseMatrix:
    """Read a real symmetric matrix from a Matrix Market coordinate file.

    Files declared ``symmetric`` may store a single triangle; ``general``
    files must hold symmetric content. Integer fields are promoted to real.

    Raises
    ------
    FileNotFoundError
        If `path` does not exist.
    MatrixFormatError
        Unsupported field (complex, pattern), array storage, non-square
        shape, out-of-range indices or asymmetric content.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(path)
    try:
        rows, cols, _, fmt, field, symmetry = scipy.io.mminfo(str(path))
    except Exception as exc:
        raise MatrixFormatError(f"{path}: unreadable Matrix Market header ({exc})") from exc
    if fmt != "coordinate":
        raise MatrixFormatError(f"{path}: only coordinate storage is supported, got {fmt!r}")
    if field not in ("real", "integer", "double"):
        raise MatrixFormatError(f"{path}: unsupported field {field!r}")
    if symmetry not in ("symmetric", "general"):
        raise MatrixFormatError(f"{path}: unsupported symmetry {symmetry!r}")
    if rows != cols:
        raise MatrixFormatError(f"{path}: matrix is not square ({rows} x {cols})")
    try:
        coo = scipy.io.mmread(str(path))
    except ValueError as exc:
        raise MatrixFormatError(f"{path}: {exc}") from exc
    csr = sp.csr_matrix(coo, dtype=np.float64)
    if symmetry == "general" and not _is_symmetric(csr):
        raise MatrixFormatError(f"{path}: declared general but content is not symmetric")
    return SparseMatrix.from_scipy(csr)


def write_matrix_market(path, A: SparseMatrix, comment: str = "") -> None:
    """Write `A` as a ``coordinate real symmetric`` Matrix Market file."""
    scipy.io.mmwrite(str(path), sp.coo_matrix(A.to_scipy()), comment=comment,
                     field="real", symmetry="symmetric", precision=17)


def make_diag_descending(n: int) -> SparseMatrix:
    """``diag(n, n-1, ..., 1)``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    return SparseMatrix.from_diagonal(np.arange(n, 0, -1, dtype=np.float64))


def make_diag_indefinite(n: int) -> SparseMatrix:
    """``diag(n, n-1, ..., 0, ..., -n/2)`` of dimension ``3n/2 + 1``, for even `n`."""
    if n < 2 or n % 2:
        raise ValueError("n must be an even integer >= 2")
    return SparseMatrix.from_diagonal(np.arange(n, -n // 2 - 1, -1, dtype=np.float64))


def make_diag_half(n: int) -> SparseMatrix:
    """Positive variant ``diag(n, n-1, ..., n/2)``, for even `n`."""
    if n < 2 or n % 2:
        raise ValueError("n must be an even integer >= 2")
    return SparseMatrix.from_diagonal(np.arange(n, n // 2 - 1, -1, dtype=np.float64))
