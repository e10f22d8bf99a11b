"""Compressed sparse row storage and the kernels the rest of the package uses.

Values are arithmetic via scipy where it is safe; the sparsity pattern is
always managed here so that structural zeros survive products.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = [
    "SparseMatrix",
    "spmv",
    "transpose",
    "galerkin_product",
    "extract_diagonal",
    "identity",
]


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Immutable sorted-column CSR matrix.

    Within a row the column indices are strictly increasing; stored entries
    may hold the value 0.0 (the pattern is structural).
    """

    n_rows: int
    n_cols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "row_offsets", _frozen(self.row_offsets, np.int64))
        object.__setattr__(self, "col_indices", _frozen(self.col_indices, np.int64))
        object.__setattr__(self, "values", _frozen(self.values, np.float64))
        self._check()

    def _check(self):
        ro, ci = self.row_offsets, self.col_indices
        if ro.shape != (self.n_rows + 1,) or ro[0] != 0 or ro[-1] != ci.size:
            raise ValueError("row_offsets inconsistent with n_rows/nnz")
        if ci.shape != self.values.shape:
            raise ValueError("col_indices and values differ in length")
        if np.any(np.diff(ro) < 0):
            raise ValueError("row_offsets must be non-decreasing")
        if ci.size:
            if ci.min() < 0 or ci.max() >= self.n_cols:
                raise ValueError("column index out of range")
            rows = self.row_indices()
            same_row = rows[1:] == rows[:-1]
            if np.any(np.diff(ci)[same_row] <= 0):
                raise ValueError("columns must be strictly increasing within each row")

    # -- construction -------------------------------------------------------

    @classmethod
    def from_coo(cls, rows, cols, vals, shape) -> "SparseMatrix":
        """Build from coordinate triplets, summing duplicates.

        Summed duplicates that cancel to 0.0 stay in the pattern.
        """
        n_rows, n_cols = shape
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        vals = np.asarray(vals, dtype=np.float64).ravel()
        if not (rows.size == cols.size == vals.size):
            raise ValueError("coordinate arrays differ in length")
        if rows.size and (rows.min() < 0 or rows.max() >= n_rows or cols.min() < 0 or cols.max() >= n_cols):
            raise ValueError("coordinate index out of range")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size:
            first = np.ones(rows.size, dtype=bool)
            first[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            starts = np.flatnonzero(first)
            vals = np.add.reduceat(vals, starts)
            rows, cols = rows[starts], cols[starts]
        offsets = np.zeros(n_rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n_rows), out=offsets[1:])
        return cls(n_rows, n_cols, offsets, cols, vals)

    @classmethod
    def from_dense(cls, a, keep_zeros=False) -> "SparseMatrix":
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        r, c = np.nonzero(np.ones_like(a, dtype=bool) if keep_zeros else a)
        return cls.from_coo(r, c, a[r, c], a.shape)

    @classmethod
    def from_scipy(cls, m) -> "SparseMatrix":
        m = sp.csr_matrix(m, copy=True)
        m.sum_duplicates()
        m.sort_indices()
        return cls(m.shape[0], m.shape[1], m.indptr, m.indices, m.data)

    # -- views ---------------------------------------------------------------

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self) -> int:
        return int(self.col_indices.size)

    def row_indices(self) -> np.ndarray:
        """Row index of every stored entry."""
        return np.repeat(np.arange(self.n_rows, dtype=np.int64), np.diff(self.row_offsets))

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.values.copy(), self.col_indices.copy(), self.row_offsets.copy()),
            shape=self.shape,
        )

    def _csr(self) -> sp.csr_matrix:
        # private cached copy for read-only kernels
        m = self.__dict__.get("_csr_cache")
        if m is None:
            m = self.to_scipy()
            object.__setattr__(self, "_csr_cache", m)
        return m

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        np.add.at(out, (self.row_indices(), self.col_indices), self.values)
        return out

    def with_values(self, values) -> "SparseMatrix":
        """Same pattern, new values."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape != self.values.shape:
            raise ValueError("value array does not match the pattern")
        return SparseMatrix(self.n_rows, self.n_cols, self.row_offsets, self.col_indices, values)

    def same_pattern(self, other: "SparseMatrix") -> bool:
        return (
            self.shape == other.shape
            and np.array_equal(self.row_offsets, other.row_offsets)
            and np.array_equal(self.col_indices, other.col_indices)
        )

    def diagonal_positions(self) -> np.ndarray:
        """Index into ``values`` of each row's diagonal entry, -1 if not stored."""
        pos = np.full(min(self.shape), -1, dtype=np.int64)
        rows = self.row_indices()
        hit = np.flatnonzero(rows == self.col_indices)
        pos[rows[hit]] = hit
        return pos

    def __matmul__(self, x):
        if isinstance(x, SparseMatrix):
            return NotImplemented
        return spmv(self, x)

    def __repr__(self):
        return f"SparseMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz})"


def identity(n: int) -> SparseMatrix:
    idx = np.arange(n)
    return SparseMatrix(n, n, np.arange(n + 1), idx, np.ones(n))


def spmv(A: SparseMatrix, x) -> np.ndarray:
    """y = A x, summing each row in stored-entry order."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != A.n_cols:
        raise ValueError(f"dimension mismatch: A has {A.n_cols} columns, x has length {x.shape[0]}")
    return A._csr() @ x


def transpose(A: SparseMatrix) -> SparseMatrix:
    rows = A.row_indices()
    # stable sort by column keeps the original row order, so the result is
    # already sorted within each output row
    order = np.argsort(A.col_indices, kind="stable")
    offsets = np.zeros(A.n_cols + 1, dtype=np.int64)
    np.cumsum(np.bincount(A.col_indices, minlength=A.n_cols), out=offsets[1:])
    return SparseMatrix(A.n_cols, A.n_rows, offsets, rows[order], A.values[order])


def _structural_product(*mats: SparseMatrix) -> sp.csr_matrix:
    """Pattern of a matrix product; positive ones rule out cancellation."""
    out = None
    for m in mats:
        s = m.to_scipy()
        s.data[:] = 1.0
        out = s if out is None else out @ s
    out.sort_indices()
    return out


def galerkin_product(P: SparseMatrix, A: SparseMatrix) -> SparseMatrix:
    """Coarse operator P^T A P with a structural (cancellation-proof) pattern."""
    if A.n_rows != A.n_cols:
        raise ValueError("A must be square")
    if P.n_rows != A.n_rows:
        raise ValueError(f"dimension mismatch: P has {P.n_rows} rows, A is {A.n_rows}x{A.n_cols}")
    Pt = transpose(P)
    pattern = _structural_product(Pt, A, P)
    vals = (Pt._csr() @ A._csr() @ P._csr()).tocoo()

    n = P.n_cols
    pat_rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(pattern.indptr))
    pat_keys = pat_rows * n + pattern.indices
    out = np.zeros(pat_keys.size)
    if vals.nnz:
        keys = vals.row.astype(np.int64) * n + vals.col
        out[np.searchsorted(pat_keys, keys)] = vals.data
    return SparseMatrix(n, n, pattern.indptr, pattern.indices, out)


def extract_diagonal(A: SparseMatrix) -> np.ndarray:
    if A.n_rows != A.n_cols:
        raise ValueError("A must be square")
    pos = A.diagonal_positions()
    d = np.zeros(A.n_rows)
    d[pos >= 0] = A.values[pos[pos >= 0]]
    return d
