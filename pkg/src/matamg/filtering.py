"""Dropping criteria and the lumped filtered matrix."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sparse import SparseMatrix, transpose
from .strength import SocMatrix

__all__ = [
    "DropMask",
    "drop_pointwise",
    "drop_cutdrop",
    "cutdrop_row",
    "symmetrize_mask",
    "filter_matrix",
    "one_norm_diagonal",
    "DROP_CRITERIA",
]


@dataclass(frozen=True, eq=False)
class DropMask:
    """Keep flag per stored entry of ``pattern``; diagonals are always kept."""

    pattern: SparseMatrix
    keep: np.ndarray
    theta: float
    criterion: str

    def __post_init__(self):
        keep = np.array(self.keep, dtype=bool)
        if keep.shape != (self.pattern.nnz,):
            raise ValueError("mask does not match the pattern")
        keep.setflags(write=False)
        object.__setattr__(self, "keep", keep)

    def edges(self):
        """(rows, cols) of kept off-diagonal entries."""
        rows = self.pattern.row_indices()
        cols = self.pattern.col_indices
        sel = self.keep & (rows != cols)
        return rows[sel], cols[sel]

    def graph(self) -> SparseMatrix:
        """Kept entries of the pattern (values of the source), diagonals included."""
        rows = self.pattern.row_indices()[self.keep]
        return SparseMatrix.from_coo(rows, self.pattern.col_indices[self.keep],
                                     self.pattern.values[self.keep], self.pattern.shape)


def _check_theta(theta):
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")


def drop_pointwise(S: SocMatrix, theta: float) -> DropMask:
    _check_theta(theta)
    M = S.matrix
    diag = M.row_indices() == M.col_indices
    keep = diag | (np.abs(M.values) >= theta)
    return DropMask(M, keep, theta, "pointwise")


def cutdrop_row(strengths, cols, theta):
    """Keep flags for one row's off-diagonal strengths.

    Entries are ordered by descending magnitude, ties by ascending column.
    The cut is placed after the first position k where
    theta * s[k] >= s[k + 1]; without such a gap the whole row is kept.
    """
    s = np.abs(np.asarray(strengths, dtype=float))
    keep = np.ones(s.size, dtype=bool)
    if s.size < 2 or theta == 0.0:
        return keep
    order = np.lexsort((np.asarray(cols), -s))
    ordered = s[order]
    gaps = np.flatnonzero(theta * ordered[:-1] >= ordered[1:])
    if gaps.size:
        cutoff = ordered[gaps[0]]
        keep = s >= cutoff
    return keep


def drop_cutdrop(S: SocMatrix, theta: float) -> DropMask:
    _check_theta(theta)
    M = S.matrix
    rows = M.row_indices()
    cols = M.col_indices
    keep = rows == cols
    ro = M.row_offsets
    for i in range(M.n_rows):
        lo, hi = ro[i], ro[i + 1]
        off = np.flatnonzero(cols[lo:hi] != i) + lo
        if off.size:
            keep[off] = cutdrop_row(M.values[off], cols[off], theta)
    return DropMask(M, keep, theta, "cutdrop")


def symmetrize_mask(mask: DropMask) -> DropMask:
    """Keep an edge if it is kept in either direction."""
    P = mask.pattern
    marked = P.with_values(mask.keep.astype(float))
    T = transpose(marked)
    if not T.same_pattern(P):
        raise ValueError("symmetrization needs a structurally symmetric pattern")
    keep = mask.keep | (T.values > 0.0)
    return DropMask(P, keep, mask.theta, mask.criterion)


def filter_matrix(A: SparseMatrix, mask: DropMask) -> SparseMatrix:
    """Zero the dropped off-diagonals and lump them onto the diagonal.

    The pattern of A is kept; dropped entries are stored as 0.0.
    """
    if not A.same_pattern(mask.pattern):
        raise ValueError("mask pattern does not match the matrix")
    rows = A.row_indices()
    pos = A.diagonal_positions()
    if np.any(pos < 0):
        raise ValueError("matrix must store every diagonal entry")
    dropped = ~mask.keep & (rows != A.col_indices)
    vals = np.where(dropped, 0.0, A.values)
    vals[pos] += np.bincount(rows[dropped], weights=A.values[dropped], minlength=A.n_rows)
    return A.with_values(vals)


def one_norm_diagonal(A_F: SparseMatrix, return_flags=False):
    """Absolute row sums; entirely zero rows get 1.0.

    With ``return_flags`` also returns the boolean array of substituted rows.
    """
    if A_F.n_rows != A_F.n_cols:
        raise ValueError("matrix must be square")
    d = np.bincount(A_F.row_indices(), weights=np.abs(A_F.values), minlength=A_F.n_rows)
    zero = d == 0.0
    d[zero] = 1.0
    return (d, zero) if return_flags else d


DROP_CRITERIA = {"pointwise": drop_pointwise, "cutdrop": drop_cutdrop}
