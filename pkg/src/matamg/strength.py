"""Strength-of-connection measures.

Three measures share one normalization: given a matrix ``M`` on the pattern
of ``A``, strength is ``|M_ij| / sqrt(|M_ii| |M_jj|)`` off the diagonal and 1
on it.

* ``soc_sa``           -- M = A
* ``soc_dlap``         -- M = distance Laplacian with Euclidean distance
* ``soc_material_dlap``-- M = distance Laplacian with the material distance
  ``max(sqrt(d^T sigma_i^-1 d), sqrt(d^T sigma_j^-1 d))``, d = x_i - x_j
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sparse import SparseMatrix, extract_diagonal

__all__ = [
    "SocMatrix",
    "AuxiliaryData",
    "soc_sa",
    "soc_dlap",
    "soc_material_dlap",
    "distance_laplacian",
    "euclidean_sq_distance",
    "material_sq_distance",
    "material_distance",
    "invert_tensors",
    "SOC_MEASURES",
]


@dataclass(frozen=True, eq=False)
class SocMatrix:
    matrix: SparseMatrix
    kind: str

    @property
    def values(self):
        return self.matrix.values


@dataclass(frozen=True, eq=False)
class AuxiliaryData:
    """Per-row coordinates (n, dim) and material tensors (n, dim, dim)."""

    coords: np.ndarray
    materials: np.ndarray

    def __post_init__(self):
        if self.coords.shape[0] != self.materials.shape[0]:
            raise ValueError("coords and materials differ in length")

    def __len__(self):
        return self.coords.shape[0]


def invert_tensors(t) -> np.ndarray:
    """Closed-form inverse of a batch of 2x2 or 3x3 SPD tensors."""
    t = np.asarray(t, dtype=float)
    dim = t.shape[-1]
    if dim == 1:
        det = t[..., 0, 0]
        adj = np.ones_like(t)
    elif dim == 2:
        a, b, c, d = t[..., 0, 0], t[..., 0, 1], t[..., 1, 0], t[..., 1, 1]
        det = a * d - b * c
        adj = np.stack([np.stack([d, -b], -1), np.stack([-c, a], -1)], -2)
    elif dim == 3:
        # cofactor matrix via cross products of columns
        c0, c1, c2 = t[..., :, 0], t[..., :, 1], t[..., :, 2]
        adj = np.stack([np.cross(c1, c2), np.cross(c2, c0), np.cross(c0, c1)], -2)
        det = np.einsum("...i,...i->...", c0, adj[..., 0, :])
    else:
        raise ValueError("tensor dimension must be 1, 2 or 3")
    if np.any(det <= 0.0):
        raise ValueError("material tensor is singular or not positive definite")
    return adj / det[..., None, None]


def _edge_data(A: SparseMatrix):
    rows = A.row_indices()
    cols = A.col_indices
    return rows, cols, rows != cols


def euclidean_sq_distance(coords, rows, cols):
    diff = coords[rows] - coords[cols]
    return np.einsum("ek,ek->e", diff, diff)


def material_sq_distance(coords, materials, rows, cols, inverses=None):
    """Squared material distance for each (row, col) pair, max-symmetrized."""
    inv = invert_tensors(materials) if inverses is None else inverses
    diff = coords[rows] - coords[cols]
    qi = np.einsum("ek,ekl,el->e", diff, inv[rows], diff)
    qj = np.einsum("ek,ekl,el->e", diff, inv[cols], diff)
    return np.maximum(qi, qj)


def material_distance(x_i, x_j, sigma_i, sigma_j) -> float:
    x = np.array([x_i, x_j], dtype=float)
    m = np.array([sigma_i, sigma_j], dtype=float)
    if np.array_equal(x[0], x[1]):
        raise ValueError("coincident points")
    return float(np.sqrt(material_sq_distance(x, m, np.array([0]), np.array([1]))[0]))


def distance_laplacian(pattern: SparseMatrix, aux: AuxiliaryData, metric="euclidean") -> SparseMatrix:
    """Graph Laplacian on the pattern with off-diagonals -1/d(x_i, x_j)^2.

    ``metric`` is ``"euclidean"``, ``"material"``, or a callable
    ``(coords, materials, rows, cols) -> squared distances``.
    """
    if pattern.n_rows != pattern.n_cols or pattern.n_rows != len(aux):
        raise ValueError("pattern must be square and match the auxiliary data")
    rows, cols, off = _edge_data(pattern)
    r, c = rows[off], cols[off]
    if metric == "euclidean":
        d2 = euclidean_sq_distance(aux.coords, r, c)
    elif metric == "material":
        d2 = material_sq_distance(aux.coords, aux.materials, r, c)
    else:
        d2 = np.asarray(metric(aux.coords, aux.materials, r, c), dtype=float)
    if np.any(d2 <= 0.0):
        k = int(np.flatnonzero(d2 <= 0.0)[0])
        raise ValueError(f"zero distance between connected nodes {int(r[k])} and {int(c[k])}")
    pos = pattern.diagonal_positions()
    if np.any(pos < 0):
        raise ValueError("pattern must store every diagonal entry")
    vals = np.zeros(pattern.nnz)
    vals[off] = -1.0 / d2
    vals[pos] = -np.bincount(rows[off], weights=vals[off], minlength=pattern.n_rows)
    return pattern.with_values(vals)


def _normalize(M: SparseMatrix, kind: str) -> SocMatrix:
    rows, cols, off = _edge_data(M)
    d = np.abs(extract_diagonal(M))
    s = np.ones(M.nnz)
    scale = np.sqrt(d[rows[off]] * d[cols[off]])
    s_off = np.zeros(scale.size)
    nz = scale > 0.0
    s_off[nz] = np.abs(M.values[off][nz]) / scale[nz]
    s[off] = s_off
    return SocMatrix(M.with_values(s), kind)


def soc_sa(A: SparseMatrix) -> SocMatrix:
    d = extract_diagonal(A)
    if np.any(d == 0.0):
        raise ValueError(f"zero diagonal entry in row {int(np.flatnonzero(d == 0.0)[0])}")
    return _normalize(A, "sa")


def soc_dlap(A: SparseMatrix, aux: AuxiliaryData) -> SocMatrix:
    return _normalize(distance_laplacian(A, aux, "euclidean"), "dlap")


def soc_material_dlap(A: SparseMatrix, aux: AuxiliaryData) -> SocMatrix:
    return _normalize(distance_laplacian(A, aux, "material"), "material_dlap")


SOC_MEASURES = {
    "sa": lambda A, aux: soc_sa(A),
    "dlap": soc_dlap,
    "material_dlap": soc_material_dlap,
}
