"""MatrixMarket and CSV import/export."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .sparse import SparseMatrix

MM_HEADER = "%%MatrixMarket matrix coordinate real general"


def write_matrix_market(path, A: SparseMatrix, comment: str | None = None) -> None:
    rows = A.row_indices() + 1
    cols = A.col_indices + 1
    with open(path, "w") as fh:
        fh.write(MM_HEADER + "\n")
        if comment:
            for line in comment.splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{A.n_rows} {A.n_cols} {A.nnz}\n")
        for r, c, v in zip(rows.tolist(), cols.tolist(), A.values.tolist()):
            fh.write(f"{r} {c} {v!r}\n")


def read_matrix_market(path) -> SparseMatrix:
    """Read a coordinate real general file (1-based indices)."""
    with open(path) as fh:
        header = fh.readline().strip()
        tokens = header.lower().split()
        if tokens[:4] != ["%%matrixmarket", "matrix", "coordinate", "real"]:
            raise ValueError(f"unsupported MatrixMarket header: {header!r}")
        symmetric = len(tokens) > 4 and tokens[4] == "symmetric"
        line = fh.readline()
        while line.startswith("%") or not line.strip():
            line = fh.readline()
        n_rows, n_cols, nnz = (int(t) for t in line.split())
        data = np.loadtxt(fh, ndmin=2) if nnz else np.zeros((0, 3))
    if data.shape[0] != nnz:
        raise ValueError(f"expected {nnz} entries, found {data.shape[0]}")
    r = data[:, 0].astype(np.int64) - 1
    c = data[:, 1].astype(np.int64) - 1
    v = data[:, 2]
    if symmetric:
        off = r != c
        r, c, v = np.concatenate([r, c[off]]), np.concatenate([c, r[off]]), np.concatenate([v, v[off]])
    return SparseMatrix.from_coo(r, c, v, (n_rows, n_cols))


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def write_sparse_csv(path, A: SparseMatrix) -> None:
    """(row, col, value) triplets, e.g. for strength matrices."""
    _write_rows(
        path,
        ["row", "col", "value"],
        zip(A.row_indices().tolist(), A.col_indices.tolist(), A.values.tolist()),
    )


def _padded(coords):
    coords = np.asarray(coords, dtype=float)
    out = np.zeros((coords.shape[0], 3))
    out[:, : coords.shape[1]] = coords
    return out


def write_problem(prefix, problem) -> list[Path]:
    """Export matrix, rhs, coordinates, nodal materials and Dirichlet flags.

    Files: ``<prefix>_A.mtx``, ``_b.csv``, ``_coords.csv``, ``_materials.csv``,
    ``_dirichlet.csv``. Materials are stored as the lower triangle, row-major.
    """
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    paths = [Path(f"{prefix}_{s}") for s in ("A.mtx", "b.csv", "coords.csv", "materials.csv", "dirichlet.csv")]
    write_matrix_market(paths[0], problem.A)
    ids = range(problem.n)
    _write_rows(paths[1], ["node_id", "b"], zip(ids, problem.b.tolist()))
    xyz = _padded(problem.coords)
    _write_rows(paths[2], ["node_id", "x", "y", "z"], ([i, *p] for i, p in zip(ids, xyz.tolist())))
    d = problem.dim
    tri = [(i, j) for i in range(d) for j in range(i + 1)]
    names = [f"s{i}{j}" for i, j in tri]
    comps = np.stack([problem.node_materials[:, i, j] for i, j in tri], axis=1)
    _write_rows(paths[3], ["node_id", *names], ([i, *c] for i, c in zip(ids, comps.tolist())))
    _write_rows(paths[4], ["node_id", "dirichlet"], zip(ids, problem.dirichlet.astype(int).tolist()))
    return paths
