"""Greedy three-phase aggregation on the filtered graph."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .filtering import DropMask
from .sparse import SparseMatrix
from .strength import AuxiliaryData

__all__ = ["Aggregation", "UNASSIGNED", "aggregate", "tentative_prolongator", "coarsen_auxiliary"]

UNASSIGNED = -1


@dataclass(frozen=True, eq=False)
class Aggregation:
    """``node_to_aggregate[i]`` is the aggregate of node i, or UNASSIGNED for
    excluded (Dirichlet-isolated) nodes."""

    node_to_aggregate: np.ndarray
    n_aggregates: int
    roots: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.node_to_aggregate.size

    def sizes(self) -> np.ndarray:
        assigned = self.node_to_aggregate[self.node_to_aggregate >= 0]
        return np.bincount(assigned, minlength=self.n_aggregates)

    def members(self, j) -> np.ndarray:
        return np.flatnonzero(self.node_to_aggregate == j)


def _as_graph(graph):
    if isinstance(graph, DropMask):
        rows, cols = graph.edges()
        weights = graph.pattern.values[graph.keep & (graph.pattern.row_indices() != graph.pattern.col_indices)]
        n = graph.pattern.n_rows
    else:
        g: SparseMatrix = graph
        rows = g.row_indices()
        off = rows != g.col_indices
        rows, cols, weights = rows[off], g.col_indices[off], g.values[off]
        n = g.n_rows
    order = np.lexsort((cols, rows))
    rows, cols, weights = rows[order], cols[order], weights[order]
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=offsets[1:])
    return n, offsets, cols, np.abs(weights)


def aggregate(graph, excluded=None) -> Aggregation:
    """Aggregate the nodes of a symmetric filtered graph.

    ``graph`` is a DropMask (edge weights = strengths) or a SparseMatrix whose
    off-diagonal entries are the edges. Nodes flagged in ``excluded`` are
    left unassigned.

    Phase 1 scans nodes in index order; a node none of whose neighbours is
    aggregated becomes a root and takes all its neighbours. Phase 2 attaches
    every remaining node to the Phase 1 aggregate it is most strongly
    connected to (ties: lowest aggregate id). Phase 3 makes singletons of
    whatever is left (unreachable for a symmetric graph, kept as a guard).
    """
    n, offsets, adj, w = _as_graph(graph)
    agg = np.full(n, UNASSIGNED, dtype=np.int64)
    skip = np.zeros(n, dtype=bool) if excluded is None else np.asarray(excluded, dtype=bool).copy()
    # excluded nodes must not take part through edges either
    keep_edge = ~skip[adj]
    roots = []
    adj_l = adj.tolist()
    keep_l = keep_edge.tolist()
    off_l = offsets.tolist()

    def neighbours(i):
        return [adj_l[k] for k in range(off_l[i], off_l[i + 1]) if keep_l[k]]

    n_agg = 0
    for i in range(n):
        if skip[i] or agg[i] != UNASSIGNED:
            continue
        nbrs = neighbours(i)
        if any(agg[j] != UNASSIGNED for j in nbrs):
            continue
        agg[i] = n_agg
        agg[nbrs] = n_agg
        roots.append(i)
        n_agg += 1

    phase1 = agg.copy()
    for i in range(n):
        if skip[i] or agg[i] != UNASSIGNED:
            continue
        best, best_w = UNASSIGNED, -np.inf
        for k in range(off_l[i], off_l[i + 1]):
            if not keep_l[k]:
                continue
            a = phase1[adj_l[k]]
            if a == UNASSIGNED:
                continue
            if w[k] > best_w or (w[k] == best_w and a < best):
                best, best_w = a, w[k]
        if best != UNASSIGNED:
            agg[i] = best

    for i in range(n):
        if not skip[i] and agg[i] == UNASSIGNED:
            agg[i] = n_agg
            roots.append(i)
            n_agg += 1

    agg.setflags(write=False)
    return Aggregation(agg, n_agg, np.asarray(roots, dtype=np.int64))


def tentative_prolongator(agg: Aggregation, n_fine: int | None = None) -> SparseMatrix:
    """Piecewise-constant interpolation of the constant vector.

    Column j holds ones on the members of aggregate j; excluded nodes give
    empty rows. Columns are orthogonal, so no QR step is needed for a
    scalar null space.
    """
    n_fine = agg.n_nodes if n_fine is None else n_fine
    if n_fine != agg.n_nodes:
        raise ValueError("aggregation does not match the fine dimension")
    rows = np.flatnonzero(agg.node_to_aggregate >= 0)
    return SparseMatrix.from_coo(rows, agg.node_to_aggregate[rows], np.ones(rows.size),
                                 (n_fine, agg.n_aggregates))


def coarsen_auxiliary(agg: Aggregation, aux: AuxiliaryData) -> AuxiliaryData:
    """Mean coordinate and mean tensor over each aggregate."""
    a = agg.node_to_aggregate
    m = a >= 0
    sizes = agg.sizes().astype(float)
    dim = aux.coords.shape[1]
    coords = np.zeros((agg.n_aggregates, dim))
    mats = np.zeros((agg.n_aggregates, dim, dim))
    np.add.at(coords, a[m], aux.coords[m])
    np.add.at(mats, a[m], aux.materials[m])
    return AuxiliaryData(coords / sizes[:, None], mats / sizes[:, None, None])
