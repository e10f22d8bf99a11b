"""Smoothed aggregation setup: prolongator smoothing, Galerkin coarsening and
auxiliary data transfer, level by level."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from .aggregation import Aggregation, aggregate, coarsen_auxiliary, tentative_prolongator
from .filtering import DROP_CRITERIA, DropMask, filter_matrix, one_norm_diagonal, symmetrize_mask
from .solvers import DirectSolver
from .sparse import SparseMatrix, extract_diagonal, galerkin_product, spmv, transpose
from .strength import SOC_MEASURES, AuxiliaryData, SocMatrix

__all__ = [
    "AmgConfig",
    "Level",
    "Hierarchy",
    "CoarseningStagnation",
    "estimate_spectral_radius",
    "smooth_prolongator",
    "build_hierarchy",
    "operator_complexity",
]

SOC_ALIASES = {"sa": "sa", "dlap": "dlap", "material": "material_dlap", "material_dlap": "material_dlap"}


class CoarseningStagnation(RuntimeError):
    """Aggregation failed to reduce the problem size."""

    def __init__(self, message, hierarchy=None):
        super().__init__(message)
        self.hierarchy = hierarchy


@dataclass(frozen=True)
class AmgConfig:
    soc_kind: str = "material_dlap"
    drop_kind: str = "pointwise"
    theta: float = 0.08
    max_levels: int = 10
    max_coarse_size: int = 5000
    omega_sym: float = 4.0 / 3.0
    power_iterations: int = 10
    chebyshev_degree: int = 2
    chebyshev_eig_ratio: float = 20.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "soc_kind", SOC_ALIASES.get(self.soc_kind, self.soc_kind))
        if self.soc_kind not in SOC_MEASURES:
            raise ValueError(f"unknown strength measure {self.soc_kind!r}")
        if self.drop_kind not in DROP_CRITERIA:
            raise ValueError(f"unknown dropping criterion {self.drop_kind!r}")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        if self.max_levels < 1:
            raise ValueError("max_levels must be >= 1")


@dataclass(eq=False)
class Level:
    A: SparseMatrix
    aux: AuxiliaryData
    diag: np.ndarray
    P: SparseMatrix | None = None
    R: SparseMatrix | None = None
    lambda_smoother: float | None = None
    lambda_prolongator: float | None = None
    aggregation: Aggregation | None = None
    soc: SocMatrix | None = field(default=None, repr=False)
    mask: DropMask | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.A.n_rows


@dataclass(eq=False)
class Hierarchy:
    levels: list
    config: AmgConfig
    status: str = "ok"  # ok | stagnated | max_levels
    coarse_solver: DirectSolver | None = field(default=None, repr=False)

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    @property
    def operator_complexity(self) -> float:
        return operator_complexity(self)

    @property
    def failed(self) -> bool:
        return self.status != "ok"

    def summary(self) -> dict:
        return {
            "levels": [
                {
                    "level": i,
                    "n": lev.n,
                    "nnz": lev.A.nnz,
                    "aggregates": None if lev.aggregation is None else lev.aggregation.n_aggregates,
                }
                for i, lev in enumerate(self.levels)
            ],
            "operator_complexity": self.operator_complexity,
            "status": self.status,
            "config": asdict(self.config),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.summary(), **kw)


def estimate_spectral_radius(A: SparseMatrix, d, iters=10, x0=None) -> float:
    """Power method on D^-1 A; returns the D-weighted Rayleigh quotient.

    The default start vector is the normalized all-ones vector.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0.0):
        raise ValueError("diagonal scaling must be positive")
    v = np.ones(A.n_rows) if x0 is None else np.array(x0, dtype=float)
    v /= np.linalg.norm(v)
    for _ in range(iters):
        w = spmv(A, v) / d
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        v = w / nrm
    den = float(v @ (d * v))
    return max(float(v @ spmv(A, v)) / den, 0.0)


def smooth_prolongator(A_F: SparseMatrix, d, P_hat: SparseMatrix, omega_sym=4.0 / 3.0, lam=1.0) -> SparseMatrix:
    """P = (I - omega D^-1 A_F) P_hat with omega = omega_sym / lam.

    Falls back to P_hat when lam is not positive or omega vanishes.
    """
    if not np.isfinite(lam) or lam <= 0.0:
        return P_hat
    omega = omega_sym / lam
    if omega == 0.0:
        return P_hat
    scaled = sp.diags(omega / np.asarray(d, dtype=float)) @ A_F._csr()
    P = P_hat._csr() - scaled @ P_hat._csr()
    return SparseMatrix.from_scipy(P)


def _isolated_rows(A: SparseMatrix) -> np.ndarray:
    rows = A.row_indices()
    off = (rows != A.col_indices) & (A.values != 0.0)
    return np.bincount(rows[off], minlength=A.n_rows) == 0


def _setup_level(A, aux, config):
    measure = SOC_MEASURES[config.soc_kind]
    S = measure(A, aux)
    mask = symmetrize_mask(DROP_CRITERIA[config.drop_kind](S, config.theta))
    agg = aggregate(mask, excluded=_isolated_rows(A))
    return S, mask, agg


def _build_smoother_data(A, config, rng):
    diag = extract_diagonal(A)
    if np.any(diag <= 0.0):
        raise ValueError("non-positive diagonal entry; operator is not SPD")
    lam = estimate_spectral_radius(A, diag, config.power_iterations, x0=rng.uniform(0.5, 1.5, A.n_rows))
    return diag, lam


def build_hierarchy(problem, config: AmgConfig | None = None, aux: AuxiliaryData | None = None,
                    strict=False) -> Hierarchy:
    """Build the multigrid hierarchy for ``problem``.

    ``problem`` is an AssembledProblem, or a SparseMatrix together with
    ``aux``. Coarsening stagnates when aggregation merges nothing (every
    aggregate a singleton). With ``strict`` a failed coarsening raises CoarseningStagnation;
    otherwise the truncated hierarchy is returned with ``status`` set.
    """
    config = config or AmgConfig()
    if isinstance(problem, SparseMatrix):
        if aux is None:
            raise ValueError("auxiliary data required when passing a bare matrix")
        A = problem
    else:
        A = problem.A
        aux = aux or AuxiliaryData(np.asarray(problem.coords, float), np.asarray(problem.node_materials, float))
    if len(aux) != A.n_rows:
        raise ValueError("auxiliary data does not match the operator")

    rng = np.random.default_rng(config.seed)
    levels = []
    status = "ok"
    while True:
        diag = extract_diagonal(A)
        last = A.n_rows <= config.max_coarse_size or len(levels) == config.max_levels - 1
        if last:
            if A.n_rows > config.max_coarse_size:
                status = "max_levels"
            levels.append(Level(A, aux, diag))
            break
        S, mask, agg = _setup_level(A, aux, config)
        n_assigned = int(np.count_nonzero(agg.node_to_aggregate >= 0))
        if agg.n_aggregates == 0 or agg.n_aggregates >= n_assigned:
            status = "stagnated"
            levels.append(Level(A, aux, diag, soc=S, mask=mask, aggregation=agg))
            break
        P_hat = tentative_prolongator(agg, A.n_rows)
        A_F = filter_matrix(A, mask)
        D_hat = one_norm_diagonal(A_F)
        lam_p = estimate_spectral_radius(A_F, D_hat, config.power_iterations)
        P = smooth_prolongator(A_F, D_hat, P_hat, config.omega_sym, lam_p)
        diag, lam_s = _build_smoother_data(A, config, rng)
        levels.append(Level(A, aux, diag, P=P, R=transpose(P), lambda_smoother=lam_s,
                            lambda_prolongator=lam_p, aggregation=agg, soc=S, mask=mask))
        A = galerkin_product(P, A)
        aux = coarsen_auxiliary(agg, aux)

    h = Hierarchy(levels, config, status)
    if strict and h.failed:
        raise CoarseningStagnation(
            f"coarsening {status} at level {len(levels) - 1} with {levels[-1].n} unknowns", h)
    h.coarse_solver = DirectSolver(levels[-1].A)
    return h


def operator_complexity(h: Hierarchy) -> float:
    nnz = [lev.A.nnz for lev in h.levels]
    return float(sum(nnz)) / float(nnz[0])
