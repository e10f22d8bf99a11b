"""Smoothers, direct coarse solve, V-cycle and preconditioned CG."""
from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .sparse import SparseMatrix, spmv

__all__ = [
    "SolveReport",
    "PCGBreakdown",
    "DirectSolver",
    "chebyshev_smooth",
    "jacobi_smooth",
    "coarse_solve",
    "v_cycle",
    "amg_preconditioner",
    "pcg",
]

DENSE_LIMIT = 3000


class PCGBreakdown(RuntimeError):
    """Non-positive curvature: the operator or preconditioner is not SPD."""


@dataclass
class SolveReport:
    iterations: int
    residual_history: list
    converged: bool
    achieved_tolerance: float
    x: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self):
        d = asdict(self)
        d.pop("x")
        return d

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def chebyshev_smooth(A: SparseMatrix, d, b, x, degree=2, lambda_max=None, eig_ratio=20.0, boost=1.1):
    """Chebyshev polynomial in D^-1 A on [lambda_max / eig_ratio, boost * lambda_max].

    Returns the updated iterate; ``x`` is not modified.
    """
    if lambda_max is None or lambda_max <= 0.0:
        raise ValueError("lambda_max must be positive")
    if degree < 1:
        raise ValueError("degree must be >= 1")
    d = np.asarray(d, dtype=float)
    hi = boost * lambda_max
    lo = lambda_max / eig_ratio
    theta = 0.5 * (hi + lo)
    delta = 0.5 * (hi - lo)
    sigma = theta / delta
    rho = 1.0 / sigma

    x = np.array(x, dtype=float)
    r = (b - spmv(A, x)) / d
    p = r / theta
    x += p
    for _ in range(degree - 1):
        r = (b - spmv(A, x)) / d
        rho_new = 1.0 / (2.0 * sigma - rho)
        p = rho_new * rho * p + (2.0 * rho_new / delta) * r
        x += p
        rho = rho_new
    return x


def jacobi_smooth(A: SparseMatrix, d, b, x, sweeps=1, omega=1.0):
    d = np.asarray(d, dtype=float)
    x = np.array(x, dtype=float)
    for _ in range(sweeps):
        x += omega * (b - spmv(A, x)) / d
    return x


class DirectSolver:
    """Factor once, solve many times. Dense LU up to DENSE_LIMIT rows."""

    def __init__(self, A: SparseMatrix):
        if A.n_rows != A.n_cols:
            raise ValueError("matrix must be square")
        self.n = A.n_rows
        if self.n <= DENSE_LIMIT:
            dense = A.to_dense()
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", sla.LinAlgWarning)
                lu, piv = sla.lu_factor(dense)
            pivots = np.abs(np.diag(lu))
            if pivots.size and pivots.min() <= self.n * np.finfo(float).eps * pivots.max():
                raise np.linalg.LinAlgError("singular matrix")
            self._solve = lambda b: sla.lu_solve((lu, piv), b)
        else:
            try:
                lu = spla.splu(A.to_scipy().tocsc())
            except RuntimeError as e:
                raise np.linalg.LinAlgError("singular matrix") from e
            self._solve = lu.solve

    def __call__(self, b):
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.n:
            raise ValueError("dimension mismatch")
        return self._solve(b)


def coarse_solve(A: SparseMatrix, b):
    return DirectSolver(A)(b)


def v_cycle(h, b, x=None, level=0):
    """One V-cycle on ``h`` starting at ``level``; returns the new iterate."""
    lev = h.levels[level]
    if x is None:
        x = np.zeros(lev.A.n_rows)
    if level == len(h.levels) - 1:
        return h.coarse_solver(b)
    cfg = h.config
    smooth = lambda v: chebyshev_smooth(lev.A, lev.diag, b, v, cfg.chebyshev_degree,
                                        lev.lambda_smoother, cfg.chebyshev_eig_ratio)
    x = smooth(x)
    r = b - spmv(lev.A, x)
    xc = v_cycle(h, spmv(lev.R, r), None, level + 1)
    x = x + spmv(lev.P, xc)
    return smooth(x)


def amg_preconditioner(h):
    """r -> one V-cycle applied to A z = r from z = 0."""
    return lambda r: v_cycle(h, r)


def pcg(A: SparseMatrix, b, preconditioner=None, rel_tol=1e-8, abs_tol=None, max_iters=1000) -> SolveReport:
    """Preconditioned conjugate gradients from a zero initial guess.

    Converged once ||r|| <= rel_tol ||r0||, or ||r|| <= abs_tol when given.
    """
    b = np.asarray(b, dtype=float)
    M = preconditioner if preconditioner is not None else (lambda r: r.copy())
    x = np.zeros_like(b)
    r = b.copy()
    r0 = np.linalg.norm(r)
    hist = [1.0]
    target = rel_tol * r0
    if abs_tol is not None:
        target = max(target, abs_tol)
    if r0 == 0.0:
        return SolveReport(0, [0.0], True, 0.0, x)
    z = M(r)
    rz = float(r @ z)
    if rz <= 0.0:
        raise PCGBreakdown("preconditioner is not positive definite")
    p = z.copy()
    it = 0
    rnorm = r0
    while it < max_iters:
        it += 1
        Ap = spmv(A, p)
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise PCGBreakdown(f"non-positive curvature p'Ap = {pAp:.3e} at iteration {it}")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        rnorm = np.linalg.norm(r)
        hist.append(rnorm / r0)
        if rnorm <= target:
            break
        z = M(r)
        rz_new = float(r @ z)
        if rz_new <= 0.0:
            raise PCGBreakdown(f"preconditioner not positive definite at iteration {it}")
        p = z + (rz_new / rz) * p
        rz = rz_new
    return SolveReport(it, hist, bool(rnorm <= target), rnorm / r0, x)
