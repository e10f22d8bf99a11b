"""Benchmark records: one problem, one hierarchy, one PCG solve.

The CLI is a thin layer over these functions; they are also what the
acceptance tests call.
"""
from __future__ import annotations

import csv
import io
import time
from dataclasses import asdict, dataclass, fields

import numpy as np

from .fem import AssembledProblem, annulus_problem, layered_stack_problem, two_domain_problem
from .hierarchy import AmgConfig, build_hierarchy
from .solvers import PCGBreakdown, amg_preconditioner, jacobi_smooth, pcg
from .sparse import extract_diagonal

__all__ = [
    "ProblemSpec",
    "SolveSpec",
    "SweepRecord",
    "SWEEP_HEADER",
    "ERROR_DEMO_HEADER",
    "make_problem",
    "default_max_coarse",
    "run_case",
    "records_to_csv",
    "jacobi_error_demo",
    "slice_total_variation",
]

PROBLEMS = ("two-domain", "annulus", "stack")


@dataclass(frozen=True)
class ProblemSpec:
    problem: str = "two-domain"
    n: int = 32
    nr: int = 20
    nt: int = 150
    nz: int = 1
    kappa: float = 1.0
    layers: int = 8
    nx: int = 32
    ny_per_layer: int = 4
    conductivities: tuple = (1e-4, 1e6)
    frame: str = "circumferential"

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}")

    def mesh_label(self) -> str:
        if self.problem == "two-domain":
            return str(self.n)
        if self.problem == "annulus":
            return f"{self.nr}x{self.nt}x{self.nz}"
        return f"{self.layers}x{self.nx}x{self.ny_per_layer}"

    def h(self):
        return 2.0 / self.n if self.problem == "two-domain" else None


@dataclass(frozen=True)
class SolveSpec:
    rel_tol: float = 1e-8
    abs_tol: float | None = None
    max_iters: int = 1000


def make_problem(spec: ProblemSpec) -> AssembledProblem:
    if spec.problem == "two-domain":
        return two_domain_problem(spec.n, spec.kappa)
    if spec.problem == "annulus":
        return annulus_problem(spec.nr, spec.nt, spec.nz, spec.kappa, frame=spec.frame)
    return layered_stack_problem(spec.layers, spec.nx, spec.ny_per_layer, spec.conductivities)


def default_max_coarse(problem: str) -> int:
    return 5000 if problem == "annulus" else 50


@dataclass
class SweepRecord:
    problem: str
    mesh: str
    h: float | None
    kappa: float
    soc_kind: str
    drop_kind: str
    theta: float
    iterations: int | None
    converged: bool
    levels: int
    operator_complexity: float
    cost: float | None
    status: str
    seed: int
    setup_seconds: float
    solve_seconds: float

    def to_dict(self) -> dict:
        return asdict(self)


SWEEP_HEADER = [f.name for f in fields(SweepRecord)]
ERROR_DEMO_HEADER = ["node", "x", "y", "error"]


def run_case(problem: ProblemSpec, config: AmgConfig, solve: SolveSpec = SolveSpec(),
             return_objects=False):
    """Build, set up and solve one configuration; never raises on solver failure.

    Status is ``ok``, ``not_converged``, ``breakdown``, or the hierarchy
    failure (``stagnated`` / ``max_levels``). Failed runs carry
    ``converged=False`` and no cost.
    """
    prob = make_problem(problem)
    t0 = time.perf_counter()
    h = build_hierarchy(prob, config)
    t1 = time.perf_counter()
    report = None
    status = h.status
    if not h.failed:
        try:
            report = pcg(prob.A, prob.b, amg_preconditioner(h), solve.rel_tol, solve.abs_tol, solve.max_iters)
            status = "ok" if report.converged else "not_converged"
        except PCGBreakdown:
            status = "breakdown"
    t2 = time.perf_counter()
    converged = report is not None and report.converged
    oc = h.operator_complexity
    iters = None if report is None else report.iterations
    rec = SweepRecord(
        problem=problem.problem,
        mesh=problem.mesh_label(),
        h=problem.h(),
        kappa=float(problem.kappa),
        soc_kind=config.soc_kind,
        drop_kind=config.drop_kind,
        theta=float(config.theta),
        iterations=iters,
        converged=converged,
        levels=h.n_levels,
        operator_complexity=oc,
        cost=iters * oc if converged else None,
        status=status,
        seed=config.seed,
        setup_seconds=t1 - t0,
        solve_seconds=t2 - t1,
    )
    if return_objects:
        return rec, prob, h, report
    return rec


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def records_to_csv(records, fh=None) -> str | None:
    """Write records under SWEEP_HEADER; returns the text when ``fh`` is None."""
    out = io.StringIO() if fh is None else fh
    w = csv.writer(out, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in records:
        d = r.to_dict()
        w.writerow([_cell(d[k]) for k in SWEEP_HEADER])
    return out.getvalue() if fh is None else None


def jacobi_error_demo(problem: AssembledProblem, sweeps: int, seed=0, omega=2.0 / 3.0) -> np.ndarray:
    """Damped Jacobi on A e = 0 from a seeded uniform(-1, 1) error.

    Dirichlet nodes carry zero error throughout.
    """
    rng = np.random.default_rng(seed)
    e = rng.uniform(-1.0, 1.0, problem.n)
    e[problem.dirichlet] = 0.0
    d = extract_diagonal(problem.A)
    return jacobi_smooth(problem.A, d, np.zeros(problem.n), e, sweeps, omega)


def slice_total_variation(coords, values, x0, dirichlet=None, tol=1e-9) -> float:
    """Sum of |jumps| of ``values`` along the vertical line x = x0, ordered by y."""
    sel = np.abs(coords[:, 0] - x0) < tol
    if dirichlet is not None:
        sel &= ~np.asarray(dirichlet, dtype=bool)
    if not sel.any():
        raise ValueError(f"no nodes on x = {x0}")
    order = np.argsort(coords[sel, 1], kind="stable")
    return float(np.abs(np.diff(values[sel][order])).sum())

