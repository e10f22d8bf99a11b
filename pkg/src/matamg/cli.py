"""``matamg`` command line: solve, sweep, export, error-demo.

Exit codes: 0 success, 1 usage error, 2 non-convergence or failed coarsening.
Every option may also be given in a flat ``key=value`` config file
(``--config``); command-line flags take precedence.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io as mmio
from .bench import (
    ERROR_DEMO_HEADER,
    ProblemSpec,
    SolveSpec,
    default_max_coarse,
    jacobi_error_demo,
    make_problem,
    records_to_csv,
    run_case,
)
from .hierarchy import AmgConfig, build_hierarchy

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for solver failure here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# key -> (converter, list-valued in sweeps)
OPTIONS = {
    "problem": (str, False),
    "n": (int, True),
    "nr": (int, False),
    "nt": (int, False),
    "nz": (int, False),
    "kappa": (float, True),
    "layers": (int, False),
    "nx": (int, False),
    "ny_per_layer": (int, False),
    "conductivities": (float, False),
    "frame": (str, False),
    "soc": (str, True),
    "drop": (str, True),
    "theta": (float, True),
    "rel_tol": (float, False),
    "abs_tol": (float, False),
    "max_iters": (int, False),
    "max_coarse": (int, False),
    "max_levels": (int, False),
    "seed": (int, False),
    "out": (str, False),
    "jobs": (int, False),
    "what": (str, False),
    "level": (int, False),
    "sweeps": (int, False),
    "omega": (float, False),
}

DEFAULTS = {
    "problem": "two-domain",
    "n": "32",
    "nr": "20",
    "nt": "150",
    "nz": "1",
    "kappa": "1",
    "layers": "8",
    "nx": "32",
    "ny_per_layer": "4",
    "conductivities": "1e-4,1e6",
    "frame": "circumferential",
    "soc": "material",
    "drop": "pointwise",
    "theta": "0.08",
    "rel_tol": "1e-8",
    "max_iters": "1000",
    "max_levels": "10",
    "seed": "0",
    "jobs": "1",
    "level": "0",
    "sweeps": "10",
    "omega": str(2.0 / 3.0),
}


def read_config(path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment. Dashes in keys map to underscores."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e}") from e
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (t.strip() for t in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in OPTIONS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def _add_common(p):
    p.add_argument("--config", help="key=value file; flags override it")
    g = p.add_argument_group("problem")
    g.add_argument("--problem", choices=["two-domain", "annulus", "stack"])
    g.add_argument("--n", help="elements per direction (two-domain)")
    g.add_argument("--nr", help="radial elements (annulus)")
    g.add_argument("--nt", help="angular elements (annulus)")
    g.add_argument("--nz", help="elements through the thickness (annulus)")
    g.add_argument("--kappa", help="material contrast")
    g.add_argument("--frame", choices=["circumferential", "printed"], help="annulus rotation convention")
    g.add_argument("--layers", help="number of bands (stack)")
    g.add_argument("--nx", help="horizontal elements (stack)")
    g.add_argument("--ny-per-layer", dest="ny_per_layer", help="elements per band (stack)")
    g.add_argument("--conductivities", help="comma separated band conductivities (stack)")
    g = p.add_argument_group("multigrid")
    g.add_argument("--soc", help="sa | dlap | material")
    g.add_argument("--drop", help="pointwise | cutdrop")
    g.add_argument("--theta", help="drop tolerance")
    g.add_argument("--max-coarse", dest="max_coarse", help="coarsest size (default 50, 5000 for annulus)")
    g.add_argument("--max-levels", dest="max_levels")
    g.add_argument("--seed")
    g = p.add_argument_group("solver")
    g.add_argument("--rel-tol", dest="rel_tol")
    g.add_argument("--abs-tol", dest="abs_tol")
    g.add_argument("--max-iters", dest="max_iters")
    p.add_argument("--out", help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="matamg", description="Smoothed aggregation AMG benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("solve", help="single solve, JSON record")
    _add_common(p)
    p = sub.add_parser("sweep", help="grid of runs, CSV table; n, kappa, soc, drop, theta take comma lists")
    _add_common(p)
    p.add_argument("--jobs", help="worker processes")
    p = sub.add_parser("export", help="matrix, graph, aggregates, soc or problem files")
    _add_common(p)
    p.add_argument("--what", choices=["matrix", "graph", "aggregates", "soc", "problem"])
    p.add_argument("--level", help="hierarchy level (0 = finest); 'all' for aggregates")
    p = sub.add_parser("error-demo", help="damped Jacobi on a random error, CSV of the error field")
    _add_common(p)
    p.add_argument("--sweeps", help="number of Jacobi sweeps k")
    p.add_argument("--omega", help="Jacobi damping (default 2/3)")
    return parser


def resolve(args) -> dict:
    """Merge defaults < config file < command line; values stay strings."""
    merged = dict(DEFAULTS)
    if args.config:
        merged.update(read_config(args.config))
    for key in OPTIONS:
        v = getattr(args, key, None)
        if v is not None:
            merged[key] = v
    return merged


def _convert(key, raw, allow_list=False):
    conv, listy = OPTIONS[key]
    parts = [t.strip() for t in str(raw).split(",")]
    if key == "conductivities":
        allow_list = True
    elif len(parts) > 1 and not (allow_list and listy):
        raise UsageError(f"--{key.replace('_', '-')} takes a single value")
    try:
        vals = [conv(t) for t in parts]
    except ValueError as e:
        raise UsageError(f"bad value for {key}: {raw!r}") from e
    return vals if allow_list else vals[0]


def _get(opts, key, allow_list=False):
    if opts.get(key) is None:
        return None
    return _convert(key, opts[key], allow_list)


def _problem_spec(opts, n=None, kappa=None) -> ProblemSpec:
    try:
        return ProblemSpec(
            problem=_get(opts, "problem"),
            n=_get(opts, "n") if n is None else n,
            nr=_get(opts, "nr"),
            nt=_get(opts, "nt"),
            nz=_get(opts, "nz"),
            kappa=_get(opts, "kappa") if kappa is None else kappa,
            layers=_get(opts, "layers"),
            nx=_get(opts, "nx"),
            ny_per_layer=_get(opts, "ny_per_layer"),
            conductivities=tuple(_get(opts, "conductivities")),
            frame=_get(opts, "frame"),
        )
    except ValueError as e:
        raise UsageError(str(e)) from e


def _amg_config(opts, soc=None, drop=None, theta=None) -> AmgConfig:
    max_coarse = _get(opts, "max_coarse")
    if max_coarse is None:
        max_coarse = default_max_coarse(_get(opts, "problem"))
    try:
        return AmgConfig(
            soc_kind=_get(opts, "soc") if soc is None else soc,
            drop_kind=_get(opts, "drop") if drop is None else drop,
            theta=_get(opts, "theta") if theta is None else theta,
            max_levels=_get(opts, "max_levels"),
            max_coarse_size=max_coarse,
            seed=_get(opts, "seed"),
        )
    except ValueError as e:
        raise UsageError(str(e)) from e


def _solve_spec(opts) -> SolveSpec:
    return SolveSpec(_get(opts, "rel_tol"), _get(opts, "abs_tol"), _get(opts, "max_iters"))


def _open_out(opts):
    out = opts.get("out")
    if not out:
        return sys.stdout, False
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline=""), True


def cmd_solve(opts) -> int:
    rec, prob, h, report = run_case(_problem_spec(opts), _amg_config(opts), _solve_spec(opts),
                                    return_objects=True)
    payload = rec.to_dict()
    payload["hierarchy"] = h.summary()
    payload["residual_history"] = None if report is None else report.residual_history
    fh, close = _open_out(opts)
    try:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    finally:
        if close:
            fh.close()
    if not rec.converged:
        print(f"matamg: run failed with status {rec.status}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def _sweep_case(job):
    problem, config, solve = job
    return run_case(problem, config, solve)


def sweep_grid(opts):
    """Jobs in grid order: n, kappa, soc, drop, theta (theta varies fastest)."""
    ns = _get(opts, "n", True)
    kappas = _get(opts, "kappa", True)
    socs = _get(opts, "soc", True)
    drops = _get(opts, "drop", True)
    thetas = _get(opts, "theta", True)
    solve = _solve_spec(opts)
    jobs = []
    for n, kappa, soc, drop, theta in itertools.product(ns, kappas, socs, drops, thetas):
        jobs.append((_problem_spec(opts, n=n, kappa=kappa), _amg_config(opts, soc, drop, theta), solve))
    return jobs


def cmd_sweep(opts) -> int:
    jobs = sweep_grid(opts)
    workers = _get(opts, "jobs")
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            records = list(ex.map(_sweep_case, jobs))
    else:
        records = [_sweep_case(j) for j in jobs]
    fh, close = _open_out(opts)
    try:
        records_to_csv(records, fh)
    finally:
        if close:
            fh.close()
    return EXIT_OK


def _write_csv(fh, header, rows):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)


def cmd_export(opts) -> int:
    what = opts.get("what")
    if what is None:
        raise UsageError("export needs --what")
    out = opts.get("out")
    if not out:
        raise UsageError("export needs --out")
    spec = _problem_spec(opts)
    prob = make_problem(spec)
    if what == "problem":
        paths = mmio.write_problem(out, prob)
        print(json.dumps({"files": [str(p) for p in paths]}))
        return EXIT_OK
    h = build_hierarchy(prob, _amg_config(opts))
    all_levels = what == "aggregates" and opts.get("level") == "all"
    level = 0 if all_levels else _get(opts, "level")
    if not 0 <= level < h.n_levels:
        raise UsageError(f"level {level} outside 0..{h.n_levels - 1}")
    lev = h.levels[level]
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    if what == "matrix":
        mmio.write_matrix_market(out, lev.A, comment=f"level {level} of {prob.name}")
    elif what in ("graph", "soc") and lev.mask is None:
        raise UsageError(f"level {level} is the coarsest level and has no strength data")
    elif what == "graph":
        rows, cols = lev.mask.edges()
        with open(out, "w", newline="") as fh:
            _write_csv(fh, ["level", "row", "col"], ((level, r, c) for r, c in zip(rows.tolist(), cols.tolist())))
    elif what == "soc":
        mmio.write_sparse_csv(out, lev.soc.matrix)
    elif what == "aggregates":
        with open(out, "w", newline="") as fh:
            rows = []
            for li, lv in enumerate(h.levels):
                if lv.aggregation is None or (li != level and not all_levels):
                    continue
                xyz = mmio._padded(lv.aux.coords)
                agg = lv.aggregation.node_to_aggregate
                rows.extend([li, i, *xyz[i].tolist(), int(agg[i])] for i in range(lv.n))
            _write_csv(fh, ["level", "node_id", "x", "y", "z", "aggregate_id"], rows)
    print(json.dumps({"what": what, "level": "all" if all_levels else level, "path": out,
                      "seed": h.config.seed}))
    return EXIT_OK


def cmd_error_demo(opts) -> int:
    spec = _problem_spec(opts)
    prob = make_problem(spec)
    if prob.dim != 2:
        raise UsageError("error-demo needs a 2D problem")
    seed = _get(opts, "seed")
    sweeps = _get(opts, "sweeps")
    if sweeps < 0:
        raise UsageError("--sweeps must be >= 0")
    e = jacobi_error_demo(prob, sweeps, seed, _get(opts, "omega"))
    fh, close = _open_out(opts)
    try:
        _write_csv(fh, ERROR_DEMO_HEADER,
                   ([i, x, y, v] for i, ((x, y), v) in enumerate(zip(prob.coords.tolist(), e.tolist()))))
    finally:
        if close:
            fh.close()
    if close:
        print(json.dumps({"seed": seed, "sweeps": sweeps, "problem": prob.name, "path": opts["out"]}))
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "export": cmd_export, "error-demo": cmd_error_demo}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # --help, or a usage error reported by the parser
        return EXIT_OK if e.code in (None, 0) else EXIT_USAGE
    try:
        opts = resolve(args)
        return COMMANDS[args.command](opts)
    except UsageError as e:
        print(f"matamg: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, np.linalg.LinAlgError) as e:
        print(f"matamg: failed: {e}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
