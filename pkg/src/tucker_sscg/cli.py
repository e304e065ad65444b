"""Command-line harness for the benchmark problems.

``tucker-sscg run`` solves one configuration and writes a JSON report (or a
per-iteration CSV); ``tucker-sscg sweep`` runs a grid of configurations and
writes one CSV row per cell; ``tucker-sscg schema`` prints the JSON schema of
the run report.

Exit codes: 0 when every solve converged, 1 when a solve did not converge or
aborted, 2 on invalid usage or configuration.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import itertools
import json
import logging
import os
import sys
import traceback

from .errors import ParameterError
from .preconditioners import (EigPreconditioner, ExponentialSumParams, FFTPreconditioner,
                              InnerOuterPreconditioner)
from .problems import Grid1D, build_example
from .reduced import PrecisionPolicy
from .solvers import SolverConfig, solve
from .tucker import TruncationPolicy

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
THREADS_ENV = "TUCKER_SSCG_THREADS"

#: run configuration defaults; ``maxit`` and ``maxrank`` follow the paper's setup
DEFAULTS = {
    "example": 1,
    "n": 100,
    "tol": 1e-3,
    "method": "cg",
    "precond": "none",
    "maxrank": 10,
    "delta": 1e-12,
    "maxit": 300,
    "precision": "full",
    "q": 1,
}

_CHOICES = {
    "example": (1, 2, 3, 4),
    "method": ("sd", "cg"),
    "precond": ("none", "eig", "fft", "innout"),
    "precision": ("full", "mixed"),
}

_TYPES = {"example": int, "n": int, "tol": float, "method": str, "precond": str,
          "maxrank": int, "delta": float, "maxit": int, "precision": str, "q": int}

_INT_LIST = {"type": "array", "items": {"type": "integer", "minimum": 1}}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "tucker-sscg run report",
    "type": "object",
    "required": ["schema_version", "config", "status", "converged", "iterations",
                 "residual_history", "rank_history", "inner_stats", "wall_time_seconds",
                 "stagnated", "precision_fallback"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "config": {
            "type": "object",
            "required": list(DEFAULTS),
            "properties": {
                "example": {"enum": list(_CHOICES["example"])},
                "n": {"type": "integer", "minimum": 1},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "method": {"enum": list(_CHOICES["method"])},
                "precond": {"enum": list(_CHOICES["precond"])},
                "maxrank": {"type": "integer", "minimum": 1},
                "delta": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "maxit": {"type": "integer", "minimum": 1},
                "precision": {"enum": list(_CHOICES["precision"])},
                "q": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "status": {"enum": ["converged", "not_converged", "error"]},
        "error": {"type": ["string", "null"]},
        "converged": {"type": "boolean"},
        "iterations": {"type": "integer", "minimum": 0},
        "residual_history": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "rank_history": {
            "type": "array",
            "items": {"type": "object", "required": ["x", "r"],
                      "properties": {"x": _INT_LIST, "r": _INT_LIST, "p": _INT_LIST}},
        },
        "inner_stats": {
            "type": "array",
            "items": {"type": "object", "required": ["alpha"],
                      "properties": {"alpha": {"type": "integer", "minimum": 0},
                                     "beta": {"type": "integer", "minimum": 0}}},
        },
        "wall_time_seconds": {"type": "number", "minimum": 0},
        "stagnated": {"type": "boolean"},
        "precision_fallback": {"type": "boolean"},
    },
}

HISTORY_FIELDS = ["iteration", "relative_residual", "rank_x", "rank_r"]
SWEEP_FIELDS = ["example", "n", "tol", "method", "precond", "maxrank", "delta", "maxit",
                "precision", "q", "iterations", "wall_time_seconds", "converged",
                "final_residual", "status", "error"]


class UsageError(Exception):
    """Invalid command line or configuration (exit code 2)."""


def normalize_config(raw: dict) -> dict:
    """Fill defaults, coerce types and validate choices of a run configuration."""
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise UsageError(f"unknown configuration keys: {sorted(unknown)}")
    cfg = dict(DEFAULTS)
    for key, value in raw.items():
        if value is None:
            continue
        try:
            cfg[key] = _TYPES[key](value)
        except (TypeError, ValueError):
            raise UsageError(f"{key}: cannot interpret {value!r} as {_TYPES[key].__name__}") from None
        if _TYPES[key] is int and isinstance(value, float) and value != int(value):
            raise UsageError(f"{key}: expected an integer, got {value!r}")
    for key, allowed in _CHOICES.items():
        if cfg[key] not in allowed:
            raise UsageError(f"{key} must be one of {list(allowed)}, got {cfg[key]!r}")
    for key in ("n", "maxrank", "maxit", "q"):
        if cfg[key] < 1:
            raise UsageError(f"{key} must be at least 1, got {cfg[key]}")
    if not cfg["tol"] > 0:
        raise UsageError(f"tol must be positive, got {cfg['tol']}")
    if not 0 <= cfg["delta"] < 1:
        raise UsageError(f"delta must lie in [0, 1), got {cfg['delta']}")
    return cfg


def build_run(cfg: dict):
    """Operator, right-hand side and :class:`SolverConfig` for a normalized configuration."""
    g = Grid1D(cfg["n"])
    A, c = build_example(cfg["example"], g)
    policy = TruncationPolicy(maxrank=cfg["maxrank"], delta=cfg["delta"])
    precond = None
    if cfg["precond"] in ("eig", "fft"):
        params = ExponentialSumParams.for_grid(cfg["n"], cfg["q"])
        precond = (EigPreconditioner if cfg["precond"] == "eig" else FFTPreconditioner)(params)
    elif cfg["precond"] == "innout":
        precond = InnerOuterPreconditioner(A)
    precision = PrecisionPolicy.mixed() if cfg["precision"] == "mixed" else PrecisionPolicy()
    scfg = SolverConfig(method=cfg["method"], policy=policy, tol=cfg["tol"], maxit=cfg["maxit"],
                        precision=precision, precond=precond)
    return A, c, scfg


def execute(cfg: dict) -> dict:
    """Run one normalized configuration; solver failures are captured in the report."""
    report = {"schema_version": SCHEMA_VERSION, "config": dict(cfg), "error": None,
              "converged": False, "iterations": 0, "residual_history": [],
              "rank_history": [], "inner_stats": [], "wall_time_seconds": 0.0,
              "stagnated": False, "precision_fallback": False}
    try:
        A, c, scfg = build_run(cfg)
        _, rep = solve(A, c, cfg=scfg)
    except Exception as exc:  # noqa: BLE001 - reported, not swallowed
        log.debug("solve aborted", exc_info=True)
        report["status"] = "error"
        report["error"] = f"{type(exc).__name__}: {exc}"
        return report
    report.update(rep.to_dict())
    report["status"] = "converged" if rep.converged else "not_converged"
    return report


def history_rows(report: dict):
    for k, (res, ranks) in enumerate(zip(report["residual_history"], report["rank_history"])):
        yield {"iteration": k, "relative_residual": repr(res),
               "rank_x": "x".join(map(str, ranks["x"])),
               "rank_r": "x".join(map(str, ranks["r"]))}


def _write_csv(fh, fields, rows):
    w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow(row)


@contextlib.contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def write_report(report: dict, path=None, fmt: str = "json"):
    with _output(path) as fh:
        if fmt == "json":
            json.dump(report, fh, indent=2)
            fh.write("\n")
        else:
            _write_csv(fh, HISTORY_FIELDS, history_rows(report))


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None


def expand_grid(grid: dict) -> list:
    """Cells of a sweep grid.

    Every key of :data:`DEFAULTS` may hold a scalar or a list; the cells are
    the Cartesian product of the lists.  An optional ``"solvers"`` list of
    ``[method, precond]`` pairs replaces the product over those two keys, which
    reproduces the row structure of the benchmark tables.
    """
    if not isinstance(grid, dict):
        raise UsageError("a sweep grid must be a JSON object")
    grid = dict(grid)
    solvers = grid.pop("solvers", None)
    unknown = set(grid) - set(DEFAULTS)
    if unknown:
        raise UsageError(f"unknown grid keys: {sorted(unknown)}")
    axes = {k: (v if isinstance(v, list) else [v]) for k, v in grid.items()}
    if solvers is not None:
        if not all(isinstance(s, (list, tuple)) and len(s) == 2 for s in solvers):
            raise UsageError("solvers must be a list of [method, precond] pairs")
        axes.pop("method", None)
        axes.pop("precond", None)
    keys = list(axes)
    cells = []
    for combo in itertools.product(*(axes[k] for k in keys)):
        base = dict(zip(keys, combo))
        for pair in ([None] if solvers is None else solvers):
            cell = dict(base)
            if pair is not None:
                cell["method"], cell["precond"] = pair
            cells.append(cell)
    return cells


def sweep(grid: dict, path=None) -> int:
    """Run every cell of ``grid``; one CSV row each, failures recorded per row."""
    cells = expand_grid(grid)
    worst = 0
    with _output(path) as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_FIELDS, lineterminator="\n")
        w.writeheader()
        fh.flush()
        for raw in cells:
            try:
                cfg = normalize_config(raw)
            except UsageError as exc:
                row = {**{k: raw.get(k, "") for k in DEFAULTS}, "status": "error",
                       "error": f"UsageError: {exc}", "converged": False}
                w.writerow(row)
                worst = 1
                continue
            rep = execute(cfg)
            w.writerow({**cfg, "iterations": rep["iterations"],
                        "wall_time_seconds": f"{rep['wall_time_seconds']:.3f}",
                        "converged": rep["converged"],
                        "final_residual": (repr(rep["residual_history"][-1])
                                           if rep["residual_history"] else ""),
                        "status": rep["status"], "error": rep["error"] or ""})
            fh.flush()
            if not rep["converged"]:
                worst = 1
    return worst


def _thread_limit():
    value = os.environ.get(THREADS_ENV)
    if not value:
        return contextlib.nullcontext()
    try:
        limit = int(value)
        if limit < 1:
            raise ValueError
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {value!r}") from None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=limit)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tucker-sscg", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    run = sub.add_parser("run", help="solve one configuration")
    run.add_argument("--config", metavar="PATH", help="JSON file with run keys; flags override it")
    run.add_argument("--example", type=int)
    run.add_argument("--n", type=int)
    run.add_argument("--tol", type=float)
    run.add_argument("--method")
    run.add_argument("--precond")
    run.add_argument("--maxrank", type=int)
    run.add_argument("--delta", type=float)
    run.add_argument("--maxit", type=int)
    run.add_argument("--precision")
    run.add_argument("--q", type=int)
    run.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    run.add_argument("--format", choices=("json", "csv"), default="json")

    sw = sub.add_parser("sweep", help="run a grid of configurations")
    sw.add_argument("--config", metavar="PATH", required=True, help="JSON grid")
    sw.add_argument("--out", metavar="PATH", help="CSV output file (default stdout)")

    sub.add_parser("schema", help="print the JSON schema of run reports")
    return p


def _run_command(args) -> int:
    raw = _load_json(args.config) if args.config else {}
    if not isinstance(raw, dict):
        raise UsageError("a run config must be a JSON object")
    for key in DEFAULTS:
        value = getattr(args, key)
        if value is not None:
            raw[key] = value
    cfg = normalize_config(raw)
    report = execute(cfg)
    write_report(report, args.out, args.format)
    if report["status"] == "error":
        print(f"tucker-sscg: solver aborted: {report['error']}", file=sys.stderr)
    elif not report["converged"]:
        print(f"tucker-sscg: not converged after {report['iterations']} iterations "
              f"(relative residual {report['residual_history'][-1]:.3e})", file=sys.stderr)
    return 0 if report["converged"] else 1


def main(argv=None) -> int:
    try:
        args = make_parser().parse_args(argv)
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                            format="%(levelname)s %(name)s: %(message)s")
        with _thread_limit():
            if args.command == "run":
                return _run_command(args)
            if args.command == "sweep":
                return sweep(_load_json(args.config), args.out)
            json.dump(REPORT_SCHEMA, sys.stdout, indent=2)
            sys.stdout.write("\n")
            return 0
    except (UsageError, ParameterError) as exc:
        print(f"tucker-sscg: error: {exc}", file=sys.stderr)
        return 2
    except Exception:  # noqa: BLE001
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
