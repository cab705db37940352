"""Command-line entry point.

Subcommands::

    cramerstab metric     --dist-a A.json --dist-b B.json --metric levy
    cramerstab regularize --dist-a A.json --sigma 0.5
    cramerstab check      --suite suite.json --out report.json
    cramerstab estimate   --bound T23 --family contaminated_normal --levels 3

Exit codes: 0 success (no violations), 1 explicit-constant violation,
2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .bounds import CATALOGUE, BoundInputs, CatalogueError, get_spec
from .harness import (DEFAULT_SIGMA_GRID, DEFAULT_T_GRID, FAMILY_IDS, ConfigError, FamilySpec,
                      estimate_constant, run_suite, standard_families)
from .io import InputError, distribution_from_dict, distribution_to_dict, dumps, load_distribution, load_json
from .metrics import METRICS, entropic_distance
from .numerics import DEFAULT_TOLERANCES, DomainError, NumericalError, Tolerances
from .regularize import RegularizationParams, regularize

log = logging.getLogger("cramerstab")

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2
SUITE_KEYS = {"bounds", "families", "t_grid", "sigma_grid", "tolerances", "inputs"}
FAMILY_KEYS = {"family_id", "params", "rng_seed"}
INPUT_KEYS = {"bound", "label", "x", "y", "t", "sigma", "eps", "a", "v", "allow_large_sigma"}
TOL_KEYS = set(DEFAULT_TOLERANCES.as_dict())
CSV_FLOAT = "%.12g"


class UsageError(ValueError):
    """Bad flag value or configuration; maps to exit code 2."""


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------

def _tol_value(key: str, raw):
    if key == "sup_grid_points":
        try:
            return int(raw)
        except (TypeError, ValueError):
            raise UsageError(f"tolerances.{key}: expected an integer, got {raw!r}") from None
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise UsageError(f"tolerances.{key}: expected a number, got {raw!r}") from None


def build_tolerances(overrides: dict, base: Tolerances = DEFAULT_TOLERANCES) -> Tolerances:
    unknown = set(overrides) - TOL_KEYS
    if unknown:
        raise UsageError(f"tolerances: unknown key(s) {sorted(unknown)}; valid: {sorted(TOL_KEYS)}")
    values = {k: _tol_value(k, v) for k, v in overrides.items()}
    try:
        return replace(base, **values)
    except DomainError as exc:
        raise UsageError(f"tolerances: {exc}") from exc


def parse_tol_flags(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--tol: expected KEY=VAL, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _float_list(value, where: str) -> tuple[float, ...]:
    if not isinstance(value, list) or not value:
        raise UsageError(f"{where}: expected a non-empty list of numbers")
    out = []
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise UsageError(f"{where}[{i}]: expected a number, got {v!r}")
        out.append(float(v))
    return tuple(out)


def _family(obj, where: str, seed: int | None) -> FamilySpec:
    if isinstance(obj, str):
        obj = {"family_id": obj}
    if not isinstance(obj, dict):
        raise UsageError(f"{where}: expected an object or a family id")
    unknown = set(obj) - FAMILY_KEYS
    if unknown:
        raise UsageError(f"{where}: unknown key(s) {sorted(unknown)}")
    if "family_id" not in obj:
        raise UsageError(f"{where}.family_id: missing")
    params = obj.get("params", {})
    if not isinstance(params, dict):
        raise UsageError(f"{where}.params: expected an object")
    rng_seed = obj.get("rng_seed", 0) if seed is None else seed
    try:
        return FamilySpec(obj["family_id"], params, rng_seed)
    except ConfigError as exc:
        raise UsageError(f"{where}: {exc}") from exc


def _custom_input(obj, where: str):
    if not isinstance(obj, dict):
        raise UsageError(f"{where}: expected an object")
    unknown = set(obj) - INPUT_KEYS
    if unknown:
        raise UsageError(f"{where}: unknown key(s) {sorted(unknown)}")
    if "bound" not in obj:
        raise UsageError(f"{where}.bound: missing")
    bound = obj["bound"]
    get_spec(bound)
    kwargs = {}
    for key in ("x", "y"):
        if key in obj:
            try:
                kwargs[key] = distribution_from_dict(obj[key])
            except InputError as exc:
                raise UsageError(f"{where}.{key}: {exc}") from exc
    for key in ("t", "sigma", "eps", "a", "v"):
        if key in obj:
            v = obj[key]
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise UsageError(f"{where}.{key}: expected a number, got {v!r}")
            kwargs[key] = float(v)
    kwargs["allow_large_sigma"] = bool(obj.get("allow_large_sigma", False))
    kwargs["label"] = str(obj.get("label", f"custom{where}"))
    return bound, BoundInputs(**kwargs)


def parse_suite(obj, seed: int | None = None, tol_overrides: dict | None = None) -> dict:
    """Validate a suite configuration and turn it into run_suite keyword arguments."""
    if not isinstance(obj, dict):
        raise UsageError("suite: expected a JSON object")
    unknown = set(obj) - SUITE_KEYS
    if unknown:
        raise UsageError(f"suite: unknown key(s) {sorted(unknown)}; valid: {sorted(SUITE_KEYS)}")
    bounds = obj.get("bounds", "all")
    if bounds == "all":
        bounds = sorted(CATALOGUE)
    if not isinstance(bounds, list) or not all(isinstance(b, str) for b in bounds):
        raise UsageError("bounds: expected a list of bound ids or \"all\"")
    for b in bounds:
        get_spec(b)
    if "families" in obj:
        if not isinstance(obj["families"], list):
            raise UsageError("families: expected a list")
        families = [_family(f, f"families[{i}]", seed) for i, f in enumerate(obj["families"])]
    else:
        families = standard_families(0 if seed is None else seed)
    tol_obj = obj.get("tolerances", {})
    if not isinstance(tol_obj, dict):
        raise UsageError("tolerances: expected an object")
    tol = build_tolerances({**tol_obj, **(tol_overrides or {})})
    inputs = obj.get("inputs", [])
    if not isinstance(inputs, list):
        raise UsageError("inputs: expected a list")
    custom = [_custom_input(item, f"inputs[{i}]") for i, item in enumerate(inputs)]
    return {
        "bounds": bounds,
        "family": families,
        "tolerances": tol,
        "t_grid": _float_list(obj["t_grid"], "t_grid") if "t_grid" in obj else DEFAULT_T_GRID,
        "sigma_grid": _float_list(obj["sigma_grid"], "sigma_grid") if "sigma_grid" in obj else DEFAULT_SIGMA_GRID,
        "custom_inputs": custom,
    }


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _check_writable(path: str | None):
    if path is None:
        return
    parent = os.path.dirname(os.path.abspath(path)) or "."
    if os.path.isdir(path) or not os.path.isdir(parent) or not os.access(parent, os.W_OK):
        raise UsageError(f"--out: cannot write to {path}")
    if os.path.exists(path) and not os.access(path, os.W_OK):
        raise UsageError(f"--out: cannot write to {path}")


def _emit(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"--out: cannot write to {path} ({exc.strerror})") from exc


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return CSV_FLOAT % value
    return str(value)


def to_csv(header, rows) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_csv_cell(v) for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_metric(args) -> int:
    tol = build_tolerances(parse_tol_flags(args.tol))
    _check_writable(args.out)
    f = load_distribution(args.dist_a)
    if args.metric == "entropic":
        result = entropic_distance(f, tol).as_dict()
        config = {"dist_a": distribution_to_dict(f)}
    else:
        if args.dist_b is None:
            raise UsageError(f"--dist-b is required for metric {args.metric}")
        g = load_distribution(args.dist_b)
        result = METRICS[args.metric](f, g, tol).as_dict()
        config = {"dist_a": distribution_to_dict(f), "dist_b": distribution_to_dict(g)}
    config.update(metric=args.metric, tolerances=tol.as_dict())
    if args.format == "csv":
        text = to_csv(["metric", "value", "err_estimate", "method"],
                      [[args.metric, result["value"], result["err_estimate"], result["method"]]])
    else:
        text = dumps({**result, "metric": args.metric, "version": __version__, "config": config})
    _emit(text, args.out)
    return EXIT_OK


def cmd_regularize(args) -> int:
    tol = build_tolerances(parse_tol_flags(args.tol))
    if args.sigma is None:
        raise UsageError("--sigma is required")
    _check_writable(args.out)
    try:
        params = RegularizationParams(args.sigma, allow_large=args.allow_large_sigma)
    except DomainError as exc:
        raise UsageError(f"--sigma: {exc}") from exc
    d = load_distribution(args.dist_a)
    out = regularize(d, params, tol)
    if args.format == "csv":
        lo, hi = out.window(tol)
        xs = np.linspace(lo, hi, args.points)
        text = to_csv(["x", "pdf", "cdf"], zip(xs, out.pdf(xs), out.cdf(xs)))
    else:
        text = dumps({"version": __version__, "sigma": args.sigma,
                      "large_sigma_override": args.sigma > 1,
                      "distribution": distribution_to_dict(out),
                      "config": {"dist_a": distribution_to_dict(d), "tolerances": tol.as_dict()}})
    _emit(text, args.out)
    return EXIT_OK


REPORT_COLUMNS = ["bound_id", "input_descriptor", "status", "lhs", "rhs", "ratio", "satisfied",
                  "err_budget", "constant_mode", "direction", "reason"]


def cmd_check(args) -> int:
    if args.suite is None:
        raise UsageError("--suite is required")
    _check_writable(args.out)
    raw = load_json(args.suite)
    kwargs = parse_suite(raw, seed=args.seed, tol_overrides=parse_tol_flags(args.tol))
    report = run_suite(**kwargs)
    log.info("check: %d reports, %d violations, %.1f s", len(report.reports), len(report.violations),
             report.wall_time)
    if args.format == "csv":
        rows = [[getattr(r, c) for c in REPORT_COLUMNS] for r in report.reports]
        text = to_csv(REPORT_COLUMNS, rows)
    else:
        body = report.as_dict()
        body["config"] = {**body["config"], "suite": raw, "seed": args.seed}
        text = dumps(body)
    _emit(text, args.out)
    return EXIT_VIOLATION if report.violations else EXIT_OK


def cmd_estimate(args) -> int:
    if args.bound is None:
        raise UsageError("--bound is required")
    spec = get_spec(args.bound)
    if not spec.constant_mode:
        raise UsageError(f"--bound: {args.bound} has an explicit constant; constant-mode ids: "
                         f"{', '.join(sorted(b for b, s in CATALOGUE.items() if s.constant_mode))}")
    _check_writable(args.out)
    tol_flags = parse_tol_flags(args.tol)
    raw = None
    if args.suite is not None:
        raw = load_json(args.suite)
        kwargs = parse_suite(raw, seed=args.seed, tol_overrides=tol_flags)
        families = kwargs["family"]
        tol, t_grid, sigma_grid = kwargs["tolerances"], kwargs["t_grid"], kwargs["sigma_grid"]
    else:
        seed = 0 if args.seed is None else args.seed
        families = ([_family(f, "--family", seed) for f in args.family] if args.family
                    else standard_families(seed))
        tol, t_grid, sigma_grid = build_tolerances(tol_flags), DEFAULT_T_GRID, DEFAULT_SIGMA_GRID
    est = estimate_constant(args.bound, families, args.levels, tol, t_grid, sigma_grid)
    if args.format == "csv":
        text = to_csv(["bound_id", "family_member", "ratio", "level"], est.rows)
    else:
        text = dumps({
            "version": __version__,
            "bound_id": est.bound_id,
            "empirical_c": est.empirical_c,
            "stability": est.stability,
            "level_constants": est.level_constants,
            "rows": [{"family_member": m, "ratio": r, "level": lv} for _, m, r, lv in est.rows],
            "config": {"families": [f.as_dict() for f in families], "levels": args.levels,
                       "t_grid": list(t_grid), "sigma_grid": list(sigma_grid),
                       "tolerances": tol.as_dict(), "suite": raw},
        })
    _emit(text, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parser
# ---------------------------------------------------------------------------

def _u64(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an unsigned 64-bit integer, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed out of range: {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--tol", action="append", metavar="KEY=VAL",
                        help=f"tolerance override, keys: {', '.join(sorted(TOL_KEYS))}")
    common.add_argument("--seed", type=_u64, default=None, help="rng seed for generated families")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(prog="cramerstab", description="Stability checks for Gaussian laws.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metric", parents=[common], help="distance between two laws")
    p.add_argument("--dist-a", required=True, metavar="PATH")
    p.add_argument("--dist-b", metavar="PATH")
    p.add_argument("--metric", required=True, choices=(*METRICS, "entropic"))
    p.set_defaults(func=cmd_metric)

    p = sub.add_parser("regularize", parents=[common], help="law of X + sigma Z")
    p.add_argument("--dist-a", required=True, metavar="PATH")
    p.add_argument("--sigma", type=float, metavar="REAL")
    p.add_argument("--allow-large-sigma", action="store_true")
    p.add_argument("--points", type=int, default=801, help="rows in CSV output")
    p.set_defaults(func=cmd_regularize)

    p = sub.add_parser("check", parents=[common], help="run a bound suite")
    p.add_argument("--suite", metavar="PATH")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("estimate", parents=[common], help="empirical constant of a constant-mode bound")
    p.add_argument("--bound", metavar="ID")
    p.add_argument("--family", action="append", choices=FAMILY_IDS,
                   help="family id (repeatable; default: the standard families)")
    p.add_argument("--suite", metavar="PATH", help="config with families/t_grid/sigma_grid/tolerances")
    p.add_argument("--levels", type=int, default=2)
    p.set_defaults(func=cmd_estimate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except CatalogueError as exc:
        print(f"error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
    except (UsageError, InputError, ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    except NumericalError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
