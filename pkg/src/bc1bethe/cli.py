"""Command-line front end.

    bc1bethe selftest [--json] [--tol X] [--break-legendre]
    bc1bethe solve  --config run.json [--seed N] [--tol X] [--out sol.json]
    bc1bethe verify sol.json [--tol X]
    bc1bethe trace  --config run.json [--out curve.csv]
    bc1bethe limit  --config run.json [--json]

Exit codes: 0 success, 1 check failure, 2 non-convergence, 64 usage or config error.
"""
from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import checks
from . import elliptic as ell
from .bc1_operator import Couplings, make_params
from .bethe import (
    BetheSolution,
    SolverOptions,
    bethe_residual,
    certify_eigen,
    default_grid,
    eigenvalue,
    q_space_check,
    solve_random,
)
from .errors import BC1Error, ConvergenceError, CouplingError, LatticeError
from .heun import limit_check, random_test_functions
from .spectral import TraceOptions, export_curve, k_from_q, ray_path, trace

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CHECK, EXIT_NOCONV, EXIT_USAGE = 0, 1, 2, 64

_PAIR = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_INT4 = {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 4, "maxItems": 4}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "lattice": {
            "type": "object", "additionalProperties": False,
            "properties": {"omega1": _PAIR, "omega2": _PAIR},
        },
        "couplings": {
            "type": "object", "additionalProperties": False,
            "properties": {"m": _INT4, "m_prime": _INT4, "gamma": _PAIR},
        },
        "solver": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 1},
                "seeds": {"type": "integer", "minimum": 1},
                "rng_seed": {"type": "integer", "minimum": 0},
                "k": _PAIR,
                "cert_tol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "grid": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "count": {"type": "integer", "minimum": 10},
                "region": {"enum": ["cell"]},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
        "trace": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "direction": _PAIR,
                "r_min": {"type": "number", "exclusiveMinimum": 0},
                "r_max": {"type": "number", "exclusiveMinimum": 0},
                "count": {"type": "integer", "minimum": 1},
            },
        },
        "limit": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "gamma0": _PAIR,
                "levels": {"type": "integer", "minimum": 3},
                "n_functions": {"type": "integer", "minimum": 1},
                "spread_tol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "output": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "path": {"type": ["string", "null"]},
                "format": {"enum": ["json", "csv"]},
            },
        },
    },
}

DEFAULT_CONFIG = {
    "lattice": {"omega1": [1.0, 0.0], "omega2": [0.3, 1.1]},
    "couplings": {"m": [1, 0, 0, 0], "m_prime": [0, 0, 0, 0], "gamma": [0.137, 0.061]},
    "solver": {"tol": 1e-10, "max_iter": 60, "seeds": 20, "rng_seed": 0, "k": [0.3, -0.4], "cert_tol": 1e-8},
    "grid": {"count": 50, "region": "cell", "seed": 12345},
    "trace": {"direction": [0.764842187284489, 0.644217687237691], "r_min": 0.5, "r_max": 2.0, "count": 60},
    "limit": {"gamma0": [0.1, 0.0], "levels": 6, "n_functions": 5, "spread_tol": 1e-4},
    "output": {"path": None, "format": "json"},
}


class UsageError(Exception):
    """Bad command line or configuration; maps to exit code 64."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


# -- configuration -------------------------------------------------------------------

def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path)


def validate_config(cfg):
    """Raise UsageError naming the JSON pointer of the first schema violation."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        e = errors[0]
        raise UsageError(f"config {_pointer(e.absolute_path)}: {e.message}")


def load_config(path=None, overrides=None):
    """Defaults, then the file, then flag overrides; validated after each merge."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except OSError as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise UsageError("config /: must be a JSON object")
        validate_config(user)
        for section, vals in user.items():
            cfg[section].update(vals)
    for (section, key), value in (overrides or {}).items():
        if value is not None:
            cfg[section][key] = value
    validate_config(cfg)
    return cfg


def _c(pair):
    return complex(pair[0], pair[1])


def build_params(cfg):
    try:
        ctx = ell.make_context(_c(cfg["lattice"]["omega1"]), _c(cfg["lattice"]["omega2"]))
    except LatticeError as exc:
        raise UsageError(f"config /lattice: {exc}") from exc
    c = cfg["couplings"]
    try:
        cp = Couplings(tuple(c["m"]), tuple(c["m_prime"]), _c(c["gamma"]))
        return make_params(ctx, cp)
    except CouplingError as exc:
        raise UsageError(f"config /couplings: {exc}") from exc


def solver_options(cfg, **extra):
    s, g = cfg["solver"], cfg["grid"]
    return SolverOptions(
        tol=s["tol"], max_iter=s["max_iter"], restarts=s["seeds"], cert_tol=s["cert_tol"],
        grid_count=g["count"], grid_seed=g["seed"], **extra,
    )


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write(text: str, path):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _cplx(z):
    return [z.real, z.imag]


# -- commands ------------------------------------------------------------------------

def cmd_selftest(args) -> int:
    results = checks.run_selftest(tol=args.tol, break_legendre=args.break_legendre, seed=args.seed or 0)
    failed = [c for c in results if not c.passed]
    if args.json:
        report = {"passed": not failed, "first_failure": failed[0].name if failed else None,
                  "checks": [c.to_dict() for c in results]}
        sys.stdout.write(dumps(report))
    else:
        width = max(len(c.name) for c in results)
        print(f"{'check':<{width}}  {'residual':>10}  {'tol':>8}  status")
        for c in results:
            print(f"{c.name:<{width}}  {c.residual:10.2e}  {c.tol:8.0e}  {'PASS' if c.passed else 'FAIL'}")
    if failed:
        print(f"selftest failed: {failed[0].name}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = load_config(args.config, {("solver", "tol"): args.tol, ("solver", "rng_seed"): args.seed,
                                    ("output", "path"): args.out})
    params = build_params(cfg)
    rng = np.random.default_rng(cfg["solver"]["rng_seed"])
    try:
        sol = solve_random(params, _c(cfg["solver"]["k"]), rng, solver_options(cfg))
    except ConvergenceError as exc:
        print(f"solve: no convergence: {exc}", file=sys.stderr)
        if exc.residual is not None:
            print(f"solve: last residual {exc.residual:.3e}", file=sys.stderr)
        return EXIT_NOCONV
    rep = q_space_check(params, sol)
    doc = {
        # the output section is left out so the file content does not depend on where it is written
        "config": {k: v for k, v in cfg.items() if k != "output"},
        "solution": sol.to_dict(),
        "q_space": {"max_condition_residual": rep.max_condition_residual(), "passed": rep.passed()},
        "warnings": sol.warnings,
    }
    _write(dumps(doc), cfg["output"]["path"])
    summary = f"residual={sol.residual_norm:.3e} certificate={sol.eigen_certificate:.3e} " \
              f"eigenvalue={sol.eigenvalue.real:.12g}{sol.eigenvalue.imag:+.12g}j"
    print(summary, file=sys.stderr if not cfg["output"]["path"] else sys.stdout)
    return EXIT_OK if sol.certified else EXIT_CHECK


def cmd_verify(args) -> int:
    try:
        doc = json.loads(Path(args.solution).read_text())
        cfg = doc["config"]
        validate_config(cfg)
        sol = BetheSolution.from_dict(doc["solution"])
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read solution file {args.solution}: {exc}") from exc
    params = build_params(cfg)
    tol = args.tol if args.tol is not None else cfg["solver"]["tol"]
    res = float(np.max(np.abs(bethe_residual(params, sol.state)))) if sol.state.m else 0.0
    grid = default_grid(params, sol.state, cfg["grid"]["count"], seed=cfg["grid"]["seed"])
    eps = eigenvalue(params, sol.state, grid)
    cert = certify_eigen(params, sol.state, eps, grid)
    eps_gap = abs(eps - sol.eigenvalue) / max(1.0, abs(eps))
    ok = res < tol and cert < cfg["solver"]["cert_tol"] and eps_gap < cfg["solver"]["cert_tol"]
    report = {"residual": res, "certificate": cert, "eigenvalue": _cplx(eps), "eigenvalue_gap": eps_gap,
              "passed": ok}
    if args.json:
        sys.stdout.write(dumps(report))
    else:
        print(f"residual={res:.3e} certificate={cert:.3e} eigenvalue_gap={eps_gap:.3e} "
              f"{'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_trace(args) -> int:
    cfg = load_config(args.config, {("solver", "tol"): args.tol, ("solver", "rng_seed"): args.seed,
                                    ("output", "path"): args.out})
    params = build_params(cfg)
    tr = cfg["trace"]
    path = ray_path(_c(tr["direction"]), tr["r_min"], tr["r_max"], tr["count"])
    k0 = k_from_q(params.gamma, path[0])
    rng = np.random.default_rng(cfg["solver"]["rng_seed"])
    try:
        seed = solve_random(params, k0, rng, solver_options(cfg, normalize_k=False))
    except ConvergenceError as exc:
        print(f"trace: seed solve failed: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    topts = TraceOptions(cert_tol=max(cfg["solver"]["cert_tol"], 1e-7))
    topts.solver = SolverOptions(tol=cfg["solver"]["tol"], normalize_k=False, certify=False, max_iter=30,
                                 grid_count=cfg["grid"]["count"], grid_seed=cfg["grid"]["seed"])
    samples = trace(params, seed, path, topts)
    fmt = cfg["output"]["format"]
    _write(export_curve(list(samples), fmt).decode(), cfg["output"]["path"])
    summary = {
        "samples": len(samples),
        "requested": len(path),
        "stalled": samples.stalled,
        "flagged": len(samples.diagnostics["flagged"]),
        "max_certificate": max(s.certificate for s in samples),
        "max_residual": max(s.residual for s in samples),
    }
    if samples.stalled:
        summary["stall"] = samples.diagnostics["stall"]
    if args.json and cfg["output"]["path"]:
        sys.stdout.write(dumps(summary))
    else:
        print(" ".join(f"{k}={v}" for k, v in summary.items() if k != "stall"), file=sys.stderr)
    if samples.stalled:
        print(f"trace: stalled: {samples.diagnostics['stall']}", file=sys.stderr)
        return EXIT_NOCONV
    return EXIT_OK


def cmd_limit(args) -> int:
    cfg = load_config(args.config, {("limit", "spread_tol"): args.tol, ("output", "path"): args.out})
    params = build_params(cfg)
    lim = cfg["limit"]
    rng = np.random.default_rng(args.seed if args.seed is not None else cfg["solver"]["rng_seed"])
    fns = random_test_functions(lim["n_functions"], rng)
    rep = limit_check(params.ctx, params.couplings, _c(lim["gamma0"]), n_levels=lim["levels"],
                      test_functions=fns)
    ok = rep.passed(spread_tol=lim["spread_tol"])
    doc = rep.to_dict()
    doc["passed"] = ok
    if args.json or cfg["output"]["path"]:
        _write(dumps(doc), cfg["output"]["path"])
    if not args.json or cfg["output"]["path"]:
        print(f"observed_order={rep.observed_order:.3f} constant_spread={rep.constant_spread:.3e} "
              f"{'PASS' if ok else 'FAIL'}", file=sys.stderr if args.json else sys.stdout)
    return EXIT_OK if ok else EXIT_CHECK


# -- entry point ---------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--tol", type=float, help="override the command's main tolerance")
    common.add_argument("--seed", type=int, help="override solver.rng_seed")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="bc1bethe", description="Bethe ansatz solver for the BC1 elliptic difference operator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    st = sub.add_parser("selftest", parents=[common], help="run the invariant suite")
    st.add_argument("--break-legendre", action="store_true", help="negative control: perturb eta_2")
    st.set_defaults(func=cmd_selftest)
    sub.add_parser("solve", parents=[common], help="solve the Bethe equations").set_defaults(func=cmd_solve)
    vf = sub.add_parser("verify", parents=[common], help="re-check a solution file")
    vf.add_argument("solution", metavar="SOLUTION", help="file written by 'solve'")
    vf.set_defaults(func=cmd_verify)
    sub.add_parser("trace", parents=[common], help="continue a solution along a q-ray").set_defaults(func=cmd_trace)
    sub.add_parser("limit", parents=[common], help="gamma -> 0 decay-order check").set_defaults(func=cmd_limit)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"bc1bethe: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BC1Error as exc:
        print(f"bc1bethe: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
