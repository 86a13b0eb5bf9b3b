"""Command-line interface: ``curvedflow check | profile | mobility``.

JSON goes to stdout; human-readable notes and error objects go to stderr.
Exit codes: 0 success, 1 usage, 2 numeric/domain failure, 3 refusal
because no unidirectional flow exists.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import darcy, profiles, separability, stokes_op
from . import expr as ex
from .metric import PRESET_NAMES, MetricError, MetricSpec, conformal_k1, k1_expression, load_metric, preset

SCHEMA_VERSION = "1"
EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_REFUSED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class Refusal(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --------------------------------------------------------------------------
# deterministic JSON


def _fmt(obj) -> str:
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x + 0.0, ".9e") if math.isfinite(x) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_fmt(obj[k])}" for k in sorted(obj)) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(v) for v in obj) + "]"
    if hasattr(obj, "value"):  # enums
        return _fmt(obj.value)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj) -> str:
    """JSON with sorted keys and every float in 10-significant-digit scientific notation."""
    return _fmt(obj)


def run_report(command, inputs, results, warnings) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "inputs": inputs,
        "results": results,
        "warnings": warnings,
    }


# --------------------------------------------------------------------------
# metric source


def _param(text: str):
    if "=" not in text:
        raise UsageError(f"--param expects name=value, got {text!r}")
    key, value = text.split("=", 1)
    try:
        return key.strip(), float(value)
    except ValueError:
        return key.strip(), value.strip()


def _metric_from_args(args) -> MetricSpec:
    params = dict(_param(p) for p in args.param or [])
    domain = None
    if args.x1_range or args.x3_range:
        if not (args.x1_range and args.x3_range):
            raise UsageError("--x1-range and --x3-range must be given together")
        domain = (tuple(args.x1_range), tuple(args.x3_range))
    if args.metric:
        if args.preset or params:
            raise UsageError("use either --metric or --preset/--param")
        try:
            return load_metric(args.metric)
        except OSError as err:
            raise UsageError(f"cannot read metric file: {err}") from err
    if not args.preset:
        raise UsageError("a metric source is required (--preset or --metric)")
    if args.preset not in PRESET_NAMES:
        raise UsageError(f"unknown preset {args.preset!r}; choose from {', '.join(PRESET_NAMES)}")
    try:
        return preset(args.preset, params, domain)
    except MetricError as err:
        if err.path and err.path.startswith("params"):
            raise UsageError(str(err)) from err
        raise


def _add_metric_args(p):
    p.add_argument("--preset", help=f"one of: {', '.join(PRESET_NAMES)}")
    p.add_argument("--param", action="append", metavar="NAME=VALUE", help="preset parameter (repeatable)")
    p.add_argument("--metric", metavar="FILE", help="metric JSON file")
    p.add_argument("--x1-range", nargs=2, type=float, metavar=("LO", "HI"))
    p.add_argument("--x3-range", nargs=2, type=float, metavar=("LO", "HI"))


# --------------------------------------------------------------------------
# commands


def cmd_check(args):
    m = _metric_from_args(args)
    warnings = []
    verdict = separability.check_flow_existence(m, args.tol)
    results = {
        "metric": m.to_json(),
        "separability": {k: rep.to_json() for k, rep in verdict.reports.items()},
        "verdict": verdict.status.value,
        "reason": verdict.reason,
    }
    try:
        coeffs = stokes_op.extract_coefficients(m)
        summary = coeffs.summary()
        summary["x3_independent"] = stokes_op.x3_independence(coeffs)
        results["coefficients"] = summary
    except (MetricError, ValueError) as err:
        warnings.append(f"coefficient extraction failed: {err}")
        results["coefficients"] = None
    return {"tol": args.tol, "metric": m.name}, results, warnings


def _build_profile(args, m: MetricSpec, verdict, warnings):
    status = verdict.status
    f = m.conformal_factor
    if m.name == "minkowski_pseudosphere":
        a = args.a if args.a is not None else m.domain[0][0]
        return profiles.minkowski_profile(a, args.b, args.amplitude, args.eta)
    if f is not None:
        if args.a not in (None, 0.0):
            warnings.append("conformal profiles use walls [0, b]; --a ignored")
        report = conformal_k1(f, m.domain[1], params=m.params)
        if report.is_constant:
            k1 = report.k1_constant
        else:
            if not args.force:
                raise Refusal(f"no unidirectional flow: {verdict.reason}")
            x3 = args.x3 if args.x3 is not None else 0.5 * sum(m.domain[1])
            k1 = float(ex.evaluate(k1_expression(f), {"x3": x3, **m.params}))
            warnings.append(f"forced: k1 frozen at x3 = {x3:g}")
        if abs(k1) < 1e-12:
            k1 = 0.0
        if k1 > 0:
            warnings.append("k1 > 0: trigonometric continuation of the profile family")
        prof = profiles.conformal_profile(args.b, k1, args.amplitude, allow_trig=True)
        if args.eta != 1.0:
            warnings.append("conformal profiles are parametrised by k2; --eta ignored")
        return prof
    if status is separability.Existence.EXISTS_CONSTRUCTIVE:
        a = args.a if args.a is not None else m.domain[0][0]
        return profiles.quadrature_profile(m, a, args.b, args.amplitude, args.eta, args.nodes, verdict)
    if status is separability.Existence.NOT_EXISTS and args.force:
        raise ValueError("--force only applies to closed-form families (Minkowski, conformal)")
    raise Refusal(f"no constructive flow for {m.name!r}: {verdict.reason}")


def cmd_profile(args):
    m = _metric_from_args(args)
    warnings = []
    verdict = separability.check_flow_existence(m)
    prof = _build_profile(args, m, verdict, warnings)
    rows = profiles.write_csv(prof, args.out, args.samples)
    results = {
        "kind": prof.kind.value,
        "walls": list(prof.walls),
        "amplitude": prof.amplitude,
        "k1": prof.k1,
        "rows": int(rows.shape[0]),
        "max_abs_g": float(np.max(np.abs(rows[:, 1]))),
        "out": str(args.out),
        "verdict": verdict.status.value,
    }
    try:
        res = stokes_op.maineq_residual(m, prof)
        results["residual"] = {"sup_norm": res.sup_norm, "sup_norm_richardson": res.sup_norm_richardson, "h": list(res.h)}
    except (MetricError, ValueError) as err:
        results["residual"] = None
        warnings.append(f"residual not computed: {err}")
    inputs = {"metric": m.name, "a": prof.a, "b": args.b, "amplitude": args.amplitude, "eta": args.eta,
              "samples": args.samples, "force": bool(args.force)}
    return inputs, results, warnings


def cmd_mobility(args):
    if args.law == "pseudosphere":
        mob = darcy.pseudosphere_mobility(args.a, args.b, args.eta)
        inputs = {"law": "pseudosphere", "a": args.a, "b": args.b, "eta": args.eta}
    else:
        params = dict(_param(p) for p in args.param or [])
        if any(isinstance(v, str) for v in params.values()):
            raise UsageError("conformal mobility parameters must be numeric")
        mob = darcy.conformal_mobility(args.f, args.b, args.x3, args.eta, params)
        inputs = {"law": "conformal", "f": args.f, "b": args.b, "x3": args.x3, "eta": args.eta, "params": params}
    warnings = ["trigonometric continuation (k1 > 0)"] if mob.extra.get("continuation") else []
    return inputs, mob.to_json(), warnings


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="curvedflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("check", help="decide existence of a unidirectional flow")
    _add_metric_args(p)
    p.add_argument("--tol", type=float, default=separability.DEFAULT_TOL)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("profile", help="construct a flow profile and write it as CSV")
    _add_metric_args(p)
    p.add_argument("--a", type=float, default=None, help="inner wall (default: domain start)")
    p.add_argument("--b", type=float, required=True, help="gap width")
    p.add_argument("--amplitude", type=float, default=1.0, help="C, k2 or the separation constant")
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--nodes", type=int, default=257, help="quadrature nodes")
    p.add_argument("--x3", type=float, default=None, help="freezing point for --force")
    p.add_argument("--force", action="store_true", help="build closed-form families without existence")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("mobility", help="Darcy-law mobility")
    laws = p.add_subparsers(dest="law", parser_class=_Parser)
    q = laws.add_parser("pseudosphere")
    q.add_argument("--a", type=float, required=True)
    q.add_argument("--b", type=float, required=True)
    q.add_argument("--eta", type=float, default=1.0)
    q = laws.add_parser("conformal")
    q.add_argument("--f", required=True, help="conformal factor f(x3)")
    q.add_argument("--b", type=float, required=True)
    q.add_argument("--x3", type=float, default=0.0)
    q.add_argument("--eta", type=float, default=1.0)
    q.add_argument("--param", action="append", metavar="NAME=VALUE")
    p.set_defaults(func=cmd_mobility)
    return parser


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(dumps({"error": {"type": kind, "message": message, "exit_code": code}}) + "\n")
    return code


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None or (args.command == "mobility" and args.law is None):
            raise UsageError("a command is required")
        inputs, results, warnings = args.func(args)
    except UsageError as err:
        return _fail(EXIT_USAGE, "usage", str(err))
    except Refusal as err:
        return _fail(EXIT_REFUSED, "refused", str(err))
    except (ValueError, ArithmeticError) as err:
        return _fail(EXIT_NUMERIC, type(err).__name__, str(err))
    for w in warnings:
        sys.stderr.write(f"note: {w}\n")
    sys.stdout.write(dumps(run_report(argv, inputs, results, warnings)) + "\n")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
