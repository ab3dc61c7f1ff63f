"""Command-line entry point.

Every report is JSON with sorted keys; exit status is 0 for a definite
verdict, 2 for Unknown/Inconclusive, 1 for errors.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .curves import ControlPath, HorizontalCurve, integrate, sample_curve_csv
from .group_ops import identity, point
from .lie_core import load_group

EXIT_OK, EXIT_ERROR, EXIT_UNKNOWN = 0, 1, 2


class CliError(Exception):
    pass


def _parse_vector(text, alg):
    if text is None:
        raise CliError("--vector is required")
    try:
        vals = [Fraction(x.strip()) for x in text.split(",") if x.strip()]
    except (ValueError, ZeroDivisionError):
        raise CliError(f"malformed vector {text!r}") from None
    if len(vals) != alg.m:
        raise CliError(f"vector needs {alg.m} horizontal coefficients, got {len(vals)}")
    return alg.horizontal(vals)


def _group(args):
    spec = args.group or getattr(args, "spec", None)
    if not spec:
        raise CliError("no group given (positional spec or --group)")
    try:
        return load_group(spec)
    except (ValueError, KeyError, OSError) as exc:
        raise CliError(str(exc)) from None


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise CliError(str(exc)) from None


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def _report(args, alg, command, body):
    out = {"tool": "carnot", "version": __version__, "command": command,
           "group": alg.name if alg is not None else None,
           "spec_digest": alg.digest if alg is not None else None}
    out.update(body)
    return json.dumps(_clean(out), sort_keys=True, indent=2) + "\n"


def _emit(args, text):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# -- commands ----------------------------------------------------------------------

def cmd_group(args):
    alg = _group(args)
    body = {"layer_dims": list(alg.layer_dims), "dim": alg.dim, "step": alg.step, "m": alg.m,
            "basis": [alg.label(i) for i in range(alg.dim)],
            "brackets": [{"i": alg.label(i), "j": alg.label(j),
                          "value": {alg.label(k): str(c) for k, c in col}}
                         for i, j, col in alg._pairs]}
    _emit(args, _report(args, alg, "group", body))
    return EXIT_OK


def cmd_rigidity(args):
    from .rigidity import rigidity_test
    alg = _group(args)
    X = _parse_vector(args.vector, alg)
    v = rigidity_test(X, seed=args.seed)
    body = {"vector": [str(c) for c in X.horizontal_part], **v.to_json()}
    _emit(args, _report(args, alg, "rigidity", body))
    return EXIT_UNKNOWN if v.tag == "Unknown" else EXIT_OK


def cmd_pliability(args):
    from .pliability import pliability_test
    alg = _group(args)
    X = _parse_vector(args.vector, alg)
    v = pliability_test(X, lmax=args.lmax, probe=args.probe, seed=args.seed,
                        epsilon=args.epsilon, samples=args.samples)
    body = {"vector": [str(c) for c in X.horizontal_part], **v.to_json()}
    _emit(args, _report(args, alg, "pliability", body))
    return EXIT_UNKNOWN if v.tag == "Unknown" else EXIT_OK


def cmd_probe(args):
    from .pliability import reachability_probe
    alg = _group(args)
    X = _parse_vector(args.vector, alg)
    rep = reachability_probe(X, args.epsilon, args.samples, args.seed, keep=args.format == "csv")
    if args.format == "csv":
        buf = io.StringIO()
        np.savetxt(buf, rep.endpoints, delimiter=",", fmt="%.17g")
        _emit(args, buf.getvalue())
    else:
        body = {"vector": [str(c) for c in X.horizontal_part], **rep.to_json()}
        _emit(args, _report(args, alg, "probe", body))
    return EXIT_OK


def cmd_whitney(args):
    from .whitney import (WhitneyData, build_counterexample, extend_step2, modulus_report,
                          telescoping_check)
    alg = _group(args)
    if args.action == "counterexample":
        V = None if args.vector is None else _parse_vector(args.vector, alg).horizontal_part
        try:
            data = build_counterexample(alg, V, nmax=args.nmax)
        except ValueError as exc:
            raise CliError(str(exc)) from None
        ok, worst = telescoping_check(data)
        body = {"data": data.to_json(), "telescoping_bound": ok, "worst_ratio": worst}
        _emit(args, _report(args, alg, "whitney counterexample", body))
        return EXIT_OK
    if not args.data:
        raise CliError("a WhitneyData JSON file is required")
    raw = _read_json(args.data)
    if "data" in raw and "K" not in raw:
        raw = raw["data"]
    try:
        data = WhitneyData.from_json(raw, alg)
    except (KeyError, ValueError) as exc:
        raise CliError(f"bad WhitneyData: {exc}") from None
    if args.action == "check":
        etas = None if not args.eta else [float(Fraction(e)) for e in args.eta.split(",")]
        rep = modulus_report(data, etas)
        _emit(args, _report(args, alg, "whitney check", rep.to_json()))
        return EXIT_OK if rep.passed else EXIT_UNKNOWN
    try:
        ext = extend_step2(data, tol=args.tol, force=args.force)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    if args.format == "csv":
        _emit(args, sample_curve_csv(ext.curve, args.step_size))
    else:
        _emit(args, _report(args, alg, "whitney extend", {**ext.to_json(), "ok": ext.ok}))
    return EXIT_OK if ext.ok else EXIT_UNKNOWN


def _load_curve(args, alg):
    raw = _read_json(args.control)
    try:
        ctrl = ControlPath.from_json(raw.get("control", raw))
    except (KeyError, ValueError, TypeError) as exc:
        raise CliError(f"bad control JSON: {exc}") from None
    start = raw.get("start") if isinstance(raw, dict) else None
    x0 = point(alg, [Fraction(c) if isinstance(c, str) else c for c in start]) if start else identity(alg)
    try:
        return HorizontalCurve(x0, ctrl)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def cmd_curve(args):
    alg = _group(args)
    c = _load_curve(args, alg)
    if args.format == "csv":
        _emit(args, sample_curve_csv(c, args.step_size, args.method))
        return EXIT_OK
    end, (ts, xs) = integrate(c, args.step_size, args.method)
    body = {"endpoint": end.to_list(), "continuity": c.control.continuity(),
            "c1_h": c.is_c1_h, "steps": len(ts) - 1, "method": args.method}
    _emit(args, _report(args, alg, "curve integrate", body))
    return EXIT_OK


def cmd_lusin(args):
    from .whitney import lusin_demo
    alg = _group(args)
    c = _load_curve(args, alg)
    try:
        res = lusin_demo(c, args.epsilon, tol=args.tol)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    ok = all(g["converged"] for g in res.gaps)
    _emit(args, _report(args, alg, "lusin", {**res.to_json(), "ok": ok}))
    return EXIT_OK if ok else EXIT_UNKNOWN


# -- parser --------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1, keeping 2 for undecided verdicts."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--group", help="preset name or JSON group spec (alternative to the positional)")
    common.add_argument("--vector", help="horizontal coefficients, e.g. 1,0 or 1/2,-3")
    common.add_argument("--tol", type=float, default=1e-12)
    common.add_argument("--step-size", type=float, default=1e-3)
    common.add_argument("--epsilon", type=float, default=0.1)
    common.add_argument("--samples", type=int, default=1000)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--nmax", type=int, default=12)
    common.add_argument("--lmax", type=int, default=None)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = _Parser(prog="carnot", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"carnot {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("group", parents=[common], help="algebra summary")
    s.add_argument("spec", nargs="?")
    s.set_defaults(func=cmd_group)

    s = sub.add_parser("rigidity", parents=[common], help="rigidity verdict for a horizontal vector")
    s.add_argument("spec", nargs="?")
    s.set_defaults(func=cmd_rigidity)

    s = sub.add_parser("pliability", parents=[common], help="pliability verdict for a horizontal vector")
    s.add_argument("spec", nargs="?")
    s.add_argument("--probe", action="store_true", help="attach probe evidence when undecided")
    s.set_defaults(func=cmd_pliability)

    s = sub.add_parser("probe", parents=[common], help="numerical reachability probe")
    s.add_argument("spec", nargs="?")
    s.set_defaults(func=cmd_probe)

    s = sub.add_parser("whitney", parents=[common], help="Whitney data tools")
    s.add_argument("action", choices=("check", "extend", "counterexample"))
    s.add_argument("spec", nargs="?")
    s.add_argument("--data", help="WhitneyData JSON (check, extend)")
    s.add_argument("--eta", help="comma-separated eta grid for check")
    s.add_argument("--force", action="store_true", help="extend: accept step > 2 (layers 1-2 only)")
    s.set_defaults(func=cmd_whitney)

    s = sub.add_parser("curve", parents=[common], help="integrate a control")
    s.add_argument("action", choices=("integrate",))
    s.add_argument("spec", nargs="?")
    s.add_argument("--control", required=True, help="ControlPath JSON")
    s.add_argument("--method", choices=("midpoint", "cf4"), default="midpoint")
    s.set_defaults(func=cmd_curve)

    s = sub.add_parser("lusin", parents=[common], help="Lusin approximation of a piecewise control")
    s.add_argument("spec", nargs="?")
    s.add_argument("--control", required=True, help="ControlPath JSON")
    s.set_defaults(func=cmd_lusin)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        sys.stderr.write(f"carnot: error: {exc}\n")
        return EXIT_ERROR
