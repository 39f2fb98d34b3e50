"""Command-line front end: constants, verification suites and sweep tables.

Exit codes: 0 success, 1 failed check or relation, 2 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .core import Bubble, FracError, compute_constants, make_params
from .suites import DEFAULT_MATRIX, DEFAULT_TOLERANCES, SUITES, run_matrix, run_suite


class ConfigError(FracError):
    """Invalid command-line configuration (exit code 2)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _tol(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError("tolerance overrides look like name=value")
    k, v = text.split("=", 1)
    if k not in DEFAULT_TOLERANCES:
        raise argparse.ArgumentTypeError(
            f"unknown tolerance {k!r}; known: {', '.join(sorted(DEFAULT_TOLERANCES))}")
    try:
        return k, float(v)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"tolerance {k} needs a number") from exc


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fracbubble", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"fracbubble {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, params_required):
        sp.add_argument("--n", type=int, required=params_required, help="boundary dimension")
        sp.add_argument("--gamma", type=float, required=params_required, help="order in (0, 1)")
        sp.add_argument("--format", choices=("json", "csv"), default=None)
        sp.add_argument("--out", default=None, help="output path (default: stdout)")
        sp.add_argument("--budget", type=int, default=None,
                        help="evaluation budget (overrides FRACBUBBLE_BUDGET)")

    c = sub.add_parser("constants", help="model-space constants and their relations")
    common(c, True)
    c.add_argument("--tol", type=float, default=1e-3, help="relation tolerance")

    v = sub.add_parser("verify", help="run a verification suite")
    common(v, False)
    v.add_argument("--suite", choices=SUITES + ("all",), required=True)
    v.add_argument("--set-tol", type=_tol, action="append", default=[], metavar="NAME=VALUE",
                   help="override one check tolerance")

    s = sub.add_parser("sweep", help="emit a sweep table as CSV")
    common(s, False)
    s.add_argument("--kind", choices=("interaction", "barycenter", "sharp"), required=True)
    s.add_argument("--order", choices=("value", "dlambda_k", "grad_a", "hess_a"),
                   default="value")
    s.add_argument("--ratios", type=_floats, default=None)
    s.add_argument("--seps", type=_floats, default=None)
    s.add_argument("--p", type=int, default=2)
    s.add_argument("--lambda", dest="lam", type=_floats, default=None)
    return p


def _params(args, default=(2, 0.25)):
    if (args.n is None) != (args.gamma is None):
        raise ConfigError("--n and --gamma must be given together")
    if args.n is None:
        return make_params(*default)
    return make_params(args.n, args.gamma)


def _emit(text: str, out: Optional[str]):
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)


def _csv_text(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _cell(v) -> str:
    return v if isinstance(v, str) else json.dumps(v)


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def cmd_constants(args) -> int:
    params = _params(args)
    cs = compute_constants(params)
    meta = {"n": params.n, "gamma": params.gamma, "version": __version__}
    bad = [k for k, v in cs.residuals.items() if not abs(v) <= args.tol]
    if args.format == "csv":
        rows = [["name", "value"]]
        rows += [[k, v if isinstance(v, str) else repr(v)] for k, v in cs.as_dict().items()]
        rows += [[f"residual: {k}", repr(v)] for k, v in cs.residuals.items()]
        text = _csv_text(rows)
    else:
        text = _json_text({"meta": meta, "constants": cs.as_dict(),
                           "residuals": dict(cs.residuals), "tol": args.tol,
                           "skipped": list(cs.skipped), "consistent": not bad})
    _emit(text, args.out)
    for k in bad:
        print(f"relation failed: {k} (residual {cs.residuals[k]:.3e})", file=sys.stderr)
    return 1 if bad else 0


def cmd_verify(args) -> int:
    tol = dict(args.set_tol)
    if args.n is None and args.gamma is None:
        checks = run_matrix(args.suite, DEFAULT_MATRIX, tol)
        meta = {"n": None, "gamma": None, "matrix": [list(m) for m in DEFAULT_MATRIX],
                "suite": args.suite, "version": __version__}
    else:
        params = _params(args)
        checks = run_suite(args.suite, params, tol)
        meta = {"n": params.n, "gamma": params.gamma, "suite": args.suite,
                "version": __version__}
    records = [c.as_dict() for c in checks]
    if args.format == "csv":
        rows = [["id", "paper_ref", "observed", "expected", "tol", "pass"]]
        for r in records:
            rows.append([r["id"], r["paper_ref"], _cell(r["observed"]),
                         _cell(r["expected"]), _cell(r["tol"]),
                         "PASS" if r["pass"] else "FAIL"])
        text = _csv_text(rows)
    else:
        text = _json_text({"meta": meta, "checks": records})
    _emit(text, args.out)
    failed = [r["id"] for r in records if not r["pass"]]
    for cid in failed:
        print(f"FAIL {cid}", file=sys.stderr)
    return 1 if failed else 0


def cmd_sweep(args) -> int:
    from . import energy, extension, interactions

    if args.format == "json":
        raise ConfigError("sweep tables are CSV only")
    params = _params(args)
    if args.kind == "interaction":
        if args.ratios is not None and args.seps is not None:
            raise ConfigError("give either --ratios or --seps")
        kind = "separation" if args.seps is not None else "ratio"
        values = args.seps if args.seps is not None else args.ratios
        rows = interactions.interaction_sweep(kind, args.order, params, values).csv_rows()
    elif args.kind == "barycenter":
        lam = args.lam or [1.0]
        if len(lam) != 1:
            raise ConfigError("barycenter sweeps take a single --lambda")
        seps = args.seps or [4.0, 8.0, 16.0]
        rows = energy.barycenter_csv_rows(energy.barycenter_sweep(args.p, seps, lam[0], params))
    else:
        lams = args.lam or [10.0, 30.0, 100.0]
        b = Bubble(np.zeros(params.n), 1.0)
        rep = extension.check_sharp_estimates(b, extension.sharp_samples(), params, lams)
        rows = [["lambda", "dev_i", "dev_ii", "dev_iii"]]
        rows += [[repr(float(l))] + [repr(float(v)) for v in rep.per_lambda[l]] for l in lams]
    _emit(_csv_text(rows), args.out)
    return 0


COMMANDS = {"constants": cmd_constants, "verify": cmd_verify, "sweep": cmd_sweep}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.budget is not None:
        if args.budget <= 0:
            print("fracbubble: error: --budget must be positive", file=sys.stderr)
            return 2
        os.environ["FRACBUBBLE_BUDGET"] = str(args.budget)
    try:
        return COMMANDS[args.command](args)
    except FracError as exc:
        print(f"fracbubble: error: {exc}", file=sys.stderr)
        return 2
