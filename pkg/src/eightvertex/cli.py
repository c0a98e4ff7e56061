"""Command line front end.

Exit status: 0 success, 1 runtime failure, 2 usage error (including weights
that violate ``a + c = b + d``), 3 other model constraint violations.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import os
import sys
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np

from . import asymptotics, dynamics, exact, lattice, oracles, pca
from .params import (ConstraintError, KernelParams, ModelError, Weights, derive_params,
                     to_rational)

EXIT_RUNTIME, EXIT_USAGE, EXIT_CONSTRAINT = 1, 2, 3
RANGE_OPTIONS = ("--i", "--t")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- parsing helpers

def parse_range(text: str) -> List[int]:
    """``"3"`` or ``"-2..2"`` (inclusive)."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise argparse.ArgumentTypeError(f"empty range {text!r}")
        return list(range(lo, hi + 1))
    return [int(text)]


def _number(text: str, backend: str):
    return to_rational(text) if backend == "rational" else float(text)


def _params(args) -> KernelParams:
    weights = [args.a, args.b, args.c, args.d]
    if any(w is not None for w in weights):
        if any(w is None for w in weights) or args.p is not None or args.r is not None:
            raise UsageError("give either --p/--r or all four of --a --b --c --d")
        try:
            w = Weights(*(_number(x, args.backend) for x in weights))
        except ConstraintError as err:
            raise UsageError(str(err)) from err
        return derive_params(w)
    if args.p is None or args.r is None:
        raise UsageError("--p and --r are required")
    return KernelParams(_number(args.p, args.backend), _number(args.r, args.backend))


def _fmt(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    return x


def _cell(x) -> str:
    x = _fmt(x)
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _emit(args, header: Sequence[str], rows: Sequence[Sequence], record: Optional[dict] = None):
    """Write a table as CSV or JSON; ``record`` is used for single JSON objects."""
    buf = io.StringIO()
    if args.format == "json":
        if record is not None:
            obj = record
        else:
            obj = [{h: _fmt(v) for h, v in zip(header, row)} for row in rows]
        json.dump(obj, buf, indent=2, default=_json_default)
        buf.write("\n")
    else:
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    text = buf.getvalue()
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)


def _json_default(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _init_law(text: str):
    kind, _, arg = text.partition(":")
    if kind == "pm":
        return dynamics.ProductMeasure(to_rational(arg or "1/2"))
    if kind == "ones":
        return dynamics.Deterministic((1,))
    if kind == "pattern":
        if not arg or set(arg) - {"0", "1"}:
            raise UsageError("pattern must be a string of 0 and 1")
        return dynamics.Deterministic(tuple(int(ch) for ch in arg))
    raise UsageError(f"unknown initial law {text!r}")


def _boundary(text: str):
    kind, _, arg = text.partition(":")
    if kind == "free":
        return lattice.Free()
    if kind == "fixed":
        if not arg or set(arg) - {"0", "1"}:
            raise UsageError("fixed boundary needs a bit string, e.g. fixed:0110")
        return lattice.Fixed(tuple(int(ch) for ch in arg))
    if kind == "half":
        return lattice.HalfProduct(to_rational(arg or "1/2"))
    raise UsageError(f"unknown boundary condition {text!r}")


# ---------------------------------------------------------------- commands

def cmd_exact(args):
    q = _params(args)
    rows = [(i, t, exact.c8(i, t, q, args.backend)) for t in args.t for i in args.i]
    _emit(args, ["i", "t", "c8"], rows)


def cmd_oracle(args):
    q = _params(args)
    t_max = max(args.t)
    if args.method == "walk":
        table = oracles.walk_table(t_max, q, args.backend)
        value = lambda i, t: table[t].signed(i)
    elif args.method == "series":
        table = oracles.series_coeffs(t_max, q, args.backend)
        value = table.at
    else:
        value = lambda i, t: oracles.brute_force_paths(i, t, q, args.backend)
    rows = [(i, t, value(i, t)) for t in args.t for i in args.i]
    _emit(args, ["i", "t", args.method], rows)


def cmd_sample(args):
    q = _params(args)
    init = _init_law(args.init)
    e1 = dynamics.EdgeAddress(args.i0, args.t0)
    e2 = dynamics.EdgeAddress(args.i[0], args.t[0])
    est, se = dynamics.estimate_pair_correlation(
        e1, e2, init, q, args.samples, args.width, args.seed, args.threads)
    ref = exact.c8(e2.i - e1.i, e2.t - e1.t, q) if e1.t == 0 and e1.i % 2 == 0 else None
    rows = [(e1.i, e1.t, e2.i, e2.t, est, se, "" if ref is None else ref)]
    _emit(args, ["i0", "t0", "i", "t", "estimate", "std_error", "c8"], rows)
    if args.trajectory:
        _dump_trajectory(args, q, init, max(e1.t, e2.t))


def _dump_trajectory(args, q, init, steps):
    width = args.width or dynamics.min_width(
        [dynamics.EdgeAddress(args.i0, args.t0), dynamics.EdgeAddress(args.i[0], args.t[0])])
    rng = np.random.default_rng(np.random.SeedSequence(args.seed).spawn(1)[0])
    w = dynamics.EdgeWindow(init.sample(rng, 1, width)[0], 0)
    with open(args.trajectory, "w", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["t", "i", "state"])
        for t in range(steps + 1):
            for i in range(width):
                out.writerow([t, i, w.state(i)])
            if t < steps:
                w = dynamics.line_step(w, q, rng)


def cmd_enumerate(args):
    lat = lattice.lattice(args.lattice, args.n)
    w = tuple(to_rational(x) for x in (args.a or "1", args.b or "1", args.c or "1", args.d or "1"))
    bc = _boundary(args.bc)
    z = lattice.partition_function(lat, bc, w)
    closed = lattice.closed_form_z(lat, bc, w)
    record = {"lattice": args.lattice, "N": args.n, "bc": args.bc, "Z": str(z),
              "closed_form": None if closed is None else str(closed),
              "match": closed is not None and closed == z}
    _emit(args, list(record), [list(record.values())], record)


def cmd_pca(args):
    if args.kernel == "a8":
        if args.p is None or args.r is None:
            raise UsageError("a8 needs --p and --r")
        p, r = float(args.p), float(args.r)
        T = pca.a8_kernel(p, r)
        h = pca.solve_hzmc_binary(T) if T.positive_rate else None
        if h is None and not T.positive_rate:
            h = pca.uniform_hzmc(2)
        params = {"p": p, "r": r}
    else:
        if args.p is None:
            raise UsageError("a6 needs --p")
        p, qv = float(args.p), float(args.q)
        T = pca.a6_kernel(p)
        h = pca.a6_hzmc(qv)
        params = {"p": p, "q": qv}
    residual = pca.hzmc_invariance_residual(T, h) if h is not None else None
    solved = residual is not None and residual <= pca.SOLVE_TOL
    record = {"kernel": args.kernel, "params": params, "solved": solved,
              "D": None if h is None else h.D.tolist(),
              "U": None if h is None else h.U.tolist(),
              "residual": residual}
    _emit(args, list(record), [[json.dumps(v) if isinstance(v, (dict, list)) else v
                                for v in record.values()]], record)


def cmd_asymp(args):
    rows = []
    for p, r in itertools.product(args.p_list, args.r_list):
        rep = asymptotics.fit_rate(KernelParams(to_rational(p), to_rational(r)), args.t_max)
        rows.append((float(to_rational(p)), float(to_rational(r)), rep.lam,
                     rep.fitted_rate, rep.envelope_constant))
    _emit(args, ["p", "r", "lambda", "fitted_rate", "envelope_constant"], rows)


# ---------------------------------------------------------------- parser

def _common(top: bool) -> argparse.ArgumentParser:
    """Global flags; accepted before or after the subcommand."""
    def default(value):
        # subcommand copies must not overwrite values given before them
        return value if top else argparse.SUPPRESS

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=default(0))
    common.add_argument("--backend", choices=("float", "rational"), default=default("float"))
    common.add_argument("--format", choices=("csv", "json"), default=default(None))
    common.add_argument("--output", default=default(None), help="file path, or - for stdout")
    common.add_argument("--threads", type=int, default=default(None),
                        help="worker threads (default: all cores)")
    return common


def _weights_args(p: argparse.ArgumentParser, with_pr: bool = True):
    if with_pr:
        p.add_argument("--p")
        p.add_argument("--r")
    for name in "abcd":
        p.add_argument(f"--{name}")


def build_parser() -> argparse.ArgumentParser:
    common = _common(top=False)
    parser = argparse.ArgumentParser(prog="eightvertex", parents=[_common(top=True)],
                                     description="Edge correlations of the integrable eight-vertex model.")
    sub = parser.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("exact", parents=[common], help="closed-form correlation table")
    _weights_args(ex)
    ex.add_argument("--i", type=parse_range, default=[0])
    ex.add_argument("--t", type=parse_range, default=[0])
    ex.set_defaults(func=cmd_exact, default_format="csv")

    orc = sub.add_parser("oracle", parents=[common], help="independent reference values")
    orc.add_argument("method", choices=("walk", "series", "paths"))
    _weights_args(orc)
    orc.add_argument("--i", type=parse_range, default=[0])
    orc.add_argument("--t", type=parse_range, default=[0])
    orc.set_defaults(func=cmd_oracle, default_format="csv")

    sm = sub.add_parser("sample", parents=[common], help="Monte Carlo pair correlation")
    _weights_args(sm)
    sm.add_argument("--i", type=parse_range, default=[0])
    sm.add_argument("--t", type=parse_range, default=[1])
    sm.add_argument("--i0", type=int, default=0)
    sm.add_argument("--t0", type=int, default=0)
    sm.add_argument("--samples", type=int, default=100_000)
    sm.add_argument("--width", type=int, default=None)
    sm.add_argument("--init", default="pm:1/2", help="pm:q, ones or pattern:0101")
    sm.add_argument("--trajectory", default=None, help="write one sampled window as t,i,state CSV")
    sm.set_defaults(func=cmd_sample, default_format="csv")

    en = sub.add_parser("enumerate", parents=[common], help="exact partition functions")
    en.add_argument("--lattice", choices=("kbar", "k"), required=True)
    en.add_argument("--n", type=int, default=1)
    en.add_argument("--bc", default="free", help="free, fixed:0110 or half:q")
    _weights_args(en, with_pr=False)
    en.set_defaults(func=cmd_enumerate, default_format="json")

    pc = sub.add_parser("pca", parents=[common], help="invariant zigzag chains")
    pc.add_argument("--kernel", choices=("a8", "a6"), required=True)
    pc.add_argument("--p")
    pc.add_argument("--r")
    pc.add_argument("--q", default="0.5", help="a6 zigzag parameter")
    pc.set_defaults(func=cmd_pca, default_format="json")

    asy = sub.add_parser("asymp", parents=[common], help="decay rate fits")
    asy.add_argument("--p", dest="p_list", nargs="+", required=True)
    asy.add_argument("--r", dest="r_list", nargs="+", required=True)
    asy.add_argument("--t-max", type=int, default=200)
    asy.set_defaults(func=cmd_asymp, default_format="csv")
    return parser


def _join_ranges(argv: Sequence[str]) -> List[str]:
    """Glue ``--i -2..2`` into ``--i=-2..2`` so the value is not read as a flag."""
    out: List[str] = []
    it = iter(argv)
    for tok in it:
        if tok in RANGE_OPTIONS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = _join_ranges(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.format is None:
        args.format = args.default_format
    if args.threads is None:
        args.threads = os.cpu_count() or 1
    try:
        args.func(args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except ModelError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONSTRAINT
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as err:  # pragma: no cover - last resort
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())
