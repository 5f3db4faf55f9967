"""Command-line interface: ``excursion <command> [options]``.

Exit codes: 0 ok, 1 verify failure, 2 usage, 3 validation, 4 assumption violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction

import mpmath

from .amplitudes import excursion_moments
from .critical import (
    AssumptionViolation,
    UnsupportedDirection,
    critical_data,
    model_limit_moments,
    printed_scaling_constants,
    require_assumption,
    scaling_constants,
)
from .exact import HalfInt, Surd, order_key
from .models import BUILTIN, builtin
from .qfe import ValidationError, load_equation, solve_jets

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_VALIDATION, EXIT_ASSUMPTION = 0, 1, 2, 3, 4
FLOAT_DIGITS = 17


class UsageError(Exception):
    pass


# value records -----------------------------------------------------------------


def _frac_str(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def encode_value(x) -> dict:
    """Lossless JSON form of an exact value (floats only as a rendering)."""
    if isinstance(x, bool):
        raise TypeError("bool is not a numeric value")
    if isinstance(x, (int, Fraction)):
        x = Surd(Fraction(x))
    if isinstance(x, Surd):
        rec = {
            "rational": _frac_str(x.coeff),
            "pi_half_power": x.pi_half,
            "sqrt_of": str(x.root),
            "float": _float(x),
            "exact": str(x),
        }
        tp = x.twopi_form()
        if tp is not None:
            rec["twopi_half_power"] = tp[1]
        return rec
    if isinstance(x, mpmath.mpf):
        return {"float": mpmath.nstr(x, 40)}
    if isinstance(x, float):
        return {"float": repr(x)}
    raise TypeError(f"cannot encode {type(x).__name__}")


def decode_value(rec: dict):
    if "rational" in rec:
        s = Surd(Fraction(rec["rational"]), int(rec.get("pi_half_power", 0)), int(rec.get("sqrt_of", "1")))
        return s.coeff if s.is_rational else s
    return mpmath.mpf(rec["float"])


def _render(x) -> str:
    if isinstance(x, (int, Fraction)):
        q = Fraction(x)
        return str(q.numerator) if q.denominator == 1 else _frac_str(q)
    if isinstance(x, Surd):
        return str(x)
    if isinstance(x, mpmath.mpf):
        return mpmath.nstr(x, FLOAT_DIGITS)
    return str(x)


def _float(x) -> str:
    if isinstance(x, Surd):
        with mpmath.workdps(40):
            return mpmath.nstr(x.to_mpf(), FLOAT_DIGITS)
    if isinstance(x, Fraction):
        with mpmath.workdps(40):
            return mpmath.nstr(mpmath.mpf(x.numerator) / x.denominator, FLOAT_DIGITS)
    if isinstance(x, int):
        return str(x)
    if isinstance(x, mpmath.mpf):
        return mpmath.nstr(x, FLOAT_DIGITS)
    return repr(x)


# output --------------------------------------------------------------------------


def emit(kind: str, rows: list[dict], fmt: str, out, meta: dict | None = None) -> None:
    """rows: dicts with 'index' (tuple or None), 'value', plus scalar context fields."""
    if fmt == "json":
        doc = {"kind": kind, **(meta or {}), "entries": []}
        for r in rows:
            e = {k: (encode_value(v) if k == "value" else _jsonable(v)) for k, v in r.items()}
            doc["entries"].append(e)
        out.write(json.dumps(doc, sort_keys=True, ensure_ascii=False) + "\n")
        return
    ctx = [k for k in rows[0] if k not in ("index", "value")] if rows else []
    header = ctx + ["index", "exact", "float"]
    table = [header]
    for r in rows:
        idx = r.get("index")
        table.append(
            [_cell(r[k]) for k in ctx]
            + ["" if idx is None else ",".join(map(str, idx)), _render(r["value"]), _float(r["value"])]
        )
    if fmt == "csv":
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(table)
        out.write(buf.getvalue())
        return
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    for row in table:
        out.write("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() + "\n")


def _cell(v) -> str:
    if isinstance(v, (int, Fraction, Surd, mpmath.mpf)):
        return _render(v)
    return str(v)


def _jsonable(v):
    if isinstance(v, tuple):
        return list(v)
    if isinstance(v, (Fraction, Surd, mpmath.mpf)):
        return encode_value(v)
    return v


def parse_output(text: str) -> dict:
    """Re-read a json record; values come back as exact objects."""
    doc = json.loads(text)
    for e in doc["entries"]:
        if "value" in e:
            e["value"] = decode_value(e["value"])
        if "index" in e and e["index"] is not None:
            e["index"] = tuple(e["index"])
    return doc


# model selection -------------------------------------------------------------------


def resolve_model(name: str, M: int | None):
    if os.path.exists(name):
        eq = load_equation(name)
        if M is not None and M != eq.M:
            raise UsageError(f"--M {M} does not match M = {eq.M} in {name}")
        return eq
    if name in BUILTIN:
        return builtin(name, 1 if M is None else M)
    raise UsageError(f"--model {name!r} is neither a file nor one of {sorted(BUILTIN)}")


def degree_bound_gamma(M: int, d: int) -> HalfInt:
    # the largest gamma among k with |k| <= d sits at k = d e_M
    return HalfInt(-1 + (M + 2) * d)


def _by_degree(table, d: int) -> list:
    return [(k, v) for k, v in table.items() if sum(k) <= d]


# commands ------------------------------------------------------------------------


def cmd_excursion_moments(args, out) -> int:
    if args.M < 1 or args.max < 0:
        raise UsageError("--M must be >= 1 and --max >= 0")
    table = excursion_moments(args.M, max_gamma=degree_bound_gamma(args.M, args.max))
    rows = [{"index": k, "value": v} for k, v in _by_degree(table, args.max)]
    emit("excursion-moments", rows, args.format, out, {"M": args.M, "max": args.max})
    return EXIT_OK


def cmd_solve(args, out) -> int:
    if args.n < 1 or args.K < 0:
        raise UsageError("--n must be >= 1 and --K >= 0")
    eq = resolve_model(args.model, args.M)
    sol = solve_jets(eq, args.n, args.K)
    rows = []
    for n in range(1, args.n + 1):
        jet = sol.jet(n)
        for k in sorted(jet.coeffs, key=order_key):
            rows.append({"n": n, "index": k, "value": jet[k]})
        if not jet.coeffs:
            rows.append({"n": n, "index": (0,) * eq.M, "value": 0})
    meta = {"model": eq.name or args.model, "M": eq.M, "K": args.K,
            "counting": [int(c) if Fraction(c).denominator == 1 else _frac_str(c) for c in sol.counting_sequence()]}
    if args.format == "table":
        out.write("counting: " + " ".join(map(str, meta["counting"])) + "\n")
    emit("solve", rows, args.format, out, meta)
    return EXIT_OK


def critical_rows(eq) -> tuple[list, dict]:
    data = critical_data(eq)
    require_assumption(data)
    rows = [{"name": n, "index": None, "value": v} for n, v in
            (("u_c", data.u_c), ("y_c", data.y_c), ("B", data.B), ("C", data.C), ("f0", data.f0))]
    for i, (a, m) in enumerate(zip(data.A, data.mu)):
        rows.append({"name": f"A_{i}", "index": None, "value": a})
        rows.append({"name": f"mu_{i}", "index": None, "value": m})
    meta = {"exact": data.exact, "aperiodic": data.aperiodic, "model": eq.name, "M": eq.M}
    if data.y_interval is not None:
        meta["y_c_interval"] = [mpmath.nstr(x, 40) for x in data.y_interval]
    try:
        c, d = scaling_constants(data.mu, eq.M)
        printed = printed_scaling_constants(data.mu, eq.M)
        for k in range(1, eq.M + 1):
            rows.append({"name": f"d_{k}", "index": None, "value": d[k - 1]})
            rows.append({"name": f"c_{k}", "index": None, "value": c[k - 1]})
            rows.append({"name": f"c_{k}_printed_formula", "index": None, "value": printed[k - 1]})
    except UnsupportedDirection as e:
        meta["scaling"] = str(e)
    return rows, meta


def cmd_critical(args, out) -> int:
    eq = resolve_model(args.model, args.M)
    rows, meta = critical_rows(eq)
    emit("critical", rows, args.format, out, meta)
    return EXIT_OK


def cmd_limit_moments(args, out) -> int:
    if args.max < 0:
        raise UsageError("--max must be >= 0")
    eq = resolve_model(args.model, args.M)
    table = model_limit_moments(eq, max_gamma=degree_bound_gamma(eq.M, args.max))
    rows = [{"index": k, "value": v} for k, v in _by_degree(table, args.max)]
    emit("limit-moments", rows, args.format, out, {"model": eq.name or args.model, "M": eq.M, "max": args.max})
    return EXIT_OK


def cmd_mc(args, out) -> int:
    from .oracle import mc_moments

    if args.n < 1 or args.samples < 1 or args.M < 1:
        raise UsageError("--n, --samples and --M must be >= 1")
    if not 0 <= args.seed < 2**64:
        raise UsageError("--seed must be an unsigned 64-bit integer")
    r = mc_moments(args.n, args.samples, args.M, args.seed)
    rows = []
    for k in range(1, args.M + 1):
        rows.append({"k": k, "stat": "mean", "index": None, "value": r.mean[k - 1]})
        rows.append({"k": k, "stat": "stderr", "index": None, "value": r.stderr[k - 1]})
    emit("mc", rows, args.format, out, {"n": args.n, "samples": args.samples, "seed": args.seed})
    return EXIT_OK


def cmd_verify(args, out) -> int:
    from .verify import run_checks

    results = run_checks(args.level)
    ok = True
    for name, passed, detail in results:
        ok &= passed
        out.write(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}\n")
    out.write(f"{sum(p for _, p, _ in results)}/{len(results)} checks passed\n")
    return EXIT_OK if ok else EXIT_VERIFY


# parser --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="excursion", description="Exact moments of Brownian-excursion power integrals and q-functional equations.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def fmt(sp):
        sp.add_argument("--format", choices=["table", "json", "csv"], default="table")

    sp = sub.add_parser("excursion-moments", help="joint moments E[X_1^k_1 ... X_M^k_M], |k| <= max")
    sp.add_argument("--M", type=int, required=True)
    sp.add_argument("--max", type=int, required=True)
    fmt(sp)
    sp.set_defaults(func=cmd_excursion_moments)

    sp = sub.add_parser("solve", help="series solution jets of a model")
    sp.add_argument("--model", default="dyck", help="JSON file or built-in name")
    sp.add_argument("--M", type=int)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--K", type=int, default=1)
    fmt(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("critical", help="critical point and limit-law constants")
    sp.add_argument("--model", default="dyck")
    sp.add_argument("--M", type=int)
    fmt(sp)
    sp.set_defaults(func=cmd_critical)

    sp = sub.add_parser("limit-moments", help="moments of the limit law of a model, |k| <= max")
    sp.add_argument("--model", default="dyck")
    sp.add_argument("--M", type=int)
    sp.add_argument("--max", type=int, required=True)
    fmt(sp)
    sp.set_defaults(func=cmd_limit_moments)

    sp = sub.add_parser("mc", help="Monte Carlo estimate of E[X_{k,n}] for uniform Dyck paths")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--samples", type=int, default=10**4)
    sp.add_argument("--M", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    fmt(sp)
    sp.set_defaults(func=cmd_mc)

    sp = sub.add_parser("verify", help="run the built-in check suite")
    sp.add_argument("--level", choices=["quick", "full"], default="quick")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    try:
        return args.func(args, out)
    except UsageError as e:
        sys.stderr.write(f"excursion: error: {e}\n")
        return EXIT_USAGE
    except ValidationError as e:
        sys.stderr.write("excursion: invalid model:\n")
        for d in e.diagnostics:
            sys.stderr.write(f"  - {d}\n")
        return EXIT_VALIDATION
    except (AssumptionViolation, UnsupportedDirection) as e:
        sys.stderr.write(json.dumps({"error": type(e).__name__, "message": str(e)}) + "\n")
        return EXIT_ASSUMPTION


if __name__ == "__main__":
    sys.exit(main())
