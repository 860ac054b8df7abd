"""Command-line front end.

Every command prints (or writes with --out) a JSON report; the asymptotics
command can also emit CSV.  Exit codes: 0 pass, 1 verification failure,
2 input error.  Indices in all reports are 1-based.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .errors import FanError, FanParseError, NotConvergent, ToricError
from .fanio import builtin_names, fan_to_dict, load_fan
from .special import set_precision

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
SUITES = ("bbgkz", "asymptotics", "pairing", "main", "volume", "beta")


class InputError(Exception):
    pass


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.replace(" ", "").split(","))
    except ValueError:
        raise InputError(f"expected comma-separated integers, got {text!r}") from None


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(Fraction(v)) for v in text.replace(" ", "").split(","))
    except (ValueError, ZeroDivisionError):
        raise InputError(f"expected comma-separated numbers, got {text!r}") from None


def _complex_json(z) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _class_json(stack, value: dict) -> list[dict]:
    out = []
    for k in sorted(value):
        cls = value[k].to_complex()
        out.append({"sector": stack.sectors[k].label(),
                    "coeffs": [_complex_json(c) for c in np.asarray(cls.coeffs, dtype=complex)]})
    return out


def _need_fan(args):
    if not args.fan:
        raise InputError("--fan is required for this command")
    return load_fan(args.fan)


def _spec(args, default_rel: float = 1e-10):
    from .periods import QuadratureSpec

    rel = getattr(args, "rel_tol", None) or default_rel
    return QuadratureSpec(box_radius=getattr(args, "box_radius", None), rel_tol=rel,
                          abs_tol=getattr(args, "abs_tol", None) or 0.0,
                          max_subdivisions=getattr(args, "max_subdiv", None) or 200_000)


def _trunc(args):
    from .hypergeometric import SeriesTruncation

    return SeriesTruncation(degree_bound=args.trunc) if args.trunc is not None else SeriesTruncation()


# ---------------------------------------------------------------- commands


def cmd_describe(args) -> tuple[dict, int]:
    from .cohomology import as_stack
    from .ktheory import euler_matrix, k_bases

    fan = _need_fan(args)
    stack = as_stack(fan)
    k0, k0c = k_bases(stack)
    chi = euler_matrix(stack, k0, k0c)
    sectors = []
    for k, sec in enumerate(stack.sectors):
        sectors.append({"gamma": list(sec.gamma), "cone": sorted(i + 1 for i in sec.sigma), "age": str(sec.age()),
                        "box_size": stack.box_sizes[k], "dim_H": stack.ring(k).dim,
                        "dim_Hc": stack.module(k).dim})
    report = {
        "fan": fan_to_dict(fan),
        "volume": fan.volume,
        "box_size": len(stack.sectors),
        "sectors": sectors,
        "dims": [s["dim_H"] for s in sectors],
        "K0_basis": [E.to_dict() for E in k0],
        "K0c_basis": [E.to_dict() for E in k0c],
        "euler_matrix": [[round(float(v.real), 9) for v in row] for row in chi],
    }
    return report, EXIT_OK


def cmd_charge(args) -> tuple[dict, int]:
    from .cohomology import as_stack
    from .hypergeometric import LogBranch, b_central_charge
    from .ktheory import KClass
    from .periods import a_central_charge, large_radius_point

    fan = _need_fan(args)
    c = _ints(args.c)
    if len(c) != fan.rank:
        raise InputError(f"--c needs {fan.rank} coordinates")
    if args.x is not None:
        x = _floats(args.x)
        if len(x) != fan.n:
            raise InputError(f"--x needs {fan.n} coefficients")
    elif args.t is not None:
        x = tuple(large_radius_point(fan, args.t))
    else:
        raise InputError("give --x or --t")
    report = {"side": args.side, "c": list(c), "x": list(x)}
    if args.side == "A":
        if args.exps and any(_ints(args.exps)):
            raise InputError("the A-side only integrates over the positive real section (exps = 0)")
        res = a_central_charge(fan, c, x, _spec(args))
        report.update(res.to_dict())
    else:
        exps = _ints(args.exps) if args.exps else (0,) * fan.n
        if len(exps) != fan.n:
            raise InputError(f"--exps needs {fan.n} entries")
        value = b_central_charge(as_stack(fan), KClass.line_bundle(exps), c, LogBranch.principal(x), _trunc(args))
        report.update({"exps": list(exps), "value_re": value.real, "value_im": value.imag})
    return report, EXIT_OK


def cmd_xi_table(args) -> tuple[dict, int]:
    from .duality import build_xi_table

    fan = _need_fan(args)
    v = [Fraction(s) for s in args.v.split(",")] if args.v else None
    table = build_xi_table(fan, v=v, seed=args.seed)
    return table.to_dict(), EXIT_OK


def cmd_asymptotics(args) -> tuple[dict, int]:
    from .periods import asymptotics_check

    fan = _need_fan(args)
    c = _ints(args.c)
    grid = _floats(args.t_grid)
    rep = asymptotics_check(fan, c, grid, _spec(args, 1e-11))
    rows = [{"t": t, "ratio_re": r.real, "ratio_im": r.imag, "deviation": d}
            for t, r, d in zip(rep.t_grid, rep.ratios, rep.deviations)]
    report = {"c": list(c), "rows": rows, "monotone": rep.monotone, "final_deviation": rep.final_deviation,
              "fitted_exponent": rep.fitted_exponent, "expected_exponent": rep.expected_exponent,
              "passed": rep.passed()}
    return report, EXIT_OK if rep.passed() else EXIT_FAIL


# ---------------------------------------------------------------- verify suites


def _suite_bbgkz(fan, args) -> dict:
    from .cohomology import as_stack
    from .hypergeometric import termwise_bbgkz_check
    from .lattice import lattice_points
    from .periods import QuadratureSpec, a_central_charge, bbgkz_residual, large_radius_point

    stack = as_stack(fan)
    termwise = []
    for deg in range(1, 4):
        for c in lattice_points(fan, deg, interior=True):
            rep = termwise_bbgkz_check(stack, c, _trunc(args) if args.trunc is not None else None)
            termwise.append({"c": list(c), "passed": rep.passed})
    c0 = lattice_points(fan, 1, interior=True) or lattice_points(fan, 2, interior=True)
    c0 = c0[0]
    x0 = large_radius_point(fan, 3.0, [1.0 + 0.1 * i for i in range(fan.n)])
    spec = QuadratureSpec(rel_tol=1e-13)
    res = bbgkz_residual(fan, lambda c, x: a_central_charge(fan, c, x, spec).value, c0, x0)
    ok = all(t["passed"] for t in termwise) and res.passed()
    return {"passed": ok, "termwise": termwise,
            "finite_difference": {"c": list(c0), "x": x0, "steps": list(res.steps), "final_max": res.final_max,
                                  "orders": res.orders, "passed": res.passed()}}


def _suite_asymptotics(fan, args) -> dict:
    from .lattice import decompose_point, lattice_points
    from .periods import asymptotics_check

    rows = []
    for deg in (1, 2):
        for c in lattice_points(fan, deg, interior=True):
            if not decompose_point(fan, c).asymptotics_eligible:
                continue
            rep = asymptotics_check(fan, c, _floats(args.t_grid))
            rows.append({"c": list(c), "deviations": rep.deviations, "fitted_exponent": rep.fitted_exponent,
                         "expected_exponent": rep.expected_exponent, "passed": rep.passed()})
    return {"passed": all(r["passed"] for r in rows), "points": rows}


def _suite_pairing(fan, args) -> dict:
    from .cohomology import as_stack
    from .duality import (build_xi_table, constancy_check, curve_samples, euler_inverse_check, gamma_vector,
                          normalization, structure_sheaf_charges)
    from .hypergeometric import LogBranch, SeriesTruncation

    stack = as_stack(fan)
    table = build_xi_table(fan)
    tol = args.tol or 1e-6
    samples = curve_samples(fan, [20, 40, 80, 160, 320], seed=1)
    # the series only has to be accurate well below the constancy tolerance
    trunc = SeriesTruncation(args.trunc if args.trunc is not None else 12, tol * 1e-3)
    rep = constancy_check(fan, lambda x: gamma_vector(stack, table, LogBranch.principal(x), trunc),
                          lambda x: structure_sheaf_charges(stack, table, LogBranch.principal(x), trunc),
                          samples, tol, table)
    inv = euler_inverse_check(fan, samples[1], table, trunc, tol)
    value = rep.values[0]
    return {"passed": rep.passed and inv.passed, "spread": rep.spread,
            "pairing": _class_json(stack, {k: v * normalization(fan) for k, v in value.items()}),
            "euler_inverse_deviation": max(inv.left_deviation, inv.right_deviation)}


def _suite_main(fan, args) -> dict:
    from .duality import curve_samples, main_theorem_check
    from .periods import QuadratureSpec

    tol = args.tol or 1e-4
    spec = QuadratureSpec(rel_tol=min(1e-10, tol * 1e-2), max_subdivisions=20_000)
    curve = curve_samples(fan, [40.0, 80.0], jitter=0.0)
    anchor = main_theorem_check(fan, None, curve, tol, max_degree=2, spec=spec, trunc=None)
    unit = [0] * fan.n
    unit[0] = 1
    shifted = main_theorem_check(fan, unit, curve[:1], tol, max_degree=2, spec=spec)
    return {"passed": anchor.passed and shifted.passed, "structure_sheaf": anchor.to_dict(),
            "line_bundle": shifted.to_dict()}


def _suite_volume(fan, args) -> dict:
    from .duality import sample_volume_cases, volume_formula_check

    rows = [volume_formula_check(fan, *case).to_dict() for case in sample_volume_cases(fan, 10)]
    return {"passed": bool(rows) and all(r["passed"] for r in rows), "cases": rows}


def _suite_beta(fan, args) -> dict:
    from .duality import beta_identity_check

    params = [_floats(s) for s in args.beta_a] if args.beta_a else [(1, 1), (0.5, 0.5), (1 / 3, 0.5, 2)]
    tol = args.tol or 1e-7
    rows = []
    for a in params:
        rep = beta_identity_check(a, tol)
        rows.append({"a": list(a), "gamma_quotient": rep.gamma_quotient, "quadrature": rep.quadrature,
                     "deviation": rep.deviation, "passed": rep.passed})
    return {"passed": all(r["passed"] for r in rows), "cases": rows}


_SUITES = {"bbgkz": _suite_bbgkz, "asymptotics": _suite_asymptotics, "pairing": _suite_pairing,
           "main": _suite_main, "volume": _suite_volume, "beta": _suite_beta}


def cmd_verify(args) -> tuple[dict, int]:
    names = SUITES if args.suite == "all" else (args.suite,)
    fan = None if names == ("beta",) and not args.fan else _need_fan(args)
    report = {"suite": args.suite, "results": {}}
    ok = True
    for name in names:
        try:
            res = _SUITES[name](fan, args)
        except ToricError as exc:
            res = {"passed": False, "error": type(exc).__name__, "message": str(exc)}
        report["results"][name] = res
        ok = ok and res["passed"]
    report["passed"] = ok
    return report, EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------- entry point


def _common(suppress: bool) -> argparse.ArgumentParser:
    """Global flags; the copy attached to subcommands must not overwrite values given earlier."""
    blank = argparse.SUPPRESS if suppress else None
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--fan", default=blank,
                        help=f"fan file (JSON/TOML) or built-in name: {', '.join(builtin_names())}")
    common.add_argument("--out", default=blank, help="write the report here instead of stdout (.csv for tables)")
    common.add_argument("--tol", type=float, default=blank, help="comparison tolerance for verification suites")
    common.add_argument("--trunc", type=int, default=blank, help="degree bound of the Gamma-series truncation")
    common.add_argument("--precision", choices=("double", "extended"),
                        default=argparse.SUPPRESS if suppress else "double")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common(suppress=True)
    quad = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    quad.add_argument("--rel-tol", type=float)
    quad.add_argument("--abs-tol", type=float)
    quad.add_argument("--box-radius", type=float)
    quad.add_argument("--max-subdiv", type=int)

    parser = argparse.ArgumentParser(prog="toricbranes", allow_abbrev=False, parents=[_common(suppress=False)],
                                     description="Central charges of toric Calabi-Yau stacks and their checks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("describe", parents=[common], help="sectors, cohomology dimensions, K-bases", allow_abbrev=False)

    p = sub.add_parser("verify", parents=[common], help="run a verification suite", allow_abbrev=False)
    p.add_argument("--suite", choices=SUITES + ("all",), default="all")
    p.add_argument("--beta-a", action="append", help="parameters for the beta suite, e.g. 1/3,1/2,2")
    p.add_argument("--t-grid", default="20,40,80,160", help="t values for the asymptotics suite")

    p = sub.add_parser("charge", parents=[common, quad], help="A- or B-side central charge", allow_abbrev=False)
    p.add_argument("--side", choices=("A", "B"), required=True)
    p.add_argument("--c", required=True, help="lattice point, e.g. 1,2")
    p.add_argument("--x", help="coefficients x_1..x_n")
    p.add_argument("--t", type=float, help="large-radius parameter: x_i = t^(-psi_i)")
    p.add_argument("--exps", help="line bundle O(sum a_i D_i) as a_1,...,a_n (B-side)")

    p = sub.add_parser("xi-table", parents=[common], help="the xi coefficients for a generic v", allow_abbrev=False)
    p.add_argument("--v", help="rational interior point, e.g. 1/3,2/5,1")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("asymptotics", parents=[common, quad], help="ratio to the predicted leading term", allow_abbrev=False)
    p.add_argument("--c", required=True)
    p.add_argument("--t-grid", default="20,40,80,160")
    return parser


_COMMANDS = {"describe": cmd_describe, "verify": cmd_verify, "charge": cmd_charge, "xi-table": cmd_xi_table,
             "asymptotics": cmd_asymptotics}


def _emit(report: dict, out: str | None) -> None:
    if out and out.endswith(".csv"):
        rows = report.get("rows") or report.get("entries") or []
        buf = io.StringIO()
        if rows:
            writer = csv.DictWriter(buf, fieldnames=list(rows[0]))
            writer.writeheader()
            for r in rows:
                writer.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})
        Path(out).write_text(buf.getvalue())
        return
    text = json.dumps(report, indent=2, default=str)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    set_precision(args.precision)
    try:
        report, code = _COMMANDS[args.command](args)
    except (InputError, FanParseError, FanError, NotConvergent) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ToricError as exc:
        print(f"failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _emit(report, args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
