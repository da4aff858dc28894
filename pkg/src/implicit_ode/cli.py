"""Command-line front end.

Subcommands::

    implicit-ode approximate --ode "2*p - q" --at 0,1 --solve-for q --order 1,1
    implicit-ode series      --ode "p^2+q^2-1" --at pi/2,1,0 --order 2
    implicit-ode validate    --example 2ter --samples 101 --csv table.csv
    implicit-ode example 4 --R0 0.1 --csv fig2.csv

Exit codes: 0 success, 1 I/O failure, 2 parse error, 3 implicit-function
hypothesis failure at the base point, 4 solver failure.
"""

from __future__ import annotations

import argparse
import sys

from .errors import DiniPreconditionError, EvaluationError, ParseError, SolverError
from .jet import DEFAULT_DEGENERATE_TOL, DEFAULT_RESIDUAL_TOL, Mode
from .local import build_normal_form, solve_normal_form
from .numeric import ExprCurve
from .parser import parse, parse_constant
from .report import Report
from .worked import (
    BUILTINS,
    EXAMPLE3_QUOTED_D30,
    EXAMPLE_IDS,
    ExampleConfig,
    approximate,
    builtin,
    resolve_base,
    run_example,
    series_report,
    validate,
)

EXIT_IO = 1
EXIT_PARSE = 2
EXIT_DINI = 3
EXIT_SOLVER = 4


def _pair(text: str) -> tuple[int, int]:
    try:
        m, n = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two integers 'm,n', got {text!r}") from None
    return m, n


def _point(text: str) -> list[str]:
    parts = [v.strip() for v in text.split(",")]
    if len(parts) not in (2, 3) or not all(parts):
        raise argparse.ArgumentTypeError(f"expected 'x0,p0' or 'x0,p0,q0', got {text!r}")
    return parts


def _interval(text: str) -> tuple[float, float]:
    parts = [v.strip() for v in text.split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'a,b', got {text!r}")
    return parse_constant(parts[0]), parse_constant(parts[1])


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--csv", metavar="PATH", help="write the tabulated data as CSV")
    common.add_argument("--json", action="store_true", help="print the report as JSON")
    common.add_argument("--tol-residual", type=float, default=DEFAULT_RESIDUAL_TOL, metavar="TOL")
    common.add_argument("--tol-degenerate", type=float, default=DEFAULT_DEGENERATE_TOL, metavar="TOL")
    return common


def _ode_args(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--ode", required=required, help="F(x, p, q) with p = y and q = y' (use t for time)")
    p.add_argument("--at", type=_point, required=required, metavar="X0,P0[,Q0]",
                   help="base point; constants such as pi/2 are allowed, Q0 may be omitted")
    p.add_argument("--bracket", type=_interval, default=(-10.0, 10.0), metavar="LO,HI",
                   help="search interval for an omitted Q0")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="implicit-ode", description="Local symbolic approximation of implicit first-order ODEs."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("approximate", parents=[common], help="jet, approximated ODE and closed-form solution")
    _ode_args(p)
    p.add_argument("--solve-for", choices=("q", "p"), default="q")
    p.add_argument("--order", type=_pair, default=(1, 1), metavar="M,N")
    p.add_argument("--condition", choices=("slope", "value"), default="slope",
                   help="initial condition fixing the psi-form branch")
    p.add_argument("--paper-variant", action="store_true",
                   help="also build the variant with the quoted third x-derivative (Bernoulli example)")

    s = sub.add_parser("series", parents=[common], help="series-expansion method and equivalence check")
    _ode_args(s)
    s.add_argument("--order", type=int, default=2)
    s.add_argument("--solve-for", choices=("q", "p"), default=None,
                   help="mode of the implicit route (default: q unless degenerate)")
    s.add_argument("--ic", action="append", default=[], metavar="y=V|y'=V",
                   help="override y(x0) or y'(x0)")

    v = sub.add_parser("validate", parents=[common], help="residual profile and comparison with an exact solution")
    _ode_args(v, required=False)
    v.add_argument("--example", choices=[k for k in EXAMPLE_IDS if k in BUILTINS])
    v.add_argument("--solve-for", choices=("q", "p"), default="q")
    v.add_argument("--order", type=_pair, default=(1, 1), metavar="M,N")
    v.add_argument("--solution-from", default="approximate", metavar="approximate|FILE",
                   help="use the local approximation or an expression read from FILE")
    v.add_argument("--exact", help="exact solution expression for the comparison")
    v.add_argument("--interval", type=_interval, metavar="A,B")
    v.add_argument("--samples", type=int, default=101)

    e = sub.add_parser("example", parents=[common], help="run a built-in worked example")
    e.add_argument("id", choices=EXAMPLE_IDS)
    e.add_argument("--R0", type=float, default=0.1)
    e.add_argument("--p-f", type=float, default=1.0)
    e.add_argument("--rho", type=float, default=1.0)
    e.add_argument("--paper-variant", action="store_true")
    return parser


def _base(args, F, mode):
    return resolve_base(F, args.at, mode, args.tol_residual, args.tol_degenerate, args.bracket)


def cmd_approximate(args) -> tuple[Report, object]:
    F = parse(args.ode)
    base = _base(args, F, args.solve_for)
    run = approximate(F, base, args.order, args.condition)
    if args.paper_variant:
        F3, base3, case3 = builtin("3")
        same = F == F3 and all(abs(a - b) <= 1e-12 for a, b in zip(
            (base.x0, base.p0, base.q0), (base3.x0, base3.p0, base3.q0)))
        if same and run.jet.orders[0] >= 3 and base.mode is Mode.SOLVE_FOR_Q:
            ode = build_normal_form(run.jet.with_entry((3, 0), EXAMPLE3_QUOTED_D30))
            sol = solve_normal_form(ode)
            run.report.section("variant with the quoted D(3,0)")
            run.report.add("equation", ode.to_text()).add("y", str(sol.to_expr()))
            run.report.add("expansion about x0", sol.taylor(3))
        else:
            run.report.flag("no quoted variant is known for this equation and order")
    table = None
    if args.csv:
        h = 0.5
        report, tables = validate(F, run.solution, (base.x0 - h, base.x0 + h), 101, indep=base.indep)
        run.report.extend(report)
        table = tables["residual"]
    return run.report, table


def cmd_series(args) -> tuple[Report, object]:
    F = parse(args.ode)
    at = list(args.at)
    for item in args.ic:
        key, _, value = item.partition("=")
        key = key.strip().replace(" ", "")
        if key in ("y", "p"):
            at[1] = value
        elif key in ("y'", "q"):
            at = at[:2] + [value]
        else:
            raise ParseError(f"unknown initial condition {item!r}", 0)
    args.at = at
    if args.solve_for is not None:
        base = _base(args, F, args.solve_for)
    else:
        try:
            base = _base(args, F, "q")
        except DiniPreconditionError:
            base = _base(args, F, "p")
    return series_report(F, base, args.order), None


def cmd_validate(args) -> tuple[Report, object]:
    exact = None
    if args.example:
        F, base, case = builtin(args.example)
        orders, interval = case.orders, tuple(parse_constant(v) for v in case.interval)
        exact_text = args.exact or case.exact
    else:
        if not (args.ode and args.at):
            raise ParseError("validate needs --example or both --ode and --at", 0)
        F = parse(args.ode)
        base = _base(args, F, args.solve_for)
        orders, interval, exact_text = args.order, None, args.exact
    X = base.indep
    if args.interval is not None:
        interval = args.interval
    if interval is None:
        interval = (base.x0 - 0.5, base.x0 + 0.5)
    if args.solution_from == "approximate":
        run = approximate(F, base, orders, closed_form_check=False, title="validation")
        report, sol = run.report, run.solution
    else:
        with open(args.solution_from, encoding="utf-8") as fh:
            text = fh.read().strip()
        sol = ExprCurve(parse(text, variables=(X,)), X)
        report = Report("validation").section("candidate").add("y", str(sol.expr))
    if exact_text:
        exact = ExprCurve(parse(exact_text, variables=(X,)), X)
    val, tables = validate(F, sol, interval, args.samples, exact, X)
    report.extend(val)
    return report, tables.get("comparison", tables["residual"])


def cmd_example(args) -> tuple[Report, object]:
    cfg = ExampleConfig(args.id, args.R0, args.p_f, args.rho, args.paper_variant)
    result = run_example(cfg)
    table = result.tables.get("figure") or result.tables.get("comparison") or result.tables.get("residual")
    return result.report, table


COMMANDS = {
    "approximate": cmd_approximate,
    "series": cmd_series,
    "validate": cmd_validate,
    "example": cmd_example,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report, table = COMMANDS[args.command](args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DiniPreconditionError as exc:
        print(f"base point rejected: {exc}", file=sys.stderr)
        return EXIT_DINI
    except (SolverError, EvaluationError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    if args.csv:
        if table is None:
            print("no tabulated data for this command; --csv ignored", file=sys.stderr)
        else:
            try:
                table.to_csv(args.csv)
            except OSError as exc:
                print(f"I/O failure: {exc}", file=sys.stderr)
                return EXIT_IO
    sys.stdout.write(report.to_json() if args.json else report.render())
    return 0


if __name__ == "__main__":
    sys.exit(main())
