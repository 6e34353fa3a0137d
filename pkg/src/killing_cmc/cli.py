"""Command-line front end: profile tables, height bounds, exterior solves and the invariant suite."""
from __future__ import annotations

import argparse
import configparser
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .equidistant import EquidistantChart
from .profiles import (DEFAULT_QUAD_TOL, CmcParams, ProfileDomainError, RadialProfile,
                       catenoid_limit_certified, equidistant_height_w, height_bound_B,
                       is_infinite, parse_slope)
from .quadrature import QuadratureError
from .solver import (BracketError, ExhaustionError, MeshParams, NewtonError, StarDomain,
                     barrier_check, exterior_solve)
from .verify import GROUPS, run_checks

log = logging.getLogger("killing_cmc")

OUTPUT_ENV = "KCMC_OUTPUT_DIR"

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_PARAMS = 2
EXIT_QUADRATURE = 3
EXIT_NEWTON = 4
EXIT_BRACKET = 5
EXIT_DOMAIN = 6
EXIT_EXHAUSTION = 7

EPILOG = f"""\
exit status:
  {EXIT_OK}  success (for solve: the exhaustion converged)
  {EXIT_VERIFY}  verify: at least one invariant failed; solve: stages did not reach the stage tolerance
  {EXIT_PARAMS}  invalid parameters
  {EXIT_QUADRATURE}  quadrature or profile domain error
  {EXIT_NEWTON}  Newton iteration did not converge
  {EXIT_BRACKET}  the boundary slope could not be bracketed in t
  {EXIT_DOMAIN}  invalid domain (inner boundary, outer radius or exhaustion radii)
  {EXIT_EXHAUSTION}  exhaustion stage changes are not decreasing

configuration:
  --config FILE reads 'key = value' lines; keys are the long option names of the
  command.  Command-line options take precedence over the file.  The output
  directory is chosen from --output-dir, then ${OUTPUT_ENV}, then the file, then '.'.
"""


class ParamError(ValueError):
    pass


class DomainError(ValueError):
    pass


def _float_list(text):
    try:
        return [float(x) for x in str(text).replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a list of numbers, got {text!r}") from exc


def _slope(text):
    try:
        return parse_slope(text)
    except (TypeError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="killing-cmc", description=__doc__, epilog=EPILOG,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--config", help="key = value file supplying option defaults")
    p.add_argument("--output-dir", help=f"directory for output files (env {OUTPUT_ENV})")
    p.add_argument("--format", choices=("csv", "json"), default=None,
                   help="table format (default csv); reports are always JSON")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("profile", help="tabulate r, f(r), f'(r) of a rotational profile",
                       epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    q.add_argument("--rho", type=float, default=1.0)
    q.add_argument("--s", type=_slope, default=parse_slope("inf"), help="slope, or 'inf'")
    q.add_argument("--H", type=float, default=0.0)
    q.add_argument("--rmax", type=float, default=None, help="last radius (default rho + 5)")
    q.add_argument("--n", type=int, default=101, help="number of grid radii")
    q.add_argument("--quad-tol", type=float, default=DEFAULT_QUAD_TOL)

    q = sub.add_parser("bounds", help="tabulate B(H), w(0; H) and catenoid limits",
                       epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    q.add_argument("--H", type=_float_list, default=[round(0.1 * k, 1) for k in range(10)],
                   help="comma-separated H values in [0, 1)")
    q.add_argument("--catenoid-rho", type=_float_list, default=[0.5, 1.0, 2.0])
    q.add_argument("--no-w", action="store_true", help="omit the w(0; H) column")
    q.add_argument("--quad-tol", type=float, default=DEFAULT_QUAD_TOL)

    q = sub.add_parser("solve", help="exterior solve with prescribed boundary slope",
                       epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    q.add_argument("--domain", choices=("disk", "ellipse"), default="disk")
    q.add_argument("--rho", type=float, default=1.0, help="disk radius")
    q.add_argument("--a", type=float, default=1.0, help="ellipse semi-axis along theta = 0")
    q.add_argument("--b", type=float, default=1.5, help="ellipse semi-axis along theta = pi/2")
    q.add_argument("--surface", choices=("H2", "E_H"), default="H2")
    q.add_argument("--H", type=float, default=0.0)
    q.add_argument("--s", type=_slope, default=1.0)
    q.add_argument("--radii", type=_float_list, default=None, help="exhaustion radii R_m")
    q.add_argument("--stages", type=int, default=3)
    q.add_argument("--step", type=float, default=3.0, help="R_m = R_1 + m * step")
    q.add_argument("--n-r", type=int, default=64)
    q.add_argument("--n-theta", type=int, default=32)
    q.add_argument("--stretch", type=float, default=MeshParams().stretch)
    q.add_argument("--newton-tol", type=float, default=1e-9)
    q.add_argument("--slope-tol", type=float, default=1e-8)
    q.add_argument("--stage-tol", type=float, default=1e-3)
    q.add_argument("--no-fields", action="store_true", help="write the report only")

    q = sub.add_parser("verify", help="run the invariant suite",
                       epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    q.add_argument("--groups", default=",".join(GROUPS), help="comma-separated invariant groups")
    q.add_argument("--seed", type=int, default=20240917)
    return p


def _read_config(path) -> dict:
    text = Path(path).read_text()
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = lambda k: k.strip().replace("-", "_")
    cp.read_string("[run]\n" + text)
    return dict(cp["run"])


def parse_args(argv=None) -> argparse.Namespace:
    """Parse ``argv`` with defaults from ``--config`` below explicit options."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            conf = _read_config(args.config)
        except (OSError, configparser.Error) as exc:
            parser.exit(EXIT_PARAMS, f"killing-cmc: cannot read config {args.config}: {exc}\n")
        top = {"output_dir", "format", "verbose"}
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sub._actions} | {a.dest: a for a in parser._actions}
        unknown = set(conf) - set(known)
        if unknown:
            parser.exit(EXIT_PARAMS, f"killing-cmc: unknown config keys: {sorted(unknown)}\n")
        defaults = {}
        for k, v in conf.items():
            act = known[k]
            if act.type is not None:
                try:
                    v = act.type(v)
                except (argparse.ArgumentTypeError, ValueError) as exc:
                    parser.exit(EXIT_PARAMS, f"killing-cmc: bad config value {k} = {v!r}: {exc}\n")
            elif k == "verbose" or isinstance(act, argparse._StoreTrueAction):
                v = v.lower() in ("1", "true", "yes", "on")
            defaults[k] = v
        parser.set_defaults(**{k: v for k, v in defaults.items() if k in top})
        sub.set_defaults(**{k: v for k, v in defaults.items() if k not in top})
        args = parser.parse_args(argv)
    return args


def _output_dir(args) -> Path:
    argv_dir = getattr(args, "_cli_output_dir", None)
    if argv_dir:
        return Path(argv_dir)
    env = os.environ.get(OUTPUT_ENV)
    if env:
        return Path(env)
    return Path(args.output_dir or ".")


# -- commands --------------------------------------------------------------------------------

def cmd_profile(args, out: Path) -> int:
    if not args.rho > 0.0:
        raise ParamError("--rho must be positive")
    try:
        params = CmcParams(args.rho, args.s, args.H)
    except ProfileDomainError as exc:
        raise ParamError(str(exc)) from exc
    rmax = args.rmax if args.rmax is not None else args.rho + 5.0
    if rmax < args.rho or args.n < 1:
        raise ParamError("need --rmax >= --rho and --n >= 1")
    prof = RadialProfile(params, args.quad_tol)
    r = np.linspace(args.rho, rmax, args.n)
    f = prof.values(r)
    fp = [prof.derivative(x) for x in r]
    rows = [(a, b, math.inf if is_infinite(c) else float(c)) for a, b, c in zip(r, f, fp)]
    meta = {"rho": args.rho, "s": str(args.s), "H": args.H, "quad_tol": args.quad_tol,
            "columns": ["r", "f", "f_prime"]}
    if args.format == "json":
        io.write_json(out / "profile.json", "profile", {**meta, "rows": rows})
    else:
        io.write_csv(out / "profile.csv", ["r", "f", "f_prime"], rows)
        io.write_json(out / "profile.json", "profile", meta)
    print(f"profile: {len(rows)} rows, f(rmax) = {io.fmt(f[-1])}")
    return EXIT_OK


def cmd_bounds(args, out: Path) -> int:
    Hs = list(args.H)
    bad = [H for H in Hs if not 0.0 <= H < 1.0]
    if bad:
        raise ParamError(f"H must lie in [0, 1), the interval open at 1; got {bad}")
    rows = []
    for H in Hs:
        B = height_bound_B(H, args.quad_tol)
        w0 = math.nan if args.no_w or H == 0.0 else equidistant_height_w(0.0, H, args.quad_tol)
        rows.append((H, B, w0))
    cat = []
    for rho in args.catenoid_rho:
        if not rho > 0.0:
            raise ParamError("catenoid waist radii must be positive")
        c = catenoid_limit_certified(rho, args.quad_tol)
        cat.append({"rho": rho, "limit": c.value, "tail_bound": c.tail_bound,
                    "truncation": c.truncation})
    meta = {"pi_over_4": math.pi / 4, "pi_over_2": math.pi / 2, "quad_tol": args.quad_tol,
            "columns": ["H", "B", "w0"], "catenoid": cat}
    if args.format == "json":
        io.write_json(out / "bounds.json", "bounds", {**meta, "rows": rows})
    else:
        io.write_csv(out / "bounds.csv", ["H", "B", "w0"], rows)
        io.write_json(out / "bounds.json", "bounds", meta)
    print(f"bounds: {len(rows)} rows, B({io.fmt(Hs[0])}) = {io.fmt(rows[0][1])}")
    return EXIT_OK


def _domain(args) -> StarDomain:
    try:
        if args.domain == "disk":
            return StarDomain.disk(args.rho)
        return StarDomain.ellipse(args.a, args.b)
    except ValueError as exc:
        raise DomainError(str(exc)) from exc


def cmd_solve(args, out: Path) -> int:
    if is_infinite(args.s):
        raise ParamError("solve accepts finite slopes only (s = inf is covered by the profiles)")
    if args.s < 0.0:
        raise ParamError("--s must be >= 0")
    if not 0.0 <= args.H < 1.0:
        raise ParamError("--H must lie in [0, 1) for solves")
    if args.surface == "E_H" and args.H == 0.0:
        raise ParamError("--surface E_H needs H in (0, 1)")
    if args.n_r < 4 or args.n_theta < 1 or args.stages < 1 or args.step <= 0.0:
        raise ParamError("need --n-r >= 4, --n-theta >= 1, --stages >= 1, --step > 0")
    dom = _domain(args)
    mesh = MeshParams(args.n_r, args.n_theta, args.stretch)
    try:
        res = exterior_solve(dom, args.H, float(args.s), args.radii, mesh=mesh,
                             newton_tol=args.newton_tol, slope_tol=args.slope_tol,
                             stage_tol=args.stage_tol, surface=args.surface,
                             stages=args.stages, step=args.step)
    except ProfileDomainError:
        raise
    except ValueError as exc:
        raise DomainError(str(exc)) from exc
    chart = EquidistantChart(args.H) if args.surface == "E_H" else None
    R0 = dom.enclosing_radius()
    last = res.stages[-1]
    bar = barrier_check(last.field, last.t_star, R0, last.R_outer, args.H, chart)
    if not args.no_fields:
        for m, st in enumerate(res.stages, start=1):
            rows = list(io.field_rows(st.field))
            if args.format == "json":
                io.write_json(out / f"field_stage{m}.json", "field",
                              {"R_outer": st.R_outer, "t_star": st.t_star,
                               "columns": ["r", "theta", "u"], "rows": rows})
            else:
                io.write_csv(out / f"field_stage{m}.csv", ["r", "theta", "u"], rows)
    config = {"domain": dom.label, "surface": args.surface, "H": args.H, "s": float(args.s),
              "mesh": {"n_r": args.n_r, "n_theta": args.n_theta, "stretch": args.stretch},
              "newton_tol": args.newton_tol, "slope_tol": args.slope_tol,
              "stage_tol": args.stage_tol}
    io.write_json(out / "report.json", "solve_report",
                  {"config": config, "report": res.report.to_dict(), "barrier": bar.to_dict()})
    r = res.report
    print(f"solve: t* = {io.fmt(r.t_star)}, sup|grad u| = {io.fmt(r.sup_grad_inner)}, "
          f"sup u = {io.fmt(r.sup_u)}, converged = {r.converged}")
    return EXIT_OK if r.converged else EXIT_VERIFY


def cmd_verify(args, out: Path) -> int:
    groups = [g.strip() for g in args.groups.split(",") if g.strip()]
    try:
        checks = run_checks(groups, seed=args.seed)
    except ValueError as exc:
        raise ParamError(str(exc)) from exc
    failing = [c.name for c in checks if not c.passed]
    io.write_json(out / "verify.json", "verify",
                  {"groups": groups, "passed": not failing, "failing": failing,
                   "checks": [c.to_dict() for c in checks]})
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.group}/{c.name}: value {c.value:.6g} "
              f"{c.relation} {c.limit:.6g} (margin {c.margin:.3g}) {c.detail}")
    if failing:
        print("failing invariants: " + ", ".join(failing), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


COMMANDS = {"profile": cmd_profile, "bounds": cmd_bounds, "solve": cmd_solve, "verify": cmd_verify}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parse_args(argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--output-dir")
    args._cli_output_dir = pre.parse_known_args(argv)[0].output_dir
    if args.format is None:
        args.format = "csv"
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = _output_dir(args)
    try:
        return COMMANDS[args.command](args, out)
    except ParamError as exc:
        print(f"killing-cmc: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    except DomainError as exc:
        print(f"killing-cmc: invalid domain: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ProfileDomainError, QuadratureError) as exc:
        print(f"killing-cmc: quadrature/domain error: {exc}", file=sys.stderr)
        return EXIT_QUADRATURE
    except NewtonError as exc:
        print(f"killing-cmc: Newton did not converge: {exc}", file=sys.stderr)
        return EXIT_NEWTON
    except BracketError as exc:
        print(f"killing-cmc: slope bracket failed: {exc} (slopes {exc.slope_lo} at t={exc.t_lo}, "
              f"{exc.slope_hi} at t={exc.t_hi})", file=sys.stderr)
        return EXIT_BRACKET
    except ExhaustionError as exc:
        print(f"killing-cmc: exhaustion did not converge: changes {exc.changes}", file=sys.stderr)
        return EXIT_EXHAUSTION


if __name__ == "__main__":
    sys.exit(main())
