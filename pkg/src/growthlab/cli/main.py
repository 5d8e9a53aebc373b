"""``growthlab`` command line.

Exit status: 0 when every expectation passes, 1 when any fails, 2 on usage
or parse errors.  ``GROWTHLAB_THREADS`` caps the worker count.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .. import classes, verify
from ..ade import RESIDUAL_RTOL, AlgebraicODE, admissible, minimal_M, residual_stats
from ..classes import RadialWeight, SmoothIncreasing
from ..grid import DiscGrid
from ..report import Expectation, Report
from .config import (ConfigError, RunConfig, _fields, _int_tuple, dump_catalog, parse_config,
                     parse_expect, run_config)
from .emit import emit
from .expr import ParseError, parse_function, parse_phi, parse_weight

COMMANDS = ("residual", "theorem1", "norms", "theorem2", "beta", "dirichlet-counterexample",
            "classify", "scenarios")


class UsageError(ValueError):
    pass


def thread_cap(requested: int | None) -> int:
    n = requested or 1
    env = os.environ.get("GROWTHLAB_THREADS")
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise UsageError(f"GROWTHLAB_THREADS must be an integer, got {env!r}") from None
        n = min(n, max(cap, 1))
    return max(n, 1)


# -- argument parsing ----------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser):
    g = p.add_argument_group("run options")
    g.add_argument("--config", help="config file (key = value lines plus [scenario] sections)")
    g.add_argument("--grid-rings", type=int, dest="rings", help="J, number of dyadic rings (4..24)")
    g.add_argument("--angular-factor", type=int, dest="angular_factor")
    g.add_argument("--format", choices=("csv", "json", "svg+json"))
    g.add_argument("--output", "-o", help="csv file, or directory for json output (default stdout)")
    g.add_argument("--threads", type=int)
    g.add_argument("--tolerance", action="append", default=[], metavar="QUANTITY=TOL",
                   help="override an expectation tolerance")
    g.add_argument("--expect", action="append", default=[], metavar="EXPECTATION",
                   help="extra expectation, e.g. 'sup_ratio <= 0.5' or 'q = 1 +- 0.1'")


def _equation_args(p: argparse.ArgumentParser, need_f: bool = True):
    p.add_argument("--f", required=need_f, help="function of z")
    p.add_argument("--order", type=int, default=1)
    p.add_argument("--degree", type=int, default=1)
    p.add_argument("--coeff", action="append", default=[], metavar="'k=K j=(..) expr=E'",
                   help="one coefficient row; repeatable")
    p.add_argument("--eq", help="coefficient rows separated by ';'")
    p.add_argument("--caps", action="append", default=[], metavar="'k=K m=(..)'")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="growthlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("residual", help="residual gate of a candidate solution")
    _equation_args(p)
    _common(p)

    p = sub.add_parser("theorem1", help="sup of lhs/rhs of the pointwise bound")
    _equation_args(p, need_f=False)
    p.add_argument("--M", help="tuple like (1,0); default minimal admissible")
    p.add_argument("--scenario", action="append", default=[], help="builtin scenario name")
    _common(p)

    p = sub.add_parser("norms", help="class norms of one function")
    p.add_argument("--f", required=True)
    p.add_argument("--alpha", type=float, action="append", default=[])
    p.add_argument("--phi", help="gauge phi(r); default log(e/(1-r))/(1-r)")
    p.add_argument("--omega", help="radial weight omega(r) for the omega* integral")
    p.add_argument("--kernel", choices=sorted(classes.KERNELS), default="green")
    _common(p)

    p = sub.add_parser("theorem2", help="f versus f^m comparisons")
    p.add_argument("--f", help="function of z; default runs the family sweep over the catalog")
    p.add_argument("--m", type=int, action="append", default=[])
    p.add_argument("--radius", type=float, default=0.99, help="radius for the family sweep")
    _common(p)

    p = sub.add_parser("beta", help="f_p family bound for beta_{alpha,m}")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--m", type=int, required=True)
    _common(p)

    p = sub.add_parser("dirichlet-counterexample", help="refinement trends for f_p and f_p^m")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--p", type=float)
    _common(p)

    p = sub.add_parser("classify", help="coefficient classes of a first-order equation")
    _equation_args(p, need_f=False)
    p.add_argument("--kinds", default="hinf,hinf-phi,bergman,ubc-type")
    p.add_argument("--phi")
    p.add_argument("--omega")
    _common(p)

    p = sub.add_parser("scenarios", help="run or dump the scenario catalog")
    p.add_argument("--all", action="store_true", help="run every scenario")
    p.add_argument("--name", action="append", default=[], help="run one scenario; repeatable")
    p.add_argument("--dump", action="store_true", help="print the catalog in config format")
    p.add_argument("--list", action="store_true", help="list scenario names")
    _common(p)
    return ap


# -- helpers -------------------------------------------------------------------------------------------

def _arg_fn(text: str, flag: str):
    try:
        return parse_function(text)
    except ParseError as exc:
        raise UsageError(f"--{flag}: {exc}") from None


def _equation(args) -> AlgebraicODE | None:
    rows = list(args.coeff)
    if args.eq:
        rows += [r for r in args.eq.split(";") if r.strip()]
    if not rows:
        return None
    parsed = []
    for row in rows:
        f = _fields(row, 1, 1)
        if not {"k", "j", "expr"} <= f.keys():
            raise UsageError(f"coefficient row needs k=, j= and expr=: {row!r}")
        parsed.append((int(f["k"]), _int_tuple(f["j"], 1, 1), _arg_fn(f["expr"], "coeff")))
    caps = None
    if args.caps:
        table = {}
        for row in args.caps:
            f = _fields(row, 1, 1)
            table[int(f["k"])] = _int_tuple(f.get("m", ""), 1, 1)
        caps = [table.get(k, (0,) * args.order) for k in range(1, args.degree + 1)]
    try:
        return AlgebraicODE.from_rows(args.order, args.degree, parsed, caps)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _require_eq(args) -> AlgebraicODE:
    eq = _equation(args)
    if eq is None:
        raise UsageError("an equation is required (--coeff or --eq)")
    return eq


def _grid(cfg: RunConfig) -> DiscGrid:
    return DiscGrid(rings=cfg.rings, angular_factor=cfg.angular_factor)


def _extra(args, cfg: RunConfig) -> list:
    return [Expectation(e.quantity, e.op, e.value, cfg.tolerances.get(e.quantity, e.tol), "command line")
            for e in (parse_expect(t) for t in args.expect)]


def _guard(name: str, fn) -> Report:
    """Run one harness; numeric/domain failures become a failed report instead of a crash."""
    try:
        return fn()
    except (ArithmeticError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        return Report(name).fail(f"{type(exc).__name__}: {exc}")


# -- commands -----------------------------------------------------------------------------------------

def cmd_residual(args, cfg):
    eq, f = _require_eq(args), _arg_fn(args.f, "f")
    grid = _grid(cfg)

    def run():
        rep = Report("residual", grid=grid.metadata())
        stats = residual_stats(eq, f, grid, cfg.threads)
        for k, v in stats.items():
            if isinstance(v, float):
                rep.add(k, v)
            else:
                rep.counts[k] = v
        rep.notes.append(f"minimal M = {minimal_M(eq)}")
        return rep.check([Expectation("max_scaled_residual", "le", RESIDUAL_RTOL, 0.0, "residual gate")]
                         + _extra(args, cfg))
    return [_guard("residual", run)]


def _parse_M(text: str):
    try:
        return _int_tuple(text, 1, 1)
    except ConfigError as exc:
        raise UsageError(f"--M: {exc.message}") from None


def cmd_theorem1(args, cfg):
    grid = _grid(cfg)
    if args.scenario:
        catalog = {s.name: s for s in verify.builtin_scenarios()}
        unknown = [n for n in args.scenario if n not in catalog]
        if unknown:
            raise UsageError(f"unknown scenario(s): {', '.join(unknown)}")
        chosen = [cfg.apply_tolerances(catalog[n]) for n in args.scenario]
    else:
        eq = _require_eq(args)
        if not args.f:
            raise UsageError("--f is required without --scenario")
        f = _arg_fn(args.f, "f")
        M = _parse_M(args.M) if args.M else minimal_M(eq)
        if not admissible(eq, M):
            raise UsageError(f"M={M} violates the admissibility conditions (minimal {minimal_M(eq)})")
        chosen = [verify.Scenario("theorem1", "theorem1", f=f, eq=eq, M=M)]
    out = []
    for s in chosen:
        s.expectations = list(s.expectations) + _extra(args, cfg)
        out.append(_guard(s.name, lambda s=s: verify.run_theorem1(s, grid, cfg.threads)))
    return out


def cmd_norms(args, cfg):
    f = _arg_fn(args.f, "f")
    grid = _grid(cfg)

    def run():
        rep = Report("norms", grid=grid.metadata())
        for a in args.alpha or [1.0]:
            res = classes.normal_norm(f, a, grid)
            rep.add(f"normal[alpha={a:g}]", res.value, argmax=res.argmax, note=f"trend {res.trend}")
            d = classes.dirichlet_norm(f, grid, alpha=a)
            rep.add(f"dirichlet[alpha={a:g}]", d.value, note=f"trend {d.trend}")
        phi = parse_phi(args.phi) if args.phi else SmoothIncreasing.default()
        res = classes.phi_normal_norm(f, phi, grid)
        rep.add(f"phi_normal[{phi.label}]", res.value, argmax=res.argmax, note=f"trend {res.trend}")
        omega = parse_weight(args.omega) if args.omega else RadialWeight.constant(1.0)
        d = classes.dirichlet_norm(f, grid, omega=omega)
        rep.add(f"dirichlet_omega_star[{omega.label}]", d.value, note=f"trend {d.trend}")
        u = classes.ubc_norm(f, classes.default_a_samples(), grid, args.kernel)
        rep.add(f"ubc[{args.kernel}]", u.value, argmax=u.argmax, note=f"trend {u.trend}")
        return rep.check(_extra(args, cfg))
    return [_guard("norms", run)]


def cmd_theorem2(args, cfg):
    grid = _grid(cfg)
    powers = tuple(args.m) or (2, 3)
    if args.f:
        f = _arg_fn(args.f, "f")
        return [_guard(f"theorem2-m{m}", lambda m=m: verify.run_theorem2_suite(
            f, m, grid, name=f"theorem2-m{m}").check(_extra(args, cfg))) for m in powers]
    return [_guard("theorem2-family", lambda: verify.theorem2_family_sweep(
        verify.rational_catalog(), powers, grid, args.radius).check(_extra(args, cfg)))]


def cmd_beta(args, cfg):
    return [_guard("beta", lambda: verify.beta_explorer(args.alpha, args.m).check(_extra(args, cfg)))]


def cmd_counterexample(args, cfg):
    grid = _grid(cfg)
    return [_guard("dirichlet-counterexample", lambda: verify.dirichlet_counterexample(
        args.alpha, args.m, grid, p=args.p).check(_extra(args, cfg)))]


def cmd_classify(args, cfg):
    eq = _require_eq(args)
    grid = _grid(cfg)
    kinds = tuple(k.strip() for k in args.kinds.split(",") if k.strip())
    bad = [k for k in kinds if k not in classes.CONCLUSIONS]
    if bad:
        raise UsageError(f"unknown kind(s): {', '.join(bad)}")
    kw = {}
    if args.phi:
        kw["phi"] = parse_phi(args.phi)
    if args.omega:
        kw["omega"] = parse_weight(args.omega)
    return [_guard("classify", lambda: verify.classify(eq, kinds, grid, **kw).check(_extra(args, cfg)))]


def cmd_scenarios(args, cfg, extra_scenarios):
    catalog = verify.builtin_scenarios() + list(extra_scenarios)
    if args.dump:
        sys.stdout.write(dump_catalog(catalog))
        return None
    if args.list:
        for s in catalog:
            print(f"{s.name}\t{s.kind}")
        return None
    names = list(args.name) or list(cfg.scenarios)
    if names:
        by_name = {s.name: s for s in catalog}
        unknown = [n for n in names if n not in by_name]
        if unknown:
            raise UsageError(f"unknown scenario(s): {', '.join(unknown)}")
        chosen = [by_name[n] for n in names]
    elif args.all or extra_scenarios:
        chosen = catalog if args.all else list(extra_scenarios)
    else:
        raise UsageError("choose --all, --name, --list or --dump")
    grid = _grid(cfg)
    out = []
    for s in chosen:
        s = cfg.apply_tolerances(s)
        out.append(_guard(s.name, lambda s=s: verify.run_scenario(s, grid, cfg.threads)))
    return out


# -- entry point -------------------------------------------------------------------------------------

def _load(args):
    settings, scenarios = {}, []
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        settings, scenarios = parse_config(text)
    tol = {}
    for item in args.tolerance:
        q, sep, v = item.partition("=")
        if not sep:
            raise UsageError(f"--tolerance expects QUANTITY=TOL, got {item!r}")
        try:
            tol[q.strip()] = float(v)
        except ValueError:
            raise UsageError(f"--tolerance value must be a number, got {v!r}") from None
    cfg = run_config(settings, command=args.command, rings=args.rings,
                     angular_factor=args.angular_factor, format=args.format,
                     output=args.output, threads=args.threads)
    cfg.tolerances.update(tol)
    cfg.threads = thread_cap(cfg.threads)
    return cfg, scenarios


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0)
    try:
        cfg, extra = _load(args)
        handlers = {
            "residual": cmd_residual, "theorem1": cmd_theorem1, "norms": cmd_norms,
            "theorem2": cmd_theorem2, "beta": cmd_beta,
            "dirichlet-counterexample": cmd_counterexample, "classify": cmd_classify,
        }
        if args.command == "scenarios":
            reports = cmd_scenarios(args, cfg, extra)
        else:
            reports = handlers[args.command](args, cfg)
    except ValueError as exc:  # parse, config and usage errors
        print(f"growthlab: {exc}", file=sys.stderr)
        return 2
    if reports is None:
        return 0
    emit(reports, cfg.format, cfg.output, args.command, stdout=sys.stdout)
    for rep in reports:
        print(rep.summary(), file=sys.stderr)
    return 0 if all(r.passed for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
