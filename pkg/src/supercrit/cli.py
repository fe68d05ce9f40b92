"""Command-line entry point: ``supercrit <command> --f SPEC --N N ...``.

Exit codes: 0 success, 1 usage or parse error, 2 numerical failure,
3 regime violation, 4 failed precondition.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConstraintError, SupercritError

__all__ = ["RunConfig", "build_parser", "dispatch", "main"]

COMMANDS = ("classify", "shoot", "limit-shoot", "singular", "intersect", "bifurcate", "morse", "verify")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class RunConfig:
    command: str
    f_spec: str | None = None
    N: int | None = None
    tol: float = 1e-9
    out: str | None = None
    fmt: str = "json"
    jobs: int = 1
    params: dict = field(default_factory=dict)


def _common(p, *, need_f=True, fmt="json"):
    if need_f:
        p.add_argument("--f", dest="f_spec", required=True, help="nonlinearity, e.g. exp or power:p=5,a=1")
        p.add_argument("--N", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", default=None)
    p.add_argument("--format", dest="fmt", choices=("csv", "json"), default=fmt)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="supercrit", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("classify", help="exponents and regime")
    _common(p)

    p = sub.add_parser("shoot", help="regular solution u(r, rho)")
    _common(p, fmt="csv")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--r-max", type=float, default=1e3)

    p = sub.add_parser("limit-shoot", help="regular solution of the limit equation")
    _common(p, fmt="csv")
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--s-max", type=float, default=1e3)

    p = sub.add_parser("singular", help="singular solution u*")
    _common(p, fmt="csv")
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--r-max", type=float, default=1e3)
    p.add_argument("--switch-on-box-exit", action="store_true")

    p = sub.add_parser("intersect", help="crossings of two limit-equation profiles")
    _common(p)
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--sigma0", type=float, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--sigma1", type=float)
    g.add_argument("--singular", action="store_true", help="compare against v* = F^{-1}[r^2/k]")
    p.add_argument("--interval", type=float, nargs=2, default=(0.0, 10.0), metavar=("LO", "HI"))

    p = sub.add_parser("bifurcate", help="mu(rho) sweep")
    _common(p)
    p.add_argument("--rho-min", type=float, default=1e-2)
    p.add_argument("--rho-max", type=float, default=1e3)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--csv", default=None, help="also write rho,mu,dmu_drho here")

    p = sub.add_parser("morse", help="Morse-index diagnostics of u*")
    _common(p)

    p = sub.add_parser("verify", help="acceptance suite")
    p.add_argument("--suite", default="all", help="'all' or a comma list of criterion numbers")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="verify_artifacts")
    return ap


def _config(ns) -> RunConfig:
    skip = {"command", "f_spec", "N", "tol", "out", "fmt", "jobs"}
    params = {k: v for k, v in vars(ns).items() if k not in skip}
    return RunConfig(command=ns.command, f_spec=getattr(ns, "f_spec", None), N=getattr(ns, "N", None),
                     tol=getattr(ns, "tol", 1e-9), out=ns.out, fmt=getattr(ns, "fmt", "json"),
                     jobs=getattr(ns, "jobs", 1), params=params)


def _validate(cfg: RunConfig):
    if cfg.N is not None and cfg.N < 3:
        raise ConstraintError(f"N must be an integer >= 3, got {cfg.N}")
    if not (1e-12 <= cfg.tol <= 1e-4):
        raise ConstraintError(f"tol must lie in [1e-12, 1e-4], got {cfg.tol}")
    if cfg.jobs < 1:
        raise ConstraintError("--jobs must be positive")
    if cfg.fmt == "csv" and cfg.out is None:
        raise ConstraintError("--out is required for csv output")
    p = cfg.params
    if cfg.command == "bifurcate":
        if not (0 < p["rho_min"] < p["rho_max"]) or p["points"] < 3:
            raise ConstraintError("need 0 < rho-min < rho-max and at least 3 points")
    if cfg.command == "intersect" and not p["interval"][1] > p["interval"][0]:
        raise ConstraintError("empty interval")


def _emit_json(obj, cfg: RunConfig):
    text = json.dumps(obj, sort_keys=True, indent=1) + "\n"
    if cfg.out is None:
        sys.stdout.write(text)
    else:
        Path(cfg.out).write_text(text)


def _summary(msg, cfg):
    # keep stdout parseable when it carries the JSON document
    stream = sys.stderr if cfg.out is None else sys.stdout
    print(f"{msg} tol={cfg.tol:g}", file=stream)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def _radial_json(sol):
    return {"equation": sol.equation, "N": sol.N, "f": sol.f.spec, "center_value": _jsonable(sol.center_value),
            "first_zero": sol.first_zero, "termination": sol.termination, "tol": sol.tol,
            "r": sol.r.tolist(), "u": sol.u.tolist(), "du": sol.du.tolist()}


def dispatch(cfg: RunConfig) -> int:
    """Run one command; exceptions propagate as SupercritError subclasses."""
    from .nonlinearity import classify, make_builtin

    _validate(cfg)
    p = cfg.params
    if cfg.command == "verify":
        return _verify(cfg)
    f = make_builtin(cfg.f_spec)
    N = cfg.N

    if cfg.command == "classify":
        rep = classify(f, N)
        _emit_json(rep.to_dict(), cfg)
        _summary(f"classify: q={rep.q:.12g}, regime {rep.regime}", cfg)
        return 0

    if cfg.command == "shoot":
        from .radial_ode import shoot_regular, write_csv

        sol = shoot_regular(f, N, p["rho"], r_max=p["r_max"], tol=cfg.tol)
        _write_radial(sol, cfg, write_csv)
        _summary(f"shoot: {len(sol.r)} nodes, first_zero={sol.first_zero}, {sol.termination}", cfg)
        return 0

    if cfg.command == "limit-shoot":
        from .radial_ode import shoot_limit, write_csv

        q = p["q"] if p["q"] is not None else classify(f, N).q
        sol = shoot_limit(f, N, q, p["sigma"], s_max=p["s_max"], tol=cfg.tol)
        _write_radial(sol, cfg, write_csv)
        _summary(f"limit-shoot: q={q:.12g}, {len(sol.r)} nodes, {sol.termination}", cfg)
        return 0

    if cfg.command == "singular":
        from .singular import SingularOptions, construct_singular, write_csv

        opts = SingularOptions(tol=min(cfg.tol, 1e-10), r_max=p["r_max"],
                               switch_on_box_exit=p["switch_on_box_exit"])
        sol = construct_singular(f, N, q=p["q"], opts=opts)
        if cfg.fmt == "csv":
            write_csv(sol, cfg.out)
        else:
            _emit_json({"r0_star": sol.r0_star, "diagnostics": sol.diagnostics.to_dict()}, cfg)
        _summary(f"singular: r0*={sol.r0_star}", cfg)
        return 0

    if cfg.command == "intersect":
        from .intersect import FunctionProfile, count_intersections
        from .radial_ode import shoot_limit
        from .singular import exact_singular_limit

        q = p["q"] if p["q"] is not None else classify(f, N).q
        lo, hi = p["interval"]
        a = shoot_limit(f, N, q, p["sigma0"], s_max=hi, tol=cfg.tol)
        if p["singular"]:
            b = FunctionProfile(lambda s: exact_singular_limit(f, N, q, s), singular=True)
        else:
            b = shoot_limit(f, N, q, p["sigma1"], s_max=hi, tol=cfg.tol)
        rep = count_intersections(a, b, (lo, hi), s_max=max(hi, 1.0))
        _emit_json(rep.to_dict(), cfg)
        _summary(f"intersect: {rep.count} crossings on ({lo:g}, {hi:g})", cfg)
        return 0

    if cfg.command == "bifurcate":
        from .bifurcation import BifurcationOptions, sweep_curve

        grid = np.geomspace(p["rho_min"], p["rho_max"], p["points"])
        curve = sweep_curve(f, N, grid, BifurcationOptions(tol=cfg.tol, jobs=cfg.jobs))
        if p["csv"]:
            curve.write_csv(p["csv"])
        if cfg.fmt == "csv":
            curve.write_csv(cfg.out)
        else:
            _emit_json(curve.summary(), cfg)
        _summary(f"bifurcate: {curve.classification}, mu*={curve.mu_star}, "
                 f"{len(curve.turning_points)} turning points", cfg)
        return 0

    if cfg.command == "morse":
        from .morse import morse_regime_check

        rep = morse_regime_check(f, N)
        _emit_json(rep.to_dict(), cfg)
        _summary(f"morse: c*={rep.c_star:.6g}, hardy={rep.hardy:g}, {rep.verdict}", cfg)
        return 0

    raise ConstraintError(f"unknown command {cfg.command!r}")


def _write_radial(sol, cfg, write_csv):
    if cfg.fmt == "csv":
        write_csv(sol, cfg.out)
    else:
        _emit_json(_radial_json(sol), cfg)


def _verify(cfg: RunConfig) -> int:
    from .verification import CRITERIA, criterion_14, run_suite, write_artifacts

    suite = cfg.params["suite"]
    if suite == "all":
        ids, with_14 = sorted(CRITERIA), True
    else:
        try:
            wanted = sorted({int(x) for x in suite.split(",")})
        except ValueError:
            raise ConstraintError(f"bad suite {suite!r}") from None
        if any(i not in CRITERIA and i != 14 for i in wanted):
            raise ConstraintError(f"criteria are numbered 1..14, got {suite!r}")
        ids, with_14 = [i for i in wanted if i != 14], 14 in wanted
    results = run_suite(ids, jobs=cfg.jobs)
    if with_14:
        other = 8 if cfg.jobs == 1 else 1
        first = results if ids == sorted(CRITERIA) else None
        results.append(criterion_14(first, jobs_pair=(cfg.jobs, other)))
    write_artifacts(results, cfg.out)
    for res in results:
        print(res.line())
    return 0 if all(r.passed for r in results) else 2


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        return dispatch(_config(ns))
    except SupercritError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
