"""Command-line front end.

Exit codes: 0 when every check passes, 1 when any check fails, 2 on a
configuration or runtime error.
"""
import argparse
import json
import sys
import warnings

import numpy as np

from . import __version__
from .cp1 import MomentumProfile, dhym_fiber_solution, fiber_phase, legendre_transform
from .errors import ConfigError, CxKEnergyError, LostCalibration
from .functionals import complexified_k_energy
from .geodesics import k_energy_probe
from .report import Check, Report
from .solvers import (SolverConfig, dhym_flow, geodesic_bvp_epsilon, kenergy_descent,
                      system_residuals)
from .suites import (BACKENDS, SUITES, RunConfig, futaki_checks, hypercritical_checks,
                     ma_checks, make_grid, make_reference, random_field, random_potential,
                     rng_for, run_suite, stability_report, suite_surface,
                     trivial_geodesic_checks, uniform)

RUN_KEYS = ("backend", "m", "tol", "gamma_abs", "theta_hat", "seed", "epsilon")


def _common(p):
    p.add_argument("--backend", choices=BACKENDS)
    p.add_argument("--m", type=int, help="points per axis (torus) or Gauss nodes (cp1)")
    p.add_argument("--tol", type=float)
    p.add_argument("--gamma-abs", dest="gamma_abs", type=float)
    p.add_argument("--theta-hat", dest="theta_hat", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--config", help="JSON file with run settings (flags take precedence)")
    p.add_argument("--out", help="write the report to this path")
    p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")


def build_parser():
    parser = argparse.ArgumentParser(prog="cxkenergy", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", required=True)
    _common(p)
    for name, text in (("dhym", "solve the dHYM equation for the reference metric"),
                       ("geodesic", "compute geodesics and their residuals"),
                       ("kenergy", "minimize the complexified K-energy"),
                       ("futaki", "evaluate the Futaki invariant (cp1)"),
                       ("surface", "solve the surface system checks (torus-n2)"),
                       ("stability", "top-dimensional stability inequalities of the classes")):
        _common(sub.add_parser(name, help=text))
    return parser


def load_config(args):
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(str(exc), args.config) from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {exc.lineno} column {exc.colno}: {exc.msg}", args.config) from exc
        if not isinstance(data, dict):
            raise ConfigError("expected a JSON object", args.config)
    for key in RUN_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    return RunConfig.from_dict(data, args.config or "flags")


def _quiet(fn, *a, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LostCalibration)
        return fn(*a, **kw)


def cmd_dhym(cfg):
    rng = rng_for(cfg, 11)
    grid = make_grid(cfg)
    ref = make_reference(cfg, grid)
    report = Report(config={**cfg.as_dict(), "command": "dhym"})
    tol = cfg.tol or 1e-8
    if grid.name == "cp1":
        coef = np.zeros(5)
        coef[2:] = 0.05 * uniform(rng, 3)
        _, w, _ = legendre_transform(MomentumProfile(coef), grid)
        b = dhym_fiber_solution(w, ref.classes.theta_hat)
        report.add(Check.at_most("fiber_phase_residual", np.max(np.abs(fiber_phase(w, b) - ref.classes.theta_hat)), tol))
        return report
    u0 = random_field(grid, rng, 0.05)
    res = dhym_flow(grid, u0, ref.omega0, ref.bfield0, ref.classes.theta_hat, SolverConfig(tol=tol))
    report.add(Check.at_most("dhym_residual", res.history[-1], tol))
    report.add(Check.at_most("dhym_iterations", res.iterations, 10**4))
    report.add(Check.at_most("dhym_solution_sup", np.max(np.abs(res["u"])), 1e-6))
    return report


def cmd_geodesic(cfg):
    rng = rng_for(cfg, 12)
    grid = make_grid(cfg)
    report = Report(config={**cfg.as_dict(), "command": "geodesic"})
    if grid.name == "cp1":
        report.extend(trivial_geodesic_checks(grid))
        report.extend(hypercritical_checks(grid, rng))
        return report
    if grid.n != 1:
        raise ConfigError("the geodesic solver needs --backend torus-n1 or cp1", "backend")
    ref = make_reference(cfg, grid)
    tol = cfg.tol or 1e-10
    v1 = random_field(grid, rng, 0.01, kmax=1)
    res = geodesic_bvp_epsilon(grid, np.zeros(grid.shape), v1, steps=16, epsilon=cfg.epsilon,
                               cfg=SolverConfig(max_iters=40, tol=tol))
    report.add(Check.at_most("geodesic_residual", res.history[-1], tol))
    second = _quiet(k_energy_probe, ref, res["path"])
    report.add(Check.at_least("kenergy_second_difference_min", np.min(second), -1e-6))
    return report


def cmd_kenergy(cfg):
    rng = rng_for(cfg, 13)
    grid = make_grid(cfg)
    ref = make_reference(cfg, grid)
    tol = cfg.tol or 1e-7
    phi0 = random_potential(grid, rng, 0.02, 0.01)
    res = kenergy_descent(ref, phi0, SolverConfig(max_iters=100, tol=tol))
    report = Report(config={**cfg.as_dict(), "command": "kenergy"})
    report.add(Check.at_most("system_residual", res["residuals"][-1], tol))
    report.add(Check.at_most("energy_increase", max(0.0, float(np.max(np.diff(res.history), initial=0.0))), 1e-12))
    report.add(Check("final_energy", float(res.history[-1]), 0.0, True))
    return report


def cmd_futaki(cfg):
    if cfg.backend != "cp1":
        raise ConfigError("the Futaki invariant is computed on --backend cp1", "backend")
    report = Report(config={**cfg.as_dict(), "command": "futaki"})
    report.extend(futaki_checks(make_grid(cfg), rng_for(cfg, 14)))
    return report


def cmd_surface(cfg):
    if cfg.backend != "torus-n2":
        raise ConfigError("the surface system needs --backend torus-n2", "backend")
    report = Report(config={**cfg.as_dict(), "command": "surface"})
    report.extend(ma_checks(make_grid(cfg), rng_for(cfg, 15), cfg.tol or 1e-7))
    report.extend(suite_surface(cfg))
    return report


COMMANDS = {
    "dhym": cmd_dhym,
    "geodesic": cmd_geodesic,
    "kenergy": cmd_kenergy,
    "futaki": cmd_futaki,
    "surface": cmd_surface,
    "stability": stability_report,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        if args.command == "verify":
            if args.suite not in SUITES:
                raise ConfigError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}", "--suite")
            report = run_suite(cfg, args.suite)
        else:
            report = COMMANDS[args.command](cfg)
        if args.out:
            report.export(args.out, args.fmt)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (CxKEnergyError, OSError, ArithmeticError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    for c in report.checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status} {c.name} value={c.value:.6g} tol={c.tolerance:.3g}")
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
