"""Command-line front end.

Every subcommand prints a JSON report (sorted keys) to stdout, or writes it to
``--out DIR/<subcommand>.json``; subcommands with tabular data also write CSV
files there.  All outputs carry a stamp with the tool version, the geometry
and the effective configuration.

Exit codes: 0 success, 1 validation failure, 2 numerical failure, 64 usage
error.

Configuration files are flat ``key = value`` text; keys are the long option
names (dashes or underscores), ``#`` starts a comment, and list-valued options
take space-separated values.  Command-line flags override the file.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .io import csv_text, dumps_json, stamp, stamp_comment, write_text

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


# ---------------------------------------------------------------------------
# parser


def _add_common(p, target=True):
    p.add_argument("--config", help="flat key=value file; flags override it")
    p.add_argument("--out", help="directory for JSON/CSV outputs (default: JSON to stdout)")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized test fields (default 0)")
    if target:
        p.add_argument("--d", type=int, default=4, help="domain dimension d >= 4 (default 4)")
        p.add_argument("--gamma", type=float, default=0.25, help="shape parameter in (0, sqrt(2)-1) (default 0.25)")


def _add_sim(p):
    p.add_argument("--R-max", dest="R_max", type=float, default=25.0, help="outer radius (default 25)")
    p.add_argument("--N", type=int, default=2000, help="radial nodes (default 2000)")
    p.add_argument("--dt", type=float, default=0.01, help="time step (default 0.01)")
    p.add_argument("--tau-end", dest="tau_end", type=float, default=8.0, help="final similarity time (default 8)")
    p.add_argument("--scheme", choices=["cn", "be"], default="cn", help="IMEX scheme (default cn)")
    p.add_argument("--drift", choices=["upwind2", "upwind1", "centered"], default="upwind2",
                   help="drift stencil (default upwind2)")
    p.add_argument("--tau-out", dest="tau_out", type=float, default=0.05, help="diagnostic interval (default 0.05)")
    p.add_argument("--eps", type=float, default=1e-3, help="amplitude of the bump eps*exp(-r^2) (default 1e-3)")
    p.add_argument("--width", type=float, default=1.0, help="width of the bump (default 1)")


def build_parser():
    parser = _Parser(prog="shrinkerlab", description=__doc__.split("\n\n")[0],
                     formatter_class=argparse.RawDescriptionHelpFormatter,
                     epilog="exit codes: 0 ok, 1 validation failure, 2 numerical failure, 64 usage error")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")

    p = sub.add_parser("verify-geometry", help="check the warping function and its extension",
                       description="JSON: alpha, beta, compactness, g'(0), g'(1), matching jumps, F bounds.")
    _add_common(p)
    p.add_argument("--blend", type=float, nargs=2, metavar=("U0", "U1"), help="extension window [u0, u1]")

    p = sub.add_parser("verify-shrinker", help="residual of the explicit profile",
                       description="JSON: a, b, max |residual| on a geometric rho grid.")
    _add_common(p)
    p.add_argument("--rho-min", dest="rho_min", type=float, default=1e-3, help="(default 1e-3)")
    p.add_argument("--rho-max", dest="rho_max", type=float, default=50.0, help="(default 50)")
    p.add_argument("--samples", type=int, default=2000, help="(default 2000)")
    p.add_argument("--tol", type=float, default=1e-9, help="residual tolerance (default 1e-9)")

    p = sub.add_parser("nonexistence", help="shoot profiles into a model target",
                       description="JSON certificates; CSV nonexistence.csv with columns "
                                   "rho, phi, theta, theta_prime, lyapunov.")
    _add_common(p)
    p.add_argument("--target", choices=["sinh", "flat", "constructed"], default="sinh", help="(default sinh)")
    p.add_argument("--phi0", type=float, default=1e-45, help="phi(0) (default 1e-45)")
    p.add_argument("--rho-max", dest="rho_max", type=float, default=20.0, help="(default 20)")
    p.add_argument("--steps", type=int, default=2001, help="output nodes (default 2001)")

    p = sub.add_parser("ggmt", help="GGMT integral bound", description="JSON: n, p, c, rho_star, integral, bound, err.")
    _add_common(p, target=False)
    p.add_argument("--n", type=int, default=6, help="ambient dimension (default 6)")
    p.add_argument("--p", type=float, default=2.0, help="exponent p > 1 (default 2)")
    p.add_argument("--gamma", type=float, default=0.25, help="(default 0.25)")

    p = sub.add_parser("spectrum", help="eigenvalues of the linearization",
                       description="JSON summary; CSV spectrum.csv with columns index, eigenvalue "
                                   "(eigenvalues of the linearized operator, descending).")
    _add_common(p)
    p.add_argument("--N", type=int, default=2000, help="interior nodes (default 2000)")
    p.add_argument("--R-max", dest="R_max", type=float, default=25.0, help="(default 25)")
    p.add_argument("--k", type=int, default=6, help="number of eigenvalues (default 6)")
    p.add_argument("--free", action="store_true", help="drop the potential")

    p = sub.add_parser("evolve", help="evolve a perturbation at fixed T",
                       description="JSON summary; CSV evolve.csv with columns tau, c1, h_norm_stable, "
                                   "sup_norm, range_max.")
    _add_common(p)
    _add_sim(p)
    p.add_argument("--T", type=float, default=1.0, help="blowup time in [1/2, 3/2] (default 1)")

    p = sub.add_parser("shoot", help="bisect on the blowup time",
                       description="ShootReport JSON; CSV shoot.csv of the decay run "
                                   "(tau, c1, h_norm_stable, sup_norm, range_max).")
    _add_common(p)
    _add_sim(p)
    p.add_argument("--bracket", type=float, nargs=2, default=[0.9, 1.1], metavar=("LO", "HI"),
                   help="T bracket (default 0.9 1.1)")
    p.add_argument("--tau-probe", dest="tau_probe", type=float, default=6.0, help="(default 6)")
    p.add_argument("--tol-rel", dest="tol_rel", type=float, default=1e-8, help="(default 1e-8)")
    p.add_argument("--max-bisect", dest="max_bisect", type=int, default=40, help="(default 40)")

    p = sub.add_parser("norms", help="norms of test fields",
                       description="JSON: H-norm, sup norm, Sobolev norms and X_s^k norm of a test field.")
    _add_common(p)
    p.add_argument("--field", choices=["gaussian", "gauge", "random"], default="gaussian", help="(default gaussian)")
    p.add_argument("--s", type=float, default=2.0625, help="(default 2.0625)")
    p.add_argument("--k", type=int, default=7, help="(default 7)")
    return parser


# ---------------------------------------------------------------------------
# config files


def read_config(path):
    entries = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        entries[key.replace("-", "_")] = val
    return entries


def _apply_config(subparser, entries):
    actions = {a.dest: a for a in subparser._actions if a.dest not in ("help", "config")}
    defaults = {}
    for key, val in entries.items():
        if key not in actions:
            raise UsageError(f"unknown config key {key!r}")
        act = actions[key]
        if act.nargs == 0:
            defaults[key] = val.lower() in ("1", "true", "yes", "on")
            continue
        conv = act.type or str
        try:
            parts = [conv(x) for x in val.split()] if act.nargs else conv(val)
        except ValueError as exc:
            raise UsageError(f"bad value for {key!r}: {val!r}") from exc
        if act.choices is not None and parts not in act.choices:
            raise UsageError(f"bad value for {key!r}: {val!r}")
        defaults[key] = parts
    subparser.set_defaults(**defaults)


def parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        raise SystemExit(EXIT_USAGE)
    if getattr(args, "config", None):
        sub = parser._subparsers._group_actions[0].choices[args.command]
        _apply_config(sub, read_config(args.config))
        args = parser.parse_args(argv)
    return args


def effective_config(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "config")}


# ---------------------------------------------------------------------------
# workflows


def _emit(args, payload, csvs=()):
    text = dumps_json(payload)
    if args.out:
        outdir = Path(args.out)
        write_text(outdir / f"{args.command}.json", text)
        for name, body in csvs:
            write_text(outdir / name, body)
    else:
        sys.stdout.write(text)


def _geometry(args):
    from .geometry import make_geometry
    from .shrinker import make_shrinker

    geom = make_geometry(args.d, args.gamma, getattr(args, "blend", None))
    return geom, make_shrinker(geom)


def cmd_verify_geometry(args):
    from .geometry import check_compactness_condition, compactness_lhs

    geom, _ = _geometry(args)
    b = geom.blend
    jumps = {}
    for name, u in (("u0", b.u0), ("u1", b.u1)):
        jumps[name] = [abs(geom.g(u - 1e-13, k) - geom.g(u + 1e-13, k)) / max(1.0, abs(geom.g(u, k)))
                       for k in range(3)]
    core = np.linspace(geom.u_core / 10_000, geom.u_core, 10_000)
    period = np.linspace(-geom.a_star, geom.a_star, 20_001)
    fmax = [float(np.max(np.abs(geom.F(period, k)))) for k in range(4)]
    checks = {
        "compactness": check_compactness_condition(args.d, args.gamma),
        "g_positive_on_core": bool(np.min(geom.g(core)) > 0),
        "g_prime_at_0": abs(geom.g(0.0, 1) - 1.0) <= 1e-14,
        "matching": all(j <= 1e-10 for v in jumps.values() for j in v[:2]),
        "closing_slope": abs(geom.g(geom.a_star, 1) + 1.0) <= 1e-12,
    }
    payload = {
        "stamp": stamp(geom, effective_config(args)),
        "compactness_lhs": compactness_lhs(args.d, args.gamma),
        "g_prime_at_1": geom.g(1.0, 1),
        "g_at_a_star": geom.g(geom.a_star),
        "matching_jumps": jumps,
        "F_derivative_max": fmax,
        "checks": checks,
        "passed": all(checks.values()),
    }
    _emit(args, payload)
    return EXIT_OK if payload["passed"] else EXIT_VALIDATION


def cmd_verify_shrinker(args):
    from .shrinker import ode_residual

    geom, shr = _geometry(args)
    rho = np.geomspace(args.rho_min, args.rho_max, args.samples)
    res = np.abs(ode_residual(geom, shr, rho))
    worst = int(np.argmax(res))
    payload = {
        "stamp": stamp(geom, effective_config(args)),
        "profile": shr.to_dict(),
        "phi_at_0": shr.phi(0.0),
        "max_abs_residual": float(res[worst]),
        "rho_at_max": float(rho[worst]),
        "passed": bool(res[worst] <= args.tol),
    }
    _emit(args, payload)
    return EXIT_OK if payload["passed"] else EXIT_VALIDATION


def cmd_nonexistence(args):
    from .geometry import FlatTarget, SinhTarget
    from .shrinker import nonexistence_witness

    geom, _ = _geometry(args)
    target = {"sinh": SinhTarget(), "flat": FlatTarget()}.get(args.target, geom)
    rep = nonexistence_witness(target, args.d, args.phi0, args.rho_max, steps=args.steps)
    st = stamp(geom if args.target == "constructed" else None, effective_config(args))
    payload = {"stamp": st, "target": args.target, "report": rep.to_dict()}
    body = stamp_comment(st) + "\n" + rep.trajectory.to_csv()
    _emit(args, payload, [("nonexistence.csv", body)])
    return EXIT_OK if rep.passed else EXIT_VALIDATION


def cmd_ggmt(args):
    from .geometry import make_geometry
    from .spectral import ggmt_bound

    res = ggmt_bound(args.n, args.p, gamma=args.gamma)
    geom = make_geometry(args.n - 2, args.gamma)
    payload = {"stamp": stamp(geom, effective_config(args)), **res.to_dict()}
    if not res.inside_theorem:
        payload["banner"] = "outside-theorem: (n, gamma) outside n in 6..9, gamma = 1/4"
    payload["passed"] = res.bound < 1.0
    _emit(args, payload)
    return EXIT_OK if payload["passed"] else EXIT_VALIDATION


def cmd_spectrum(args):
    from .spectral import HalfLineGrid, spectral_gap, spectrum_of_L

    geom, shr = _geometry(args)
    eigs = spectrum_of_L(geom, shr, HalfLineGrid(args.N, args.R_max), args.k, with_potential=not args.free)
    st = stamp(geom, effective_config(args))
    payload = {"stamp": st, "eigenvalues": eigs}
    if args.free:
        payload["passed"] = all(v < 0 for v in eigs)
    else:
        payload["gauge_eigenvalue"] = eigs[0]
        payload["gap"] = spectral_gap(eigs)
        payload["passed"] = abs(eigs[0] - 1) <= 5e-3 and all(v < 0 for v in eigs[1:])
    body = csv_text(["index", "eigenvalue"], list(enumerate(eigs)), stamp_comment(st))
    _emit(args, payload, [("spectrum.csv", body)])
    return EXIT_OK if payload["passed"] else EXIT_VALIDATION


def _sim_config(args, geom, **extra):
    from .flow import SimConfig

    return SimConfig(n=geom.n, R_max=args.R_max, N=args.N, dt=args.dt, tau_end=args.tau_end, scheme=args.scheme,
                     drift=args.drift, tau_out=args.tau_out, **extra)


def cmd_evolve(args):
    from .flow import evolve, gaussian_bump

    geom, shr = _geometry(args)
    cfg = _sim_config(args, geom)
    traj = evolve(cfg, geom, shr, gaussian_bump(args.eps, args.width), args.T)
    st = stamp(geom, effective_config(args))
    last = traj.records[-1]
    payload = {"stamp": st, "aborted": traj.aborted, "abort_detail": traj.abort_detail, "final": {
        "tau": last.tau, "c1": last.c1, "h_norm_stable": last.h_norm_stable, "sup_norm": last.sup_norm,
        "range_max": last.range_max}}
    _emit(args, payload, [("evolve.csv", stamp_comment(st) + "\n" + traj.to_csv())])
    return EXIT_OK


def cmd_shoot(args):
    from .flow import gaussian_bump, shoot_blowup_time

    geom, shr = _geometry(args)
    cfg = _sim_config(args, geom, T_bracket=tuple(args.bracket), tau_probe=args.tau_probe, tol_rel=args.tol_rel,
                      max_bisect=args.max_bisect)
    rep = shoot_blowup_time(cfg, geom, shr, gaussian_bump(args.eps, args.width))
    st = stamp(geom, effective_config(args))
    payload = {"stamp": st, "report": rep.to_dict()}
    csvs = [("shoot.csv", stamp_comment(st) + "\n" + rep.decay.to_csv())] if rep.decay is not None else []
    _emit(args, payload, csvs)
    return EXIT_OK if rep.converged else EXIT_NUMERICAL


def cmd_norms(args):
    from .norms import (RadialField, RadialGrid, gaussian_form, h_norm, sobolev_norm, sup_norm, xsk_norm)
    from .spectral import gauge_mode

    geom, shr = _geometry(args)
    n = geom.n
    grid = RadialGrid.gauss_legendre(n, 30.0, 300, 16)
    if args.field == "gaussian":
        f = RadialField.from_form(grid, gaussian_form(0.5))
    elif args.field == "gauge":
        f = gauge_mode(shr, grid)
    else:
        rng = np.random.default_rng(args.seed)
        c = rng.normal(size=4)
        f = RadialField.from_function(grid, lambda r: sum(ck * r ** (2 * k) for k, ck in enumerate(c))
                                      * np.exp(-r * r / 2))
    payload = {
        "stamp": stamp(geom, effective_config(args)),
        "h_norm": h_norm(f),
        "sup_norm": sup_norm(f),
        "sobolev_s": sobolev_norm(f, args.s),
        "sobolev_k": sobolev_norm(f, args.k),
        "xsk": xsk_norm(f, args.s, args.k),
    }
    _emit(args, payload)
    return EXIT_OK


COMMANDS = {
    "verify-geometry": cmd_verify_geometry,
    "verify-shrinker": cmd_verify_shrinker,
    "nonexistence": cmd_nonexistence,
    "ggmt": cmd_ggmt,
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "shoot": cmd_shoot,
    "norms": cmd_norms,
}


def run(argv=None) -> int:
    """Run one subcommand and return its exit code."""
    from .flow import RangeGuardViolation, ShootingError
    from .geometry import GeometryError
    from .norms import SobolevWindowError
    from .quadrature import QuadratureError
    from .shrinker import HypothesisViolation
    from .spectral import SpectralError

    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse(argv)
    except UsageError as exc:
        sys.stderr.write(f"shrinkerlab: error: {exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (HypothesisViolation, GeometryError, SobolevWindowError) as exc:
        sys.stderr.write(f"shrinkerlab: validation failure: {exc}\n")
        return EXIT_VALIDATION
    except (ShootingError, QuadratureError, SpectralError, RangeGuardViolation, FloatingPointError) as exc:
        sys.stderr.write(f"shrinkerlab: numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    except ValueError as exc:
        sys.stderr.write(f"shrinkerlab: validation failure: {exc}\n")
        return EXIT_VALIDATION


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
