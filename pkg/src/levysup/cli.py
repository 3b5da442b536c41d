"""Command line interface for supremum-law computations.

Subcommands
-----------
density    entrance-law density q or q* on a spatial grid
marginal   running-maximum density at a fixed time on a spatial grid
arcsine    density of the time of the maximum on a time grid
identity   fluctuation-identity self checks (exit 1 on failure)
validate   Monte Carlo vs analytic cross checks (exit 1 on failure)
simulate   sample (g, max, terminal) triples to CSV

All artifact output is deterministic: rerunning a command with the same
arguments produces byte-identical files.  Provenance rides along as
``#`` comment lines (CSV) or a ``provenance`` block (JSON); no
timestamps.  The ``--seed`` flag falls back to the ``LEVYSUP_SEED``
environment variable, then to 0.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .entrance import EntranceLaw, Side, entrance_density
from .fluctuation import (
    closed_form_kappa,
    fristedt_kappa,
    semigroup_reconstruct,
    wiener_hopf_residual,
)
from .jointlaw import (
    gt_density,
    joint_atoms,
    joint_mass_quadrature,
    sup_marginal_cdf,
    sup_marginal_density,
)
from .model import (
    BROWNIAN,
    CAUCHY,
    CPP,
    SN_STABLE,
    STABLE,
    UnsupportedModelError,
    classify_model,
)
from .montecarlo import ks_statistic, no_passage_estimate, simulate_triples

_FAMILIES = {
    "brownian": BROWNIAN,
    "cauchy": CAUCHY,
    "stable": STABLE,
    "sn-stable": SN_STABLE,
    "cpp": CPP,
}


def _parse_grid(text):
    """Parse 'start:stop:count' (prefix 'log:' for geometric spacing)."""
    spec = text
    logspace = False
    if spec.startswith("log:"):
        logspace = True
        spec = spec[4:]
    parts = spec.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"grid must be start:stop:count, got {text!r}")
    try:
        start, stop = float(parts[0]), float(parts[1])
        count = int(parts[2])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if count < 2 or not stop > start:
        raise argparse.ArgumentTypeError(
            f"grid needs stop > start and count >= 2, got {text!r}")
    if logspace:
        if start <= 0.0:
            raise argparse.ArgumentTypeError("log grid needs start > 0")
        return np.geomspace(start, stop, count)
    return np.linspace(start, stop, count)


def _add_model_arguments(parser):
    parser.add_argument("--family", required=True, choices=sorted(_FAMILIES),
                        help="process family")
    parser.add_argument("--drift", type=float, default=0.0)
    parser.add_argument("--alpha", type=float, default=None,
                        help="stability index for stable families")
    parser.add_argument("--rho", type=float, default=None,
                        help="positivity parameter for the stable family")
    parser.add_argument("--rate", type=float, default=None,
                        help="jump rate for the compound Poisson family")
    parser.add_argument("--jump-scale", type=float, default=None,
                        help="mean jump size for the compound Poisson family")
    parser.add_argument("--jump-sign", choices=["positive", "negative"],
                        default=None,
                        help="jump direction for the compound Poisson family")


def _build_model(args):
    family = _FAMILIES[args.family]
    kwargs = {"drift": args.drift}
    if args.alpha is not None:
        kwargs["alpha"] = args.alpha
    if args.rho is not None:
        kwargs["rho"] = args.rho
    if args.rate is not None:
        kwargs["rate"] = args.rate
    if getattr(args, "jump_scale", None) is not None:
        kwargs["jump_scale"] = args.jump_scale
    if getattr(args, "jump_sign", None) is not None:
        kwargs["jump_sign"] = 1 if args.jump_sign == "positive" else -1
    return classify_model(family, **kwargs)


def _resolve_seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("LEVYSUP_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise SystemExit(2)
    return 0


def _model_provenance(model):
    fields = ["family=" + model.family]
    for name in ("drift", "alpha", "rho", "rate", "jump_scale"):
        value = getattr(model, name)
        if value is not None and not (name == "drift" and value == 0.0):
            fields.append(f"{name}={value:.17g}")
    if model.jump_sign is not None:
        fields.append(f"jump_sign={model.jump_sign:+d}")
    return " ".join(fields)


def _open_output(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8"), True


def _write_csv(path, argv, model, columns, rows):
    handle, owned = _open_output(path)
    try:
        handle.write(f"# levysup {__version__}\n")
        handle.write("# command: " + " ".join(argv) + "\n")
        handle.write("# model: " + _model_provenance(model) + "\n")
        handle.write(",".join(columns) + "\n")
        for row in rows:
            handle.write(",".join(f"{v:.17g}" for v in row) + "\n")
    finally:
        if owned:
            handle.close()


def _as_plain(value):
    """Recursively convert numpy scalars so json can serialize them."""
    if isinstance(value, dict):
        return {k: _as_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_as_plain(v) for v in value]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def _write_json(path, payload):
    handle, owned = _open_output(path)
    try:
        handle.write(json.dumps(_as_plain(payload), indent=2,
                                sort_keys=True) + "\n")
    finally:
        if owned:
            handle.close()


def _provenance_block(argv, model):
    return {
        "version": __version__,
        "command": " ".join(argv),
        "model": _model_provenance(model),
    }


# ---------------------------------------------------------------------------
# subcommands


def _cmd_density(args, argv):
    model = _build_model(args)
    side = Side.SUPREMUM if args.side == "drawdown" else Side.INFIMUM
    law = EntranceLaw(model=model, side=side)
    grid = args.grid
    values = entrance_density(law, args.time, grid)
    _write_csv(args.output, argv, model, ("x", "density"),
               zip(grid.tolist(), np.asarray(values).tolist()))
    return 0


def _cmd_marginal(args, argv):
    model = _build_model(args)
    grid = args.grid
    values = sup_marginal_density(model, args.time, grid)
    _write_csv(args.output, argv, model, ("x", "density"),
               zip(grid.tolist(), np.asarray(values).tolist()))
    return 0


def _cmd_arcsine(args, argv):
    model = _build_model(args)
    grid = args.grid
    if np.any(grid <= 0.0) or np.any(grid >= args.time):
        print("arcsine grid must lie strictly inside (0, t)", file=sys.stderr)
        return 2
    values = [gt_density(model, args.time, s) for s in grid]
    _write_csv(args.output, argv, model, ("s", "density"),
               zip(grid.tolist(), values))
    return 0


def _cmd_identity(args, argv):
    model = _build_model(args)
    checks = {}
    failed = False

    if args.check in ("wiener-hopf", "all"):
        try:
            worst = 0.0
            for a in np.geomspace(0.05, 40.0, 25):
                worst = max(worst, abs(wiener_hopf_residual(model, a)))
            ok = worst <= args.tolerance
            checks["wiener_hopf"] = {"max_abs_residual": worst, "passed": ok}
            failed = failed or not ok
        except UnsupportedModelError as exc:
            checks["wiener_hopf"] = {"skipped": str(exc)}

    if args.check in ("kappa", "all"):
        try:
            worst = 0.0
            for a in np.geomspace(0.1, 20.0, 9):
                for b in np.geomspace(0.1, 20.0, 9):
                    ref = closed_form_kappa(model, a, b)
                    got = fristedt_kappa(model, a, b)
                    worst = max(worst, abs(got - ref) / abs(ref))
            ok = worst <= args.tolerance
            checks["kappa"] = {"max_rel_gap": worst, "passed": ok}
            failed = failed or not ok
        except UnsupportedModelError as exc:
            checks["kappa"] = {"skipped": str(exc)}

    if args.check in ("semigroup", "all") and model.family in (BROWNIAN,
                                                               CAUCHY):
        t = args.time
        if model.family == BROWNIAN:
            zs = np.linspace(model.drift * t - 8.0 * math.sqrt(t),
                             model.drift * t + 8.0 * math.sqrt(t), 81)
            exact = np.exp(-(zs - model.drift * t) ** 2 / (2.0 * t))
            exact /= math.sqrt(2.0 * math.pi * t)
        else:
            zs = np.linspace(-60.0 * t, 60.0 * t, 81)
            exact = t / (math.pi * (t * t + zs * zs))
        recon = semigroup_reconstruct(model, t, zs)
        l1 = float(np.trapezoid(np.abs(recon - exact), zs))
        ok = l1 <= max(args.tolerance, 1e-3)
        checks["semigroup"] = {"l1_gap": l1, "passed": ok}
        failed = failed or not ok

    payload = {
        "provenance": _provenance_block(argv, model),
        "checks": checks,
        "passed": not failed,
    }
    _write_json(args.output, payload)
    return 1 if failed else 0


def _cmd_validate(args, argv):
    model = _build_model(args)
    seed = _resolve_seed(args)
    checks = {}
    failed = False

    if model.family == CPP:
        atoms = joint_atoms(model, args.time)
        estimate, stderr = no_passage_estimate(model, args.time, args.paths,
                                               seed)
        gap = abs(estimate - atoms[0].mass)
        limit = 4.0 * stderr + 1e-12
        ok = gap <= limit
        checks["atom_mass"] = {
            "analytic": atoms[0].mass,
            "estimate": estimate,
            "gap": gap,
            "limit": limit,
            "passed": ok,
        }
        failed = not ok
    else:
        mass = joint_mass_quadrature(model, args.time)
        mass_tol = 1e-4 if model.family == BROWNIAN else 1e-3
        ok = abs(mass - 1.0) <= mass_tol
        checks["joint_mass"] = {"mass": mass, "tolerance": mass_tol,
                                "passed": ok}
        failed = failed or not ok

        sample = simulate_triples(model, args.time, args.paths, args.steps,
                                  seed, bridge=(model.family == BROWNIAN))
        xs, cdf = sup_marginal_cdf(model, args.time)
        sup = np.sort(sample.sup)
        if model.family in (CAUCHY, STABLE) and model.spectral != "negative":
            # heavy upper tail: restrict the comparison window
            q99 = float(np.interp(0.99, cdf, xs))
            sup = sup[sup <= q99]
        stat = ks_statistic(
            sup, lambda v: np.interp(v, xs, cdf, left=0.0, right=1.0))
        ok = stat <= args.ks_tolerance
        checks["sup_ks"] = {"statistic": stat,
                            "tolerance": args.ks_tolerance, "passed": ok}
        failed = failed or not ok

    payload = {
        "provenance": _provenance_block(argv, model),
        "seed": seed,
        "paths": args.paths,
        "steps": args.steps,
        "checks": checks,
        "passed": not failed,
    }
    _write_json(args.output, payload)
    return 1 if failed else 0


def _cmd_simulate(args, argv):
    model = _build_model(args)
    seed = _resolve_seed(args)
    sample = simulate_triples(model, args.time, args.paths, args.steps,
                              seed, bridge=args.bridge)
    _write_csv(args.output, argv, model, ("g", "max", "terminal"),
               zip(sample.g.tolist(), sample.sup.tolist(),
                   sample.terminal.tolist()))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="levysup",
        description="laws of the supremum of a Levy process")
    parser.add_argument("--version", action="version",
                        version=f"levysup {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("density", help="entrance-law density on a grid")
    _add_model_arguments(p)
    p.add_argument("--side", choices=["max", "drawdown"], default="max",
                   help="max: law feeding the running maximum; "
                        "drawdown: law feeding max minus position")
    p.add_argument("--time", type=float, required=True)
    p.add_argument("--grid", type=_parse_grid, required=True,
                   help="start:stop:count, prefix log: for geometric")
    p.add_argument("--output", default="-")
    p.set_defaults(func=_cmd_density)

    p = sub.add_parser("marginal", help="running-maximum density on a grid")
    _add_model_arguments(p)
    p.add_argument("--time", type=float, required=True)
    p.add_argument("--grid", type=_parse_grid, required=True)
    p.add_argument("--output", default="-")
    p.set_defaults(func=_cmd_marginal)

    p = sub.add_parser("arcsine", help="density of the time of the maximum")
    _add_model_arguments(p)
    p.add_argument("--time", type=float, required=True)
    p.add_argument("--grid", type=_parse_grid, required=True)
    p.add_argument("--output", default="-")
    p.set_defaults(func=_cmd_arcsine)

    p = sub.add_parser("identity", help="fluctuation-identity self checks")
    _add_model_arguments(p)
    p.add_argument("--check", default="all",
                   choices=["wiener-hopf", "kappa", "semigroup", "all"])
    p.add_argument("--time", type=float, default=1.0)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--output", default="-")
    p.set_defaults(func=_cmd_identity)

    p = sub.add_parser("validate", help="Monte Carlo vs analytic checks")
    _add_model_arguments(p)
    p.add_argument("--time", type=float, default=1.0)
    p.add_argument("--paths", type=int, default=20000)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--ks-tolerance", type=float, default=0.02)
    p.add_argument("--output", default="-")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("simulate", help="sample (g, max, terminal) triples")
    _add_model_arguments(p)
    p.add_argument("--time", type=float, default=1.0)
    p.add_argument("--paths", type=int, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--bridge", action="store_true",
                   help="Brownian only: exact cell maxima instead of grid")
    p.add_argument("--output", default="-")
    p.set_defaults(func=_cmd_simulate)

    return parser


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, ["levysup"] + list(argv))
    except UnsupportedModelError as exc:
        print(f"unsupported model: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
