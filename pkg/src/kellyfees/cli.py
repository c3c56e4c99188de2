"""Command-line driver. Each subcommand writes one CSV plus a JSON manifest
sidecar (<out>.manifest.json) recording the effective parameters; `replay`
re-runs a manifest and reproduces the CSV byte-for-byte.

Parameter precedence: command-line flags override the optional JSON config
file (--config), which overrides built-in defaults. Exit codes: 0 success,
2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np
from scipy.optimize import brentq

from . import __version__
from .assets import (
    BinaryAsset,
    GarchAsset,
    LognormalAsset,
    StudentAsset,
    TwoScaleAsset,
)
from .growth import growth_binary, growth_lognormal, growth_two_scale
from .mechanics import FeeSchedule
from .optimize import (
    approx_f1,
    lognormal_closed_forms,
    maximize_fraction,
    maximize_period,
    threshold_fees,
)
from .sim import SimConfig, period_scan, sweep_partial

__all__ = ["main", "UsageError"]


class UsageError(ValueError):
    """Bad or missing parameters; maps to exit code 2."""


class NumericalError(RuntimeError):
    """Root finding or quadrature failed to converge; maps to exit code 3."""


_EPS_GRID_DEFAULT = "0.02,0.03,0.04,0.05,0.06,0.08,0.11,0.15,0.21,0.28,0.38,0.55,0.75,1.0"

_MC_DEFAULTS = {"steps": 1_000_000, "realizations": 1_000, "seed": 1, "threads": None}

_DEFAULTS = {
    "optimal-fraction": {
        "model": None,
        "r1": None,
        "p1": None,
        "m": None,
        "d": None,
        "alpha": None,
        "alpha_min": None,
        "alpha_max": None,
        "alpha_points": 7,
    },
    "thresholds": {
        "r1": None,
        "p1_min": 0.005,
        "p1_max": 0.035,
        "p1_points": 20,
    },
    "optimal-period": {
        "model": None,
        "r1": None,
        "p1": None,
        "r2": None,
        "p2": None,
        "t2": None,
        "m": None,
        "d": None,
        "sigma": 0.01,
        "dof": 2,
        "a0": 1e-5,
        "a1": 0.2,
        "b": 0.7,
        "alpha": None,
        "alpha_min": None,
        "alpha_max": None,
        "alpha_points": 7,
        "t_max": None,
        "mc": False,
        **_MC_DEFAULTS,
    },
    "two-scale": {
        "r1": None,
        "p1": None,
        "r2": None,
        "p2": None,
        "t2": None,
        "alpha": 0.0,
        "t_min": 1,
        "t_max": None,
    },
    "partial": {
        "model": "binary",
        "r1": None,
        "p1": None,
        "r2": None,
        "p2": None,
        "t2": None,
        "m": None,
        "d": None,
        "alpha": None,
        "eps_grid": _EPS_GRID_DEFAULT,
        "t_max": 100,
        **_MC_DEFAULTS,
    },
}


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def _write_outputs(out_path: str, header: str, rows, manifest: dict):
    body = "\n".join(",".join(_fmt(v) for v in row) for row in rows)
    with open(out_path, "w", newline="") as fh:
        fh.write(header + "\n" + (body + "\n" if body else ""))
    with open(out_path + ".manifest.json", "w", newline="") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest(command: str, params: dict, out_path: str, extras: dict | None) -> dict:
    doc = {
        "command": command,
        "params": params,
        "master_seed": params.get("seed"),
        "version": __version__,
        "output": out_path,
    }
    if extras:
        doc.update(extras)
    return doc


def _effective(command: str, given: dict, config_path: str | None) -> dict:
    eff = dict(_DEFAULTS[command])
    if config_path:
        try:
            with open(config_path) as fh:
                from_file = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"--config {config_path}: {e}")
        unknown = set(from_file) - set(eff)
        if unknown:
            raise UsageError(f"--config has unknown keys for {command}: {sorted(unknown)}")
        eff.update(from_file)
    for key, value in given.items():
        if key in eff and value is not None:
            eff[key] = value
    return eff


def _require(p: dict, key: str, flag: str):
    if p.get(key) is None:
        raise UsageError(f"{flag} is required")
    return p[key]


def _build_model(p: dict, allowed):
    name = p.get("model")
    if name is None:
        raise UsageError("--model is required")
    if name not in allowed:
        raise UsageError(f"--model {name} is not supported by this command")
    try:
        if name == "binary":
            return BinaryAsset(_require(p, "r1", "--r1"), _require(p, "p1", "--p1"))
        if name == "two-scale":
            base = BinaryAsset(_require(p, "r1", "--r1"), _require(p, "p1", "--p1"))
            return TwoScaleAsset(
                base,
                _require(p, "r2", "--r2"),
                _require(p, "p2", "--p2"),
                int(_require(p, "t2", "--t2")),
            )
        if name == "lognormal":
            return LognormalAsset(_require(p, "m", "--m"), _require(p, "d", "--d"))
        if name == "student":
            return StudentAsset(p["sigma"], int(p.get("dof") or 2))
        if name == "garch":
            return GarchAsset(p["a0"], p["a1"], p["b"])
    except ValueError as e:
        if isinstance(e, UsageError):
            raise
        raise UsageError(f"--model {name}: {e}")
    raise UsageError(f"unknown model {name!r}")


def _alpha_grid(p: dict) -> np.ndarray:
    if p.get("alpha_min") is not None or p.get("alpha_max") is not None:
        lo, hi = p.get("alpha_min"), p.get("alpha_max")
        if lo is None or hi is None:
            raise UsageError("--alpha-min and --alpha-max must be given together")
        if not 0.0 < lo <= hi < 1.0:
            raise UsageError(f"--alpha-min/--alpha-max must satisfy 0 < min <= max < 1, got {lo}, {hi}")
        n = int(p["alpha_points"])
        if n < 1:
            raise UsageError(f"--alpha-points must be >= 1, got {n}")
        return np.logspace(math.log10(lo), math.log10(hi), n)
    if p.get("alpha") is not None:
        if not 0.0 <= p["alpha"] < 1.0:
            raise UsageError(f"--alpha must lie in [0, 1), got {p['alpha']}")
        return np.array([float(p["alpha"])])
    raise UsageError("--alpha or --alpha-min/--alpha-max is required")


def _exact_growth_fn(model, T: int, fee: FeeSchedule):
    if isinstance(model, BinaryAsset):
        return lambda f: growth_binary(model, f, T, fee)
    if isinstance(model, TwoScaleAsset):
        return lambda f: growth_two_scale(model, f, T, fee)
    if isinstance(model, LognormalAsset):
        if T != 1:
            raise AssertionError("period search for lognormal goes through maximize_period")
        return lambda f: growth_lognormal(model, f, fee)
    raise UsageError(f"{type(model).__name__} has no exact growth; use --mc")


def run_optimal_fraction(p: dict):
    model = _build_model(p, ("binary", "lognormal"))
    alphas = _alpha_grid(p)
    rows = []
    for a in alphas:
        fee = FeeSchedule(float(a))
        f_num, g_num = maximize_fraction(_exact_growth_fn(model, 1, fee))
        try:
            if isinstance(model, BinaryAsset):
                f_closed = approx_f1(model.P1, model.r1, float(a))
            else:
                f_closed = lognormal_closed_forms(model.m, model.D, float(a))[0]
        except ValueError:
            f_closed = math.nan
        rows.append((float(a), f_num, f_closed, g_num))
    header = "sweep_var,f_numeric,f_closed_form,G_numeric"
    summary = (
        f"optimal fraction over {len(rows)} fee level(s): "
        f"f = {rows[0][1]:.6g} at alpha = {rows[0][0]:.3g}"
        + (f" ... {rows[-1][1]:.6g} at alpha = {rows[-1][0]:.3g}" if len(rows) > 1 else "")
    )
    return header, rows, None, summary


def _crossover_fee(asset: BinaryAsset, Ta: int, Tb: int, hint: float) -> float:
    """Fee level where the best T = Ta and T = Tb growth rates cross."""

    def gap(a):
        fee = FeeSchedule(a)
        ga = maximize_fraction(lambda f: growth_binary(asset, f, Ta, fee))[1]
        gb = maximize_fraction(lambda f: growth_binary(asset, f, Tb, fee))[1]
        return ga - gb

    hi = min(0.5, 4.0 * hint)
    for _ in range(20):
        if gap(hi) < 0.0:
            break
        hi *= 2.0
        if hi >= 1.0:
            raise NumericalError(f"no crossover bracket for T={Ta} vs T={Tb}")
    else:
        raise NumericalError(f"no crossover bracket for T={Ta} vs T={Tb}")
    return float(brentq(gap, 0.0, hi, xtol=1e-14, rtol=1e-12))


def run_thresholds(p: dict):
    r1 = _require(p, "r1", "--r1")
    lo, hi, n = p["p1_min"], p["p1_max"], int(p["p1_points"])
    if n < 1:
        raise UsageError(f"--p1-points must be >= 1, got {n}")
    if not 0.0 < lo <= hi < r1 / 2.0:
        raise UsageError(
            f"--p1-min/--p1-max must satisfy 0 < min <= max < r1/2, got {lo}, {hi}"
        )
    rows = []
    for P1 in np.linspace(lo, hi, n):
        asset = BinaryAsset(r1, float(P1))
        ax, _, az = threshold_fees(float(P1), r1)
        ax_num = _crossover_fee(asset, 1, 2, ax)
        az_num = _crossover_fee(asset, 2, 4, az)
        rows.append((float(P1), ax, ax_num, az, az_num))
    header = "P1,alpha_x_formula,alpha_x_numeric,alpha_z_formula,alpha_z_numeric"
    summary = f"threshold fees for r1 = {r1:.6g} over {n} P1 value(s)"
    return header, rows, None, summary


def _mc_f_grid(model, fee: FeeSchedule):
    """Fractions scanned in Monte-Carlo period sweeps.

    Symmetric zero-drift models (student, garch) have exact optimum 1/2 at
    every period, so a single point suffices; models with exact growth get a
    short grid around the T = 1 optimum.
    """
    if isinstance(model, (StudentAsset, GarchAsset)):
        return [0.5]
    f0 = maximize_fraction(_exact_growth_fn(model, 1, fee))[0]
    if f0 == 0.0:
        return [0.0]
    grid = sorted({min(1.0, f0 * scale) for scale in (0.8, 0.9, 1.0, 1.1, 1.2)})
    return grid


def run_optimal_period(p: dict):
    model = _build_model(p, ("binary", "two-scale", "lognormal", "student", "garch"))
    alphas = _alpha_grid(p)
    rows = []
    if p["mc"]:
        steps = int(p["steps"])
        t_top = int(p["t_max"] or 512)
        if t_top > steps // 2:
            raise UsageError(f"--t-max {t_top} needs at least 2x that many steps")
        T_grid = sorted({int(round(t)) for t in np.logspace(0, math.log10(t_top), 22)})
        cfg = SimConfig(
            model=model,
            fee=FeeSchedule(float(alphas[0])),
            master_seed=int(p["seed"]),
            steps=steps,
            realizations=int(p["realizations"]),
            threads=p["threads"],
        )
        f_grid = _mc_f_grid(model, FeeSchedule(float(np.median(alphas))))
        for sweep in period_scan(cfg, T_grid, f_grid, [float(a) for a in alphas]):
            best = sweep.best
            rows.append((sweep.alpha, best.T, best.f_star, best.G_star))
    else:
        if isinstance(model, (StudentAsset, GarchAsset)):
            raise UsageError(f"--model {p['model']} has no exact growth; pass --mc")
        t_max = int(p["t_max"] or 1000)
        for a in alphas:
            opt = maximize_period(model, FeeSchedule(float(a)), t_max)
            rows.append((float(a), opt.T_star, opt.f_star, opt.G_star))
    extras = {"slope": None}
    if len(rows) > 1 and all(r[0] > 0 and r[1] > 0 for r in rows):
        la = np.log([r[0] for r in rows])
        lt = np.log([r[1] for r in rows])
        extras["slope"] = float(np.polyfit(la, lt, 1)[0])
    header = "alpha,T_star,f_star,G_star"
    slope_txt = "n/a" if extras["slope"] is None else f"{extras['slope']:.4f}"
    summary = f"optimal period over {len(rows)} fee level(s); log-log slope = {slope_txt}"
    return header, rows, extras, summary


def run_two_scale(p: dict):
    base = BinaryAsset(_require(p, "r1", "--r1"), _require(p, "p1", "--p1"))
    asset = TwoScaleAsset(
        base,
        _require(p, "r2", "--r2"),
        _require(p, "p2", "--p2"),
        int(_require(p, "t2", "--t2")),
    )
    alpha = p["alpha"] or 0.0
    if not 0.0 <= alpha < 1.0:
        raise UsageError(f"--alpha must lie in [0, 1), got {alpha}")
    fee = FeeSchedule(float(alpha))
    t_min = int(p["t_min"])
    t_max = int(p["t_max"] or 4 * asset.T2)
    if not 1 <= t_min <= t_max:
        raise UsageError(f"need 1 <= --t-min <= --t-max, got {t_min}, {t_max}")
    rows = []
    for T in range(t_min, t_max + 1):
        f_star, g_star = maximize_fraction(
            lambda f: growth_two_scale(asset, f, T, fee)
        )
        rows.append((T, f_star, g_star, 1 if T % asset.T2 == 0 else 0))
    header = "T,f_star,G_star,t2_aligned"
    summary = f"two-scale sweep T = {t_min}..{t_max} (long scale every {asset.T2})"
    return header, rows, None, summary


def run_partial(p: dict):
    model = _build_model(p, ("binary", "two-scale", "lognormal"))
    if p.get("alpha") is None:
        raise UsageError("--alpha is required")
    if not 0.0 <= p["alpha"] < 1.0:
        raise UsageError(f"--alpha must lie in [0, 1), got {p['alpha']}")
    fee = FeeSchedule(float(p["alpha"]))
    try:
        eps_grid = [float(tok) for tok in str(p["eps_grid"]).split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"--eps-grid must be comma-separated numbers, got {p['eps_grid']!r}")
    if not eps_grid or not all(0.0 < e <= 1.0 for e in eps_grid):
        raise UsageError(f"--eps-grid values must lie in (0, 1], got {eps_grid}")
    f1_star, g1_star = maximize_fraction(_exact_growth_fn(model, 1, fee))
    if f1_star == 0.0:
        f_grid = [0.0]
    else:
        f_grid = sorted({min(1.0, f1_star * s) for s in (0.75, 0.875, 1.0, 1.125, 1.25)})
    cfg = SimConfig(
        model=model,
        fee=fee,
        master_seed=int(p["seed"]),
        steps=int(p["steps"]),
        realizations=int(p["realizations"]),
        threads=p["threads"],
    )
    points = sweep_partial(cfg, eps_grid, f_grid)
    rows = [(pt.eps, pt.f_star, pt.G_star, 1, "") for pt in points]
    opt = maximize_period(model, fee, int(p["t_max"]))
    rows.append((1.0, f1_star, g1_star, 1, "reference"))
    rows.append((1.0, opt.f_star, opt.G_star, opt.T_star, "reference"))
    header = "eps,f_star,G_star,T,tag"
    best = max(points, key=lambda pt: pt.G_star)
    summary = (
        f"partial rebalancing at alpha = {fee.alpha:.3g}: "
        f"best eps = {best.eps:.3g} (G = {best.G_star:.6g}); "
        f"intermittent reference T = {opt.T_star}"
    )
    return header, rows, None, summary


_RUNNERS = {
    "optimal-fraction": run_optimal_fraction,
    "thresholds": run_thresholds,
    "optimal-period": run_optimal_period,
    "two-scale": run_two_scale,
    "partial": run_partial,
}


def _add_common(sp):
    sp.add_argument("--out", help="output CSV path (manifest written alongside)")
    sp.add_argument("--config", help="JSON file with default parameter values")


def _add_mc(sp):
    sp.add_argument("--steps", type=int, help="path length per realization")
    sp.add_argument("--realizations", type=int, help="independent paths")
    sp.add_argument("--seed", type=int, help="master seed for all realizations")
    sp.add_argument("--threads", type=int, help="worker threads (default: all cores)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kellyfees",
        description="Growth-optimal investing with proportional transaction fees",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("optimal-fraction", help="optimal f vs fee level")
    sp.add_argument("--model", choices=["binary", "lognormal"])
    for flag in ("--r1", "--p1", "--m", "--d", "--alpha", "--alpha-min", "--alpha-max"):
        sp.add_argument(flag, type=float)
    sp.add_argument("--alpha-points", type=int)
    _add_common(sp)

    sp = sub.add_parser("thresholds", help="fee levels where longer periods win")
    sp.add_argument("--r1", type=float)
    sp.add_argument("--p1-min", type=float)
    sp.add_argument("--p1-max", type=float)
    sp.add_argument("--p1-points", type=int)
    _add_common(sp)

    sp = sub.add_parser("optimal-period", help="optimal rebalancing period vs fee")
    sp.add_argument("--model", choices=["binary", "two-scale", "lognormal", "student", "garch"])
    for flag in ("--r1", "--p1", "--r2", "--p2", "--m", "--d", "--sigma",
                 "--a0", "--a1", "--b", "--alpha", "--alpha-min", "--alpha-max"):
        sp.add_argument(flag, type=float)
    sp.add_argument("--t2", type=int)
    sp.add_argument("--dof", type=int)
    sp.add_argument("--alpha-points", type=int)
    sp.add_argument("--t-max", type=int)
    sp.add_argument("--mc", action="store_true", default=None,
                    help="Monte-Carlo period sweep (required for student/garch)")
    _add_mc(sp)
    _add_common(sp)

    sp = sub.add_parser("two-scale", help="optimum vs period for a two-scale asset")
    for flag in ("--r1", "--p1", "--r2", "--p2", "--alpha"):
        sp.add_argument(flag, type=float)
    sp.add_argument("--t2", type=int)
    sp.add_argument("--t-min", type=int)
    sp.add_argument("--t-max", type=int)
    _add_common(sp)

    sp = sub.add_parser("partial", help="growth under partial rebalancing")
    sp.add_argument("--model", choices=["binary", "two-scale", "lognormal"])
    for flag in ("--r1", "--p1", "--r2", "--p2", "--m", "--d", "--alpha"):
        sp.add_argument(flag, type=float)
    sp.add_argument("--t2", type=int)
    sp.add_argument("--eps-grid", help="comma-separated transfer fractions in (0, 1]")
    sp.add_argument("--t-max", type=int, help="cap for the intermittent reference search")
    _add_mc(sp)
    _add_common(sp)

    sp = sub.add_parser("replay", help="re-run a manifest byte-for-byte")
    sp.add_argument("manifest", help="path to a .manifest.json file")
    sp.add_argument("--out", help="override the recorded output path")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay":
            try:
                with open(args.manifest) as fh:
                    doc = json.load(fh)
            except (OSError, json.JSONDecodeError) as e:
                raise UsageError(f"cannot read manifest {args.manifest}: {e}")
            command, params = doc.get("command"), doc.get("params")
            if command not in _RUNNERS or not isinstance(params, dict):
                raise UsageError(f"manifest {args.manifest} is not replayable")
            out_path = args.out or doc.get("output")
            if not out_path:
                raise UsageError("manifest has no output path; pass --out")
        else:
            command = args.command
            params = _effective(command, vars(args), args.config)
            out_path = args.out
            if not out_path:
                raise UsageError("--out is required")
        header, rows, extras, summary = _RUNNERS[command](params)
        _write_outputs(out_path, header, rows, _manifest(command, params, out_path, extras))
        print(summary)
        print(f"wrote {len(rows)} row(s) to {out_path}")
        return 0
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except RuntimeError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
