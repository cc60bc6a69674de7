"""Command-line entry point: runs solves, equilibria, sweeps, simulations and
verification suites, and emits machine-readable CSV/JSON artifacts.

Conventions:
  * every command accepts --config FILE with flat key=value lines; command-line
    flags override file values;
  * CSV artifacts carry a header row and serialize numbers with 17 significant
    digits (round-trip exact); JSON artifacts match the schemas shipped in
    docs/schemas/;
  * exit codes: 0 success, 1 verification-suite failure, 2 config error,
    3 solver failure, 4 equilibrium-verification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .benchmark import (
    BenchmarkError,
    PlayerParams,
    Side,
    closed_form_solution,
    mirror_field,
    solve_benchmark,
)
from .equilibrium import (
    DEFAULT_N,
    Equilibrium,
    EquilibriumError,
    RegimeKind,
    build_accommodating,
    build_deterrence,
    classify_regime,
    sweep,
    verify_equilibrium,
)
from .grid_numerics import Grid, ScalarField
from .mdp_oracle import MdpSpec, compare, solve_mdp
from .sde_sim import Region, SimConfig, simulate, submartingale_check
from .viscosity_br import Kink, SolveError, masked_residual

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_EQ_VERIFY = 4


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config plumbing

def _load_config_file(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"config: line {ln} is not key=value: {raw!r}")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


class Resolver:
    """Merge flag values over config-file values with per-key validation."""

    def __init__(self, args: argparse.Namespace):
        self.flags = vars(args)
        self.file = (
            _load_config_file(args.config) if getattr(args, "config", None) else {}
        )

    def _raw(self, key: str):
        flag = self.flags.get(key.replace("-", "_"))
        if flag is not None:
            return flag
        return self.file.get(key)

    def get(self, key: str, cast, default=None, required: bool = False):
        raw = self._raw(key)
        if raw is None:
            if required:
                raise ConfigError(f"missing required key: {key}")
            return default
        if isinstance(raw, str):
            try:
                return cast(raw)
            except ValueError as exc:
                raise ConfigError(f"invalid value for {key}: {raw!r}") from exc
        return raw

    def positive(self, key: str, cast=float, default=None, required: bool = False):
        val = self.get(key, cast, default, required)
        if val is not None and val <= 0:
            raise ConfigError(f"{key} must be positive, got {val}")
        return val


def _player(res: Resolver, rkey: str, ckey: str, side: Side) -> PlayerParams:
    r = res.positive(rkey, required=True)
    c = res.positive(ckey, required=True)
    return PlayerParams(r=r, c=c, side=side)


def _out_dir(res: Resolver) -> Path:
    d = Path(res.get("out-dir", str, default="."))
    d.mkdir(parents=True, exist_ok=True)
    return d


# ---------------------------------------------------------------------------
# serialization

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def _kink_json(k: Optional[Kink]) -> Optional[dict]:
    if k is None:
        return None
    return {"x": k.x, "slope_left": k.slope_left, "slope_right": k.slope_right}


def _max_workers() -> int:
    raw = os.environ.get("INSTAB_THREADS")
    if raw is None:
        return 1
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise ConfigError(f"INSTAB_THREADS must be an integer, got {raw!r}") from exc


# ---------------------------------------------------------------------------
# commands

def cmd_benchmark(args: argparse.Namespace) -> int:
    res = Resolver(args)
    side = res.get("side", str, default="a").lower()
    if side not in ("a", "b"):
        raise ConfigError(f"side must be 'a' or 'b', got {side!r}")
    params = _player(res, "r", "c", Side.A if side == "a" else Side.B)
    domain_hi = res.get("domain-hi", float, default=1.0)
    if not (0.0 < domain_hi <= 1.0):
        raise ConfigError(f"domain-hi must lie in (0, 1], got {domain_hi}")
    n = res.positive("n", int, default=DEFAULT_N)
    out = _out_dir(res)

    sol = solve_benchmark(params, domain_hi, n)
    zero = ScalarField.constant(sol.v.grid, 0.0)
    residual = masked_residual(sol.v, zero, params, exclude=(sol.threshold,))
    x = sol.v.grid.nodes()
    if side == "a":
        xs, v, a = x, sol.v.values, sol.control.values
        identity = xs
        threshold = sol.threshold
    else:
        vm, am = mirror_field(sol.v), mirror_field(sol.control)
        xs, v, a = vm.grid.nodes(), vm.values, am.values
        identity = 1.0 - xs
        threshold = 1.0 - sol.threshold

    _write_csv(
        out / "benchmark.csv",
        ["x", "v", "control", "v_minus_identity"],
        zip(xs, v, a, v - identity),
    )
    _write_json(
        out / "benchmark.json",
        {
            "params": {"r": params.r, "c": params.c, "side": side,
                       "domain_hi": domain_hi, "n": n},
            "threshold": threshold,
            "boundary_mode": sol.boundary_mode.value,
            "shape": sol.shape.kind.value,
            "v0": sol.v0,
            "residual": residual,
        },
    )
    return EXIT_OK


def _build_equilibrium(res: Resolver) -> Equilibrium:
    pa = _player(res, "ra", "ca", Side.A)
    pb = _player(res, "rb", "cb", Side.B)
    n = res.positive("n", int, default=DEFAULT_N)
    xbar_raw = res.get("xbar", str)
    rep = classify_regime(pa, pb)
    if rep.kind is RegimeKind.ACCOMMODATING:
        if xbar_raw is not None:
            raise ConfigError("xbar not allowed: accommodating regime")
        return build_accommodating(pa, pb, n)
    if xbar_raw is None:
        raise ConfigError("xbar required: deterrence regime (or xbar=mid)")
    if xbar_raw == "mid":
        lo, hi = rep.xbar_range
        xbar = 0.5 * (lo + hi)
    else:
        try:
            xbar = float(xbar_raw)
        except ValueError as exc:
            raise ConfigError(f"invalid value for xbar: {xbar_raw!r}") from exc
    try:
        return build_deterrence(pa, pb, xbar, n)
    except EquilibriumError as exc:
        raise ConfigError(f"xbar: {exc}") from exc


def cmd_equilibrium(args: argparse.Namespace) -> int:
    res = Resolver(args)
    out = _out_dir(res)
    eq = _build_equilibrium(res)
    report = verify_equilibrium(eq)
    rep = classify_regime(eq.params_a, eq.params_b)
    x = eq.a_star.grid.nodes()
    _write_csv(
        out / "equilibrium.csv",
        ["x", "a_star", "b_star", "v_a", "v_b"],
        zip(x, eq.a_star.values, eq.b_star.values, eq.v_a.values, eq.v_b.values),
    )
    _write_json(
        out / "equilibrium.json",
        {
            "params": {"ra": eq.params_a.r, "ca": eq.params_a.c,
                       "rb": eq.params_b.r, "cb": eq.params_b.c,
                       "n": eq.a_star.grid.n},
            "regime": eq.regime.value,
            "xbar": eq.xbar,
            "x_a0": rep.x_a0,
            "x_b0": rep.x_b0,
            "stable_lo": eq.stable_lo,
            "stable_hi": eq.stable_hi,
            "kinks": {
                "a": _kink_json(eq.kink_a),
                "b": _kink_json(eq.kink_b),
                "convex_a": eq.convex_kink_a,
                "convex_b": eq.convex_kink_b,
            },
            "verification": {
                "control_disc_a": report.control_disc_a,
                "control_disc_b": report.control_disc_b,
                "threshold_disc_a": report.threshold_disc_a,
                "threshold_disc_b": report.threshold_disc_b,
                "decoupling_violations": report.decoupling_violations,
                "convex_kink": report.convex_kink,
                "dominance_gap_a": report.dominance_gap_a,
                "dominance_gap_b": report.dominance_gap_b,
                "h": report.h,
            },
            "pass": report.passed,
        },
    )
    return EXIT_OK if report.passed else EXIT_EQ_VERIFY


def cmd_simulate(args: argparse.Namespace) -> int:
    res = Resolver(args)
    out = _out_dir(res)
    eq = _build_equilibrium(res)
    try:
        cfg = SimConfig(
            x0=res.get("x0", float, required=True),
            dt=res.positive("dt", required=True),
            t_max=res.positive("t-max", required=True),
            n_paths=res.positive("n-paths", int, default=1000),
            seed=res.get("seed", int, default=0),
            freeze_eps=res.positive("freeze-eps", default=1e-8),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    result = simulate(eq, cfg)
    sub = (
        submartingale_check(result, result.region)
        if result.region in (Region.A_SIDE, Region.B_SIDE)
        else None
    )
    _write_csv(
        out / "sim_checkpoints.csv",
        ["t", "mean", "mean_abs_dist", "frac_converged", "mean_increment", "se"],
        zip(
            result.checkpoint_times,
            result.checkpoint_mean,
            result.checkpoint_mean_dist,
            result.checkpoint_frac_converged,
            result.increment_mean,
            result.increment_se,
        ),
    )
    _write_json(
        out / "sim.json",
        {
            "config": {"x0": cfg.x0, "dt": cfg.dt, "t_max": cfg.t_max,
                       "n_paths": cfg.n_paths, "seed": cfg.seed,
                       "freeze_eps": cfg.freeze_eps},
            "region": result.region.value,
            "stable_lo": result.stable_lo,
            "stable_hi": result.stable_hi,
            "terminal": {
                "mean": float(result.terminal.mean()),
                "std": float(result.terminal.std()),
                "min": float(result.terminal.min()),
                "max": float(result.terminal.max()),
                "convergence_fraction": result.convergence_fraction,
                "frozen_fraction": result.frozen_fraction,
            },
            "containment_ok": result.containment_ok,
            "submartingale_ok": None if sub is None else sub.passed,
        },
    )
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    res = Resolver(args)
    out = _out_dir(res)
    pb = _player(res, "rb", "cb", Side.B)
    axis_raw = res.get("axis", str)
    if axis_raw is not None:
        try:
            axis = [float(tok) for tok in axis_raw.split(",") if tok.strip()]
        except ValueError as exc:
            raise ConfigError(f"invalid value for axis: {axis_raw!r}") from exc
    else:
        lo = res.positive("axis-lo", required=True)
        hi = res.positive("axis-hi", required=True)
        npts = res.positive("axis-points", int, default=21)
        axis = list(np.geomspace(lo, hi, npts))
    if not axis:
        raise ConfigError("axis is empty")
    if any(v <= 0 for v in axis):
        raise ConfigError(f"axis values must be positive r^2 c levels: {axis}")
    ra = res.positive("ra", default=pb.r)
    points = [PlayerParams(r=ra, c=v / ra ** 2, side=Side.A) for v in axis]
    try:
        result = sweep(points, pb)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    rows = []
    for i, (p, s) in enumerate(zip(result.points, result.stable_sets)):
        rows.append([
            p.r2c,
            result.x_a0[i],
            result.x_b0[i],
            result.regimes[i].value,
            s.lo,
            s.hi,
            "" if i == 0 else _fmt(result.sso_ok[i - 1]),
            "" if i == 0 or result.containment_ok[i - 1] is None
            else _fmt(result.containment_ok[i - 1]),
        ])
    _write_csv(
        out / "sweep.csv",
        ["r2c_a", "x_a0", "x_b0", "regime", "stable_lo", "stable_hi",
         "sso_ok", "containment_ok"],
        rows,
    )
    flips = sum(
        1 for k1, k2 in zip(result.regimes, result.regimes[1:]) if k1 != k2
    )
    _write_json(
        out / "sweep.json",
        {
            "params_b": {"rb": pb.r, "cb": pb.c},
            "axis": axis,
            "theta": result.theta,
            "theta_reason": result.theta_reason,
            "regime_flips": flips,
            "all_sso_ok": all(result.sso_ok) if result.sso_ok else True,
            "all_containment_ok": all(
                v for v in result.containment_ok if v is not None
            ) if result.containment_ok else True,
        },
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# verification suites

_ORACLE_CASES = [(7.0, 15.0), (5.0, 6.0), (6.0, 15.0), (10.0, 1.0)]


def _suite_closed_form(_args) -> tuple[bool, str]:
    worst_thr, worst_val = 0.0, 0.0
    for r, c in _ORACLE_CASES:
        p = PlayerParams(r=r, c=c, side=Side.A)
        sol = solve_benchmark(p, 1.0)
        cf = closed_form_solution(p, sol.v.grid.n)
        worst_thr = max(worst_thr, abs(sol.threshold - cf.threshold))
        worst_val = max(worst_val, float(np.max(np.abs(sol.v.values - cf.v.values))))
    ok = worst_thr <= 1e-8 and worst_val <= 1e-8
    return ok, f"max threshold err {worst_thr:.2e}, max value err {worst_val:.2e}"


def _suite_oracle(args) -> tuple[bool, str]:
    tol = getattr(args, "oracle_tol", None) or 1e-2
    g = Grid(0.0, 1.0, 201)
    zero = ScalarField.constant(g, 0.0)

    def one(case):
        r, c = case
        p = PlayerParams(r=r, c=c, side=Side.A)
        delta = g.h ** 2 / (2.0 * math.sqrt(2.0 / c))
        sol = solve_mdp(MdpSpec(grid=g, n_actions=101, delta=delta,
                                params=p, opponent=zero))
        diff, _ = compare(sol.value, closed_form_solution(p, 201).v)
        return diff

    with ThreadPoolExecutor(max_workers=_max_workers()) as pool:
        diffs = list(pool.map(one, _ORACLE_CASES))
    worst = max(diffs)
    return worst <= tol, f"max value diff {worst:.2e} (tol {tol:g})"


def _suite_fixed_point(_args) -> tuple[bool, str]:
    p7a = PlayerParams(r=7.0, c=15.0, side=Side.A)
    p7b = PlayerParams(r=7.0, c=15.0, side=Side.B)
    acc = verify_equilibrium(build_accommodating(p7a, p7b, DEFAULT_N)).passed
    p1a = PlayerParams(r=1.0, c=2.0, side=Side.A)
    p1b = PlayerParams(r=1.0, c=2.0, side=Side.B)
    det = verify_equilibrium(build_deterrence(p1a, p1b, 0.5, DEFAULT_N)).passed
    # a far-from-balanced stable point must be detected as non-equilibrium
    reject = not verify_equilibrium(build_deterrence(p1a, p1b, 0.25, DEFAULT_N)).passed
    parts = [f"accommodating {'ok' if acc else 'FAIL'}",
             f"deterrence(0.5) {'ok' if det else 'FAIL'}",
             f"reject(0.25) {'ok' if reject else 'FAIL'}"]
    return acc and det and reject, ", ".join(parts)


def _suite_statics(_args) -> tuple[bool, str]:
    pb = PlayerParams(r=7.0, c=15.0, side=Side.B)
    axis = np.geomspace(200.0, 20.0, 21)
    points = [PlayerParams(r=7.0, c=v / 49.0, side=Side.A) for v in axis]
    result = sweep(points, pb)
    flips = [i for i in range(1, len(points))
             if result.regimes[i] != result.regimes[i - 1]]
    one_flip = len(flips) == 1
    theta_ok = False
    if one_flip and result.theta is not None:
        hi_r2c, lo_r2c = axis[flips[0] - 1], axis[flips[0]]
        theta_ok = lo_r2c <= result.theta <= hi_r2c
    # axis descends in r^2 c, so x_a0 = (18/r^2c)^(1/3) ascends along it
    mono = all(x < y for x, y in zip(result.x_a0, result.x_a0[1:]))
    sso = all(result.sso_ok)
    cont = all(v for v in result.containment_ok if v is not None)
    ok = one_flip and theta_ok and mono and sso and cont
    theta_txt = "none" if result.theta is None else f"{result.theta:.4f}"
    return ok, (f"flips {len(flips)}, theta {theta_txt} bracketed "
                f"{theta_ok}, monotone {mono}, sso {sso}, containment {cont}")


def _suite_simulation(_args) -> tuple[bool, str]:
    pa = PlayerParams(r=1.0, c=2.0, side=Side.A)
    pb = PlayerParams(r=1.0, c=2.0, side=Side.B)
    eq = build_deterrence(pa, pb, 0.5, DEFAULT_N)
    result = simulate(eq, SimConfig(x0=0.1, dt=1e-4, t_max=50.0,
                                    n_paths=1000, seed=42))
    sub = submartingale_check(result, Region.A_SIDE)
    dist = result.checkpoint_mean_dist
    se = result.increment_se
    trend = bool(np.all(np.diff(dist) <= 2.0 * se[1:] + 1e-15))
    frozen = simulate(eq, SimConfig(x0=0.5, dt=1e-3, t_max=1.0,
                                    n_paths=16, seed=42))
    ok = (result.containment_ok and trend and sub.passed
          and frozen.convergence_fraction == 1.0 and frozen.frozen_fraction == 1.0)
    return ok, (f"containment {result.containment_ok}, trend {trend}, "
                f"submartingale {sub.passed}, frozen-start "
                f"{frozen.frozen_fraction == 1.0}")


_SUITES = {
    "closed-form": _suite_closed_form,
    "oracle": _suite_oracle,
    "fixed-point": _suite_fixed_point,
    "statics": _suite_statics,
    "simulation": _suite_simulation,
}


def cmd_verify(args: argparse.Namespace) -> int:
    names = [args.suite] if args.suite else list(_SUITES)
    all_ok = True
    width = max(len(n) for n in names)
    for name in names:
        ok, detail = _SUITES[name](args)
        all_ok &= ok
        print(f"{name:<{width}}  {'PASS' if ok else 'FAIL'}  {detail}")
    return EXIT_OK if all_ok else EXIT_VERIFY_FAIL


# ---------------------------------------------------------------------------
# argument parsing

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file; flags override")
    p.add_argument("--out-dir", help="artifact output directory (default: .)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="instab",
        description="Volatility-control game solver: benchmarks, equilibria, "
                    "comparative statics, and path simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("benchmark", help="single-player benchmark solve")
    _add_common(p)
    p.add_argument("--r", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--side", choices=["a", "b"])
    p.add_argument("--domain-hi", type=float)
    p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("equilibrium", help="construct and verify an equilibrium")
    _add_common(p)
    for flag in ("--ra", "--ca", "--rb", "--cb"):
        p.add_argument(flag, type=float)
    p.add_argument("--xbar", help="deterrence stable point, or 'mid'")
    p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_equilibrium)

    p = sub.add_parser("simulate", help="Monte Carlo simulation under an equilibrium")
    _add_common(p)
    for flag in ("--ra", "--ca", "--rb", "--cb"):
        p.add_argument(flag, type=float)
    p.add_argument("--xbar")
    p.add_argument("--n", type=int)
    p.add_argument("--x0", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-max", type=float)
    p.add_argument("--n-paths", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--freeze-eps", type=float)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="comparative statics along an r^2 c axis")
    _add_common(p)
    p.add_argument("--rb", type=float)
    p.add_argument("--cb", type=float)
    p.add_argument("--ra", type=float)
    p.add_argument("--axis", help="comma-separated r_a^2 c_a values")
    p.add_argument("--axis-lo", type=float)
    p.add_argument("--axis-hi", type=float)
    p.add_argument("--axis-points", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run verification suites")
    p.add_argument("--suite", choices=list(_SUITES))
    p.add_argument("--oracle-tol", type=float)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError,) as exc:
        # parameter validation raised inside domain constructors
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolveError, BenchmarkError, RuntimeError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
