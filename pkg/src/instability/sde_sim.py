"""Monte Carlo simulation of the reflected state process under equilibrium
strategies:  dX = sqrt(2 (a*(X) + b*(X))) dB - dK,  reflected on [0, 1].

Euler-Maruyama with reflection by folding; strategies are evaluated by linear
interpolation.  A path freezes once the local total diffusion falls below
freeze_eps (the stable set has been reached), and proposals that would jump
across the stable set in a single step are clamped to its near boundary: the
continuous-time process cannot cross a point where the diffusion vanishes
continuously, so the clamp restores the absorption that a finite time step
would otherwise allow paths to tunnel through.

Randomness comes from counter-based Philox streams keyed (seed, path index),
so ensembles are reproducible and independent of evaluation order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .equilibrium import Equilibrium

N_CHECKPOINTS = 32
CONVERGENCE_DELTA = 0.02
_TIME_BLOCK = 4096  # steps per normal-draw block; fixed for reproducibility


class SimError(RuntimeError):
    pass


class Region(enum.Enum):
    A_SIDE = "a_side"      # x0 below the stable set
    STABLE = "stable"
    B_SIDE = "b_side"      # x0 above the stable set


@dataclass(frozen=True)
class SimConfig:
    x0: float
    dt: float
    t_max: float
    n_paths: int
    seed: int
    freeze_eps: float = 1e-8

    def __post_init__(self):
        if not (0.0 <= self.x0 <= 1.0):
            raise ValueError(f"x0 must lie in [0, 1], got {self.x0}")
        if not (self.dt > 0 and self.t_max > 0):
            raise ValueError("dt and t_max must be positive")
        if self.dt > 1e-3 * self.t_max:
            raise ValueError(
                f"dt={self.dt} too coarse for t_max={self.t_max} (need dt <= 1e-3 t_max)"
            )
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.freeze_eps <= 0:
            raise ValueError("freeze_eps must be positive")


@dataclass
class SimResult:
    config: SimConfig
    region: Region
    stable_lo: float
    stable_hi: float
    terminal: np.ndarray = field(repr=False)
    checkpoint_times: np.ndarray = field(repr=False)
    checkpoint_mean: np.ndarray = field(repr=False)
    checkpoint_mean_dist: np.ndarray = field(repr=False)
    checkpoint_frac_converged: np.ndarray = field(repr=False)
    increment_mean: np.ndarray = field(repr=False)   # per checkpoint interval
    increment_se: np.ndarray = field(repr=False)
    path_max: np.ndarray = field(repr=False)
    path_min: np.ndarray = field(repr=False)
    containment_ok: bool
    convergence_fraction: float
    frozen_fraction: float


@dataclass
class SubmartingaleReport:
    region: Region
    increment_mean: np.ndarray
    increment_se: np.ndarray
    passed: bool


def _fold(x: np.ndarray) -> np.ndarray:
    """Reflect into [0, 1]: the reflection group has period 2."""
    y = np.remainder(x, 2.0)
    return np.where(y > 1.0, 2.0 - y, y)


def simulate(eq: Equilibrium, cfg: SimConfig) -> SimResult:
    """Euler-Maruyama ensemble under the equilibrium strategy pair."""
    grid = eq.a_star.grid
    nodes = grid.nodes()
    diffusion = eq.a_star.values + eq.b_star.values
    lo, hi = eq.stable_lo, eq.stable_hi

    if cfg.x0 < lo:
        region = Region.A_SIDE
    elif cfg.x0 > hi:
        region = Region.B_SIDE
    else:
        region = Region.STABLE

    n_steps = int(math.ceil(cfg.t_max / cfg.dt - 1e-12))
    # start the geometric schedule at t_max/1000, not dt: intervals spanning a
    # handful of steps carry no resolvable drift, only noise
    first = max(1, int(round(n_steps / 1000)))
    ck_steps = np.unique(
        np.clip(np.round(np.geomspace(first, n_steps, N_CHECKPOINTS)), 1, n_steps)
    ).astype(int)
    sqrt_dt = math.sqrt(cfg.dt)

    n = cfg.n_paths
    x = np.full(n, cfg.x0, dtype=float)
    d_here = np.interp(x, nodes, diffusion)
    frozen = d_here < cfg.freeze_eps
    path_max = x.copy()
    path_min = x.copy()
    gens = [
        np.random.Generator(np.random.Philox(key=[cfg.seed, p])) for p in range(n)
    ]

    snapshots = [x.copy()]
    ck_times = []
    ck_set = set(int(s) for s in ck_steps)
    step = 0
    while step < n_steps:
        block = min(_TIME_BLOCK, n_steps - step)
        xi = np.empty((n, block))
        for p, gen in enumerate(gens):
            xi[p] = gen.standard_normal(block)
        for t in range(block):
            step += 1
            sigma = np.sqrt(2.0 * np.maximum(np.interp(x, nodes, diffusion), 0.0))
            prop = _fold(x + sigma * sqrt_dt * xi[:, t])
            if region is Region.A_SIDE:
                prop = np.minimum(prop, lo)
            elif region is Region.B_SIDE:
                prop = np.maximum(prop, hi)
            x = np.where(frozen, x, prop)
            if np.any(np.isnan(x)):
                raise SimError("NaN state encountered: strategy field corrupt")
            frozen = frozen | (np.interp(x, nodes, diffusion) < cfg.freeze_eps)
            np.maximum(path_max, x, out=path_max)
            np.minimum(path_min, x, out=path_min)
            if step in ck_set:
                snapshots.append(x.copy())
                ck_times.append(step * cfg.dt)

    snaps = np.asarray(snapshots)  # (n_checkpoints + 1, n_paths)
    dist = np.maximum(np.maximum(lo - snaps, snaps - hi), 0.0)
    incs = np.diff(snaps, axis=0)
    inc_mean = incs.mean(axis=1)
    inc_se = incs.std(axis=1, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(len(incs))

    band = 2.0 * cfg.freeze_eps
    if region is Region.A_SIDE:
        containment = bool(np.all(path_max <= hi + band))
    elif region is Region.B_SIDE:
        containment = bool(np.all(path_min >= lo - band))
    else:
        containment = bool(np.all((path_max <= hi + band) & (path_min >= lo - band)))

    terminal_dist = dist[-1]
    return SimResult(
        config=cfg,
        region=region,
        stable_lo=lo,
        stable_hi=hi,
        terminal=snaps[-1],
        checkpoint_times=np.asarray(ck_times),
        checkpoint_mean=snaps[1:].mean(axis=1),
        checkpoint_mean_dist=dist[1:].mean(axis=1),
        checkpoint_frac_converged=(dist[1:] <= CONVERGENCE_DELTA).mean(axis=1),
        increment_mean=inc_mean,
        increment_se=inc_se,
        path_max=path_max,
        path_min=path_min,
        containment_ok=containment,
        convergence_fraction=float(np.mean(terminal_dist <= CONVERGENCE_DELTA)),
        frozen_fraction=float(np.mean(frozen)),
    )


def submartingale_check(result: SimResult, region: Region) -> SubmartingaleReport:
    """The state restricted to an instability region is a submartingale toward
    the stable set: on the A side every ensemble-mean checkpoint increment
    must be >= -3 standard errors (mirrored on the B side)."""
    if region not in (Region.A_SIDE, Region.B_SIDE):
        raise ValueError("submartingale check applies to an instability region")
    if result.region is not region:
        raise ValueError(
            f"region mismatch: result was simulated from {result.region.value}, "
            f"check requested for {region.value}"
        )
    m, se = result.increment_mean, result.increment_se
    if region is Region.A_SIDE:
        passed = bool(np.all(m >= -3.0 * se))
    else:
        passed = bool(np.all(m <= 3.0 * se))
    return SubmartingaleReport(
        region=region, increment_mean=m, increment_se=se, passed=passed
    )
