"""Inactive-benchmark control problem: the single-player solve with a passive
opponent, on a domain [0, X] with X <= 1.

Writing w(x) = v(x) - x, the value function on the active region satisfies
w'' = K sqrt(w) with K = r sqrt(2c), w'(0) = -1 (zero slope of v at the
reflecting origin).  Two boundary behaviors can occur at the right end:

* smooth pasting: w and w' vanish together at an interior threshold, which
  yields the closed-form quartic w(x) = (r^2 c / 72) (x* - x)^4 with
  x* = (18 / (r^2 c))^(1/3);
* absorbed: the trajectory reaches the domain end with w = 0 but w' < 0,
  which happens whenever the pasting point would fall outside the domain.

The shooting solver below classifies trial initial values w(0) by which event
fires first (hit w = 0, or turn w' = 0) and bisects for the separating value.
The pasting point itself is ill-conditioned under pure forward shooting (the
event location of a near-critical trajectory is off by O(eps^(1/6))), so the
solver integrates numerically only down to a small w cutoff and covers the
remaining tail with the ODE's first integral
    (w')^2 / 2 = (2K/3) w^(3/2) + C,
which is exact for this autonomous right-hand side and restores ~1e-10
accuracy on the threshold.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .grid_numerics import Grid, ScalarField, Trajectory, integrate_until

DEFAULT_GRID_N = 2001
W0_BRACKET = (1e-14, 1.0)


class BenchmarkError(RuntimeError):
    pass


class Side(enum.Enum):
    A = "A"  # prefers x = 1
    B = "B"  # prefers x = 0


@dataclass(frozen=True)
class PlayerParams:
    """Discount rate r, quadratic instability-cost coefficient c, orientation."""

    r: float
    c: float
    side: Side = Side.A

    def __post_init__(self):
        if not (self.r > 0 and math.isfinite(self.r)):
            raise ValueError(f"r must be positive, got {self.r}")
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ValueError(f"c must be positive, got {self.c}")

    @property
    def r2c(self) -> float:
        """Composite patience/cost index r^2 c; all thresholds depend on it alone."""
        return self.r * self.r * self.c

    @property
    def K(self) -> float:
        """Curvature constant in w'' = K sqrt(w)."""
        return self.r * math.sqrt(2.0 * self.c)


class BoundaryMode(enum.Enum):
    SMOOTH_PASTING = "smooth_pasting"
    ABSORBED_AT_DOMAIN_END = "absorbed"


class ShapeKind(enum.Enum):
    CONVEX = "convex"
    CONVEX_CONCAVE = "convex_concave"


@dataclass(frozen=True)
class Shape:
    kind: ShapeKind
    inflection: Optional[float] = None  # set for CONVEX_CONCAVE


@dataclass
class BenchmarkSolution:
    params: PlayerParams
    domain_hi: float
    threshold: float
    boundary_mode: BoundaryMode
    v: ScalarField
    control: ScalarField
    v0: float
    left_slope_at_threshold: float
    shape: Shape
    w_eval: Callable[[float], float] = field(repr=False, compare=False)

    def control_at(self, x: float) -> float:
        """Control recovered from w directly, accurate even near the threshold."""
        p = self.params
        return (p.K / (p.r * p.c)) * math.sqrt(max(self.w_eval(x), 0.0))

    def value_at(self, x: float) -> float:
        return x + max(self.w_eval(x), 0.0)


def closed_form_threshold(params: PlayerParams) -> Optional[float]:
    """Satisficing threshold x* = (18 / (r^2 c))^(1/3), or None when the
    threshold would exceed 1 (the upper bound binds)."""
    r2c = params.r2c
    if r2c < 18.0:
        return None
    return (18.0 / r2c) ** (1.0 / 3.0)


def closed_form_solution(params: PlayerParams, n: int = DEFAULT_GRID_N) -> BenchmarkSolution:
    """Smooth-pasting closed form on [0, 1]: quartic value, parabolic control."""
    xstar = closed_form_threshold(params)
    if xstar is None:
        raise BenchmarkError(
            f"no closed form; use shooting (r^2 c = {params.r2c} < 18)"
        )
    amp = params.r2c / 72.0

    def w_eval(x: float) -> float:
        s = xstar - x
        return amp * s * s * s * s if s > 0 else 0.0

    grid = Grid(0.0, 1.0, n)
    xs = grid.nodes()
    s = np.maximum(xstar - xs, 0.0)
    v = ScalarField(grid, xs + amp * s**4)
    control = ScalarField(grid, (params.r / 6.0) * s**2)
    return BenchmarkSolution(
        params=params,
        domain_hi=1.0,
        threshold=xstar,
        boundary_mode=BoundaryMode.SMOOTH_PASTING,
        v=v,
        control=control,
        v0=amp * xstar**4,
        left_slope_at_threshold=1.0,
        shape=Shape(ShapeKind.CONVEX),
        w_eval=w_eval,
    )


def _classify(K: float, w0: float, step: float, x_cap: float):
    """Integrate a trial trajectory; return ('hit'|'turn', event)."""

    def g(x, w):
        return K * math.sqrt(w) if w > 0 else 0.0

    traj = integrate_until(
        g, 0.0, w0, -1.0,
        stop=lambda x, w, p: w <= 0.0 or p >= 0.0,
        step=step, x_max=x_cap, record=False,
    )
    if traj.event is None:
        raise BenchmarkError(
            f"shooting trajectory reached x={x_cap} with no event (w0={w0})"
        )
    x, w, p = traj.event
    kind = "turn" if (w > 0.0 and p >= 0.0) else "hit"
    return kind, traj.event


def _tail_length(K: float, w_cut: float) -> float:
    """Remaining x-distance from w = w_cut down to the pasting point along the
    critical trajectory.  On the critical trajectory the first integral
    constant is zero by construction, so (w')^2 = (4K/3) w^(3/2) and
    integrating dx = dw / |w'| gives 4 sqrt(3/(4K)) w_cut^(1/4) exactly.
    (Evaluating the constant from the integrated endpoint instead would only
    inject cancellation noise, to which this tail is infinitely sensitive.)"""
    return 4.0 * math.sqrt(3.0 / (4.0 * K)) * w_cut**0.25


def solve_benchmark(
    params: PlayerParams,
    domain_hi: float,
    n: int = DEFAULT_GRID_N,
    w0_tol: float = 1e-15,
    event_tol: float = 1e-12,
) -> BenchmarkSolution:
    """Shooting solve of the inactive benchmark on [0, domain_hi]."""
    if not (0.0 < domain_hi <= 1.0):
        raise ValueError(f"domain_hi must lie in (0, 1], got {domain_hi}")
    h = domain_hi / (n - 1)
    if domain_hi <= h:
        raise ValueError("degenerate domain: domain_hi at or below one grid spacing")
    K = params.K
    step = h / 4.0
    xstar_est = (18.0 / params.r2c) ** (1.0 / 3.0)
    x_cap = 4.0 * xstar_est + 1.0

    lo, hi = W0_BRACKET
    kind_lo, _ = _classify(K, lo, step, x_cap)
    kind_hi, _ = _classify(K, hi, step, x_cap)
    if kind_lo != "hit" or kind_hi != "turn":
        raise BenchmarkError(
            "shooting bracket failed: "
            f"classify({lo})={kind_lo}, classify({hi})={kind_hi}"
        )
    while hi - lo > w0_tol * max(1.0, lo):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        kind, _ = _classify(K, mid, step, x_cap)
        if kind == "hit":
            lo = mid
        else:
            hi = mid
    w0_crit = lo  # hit-side endpoint: first integral constant C >= 0

    # critical trajectory down to a small w cutoff, then the analytic tail
    w_cut = min(1e-5, 0.5 * w0_crit)

    def g(x, w):
        return K * math.sqrt(w) if w > 0 else 0.0

    crit = integrate_until(
        g, 0.0, w0_crit, -1.0,
        stop=lambda x, w, p: w <= w_cut,
        step=step, x_max=x_cap, event_tol=event_tol,
    )
    if crit.event is None:
        raise BenchmarkError("critical trajectory failed to reach the w cutoff")
    x_cut, w_c, _p_c = crit.event
    x_paste = x_cut + _tail_length(K, w_c)

    grid = Grid(0.0, domain_hi, n)
    xs = grid.nodes()

    if x_paste <= domain_hi + 1e-7:
        amp = K * K / 144.0  # tail quartic coefficient, continuous at w_cut

        def w_eval(x: float) -> float:
            if x >= x_paste:
                return 0.0
            if x > x_cut:
                s = x_paste - x
                return amp * s * s * s * s
            return max(crit.eval(x), 0.0)

        threshold = min(x_paste, domain_hi)
        mode = BoundaryMode.SMOOTH_PASTING
        left_slope = 1.0
    else:
        # pasting point outside the domain: bisect w0 so the hit lands at
        # domain_hi exactly.  Hit location must be increasing in w0; this is a
        # checked assumption, not a theorem.
        def hit_x(w0: float) -> float:
            kind, ev = _classify(K, w0, step, x_cap)
            if kind != "hit":
                raise BenchmarkError(
                    f"shooting bracket failed: trial w0={w0} turned instead of hitting"
                )
            return ev[0]

        samples = np.geomspace(1e-10, w0_crit * 0.999, 5)
        hits = [hit_x(w0) for w0 in samples]
        if any(b < a for a, b in zip(hits, hits[1:])):
            raise BenchmarkError(
                "shooting bracket failed: hit location not increasing in w0; "
                f"trials {list(zip(samples.tolist(), hits))}"
            )
        blo, bhi = W0_BRACKET[0], w0_crit
        if hit_x(bhi) < domain_hi:
            # domain end inside the near-critical smear; the near-critical
            # trajectory is the absorbed solution to within that smear
            w0_sol = bhi
        else:
            while bhi - blo > w0_tol * max(1.0, blo):
                mid = 0.5 * (blo + bhi)
                if mid == blo or mid == bhi:
                    break
                if hit_x(mid) < domain_hi:
                    blo = mid
                else:
                    bhi = mid
            w0_sol = 0.5 * (blo + bhi)

        sol_traj = integrate_until(
            g, 0.0, w0_sol, -1.0,
            stop=lambda x, w, p: w <= 0.0,
            step=step, x_max=x_cap, event_tol=event_tol,
        )
        if sol_traj.event is None:
            raise BenchmarkError("absorbed trajectory lost its hit event")
        x_hit, _, p_hit = sol_traj.event

        def w_eval(x: float, _traj=sol_traj, _x_hit=x_hit) -> float:
            if x >= _x_hit:
                return 0.0
            return max(_traj.eval(x), 0.0)

        threshold = domain_hi
        mode = BoundaryMode.ABSORBED_AT_DOMAIN_END
        left_slope = 1.0 + p_hit

    w_vals = np.asarray([w_eval(float(x)) for x in xs])
    v = ScalarField(grid, xs + w_vals)
    control = ScalarField(grid, (K / (params.r * params.c)) * np.sqrt(w_vals))

    sol = BenchmarkSolution(
        params=params,
        domain_hi=domain_hi,
        threshold=threshold,
        boundary_mode=mode,
        v=v,
        control=control,
        v0=float(w_eval(0.0)),
        left_slope_at_threshold=left_slope,
        shape=Shape(ShapeKind.CONVEX),
        w_eval=w_eval,
    )
    sol.shape = classify_shape(sol)
    return sol


def classify_shape(sol: BenchmarkSolution) -> Shape:
    """Convex control under smooth pasting; convex-concave (with an inflection
    point) when the domain end absorbs and the control vanishes abruptly."""
    if sol.boundary_mode is BoundaryMode.SMOOTH_PASTING:
        return Shape(ShapeKind.CONVEX)
    a = sol.control.values
    h = sol.v.grid.h
    d2 = a[:-2] - 2.0 * a[1:-1] + a[2:]
    # first interior node where curvature turns (and stays) negative
    idx = None
    neg = d2 < 0
    for i in range(len(d2) - 3):
        if neg[i] and neg[i + 1] and neg[i + 2]:
            idx = i + 1
            break
    x_hat = sol.v.grid.lo + (idx if idx is not None else 0) * h
    return Shape(ShapeKind.CONVEX_CONCAVE, inflection=float(x_hat))


def vanishing_exponent(control: ScalarField, threshold: float) -> float:
    """Log-log slope of the control against distance to its threshold, fitted
    over roughly one decade of resolved distances.  Expect ~2 under smooth
    pasting and ~0.5 at an absorbed end."""
    g = control.grid
    h = g.h
    s_lo, s_hi = 5.0 * h, 50.0 * h
    xs = g.nodes()
    s = threshold - xs
    mask = (s >= s_lo) & (s <= s_hi) & (control.values > 0)
    if mask.sum() < 5:
        raise ValueError("too few nodes before the threshold for an exponent fit")
    slope, _ = np.polyfit(np.log(s[mask]), np.log(control.values[mask]), 1)
    return float(slope)


def mirror_field(f: ScalarField) -> ScalarField:
    """Reflect a field through x -> 1 - x."""
    g = f.grid
    return ScalarField(Grid(1.0 - g.hi, 1.0 - g.lo, g.n), f.values[::-1].copy())


@dataclass
class MirroredBenchmark:
    """A B-player benchmark solve mapped back to x-coordinates (y = 1 - x)."""

    base: BenchmarkSolution
    threshold_x: float  # x_b0 = 1 - y*
    v: ScalarField      # B's value as a function of x
    control: ScalarField

    def control_at(self, x: float) -> float:
        return self.base.control_at(1.0 - x)

    def value_at(self, x: float) -> float:
        return self.base.value_at(1.0 - x)


def mirror_for_b(sol: BenchmarkSolution) -> MirroredBenchmark:
    """Map a benchmark solution computed in B's natural coordinate y = 1 - x
    back to x-coordinates."""
    if sol.params.side is not Side.B:
        raise ValueError("mirror_for_b expects a solution for side B")
    return MirroredBenchmark(
        base=sol,
        threshold_x=1.0 - sol.threshold,
        v=mirror_field(sol.v),
        control=mirror_field(sol.control),
    )
