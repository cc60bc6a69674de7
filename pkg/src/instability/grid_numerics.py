"""Shared numerical substrate: uniform grids, finite differences, interpolation,
root bracketing, and a fixed-step 4th-order ODE integrator with event detection.

All functions here are pure; nothing keeps state between calls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform grid of n nodes on [lo, hi]; node i sits at lo + i*h."""

    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if not (0.0 <= self.lo < self.hi <= 1.0 + 1e-15):
            raise GridError(f"grid endpoints invalid: [{self.lo}, {self.hi}]")
        if self.n < 3:
            raise GridError(f"node count must be >= 3, got {self.n}")

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    def nodes(self) -> np.ndarray:
        return self.lo + self.h * np.arange(self.n)


@dataclass
class ScalarField:
    """A function on a uniform grid, stored by its nodal values."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n,):
            raise GridError(
                f"values length {self.values.shape} does not match grid.n={self.grid.n}"
            )
        if not np.all(np.isfinite(self.values)):
            raise GridError("field contains non-finite values")

    @classmethod
    def from_function(cls, grid: Grid, f) -> "ScalarField":
        return cls(grid, np.asarray([f(x) for x in grid.nodes()], dtype=float))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.n, float(value)))


def second_diff(f: ScalarField, i: int) -> float:
    """Central second difference (v[i-1] - 2 v[i] + v[i+1]) / h^2 at an interior node."""
    n = f.grid.n
    if not (1 <= i <= n - 2):
        raise GridError(f"boundary node: i={i} not interior of 0..{n - 1}")
    v = f.values
    h = f.grid.h
    return (v[i - 1] - 2.0 * v[i] + v[i + 1]) / (h * h)


def second_diff_all(f: ScalarField) -> np.ndarray:
    """Vector of central second differences at interior nodes (length n-2)."""
    v = f.values
    h = f.grid.h
    return (v[:-2] - 2.0 * v[1:-1] + v[2:]) / (h * h)


def interp_linear(f: ScalarField, x: float) -> float:
    """Piecewise-linear interpolation; exact at the nodes."""
    g = f.grid
    if x < g.lo - 1e-14 or x > g.hi + 1e-14:
        raise GridError(f"out of domain: x={x} not in [{g.lo}, {g.hi}]")
    t = (min(max(x, g.lo), g.hi) - g.lo) / g.h
    i = min(int(t), g.n - 2)
    frac = t - i
    v = f.values
    return float(v[i] * (1.0 - frac) + v[i + 1] * frac)


def bisect(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> float:
    """Deterministic bisection on a sign change of f in [lo, hi]."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise ValueError(f"bracket invalid: f({lo})={flo}, f({hi})={fhi} share a sign")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:  # hit float resolution
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if flo * fm < 0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


@dataclass
class Trajectory:
    """Dense output of integrate_until: nodes (x, w, w') plus the refined event point.

    event is None when the stop predicate never fired before x_max.
    """

    xs: np.ndarray
    ws: np.ndarray
    wps: np.ndarray
    event: Optional[tuple[float, float, float]]

    def eval(self, x: float) -> float:
        """Cubic-Hermite evaluation of w(x); O(step^4) accurate on smooth stretches.

        Linear resampling is not accurate enough to survive a second difference,
        so downstream residual checks rely on this instead.
        """
        xs = self.xs
        if x <= xs[0]:
            return float(self.ws[0])
        if x >= xs[-1]:
            return float(self.ws[-1])
        i = int(np.searchsorted(xs, x)) - 1
        x0, x1 = xs[i], xs[i + 1]
        dx = x1 - x0
        t = (x - x0) / dx
        w0, w1 = self.ws[i], self.ws[i + 1]
        p0, p1 = self.wps[i] * dx, self.wps[i + 1] * dx
        t2, t3 = t * t, t * t * t
        return float(
            (2 * t3 - 3 * t2 + 1) * w0
            + (t3 - 2 * t2 + t) * p0
            + (-2 * t3 + 3 * t2) * w1
            + (t3 - t2) * p1
        )

    def eval_many(self, x: np.ndarray) -> np.ndarray:
        return np.asarray([self.eval(float(xi)) for xi in x])


def _rk4_step(g, x, w, p, s):
    """One classical RK4 step for w'' = g(x, w) written as (w, p) with p = w'."""
    k1w = p
    k1p = g(x, w)
    k2w = p + 0.5 * s * k1p
    k2p = g(x + 0.5 * s, w + 0.5 * s * k1w)
    k3w = p + 0.5 * s * k2p
    k3p = g(x + 0.5 * s, w + 0.5 * s * k2w)
    k4w = p + s * k3p
    k4p = g(x + s, w + s * k3w)
    return (
        w + (s / 6.0) * (k1w + 2 * k2w + 2 * k3w + k4w),
        p + (s / 6.0) * (k1p + 2 * k2p + 2 * k3p + k4p),
    )


def integrate_until(
    g: Callable[[float, float], float],
    x0: float,
    w0: float,
    wp0: float,
    stop: Callable[[float, float, float], bool],
    step: float,
    x_max: float,
    event_tol: float = 1e-12,
    record: bool = True,
) -> Trajectory:
    """Integrate w'' = g(x, w) with fixed-step RK4 from (x0, w0, wp0) until the stop
    predicate fires or x exceeds x_max.

    When the predicate flips inside a step, the event location is refined by
    bisection on the step (re-integrating partial RK4 steps from the step start)
    to within event_tol.  Fixed steps keep results bit-reproducible.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    xs = [x0]
    ws = [w0]
    wps = [wp0]
    x, w, p = x0, w0, wp0
    event = None
    if stop(x, w, p):
        event = (x, w, p)
    else:
        nsteps = int(math.ceil((x_max - x0) / step - 1e-12))
        for k in range(1, nsteps + 1):
            xn = x0 + k * step if k < nsteps else x_max
            s = xn - x
            wn, pn = _rk4_step(g, x, w, p, s)
            if stop(xn, wn, pn):
                # bisect the fraction of this step at which the predicate flips
                a, b = 0.0, s
                for _ in range(200):
                    if b - a <= event_tol:
                        break
                    m = 0.5 * (a + b)
                    wm, pm = _rk4_step(g, x, w, p, m)
                    if stop(x + m, wm, pm):
                        b = m
                    else:
                        a = m
                we, pe = _rk4_step(g, x, w, p, b)
                event = (x + b, we, pe)
                if record:
                    xs.append(x + b)
                    ws.append(we)
                    wps.append(pe)
                break
            x, w, p = xn, wn, pn
            if record:
                xs.append(x)
                ws.append(w)
                wps.append(p)
    return Trajectory(
        np.asarray(xs), np.asarray(ws), np.asarray(wps), event
    )
