"""Best response to an arbitrary continuous opponent strategy on [0, 1],
computed by a monotone finite-difference scheme with policy (Howard) iteration.

The discrete equation at an interior node is
    r v_i = r x_i - (rc/2) a_i^2 + (a_i + b_i) (v_{i-1} - 2 v_i + v_{i+1}) / h^2
with the policy improvement a_i = max(second difference, 0) / (rc).  Boundary
rows use a reflected ghost node (zero slope) while the local diffusion is
positive and degenerate to v = x when it vanishes, matching the relaxed
viscosity boundary condition: the player can deactivate the reflection.

The scheme has no drift term, so central differences are monotone
unconditionally and the iteration converges to the unique viscosity solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .benchmark import PlayerParams
from .grid_numerics import Grid, GridError, ScalarField

MAX_ITER = 2000
CONV_TOL = 1e-10


class SolveError(RuntimeError):
    pass


class KinkError(RuntimeError):
    """A convex kink was detected: the field cannot be a valid solution."""


@dataclass(frozen=True)
class Kink:
    x: float
    slope_left: float
    slope_right: float


@dataclass
class BestResponse:
    params: PlayerParams
    opponent: ScalarField
    v: ScalarField
    control: ScalarField
    lower_threshold: float
    upper_threshold: float
    residual: float
    kink: Optional[Kink]
    iterations: int
    damped_steps: int


def _policy_curvature(v: np.ndarray, h: float) -> np.ndarray:
    """Second differences at every node; boundaries use the reflected ghost."""
    m = np.empty_like(v)
    m[1:-1] = (v[:-2] - 2.0 * v[1:-1] + v[2:]) / (h * h)
    m[0] = 2.0 * (v[1] - v[0]) / (h * h)
    m[-1] = 2.0 * (v[-2] - v[-1]) / (h * h)
    return m


def _policy_evaluate(
    x: np.ndarray, a: np.ndarray, b: np.ndarray, params: PlayerParams, h: float
) -> np.ndarray:
    """Solve the linear (tridiagonal) system for the value of a fixed policy."""
    r, c = params.r, params.c
    n = len(x)
    d = a + b
    lam = d / (h * h)
    diag = np.where(d > 0.0, r + 2.0 * lam, 1.0)
    rhs = np.where(d > 0.0, r * x - 0.5 * r * c * a * a, x)
    lower = np.zeros(n)
    upper = np.zeros(n)
    # interior couplings, active rows only
    act = d > 0.0
    upper[1:][act[:-1]] = -lam[:-1][act[:-1]]   # superdiag entry of row i (i<n-1)
    lower[:-1][act[1:]] = -lam[1:][act[1:]]     # subdiag entry of row i (i>0)
    # reflected ghost doubles the inward coupling at the ends
    if act[0]:
        upper[1] = -2.0 * lam[0]
    if act[-1]:
        lower[-2] = -2.0 * lam[-1]
    ab = np.vstack([upper, diag, lower])
    try:
        return scipy.linalg.solve_banded((1, 1), ab, rhs)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover
        raise SolveError(f"policy evaluation system is singular: {exc}") from exc


def hjb_residual(v: ScalarField, b: ScalarField, params: PlayerParams) -> ScalarField:
    """Pointwise residual of r v - r x - b v'' - (v''_+)^2 / (2rc).

    Interior nodes use the central second difference; boundary nodes take the
    relaxed viscosity condition min(|equation with reflected difference|,
    |one-sided slope|).
    """
    if v.grid != b.grid:
        raise GridError("value and opponent fields live on different grids")
    r, c = params.r, params.c
    x = v.grid.nodes()
    h = v.grid.h
    m = _policy_curvature(v.values, h)
    res = r * v.values - r * x - b.values * m - np.maximum(m, 0.0) ** 2 / (2.0 * r * c)
    res[0] = min(abs(res[0]), abs((v.values[1] - v.values[0]) / h))
    res[-1] = min(abs(res[-1]), abs((v.values[-1] - v.values[-2]) / h))
    return ScalarField(v.grid, res)


def solve_br(
    params: PlayerParams,
    opponent: ScalarField,
    max_iter: int = MAX_ITER,
    tol: float = CONV_TOL,
    init: str = "diffusive",
) -> BestResponse:
    """Policy iteration for the best-response problem given opponent field b.

    init="diffusive" starts from the value of the maximal-control policy
    a = sqrt(2/c) everywhere (one extra linear solve); starting from the
    identity instead advances the free boundary only one node per sweep.
    Both initializations reach the same fixed point.
    """
    if np.any(opponent.values < 0):
        raise ValueError("opponent strategy has negative values")
    grid = opponent.grid
    if not (abs(grid.lo) < 1e-12 and abs(grid.hi - 1.0) < 1e-12):
        raise ValueError("opponent must be defined on the full state space [0, 1]")
    v, a, it, damped = _howard_solve(
        params, grid.nodes(), opponent.values, grid.h, max_iter, tol, init
    )
    vf = ScalarField(grid, v)
    lower, upper, _ = extract_thresholds(vf)
    res = hjb_residual(vf, opponent, params)
    kink = detect_kink(vf)
    return BestResponse(
        params=params,
        opponent=opponent,
        v=vf,
        control=ScalarField(grid, a),
        lower_threshold=lower,
        upper_threshold=upper,
        residual=float(np.max(np.abs(res.values[1:-1]))),
        kink=kink,
        iterations=it,
        damped_steps=damped,
    )


def masked_residual(
    v: ScalarField,
    b: ScalarField,
    params: PlayerParams,
    exclude: tuple[float, ...] = (),
    width: int = 3,
) -> float:
    """Sup-norm of the interior HJB residual, excluding `width` nodes on each
    side of every location in `exclude` (thresholds and kinks, where the
    solution loses the regularity a central difference assumes)."""
    res = hjb_residual(v, b, params)
    vals = np.abs(res.values)
    mask = np.ones(v.grid.n, dtype=bool)
    mask[0] = mask[-1] = False
    for x0 in exclude:
        j = int(round((x0 - v.grid.lo) / v.grid.h))
        mask[max(j - width, 0):j + width + 1] = False
    if not np.any(mask):
        return 0.0
    return float(np.max(vals[mask]))


def solve_active_region(
    params: PlayerParams,
    grid: Grid,
    max_iter: int = MAX_ITER,
    tol: float = CONV_TOL,
) -> tuple[ScalarField, ScalarField, int]:
    """Single-player solve (opponent passive) on a restricted domain [0, X].

    The same monotone scheme as solve_br; the right end takes the relaxed
    boundary treatment, so an absorbed end (value = identity, control
    vanishing) emerges without being imposed.  Returns (value, control,
    iterations).  Used to assemble equilibrium fields whose discrete HJB
    residual is at the solver tolerance rather than the truncation error of
    exact-solution nodal values, which degrades near an absorbed end.
    """
    if abs(grid.lo) > 1e-12:
        raise ValueError("active region must start at 0")
    v, a, it, _ = _howard_solve(
        params, grid.nodes(), np.zeros(grid.n), grid.h, max_iter, tol, "diffusive"
    )
    return ScalarField(grid, v), ScalarField(grid, a), it


def _howard_solve(
    params: PlayerParams,
    x: np.ndarray,
    b: np.ndarray,
    h: float,
    max_iter: int,
    tol: float,
    init: str,
) -> tuple[np.ndarray, np.ndarray, int, int]:
    r, c = params.r, params.c
    if init == "diffusive":
        a_max = math.sqrt(2.0 / c)
        v = _policy_evaluate(x, np.full_like(x, a_max), b, params, h)
    elif init == "identity":
        v = x.copy()
    elif init == "zero":
        v = np.zeros_like(x)
    else:
        raise ValueError(f"unknown init {init!r}")
    a = np.zeros_like(x)
    history: list[float] = []
    damped = 0
    for it in range(1, max_iter + 1):
        a_new = np.maximum(_policy_curvature(v, h), 0.0) / (r * c)
        if len(history) >= 2 and history[-1] > history[-2] and history[-2] > (history[-3] if len(history) >= 3 else history[-2]):
            a_new = 0.5 * (a_new + a)  # damp an oscillating policy update
            damped += 1
        v_new = _policy_evaluate(x, a_new, b, params, h)
        change = float(np.max(np.abs(v_new - v)))
        history.append(change)
        v, a = v_new, a_new
        if change < tol:
            break
    else:
        raise SolveError(
            f"policy iteration did not converge in {max_iter} iterations; "
            f"last changes {history[-5:]}"
        )
    return v, a, it, damped


def extract_thresholds(
    v: ScalarField, band: Optional[float] = None
) -> tuple[float, float, float]:
    """Thresholds of the three-region structure from a solved value field.

    Returns (lower, upper, band).  lower is the right edge of {v - x > band},
    refined through the quartic tangency of v - x at the satisficing threshold
    (the raw band crossing sits O(band^(1/4)) short of it); upper is the left
    edge of {x - v > band}, refined linearly, defaulting to 1.  A field with no
    beneficial region returns lower = 0, which callers should treat as a
    degenerate flag: true solutions always have lower > 0.
    """
    g = v.grid
    h = g.h
    if band is None:
        band = 10.0 * h * h
    x = g.nodes()
    w = v.values - x
    above = np.nonzero(w > band)[0]
    if len(above) == 0:
        lower = 0.0
    else:
        i = int(above[-1])
        lower = x[i]
        if 1 <= i <= g.n - 2:
            m = (w[i - 1] - 2.0 * w[i] + w[i + 1]) / (h * h)
            wp = (w[i + 1] - w[i - 1]) / (2.0 * h)
            if m > 0:
                # local quartic model w = A s^4: distance s = sqrt(12 w / w'')
                s = math.sqrt(12.0 * w[i] / m)
                # accept only if the observed slope matches the model's -w'' s / 3
                if wp < 0 and abs(-m * s / 3.0 - wp) <= 0.25 * abs(wp):
                    lower = min(x[i] + s, g.hi)
    below = np.nonzero(-w > band)[0]
    below = below[x[below] >= lower] if len(below) else below
    if len(below) == 0:
        upper = g.hi
    else:
        i = int(below[0])
        upper = x[i]
        if i >= 1:
            d = -w
            slope = (d[i] - d[i - 1]) / h
            if slope > 0:
                upper = max(lower, x[i] - d[i] / slope)
    return float(lower), float(upper), band


def detect_kink(v: ScalarField, band: Optional[float] = None) -> Optional[Kink]:
    """Largest one-sided slope gap, reported as a kink when it exceeds the band.

    Concave kinks (left slope above right slope) are admissible; a convex kink
    means the field is not a valid solution and raises.
    """
    g = v.grid
    h = g.h
    if band is None:
        band = 10.0 * h
    slopes = np.diff(v.values) / h
    gaps = slopes[:-1] - slopes[1:]  # positive = concave
    i = int(np.argmax(np.abs(gaps)))
    # smooth curvature produces gaps of size h |v''| that vary slowly from node
    # to node; a genuine kink is an isolated O(1) gap that dwarfs its neighbors
    neighbors = [abs(gaps[j]) for j in (i - 3, i + 3) if 0 <= j < len(gaps)]
    isolated = abs(gaps[i]) > 4.0 * max(neighbors, default=0.0) + band
    if abs(gaps[i]) <= band or not isolated:
        return None
    kink = Kink(
        x=float(g.nodes()[i + 1]),
        slope_left=float(slopes[i]),
        slope_right=float(slopes[i + 1]),
    )
    if gaps[i] < 0:
        raise KinkError(
            f"convex kink: solution invalid at x={kink.x} "
            f"(slopes {kink.slope_left} -> {kink.slope_right})"
        )
    return kink
