"""Independent brute-force oracle: a discrete-time trinomial Markov-chain
approximation of the single-player control problem, solved by value iteration.

The chain is locally consistent with the controlled diffusion (Kushner-Dupuis):
from state x under action a the process moves to x +/- h with probability
p = (a + b(x)) delta / h^2 each and stays with probability 1 - 2p, matching the
first two moments of sqrt(2 (a + b)) dB over a step of length delta.  Boundary
states reflect by folding the outward branch onto the inward neighbor.  The
oracle shares no code path with the finite-difference solver, so agreement
between the two is genuine evidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .benchmark import PlayerParams
from .grid_numerics import Grid, GridError, ScalarField

VALUE_ITER_TOL = 1e-12
MAX_SWEEPS = 10_000_000


class CflError(ValueError):
    pass


@dataclass(frozen=True)
class MdpSpec:
    grid: Grid
    n_actions: int
    delta: float
    params: PlayerParams
    opponent: ScalarField

    def __post_init__(self):
        if abs(self.grid.lo) > 1e-12 or abs(self.grid.hi - 1.0) > 1e-12:
            raise GridError("oracle state space must be [0, 1]")
        if self.opponent.grid != self.grid:
            raise GridError("opponent field must live on the oracle grid")
        if self.n_actions < 1:
            raise ValueError("need at least one action level")
        if self.delta <= 0:
            raise ValueError("time step must be positive")
        cfl = 2.0 * (self.a_max + float(np.max(self.opponent.values)))
        cfl *= self.delta / self.grid.h ** 2
        if cfl > 1.0 + 1e-12:
            raise CflError(
                f"CFL violated: 2 (a_max + max b) delta / h^2 = {cfl:.6g} > 1"
            )

    @property
    def a_max(self) -> float:
        return math.sqrt(2.0 / self.params.c)

    def actions(self) -> np.ndarray:
        if self.n_actions == 1:
            return np.zeros(1)
        return np.linspace(0.0, self.a_max, self.n_actions)


@dataclass
class MdpSolution:
    spec: MdpSpec
    value: ScalarField
    policy: ScalarField
    sweeps: int


def solve_mdp(spec: MdpSpec) -> MdpSolution:
    """Value iteration to sup-norm change < 1e-12; returns value + greedy policy."""
    g = spec.grid
    x = g.nodes()
    h2 = g.h * g.h
    r, c = spec.params.r, spec.params.c
    disc = math.exp(-r * spec.delta)
    actions = spec.actions()  # (m,)
    b = spec.opponent.values  # (n,)
    # transition probability per (state, action)
    p = (b[:, None] + actions[None, :]) * (spec.delta / h2)  # (n, m)
    reward = (1.0 - disc) * (x[:, None] - 0.5 * c * actions[None, :] ** 2)
    # reflected neighbor indices
    idx_up = np.arange(1, g.n + 1)
    idx_up[-1] = g.n - 2
    idx_dn = np.arange(-1, g.n - 1)
    idx_dn[0] = 1

    v = x.copy()
    for sweep in range(1, MAX_SWEEPS + 1):
        ev = v[:, None] + p * ((v[idx_up] - 2.0 * v + v[idx_dn])[:, None])
        q = reward + disc * ev
        v_new = q.max(axis=1)
        change = float(np.max(np.abs(v_new - v)))
        v = v_new
        if change < VALUE_ITER_TOL:
            break
    else:  # pragma: no cover
        raise RuntimeError("value iteration did not converge")
    greedy = actions[np.argmax(reward + disc * (
        v[:, None] + p * ((v[idx_up] - 2.0 * v + v[idx_dn])[:, None])
    ), axis=1)]
    return MdpSolution(
        spec=spec,
        value=ScalarField(g, v),
        policy=ScalarField(g, greedy),
        sweeps=sweep,
    )


def policy_threshold(sol: MdpSolution) -> float:
    """Right edge of the greedy policy's active region.

    The action grid quantizes small controls to zero, so the last active node
    sits well short of the true threshold when the control vanishes
    quadratically.  Fit sqrt(action), which is then locally linear, over the
    last well-resolved nodes and return its zero crossing.
    """
    a = sol.policy.values
    x = sol.spec.grid.nodes()
    spacing = sol.spec.a_max / max(sol.spec.n_actions - 1, 1)
    active = np.nonzero(a >= 2.0 * spacing)[0]
    if len(active) < 2:
        pos = np.nonzero(a > 0)[0]
        return float(x[pos[-1]]) if len(pos) else 0.0
    tail = active[-10:]
    slope, intercept = np.polyfit(x[tail], np.sqrt(a[tail]), 1)
    if slope >= 0:
        return float(x[active[-1]])
    return float(min(-intercept / slope, sol.spec.grid.hi))


def compare(oracle: ScalarField, solver: ScalarField) -> tuple[float, float]:
    """Sup-norm difference between two value fields and its location.

    Fields on different grids are compared on the oracle grid, resampling the
    other field by linear interpolation.
    """
    if solver.grid != oracle.grid:
        resampled = np.interp(
            oracle.grid.nodes(), solver.grid.nodes(), solver.values
        )
    else:
        resampled = solver.values
    diff = np.abs(oracle.values - resampled)
    i = int(np.argmax(diff))
    return float(diff[i]), float(oracle.grid.nodes()[i])
