import numpy as np
import pytest

from instability.benchmark import PlayerParams, Side
from instability.equilibrium import (
    DEFAULT_N,
    build_accommodating,
    build_deterrence,
    verify_equilibrium,
)
from instability.sde_sim import SimConfig, simulate

P7A = PlayerParams(r=7.0, c=15.0, side=Side.A)
P7B = PlayerParams(r=7.0, c=15.0, side=Side.B)
P1A = PlayerParams(r=1.0, c=2.0, side=Side.A)
P1B = PlayerParams(r=1.0, c=2.0, side=Side.B)

ORACLE_CASES = [(7.0, 15.0), (5.0, 6.0), (6.0, 15.0), (10.0, 1.0)]


@pytest.fixture(scope="session")
def acc_eq():
    eq = build_accommodating(P7A, P7B, DEFAULT_N)
    verify_equilibrium(eq)
    return eq


@pytest.fixture(scope="session")
def det_eqs():
    """Deterrence constructions at the three reference stable points, verified."""
    out = {}
    for xbar in (0.25, 0.5, 0.75):
        eq = build_deterrence(P1A, P1B, xbar, DEFAULT_N)
        verify_equilibrium(eq)
        out[xbar] = eq
    return out


@pytest.fixture(scope="session")
def det_eq(det_eqs):
    return det_eqs[0.5]


@pytest.fixture(scope="session")
def reference_sim(det_eq):
    """The reference dynamics run: 1000 paths from 0.1 under balanced deterrence."""
    cfg = SimConfig(x0=0.1, dt=1e-4, t_max=50.0, n_paths=1000, seed=42)
    return simulate(det_eq, cfg)
