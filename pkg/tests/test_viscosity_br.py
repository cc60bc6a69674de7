import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from instability.benchmark import closed_form_solution
from instability.grid_numerics import Grid, ScalarField
from instability.viscosity_br import (
    Kink,
    KinkError,
    detect_kink,
    extract_thresholds,
    hjb_residual,
    masked_residual,
    solve_active_region,
    solve_br,
)

from conftest import P7A

GRID = Grid(0.0, 1.0, 2001)
ZERO = ScalarField.constant(GRID, 0.0)


@pytest.fixture(scope="module")
def br_passive():
    return solve_br(P7A, ZERO)


class TestSolveBr:
    def test_matches_closed_form_against_passive(self, br_passive):
        cf = closed_form_solution(P7A, GRID.n)
        assert np.max(np.abs(br_passive.v.values - cf.v.values)) < 1e-5
        assert abs(br_passive.lower_threshold - cf.threshold) < 2.0 * GRID.h
        assert br_passive.kink is None

    def test_residual_at_solver_tolerance(self, br_passive):
        assert br_passive.residual < 1e-8

    def test_init_independence(self):
        a = solve_br(P7A, ZERO, init="diffusive")
        b = solve_br(P7A, ZERO, init="identity")
        assert np.max(np.abs(a.v.values - b.v.values)) < 1e-9

    def test_positive_opponent_shifts_threshold_out(self, br_passive):
        opp = ScalarField.constant(GRID, 0.05)
        br = solve_br(P7A, opp)
        assert br.lower_threshold > br_passive.lower_threshold
        # opponent volatility hurts at the top
        assert br.v.values[-1] < 1.0

    def test_negative_opponent_rejected(self):
        with pytest.raises(ValueError):
            solve_br(P7A, ScalarField.constant(GRID, -0.1))

    def test_partial_domain_opponent_rejected(self):
        g = Grid(0.0, 0.5, 101)
        with pytest.raises(ValueError):
            solve_br(P7A, ScalarField.constant(g, 0.0))

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=5, deadline=None)
    def test_monotone_opponents_give_monotone_controls(self, seed):
        rng = np.random.default_rng(seed)
        g = Grid(0.0, 1.0, 501)
        incs = rng.uniform(0.0, 1.0, g.n) * (rng.uniform(size=g.n) < 0.02)
        vals = np.cumsum(incs)
        if vals[-1] > 0:
            vals *= 0.3 / vals[-1]
        br = solve_br(P7A, ScalarField(g, vals))
        a = br.control.values
        active = a > 1e-8
        rises = np.nonzero((np.diff(a) > 1e-8) & active[:-1] & active[1:])[0]
        assert len(rises) <= 1


class TestActiveRegion:
    def test_absorbed_end_emerges(self):
        sol_v, sol_a, _ = solve_active_region(P7A, Grid(0.0, 0.2, 401))
        # control vanishes and value meets the identity at the right end
        assert sol_a.values[-1] < 1e-6
        assert sol_v.values[-1] == pytest.approx(0.2, abs=1e-8)
        assert sol_v.values[0] > 0.0

    def test_rejects_shifted_domain(self):
        with pytest.raises(ValueError):
            solve_active_region(P7A, Grid(0.1, 0.5, 101))


class TestResiduals:
    def test_masked_residual_excludes_thresholds(self, br_passive):
        full = float(np.max(np.abs(
            hjb_residual(br_passive.v, ZERO, P7A).values[1:-1]
        )))
        masked = masked_residual(
            br_passive.v, ZERO, P7A, exclude=(br_passive.lower_threshold,)
        )
        assert masked <= full
        assert masked < 1e-8


class TestThresholds:
    def test_closed_form_threshold_recovered(self):
        cf = closed_form_solution(P7A, GRID.n)
        lower, upper, _ = extract_thresholds(cf.v)
        assert abs(lower - cf.threshold) < 2.0 * GRID.h
        assert upper == pytest.approx(1.0)

    def test_degenerate_field_flags_zero(self):
        lower, upper, _ = extract_thresholds(
            ScalarField(GRID, GRID.nodes().copy())
        )
        assert lower == 0.0


class TestKinks:
    def test_smooth_field_no_kink(self):
        f = ScalarField.from_function(GRID, lambda x: x * x)
        assert detect_kink(f) is None

    def test_concave_kink_detected(self):
        f = ScalarField.from_function(GRID, lambda x: min(x, 0.5))
        kink = detect_kink(f)
        assert isinstance(kink, Kink)
        assert kink.x == pytest.approx(0.5, abs=GRID.h)
        assert kink.slope_left > kink.slope_right

    def test_convex_kink_raises(self):
        f = ScalarField.from_function(GRID, lambda x: max(x - 0.5, 0.0))
        with pytest.raises(KinkError):
            detect_kink(f)
