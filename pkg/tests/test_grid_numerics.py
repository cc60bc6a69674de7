import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from instability.grid_numerics import (
    Grid,
    GridError,
    ScalarField,
    bisect,
    integrate_until,
    interp_linear,
    second_diff,
    second_diff_all,
)


class TestGrid:
    def test_nodes_span_endpoints(self):
        g = Grid(0.0, 1.0, 11)
        x = g.nodes()
        assert x[0] == 0.0 and x[-1] == 1.0
        assert g.h == pytest.approx(0.1)
        assert len(x) == 11

    def test_invalid_grids_raise(self):
        with pytest.raises(GridError):
            Grid(0.5, 0.5, 11)
        with pytest.raises(GridError):
            Grid(-0.1, 1.0, 11)
        with pytest.raises(GridError):
            Grid(0.0, 1.0, 2)

    @given(n=st.integers(3, 500))
    def test_uniform_spacing(self, n):
        g = Grid(0.0, 1.0, n)
        assert np.allclose(np.diff(g.nodes()), g.h)


class TestScalarField:
    def test_shape_mismatch_raises(self):
        g = Grid(0.0, 1.0, 5)
        with pytest.raises(GridError):
            ScalarField(g, np.zeros(4))

    def test_nonfinite_raises(self):
        g = Grid(0.0, 1.0, 5)
        with pytest.raises(GridError):
            ScalarField(g, np.array([0.0, 1.0, np.nan, 0.0, 1.0]))

    def test_from_function(self):
        g = Grid(0.0, 1.0, 101)
        f = ScalarField.from_function(g, lambda x: x * x)
        assert f.values[50] == pytest.approx(0.25)


class TestFiniteDifferences:
    def test_second_diff_exact_on_quadratic(self):
        g = Grid(0.0, 1.0, 101)
        f = ScalarField.from_function(g, lambda x: 3.0 * x * x)
        assert second_diff(f, 50) == pytest.approx(6.0)
        assert np.allclose(second_diff_all(f), 6.0)

    def test_boundary_raises(self):
        g = Grid(0.0, 1.0, 5)
        f = ScalarField.constant(g, 0.0)
        with pytest.raises(GridError):
            second_diff(f, 0)
        with pytest.raises(GridError):
            second_diff(f, 4)


class TestInterp:
    def test_exact_at_nodes_linear_between(self):
        g = Grid(0.0, 1.0, 11)
        f = ScalarField.from_function(g, lambda x: 2.0 * x + 1.0)
        assert interp_linear(f, 0.3) == pytest.approx(1.6)
        assert interp_linear(f, 0.35) == pytest.approx(1.7)

    def test_out_of_domain_raises(self):
        g = Grid(0.2, 0.8, 11)
        f = ScalarField.constant(g, 0.0)
        with pytest.raises(GridError):
            interp_linear(f, 0.1)


class TestBisect:
    def test_sqrt_two(self):
        root = bisect(lambda x: x * x - 2.0, 0.0, 2.0)
        assert root == pytest.approx(math.sqrt(2.0), abs=1e-11)

    def test_invalid_bracket_raises(self):
        with pytest.raises(ValueError):
            bisect(lambda x: x * x + 1.0, 0.0, 1.0)

    @given(r=st.floats(0.1, 0.9))
    @settings(max_examples=30)
    def test_recovers_planted_root(self, r):
        root = bisect(lambda x: (x - r) ** 3, 0.0, 1.0)
        assert abs(root - r) < 1e-6  # cubic flattens the sign change


class TestIntegrateUntil:
    def test_matches_cosh(self):
        # w'' = w from (1, 0) is cosh
        traj = integrate_until(
            lambda x, w: w, 0.0, 1.0, 0.0,
            stop=lambda x, w, p: False, step=1e-3, x_max=1.0,
        )
        assert traj.event is None
        assert traj.ws[-1] == pytest.approx(math.cosh(1.0), abs=1e-10)
        assert traj.eval(0.5) == pytest.approx(math.cosh(0.5), abs=1e-9)

    def test_event_refinement_fourth_order(self):
        # w'' = -w from (1, 0) is cos; stop when w drops through 0.3:
        # a transversal event at arccos(0.3)
        target = math.acos(0.3)

        def run(step):
            traj = integrate_until(
                lambda x, w: -w, 0.0, 1.0, 0.0,
                stop=lambda x, w, p: w < 0.3, step=step, x_max=3.0,
            )
            return abs(traj.event[0] - target)

        e1, e2 = run(2e-2), run(1e-2)
        assert e2 > 0
        order = math.log2(e1 / e2)
        assert 3.5 <= order <= 5.5

    def test_immediate_stop(self):
        traj = integrate_until(
            lambda x, w: 0.0, 0.0, 1.0, 0.0,
            stop=lambda x, w, p: True, step=1e-2, x_max=1.0,
        )
        assert traj.event == (0.0, 1.0, 0.0)
