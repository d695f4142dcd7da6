import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptadaptive.model import (WING_ROCK_THETA, builtin_benchmark, builtin_wing_rock, get_model, model_names,
                              sgn)

BUILTINS = [builtin_benchmark, builtin_wing_rock]


class TestBenchmark:
    def test_constants(self):
        m = builtin_benchmark()
        assert m.b_true(0.0) == pytest.approx(1.6)
        assert m.b_lower == 1.2
        assert m.delta_theta_true == 1.0
        assert (m.n, m.q) == (3, 1)
        assert not m.normal_form

    def test_rhs_at_unit_first_state(self):
        # theta(0) = 1 + 0.6 cos 0 + 0.2 sin 0 + 0.2 sgn(sin 0) = 1.6
        m = builtin_benchmark()
        np.testing.assert_allclose(m.plant_rhs([1.0, 0.0, 0.0], 0.0, 0.0), [1.6, 0.0, 0.0])


class TestWingRock:
    def test_constants(self):
        m = builtin_wing_rock()
        assert m.params["theta1"] == -26.6667
        assert m.params["theta2"] == 0.67485
        assert m.b_lower == 1.8
        assert list(m.phi[0]([0.3, 0.4])) == [0.0, 0.0]
        assert m.normal_form

    def test_rhs_at_start(self):
        m = builtin_wing_rock()
        np.testing.assert_allclose(m.plant_rhs([0.2, 0.0], 0.0, 0.0), [0.0, -26.6667 * 0.2])

    def test_switching_parameter(self):
        m = builtin_wing_rock()
        t = 0.3  # sin(0.9) > 0
        np.testing.assert_allclose(m.theta_true(t, None), 1.2 * np.array(WING_ROCK_THETA))


class TestRegistry:
    def test_names(self):
        assert model_names() == ["benchmark", "wing_rock"]

    def test_overrides(self):
        m = get_model("benchmark", b_lower=1.0, ell_theta=[2.0])
        assert m.b_lower == 1.0
        np.testing.assert_allclose(m.ell_theta, [2.0])

    def test_unknown(self):
        with pytest.raises(ValueError, match="unknown model"):
            get_model("pendulum")
        with pytest.raises(ValueError, match="overrides"):
            get_model("benchmark", n=4)


def test_sign_of_zero():
    assert sgn(0.0) == 0.0
    assert sgn(-3.0) == -1.0


@pytest.mark.parametrize("factory", BUILTINS)
def test_regressors_vanish_at_origin(factory):
    m = factory()
    for i in range(m.n):
        assert all(v == 0 for v in m.phi[i]([0.0] * m.n))
    for t in (0.0, 0.7, 3.1):
        np.testing.assert_array_equal(m.plant_rhs(np.zeros(m.n), 0.0, t), np.zeros(m.n))


@pytest.mark.parametrize("factory", BUILTINS)
def test_input_gain_above_lower_bound(factory):
    m = factory()
    t = np.linspace(0.0, 20.0, 20001)
    assert min(m.b_true(float(s)) for s in t) >= m.b_lower


@pytest.mark.parametrize("factory", BUILTINS)
@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_plant_is_affine_in_input(factory, data):
    m = factory()
    x = np.array(data.draw(st.lists(st.floats(-3, 3), min_size=m.n, max_size=m.n)))
    u = data.draw(st.floats(-50, 50))
    t = data.draw(st.floats(0, 10))
    diff = m.plant_rhs(x, u, t) - m.plant_rhs(x, 0.0, t)
    want = np.zeros(m.n)
    want[-1] = m.b_true(t) * u
    np.testing.assert_allclose(diff, want, rtol=1e-12, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 20), st.floats(-1, 1), st.floats(-1, 1))
def test_benchmark_parameter_within_radius(t, x1, x3):
    m = builtin_benchmark()
    th = m.theta_true(t, [x1, 0.0, x3])
    assert abs(th[0] - 1.0) <= 1.0 + 1e-12
    assert abs(th[0]) <= 2.0 + 1e-12
    assert math.isfinite(th[0])
