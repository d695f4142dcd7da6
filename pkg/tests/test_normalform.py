import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptadaptive.backstepping import AdaptiveState, EpsilonSchedule, GainConfig, control_law
from ptadaptive.model import StrictFeedbackModel, builtin_wing_rock
from ptadaptive.normalform import (FilterCoefficients, GainPolynomialFilter, check_filter_gains,
                                   control_law_nf, filter_coefficients, filter_value,
                                   prescribed_closed_form_matches, psi)
from ptadaptive.timescale import Asymptotic, Exponential, PrescribedTime, SuperExponential

from oracles import operator_filter


def pure_chain(n):
    return StrictFeedbackModel(
        name="chain", n=n, q=1, phi=tuple((lambda x: [0.0]) for _ in range(n)),
        theta_true=lambda t, x: np.array([0.0]), b_true=lambda t: 1.0, b_lower=1.0,
    )


class TestCoefficients:
    def test_second_order(self):
        fc = filter_coefficients([3], 2)
        assert fc.c == (3, 1)
        assert fc.l == (3, 3)

    @pytest.mark.parametrize("k1,k2", [(6, 6), (4, 3), (7, 5)])
    def test_third_order_closed_form(self, k1, k2):
        assert filter_coefficients([k1, k2], 3).c == (k1 * k2 + k1, k2 + k1, 1)

    def test_fourth_order_example(self):
        fc = filter_coefficients([5, 4, 3], 4)
        assert fc == FilterCoefficients((125, 61, 12, 1), (375, 247, 73, 12))
        assert all(isinstance(v, int) for v in fc.c + fc.l)

    @pytest.mark.parametrize("k", [[5, 4, 3], [6, 5, 4, 3], [9, 7, 5, 4]])
    def test_operator_expansion(self, k):
        n = len(k) + 1
        c, l = operator_filter(k, n)
        fc = filter_coefficients(k, n)
        assert list(fc.c) == c and list(fc.l) == l

    def test_argument_errors(self):
        with pytest.raises(ValueError):
            filter_coefficients([3, 3], 2)
        with pytest.raises(ValueError):
            filter_coefficients([], 0)

    def test_gain_check(self):
        assert check_filter_gains([3], 2).ok
        assert not check_filter_gains([2], 2).ok


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 5), st.data())
def test_symbolic_expansion_random_gains(n, data):
    k = [data.draw(st.integers(n - i + 2, 15)) for i in range(1, n)]
    c, l = operator_filter(k, n)
    fc = filter_coefficients(k, n)
    assert list(fc.c) == c and list(fc.l) == l


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), st.floats(0.5, 3.0), st.floats(0.0, 0.95), st.data())
def test_general_gain_filter_reproduces_closed_form(n, T, frac, data):
    k = [data.draw(st.integers(n - i + 2, 12)) for i in range(1, n)]
    assert prescribed_closed_form_matches(k, n, T, frac * T)


class TestValues:
    def test_filter_value_examples(self):
        assert filter_value(filter_coefficients([3], 2), 2.0, [0.2, 0.0]) == pytest.approx(1.2)
        assert filter_value(filter_coefficients([6, 6], 3), 1.0, [1.0, 1.0, 1.0]) == 55
        assert filter_value(filter_coefficients([6, 6], 3), 5.0, [0.0, 0.0, 0.0]) == 0

    def test_psi_examples(self):
        fc = filter_coefficients([3], 2)
        assert psi(fc, 2.0, [0.2, 0.0], [0.0, 0.0], [0.2, 0.0]) == pytest.approx(2.4)
        assert psi(fc, 2.0, [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]) == 0
        assert psi(fc, 2.0, [0.0, 0.0], [5.0, -3.0], [0.0, 0.0]) == 0

    def test_general_filter_time_derivative(self):
        # d/dt s_n along the chain equals drift + x_{n+1}
        gf = GainPolynomialFilter([4.0, 3.0], 3)
        ts = SuperExponential(0.1, 1.0)
        x = np.array([0.3, -0.2, 0.5])
        xdot = np.array([-0.2, 0.5, 0.0])  # x4 := 0 (drift excludes the input channel)
        t, h = 0.8, 1e-6
        s = lambda tt: gf.value(gf.gains(ts, tt), x + (tt - t) * xdot)
        fd = (s(t + h) - s(t - h)) / (2 * h)
        assert fd == pytest.approx(gf.drift_value(gf.gains(ts, t), x), rel=1e-7)

    def test_partial_surfaces_last_is_value(self):
        gf = GainPolynomialFilter([4.0, 3.0], 3)
        g = gf.gains(Exponential(1.0), 0.3)
        x = [0.1, 0.2, 0.3]
        s = gf.partial_surfaces(g, x)
        assert s[0] == 0.1
        assert s[-1] == pytest.approx(gf.value(g, x))


class TestControlLaw:
    cfg = GainConfig(k=(3, 3), Gamma=np.eye(2), gamma_delta=0.01, gamma_rho=0.01, epsilon=EpsilonSchedule(1.0, -0.1))

    def test_origin(self):
        out = control_law_nf(builtin_wing_rock(), self.cfg, [0.0, 0.0], AdaptiveState([1.0, 2.0], 0.5, 1.0), 0.1,
                             PrescribedTime(0.5))
        assert out.u == 0.0
        np.testing.assert_array_equal(out.theta_rate, [0.0, 0.0])
        assert out.delta_rate == 0.0 and out.rho_rate == 0.0

    def test_asymptotic_wing_rock_transcription(self):
        # g = 1, g' = 0: s = 3*0.2, drift = k1 g' x1 + k1 g x2 = 0, phi_n = [0.2, 0]
        out = control_law_nf(builtin_wing_rock(), self.cfg, [0.2, 0.0], AdaptiveState([0.0, 0.0], 0.0, 1.0), 0.0,
                             Asymptotic())
        s, eps = 0.6, 1.0
        K = 3.0 + 0.0 + 0.0 / math.sqrt(s * s * 0.0 + eps * eps)
        assert out.surface == pytest.approx(s)
        assert out.Psi == 0.0
        assert out.u == pytest.approx(-K * s, rel=1e-15)
        np.testing.assert_allclose(out.theta_rate, [0.2 * s, 0.0])

    def test_prescribed_value_with_estimates(self):
        ts = PrescribedTime(0.5)
        t = 0.25
        mu = 4.0
        x = np.array([0.1, -0.3])
        a = AdaptiveState([-20.0, 0.5], 0.4, 1.1)
        cfg = GainConfig(k=(3, 3), Gamma=np.eye(2), epsilon=0.1)
        out = control_law_nf(builtin_wing_rock(), cfg, x, a, t, ts)
        s = 3 * mu * x[0] + x[1]
        phi = x
        ps = 3 * mu ** 2 * x[0] + 3 * mu * x[1] + phi @ a.theta_hat
        pp = phi @ phi
        K = 3 * mu + 0.4 * pp / math.sqrt(s * s * pp + 0.01) + ps * ps / math.sqrt(s * s * ps * ps + 0.01)
        assert out.u == pytest.approx(1.1 * -K * s, rel=1e-13)
        assert out.delta_rate == pytest.approx(0.01 * s * s * pp / math.sqrt(s * s * pp + 0.01), rel=1e-13)

    def test_damping_rate_saturates(self):
        cfg = GainConfig(k=(3, 3), Gamma=np.eye(2), gamma_delta=0.5, epsilon=1e-6)
        x = [2.0, 1.0]
        out = control_law_nf(builtin_wing_rock(), cfg, x, AdaptiveState([0.0, 0.0]), 0.0, Asymptotic())
        s = out.surface
        assert out.delta_rate == pytest.approx(0.5 * abs(s) * math.hypot(*x), rel=1e-9)

    def test_refuses_non_normal_form(self):
        from ptadaptive.model import builtin_benchmark
        with pytest.raises(ValueError, match="last equation"):
            control_law_nf(builtin_benchmark(), GainConfig(k=(6, 6, 6), Gamma=[[1.0]]), [0, 0, 0],
                           AdaptiveState([0.0]), 0.0, PrescribedTime(2.0))


class TestPureChainAgainstBackstepping:
    """With no regressors both designs share the last error coordinate; the
    backstepping bracket carries an extra coupling term z_{n-1} = x_1."""

    cfg = GainConfig(k=(3, 4), Gamma=[[1.0]], epsilon=0.1)

    def _both(self, x, t):
        m, ts = pure_chain(2), PrescribedTime(1.0)
        a = AdaptiveState([0.0], 0.0, 1.0)
        return control_law(m, self.cfg, x, a, t, ts), control_law_nf(m, self.cfg, x, a, t, ts)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0, 0.9))
    def test_surfaces_and_drift(self, x1, x2, t):
        bs_out, nf_out = self._both([x1, x2], t)
        assert bs_out.surface == pytest.approx(nf_out.surface, rel=1e-12, abs=1e-15)
        assert bs_out.Psi - x1 == pytest.approx(nf_out.Psi, rel=1e-10, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(-1, 1), st.floats(0, 0.9))
    def test_controls_agree_without_coupling_term(self, x2, t):
        bs_out, nf_out = self._both([0.0, x2], t)
        assert bs_out.u == pytest.approx(nf_out.u, rel=1e-8, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=2, max_size=2), st.lists(st.floats(-30, 30), min_size=2, max_size=2),
       st.floats(0, 2), st.floats(0.3, 3), st.floats(0, 0.49))
def test_rate_signs(x, th, dh, rho, t):
    cfg = GainConfig(k=(3, 3), Gamma=np.eye(2), epsilon=0.1)
    out = control_law_nf(builtin_wing_rock(), cfg, x, AdaptiveState(th, dh, rho), t, PrescribedTime(0.5))
    assert out.delta_rate >= 0
    assert out.rho_rate >= 0
    assert out.rho_rate == pytest.approx(0.01 * out.K * out.surface ** 2, rel=1e-12, abs=1e-300)
    assert out.K > 0
