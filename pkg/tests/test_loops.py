import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from olsen_gspt.errors import DomainError, InfeasibleError
from olsen_gspt.loops import (LoopSpec, integrate_loop, invariant_line, landing_point, loop_dy, loop_extrema,
                              loop_polyline, loop_y, on_line)
from olsen_gspt.model import scaled_preset

SP = scaled_preset("fig6")


def spec(a1=0.6, b1=1.0198, eps_b=SP.eps_b):
    return LoopSpec(a1, b1, SP.kappa, eps_b)


def test_spec_validation():
    with pytest.raises(DomainError):
        LoopSpec(-1.0, 1.0, 3.9, 0.06)
    with pytest.raises(DomainError):
        LoopSpec(20.0, 1.0, 3.9, 0.06)


def test_launch_value_and_slope():
    s = spec()
    assert loop_y(s.alpha1, s) == 0.0
    h = 1e-6
    fd = (loop_y(s.alpha1 + h, s) - loop_y(s.alpha1 - h, s)) / (2 * h)
    exact = s.kappa * (1 - 2 * s.alpha1 * s.beta1) / (s.alpha1 * s.beta1)
    assert fd == pytest.approx(exact, rel=1e-6)


def test_log_argument_guard():
    with pytest.raises(DomainError):
        loop_y(-0.1, spec())


def test_extrema():
    s = spec()
    ap, am = loop_extrema(s)
    assert ap > 0 > am
    assert abs(loop_dy(ap, s)) < 1e-10
    assert loop_y(ap, s) > 0


def test_extremum_zero_on_tangency():
    b1 = 0.9
    s = LoopSpec(0.5 / b1, b1, SP.kappa, SP.eps_b)
    ap, _ = loop_extrema(s)
    assert ap == pytest.approx(s.alpha1, rel=1e-12)
    assert abs(loop_y(ap, s)) < 1e-12


@pytest.mark.parametrize("eb", [1e-3, 1e-4, 1e-5])
def test_extremum_small_eps_b_limit(eb):
    s = spec(eps_b=eb)
    ap, _ = loop_extrema(s)
    assert abs(2 * ap * s.beta1 - 1) < 5 * eb


def test_landing_point_root():
    s = spec()
    a2 = landing_point(s)
    assert 0 < a2 < loop_extrema(s)[0]
    assert abs(loop_y(a2, s)) < 1e-12
    assert loop_y(a2 / 10, s) < loop_y(a2 / 2, s) < 0


def test_landing_point_requires_loop():
    with pytest.raises(InfeasibleError):
        landing_point(LoopSpec(0.3, 1.0, SP.kappa, SP.eps_b))


def test_collapsed_loop():
    b1 = 0.9
    a1 = (1 + 1e-12) / (2 * b1)
    s = LoopSpec(a1, b1, SP.kappa, SP.eps_b)
    a2 = landing_point(s)
    assert a2 == pytest.approx(a1, rel=1e-5)
    assert loop_extrema(s)[0] == pytest.approx(a1, rel=1e-5)


def test_ode_oracle_matches_profile_and_landing():
    s = spec()
    tr = integrate_loop(s)
    a, b, y = tr.states.T
    assert np.max(np.abs(y - loop_y(a, s))) < 1e-6
    assert np.max(np.abs(b - invariant_line(s, a))) < 1e-8
    assert tr.final[0] == pytest.approx(landing_point(s), abs=1e-5)


def test_invariant_line():
    s = spec()
    assert float(invariant_line(s, s.alpha1)) == pytest.approx(s.beta1)
    a2 = landing_point(s)
    b2 = float(invariant_line(s, a2))
    assert s.beta1 == pytest.approx(s.eps_b * s.alpha1 + b2 - s.eps_b * a2)
    assert on_line((a2, b2), s) and not on_line((a2, b2 + 1e-6), s)


def test_single_hump():
    s = spec()
    a = np.linspace(1e-4, s.alpha1, 20001)[:-1]
    y = loop_y(a, s)
    assert np.count_nonzero(np.diff(np.sign(y)) != 0) == 1
    dy = np.diff(y)
    assert np.count_nonzero(np.diff(np.sign(dy)) != 0) == 1


@settings(max_examples=60, deadline=None)
@given(st.floats(0.3, 2.0), st.floats(0.6, 1.5))
def test_landing_point_property(a1, b1):
    assume(2 * a1 * b1 > 1.05)
    s = LoopSpec(a1, b1, SP.kappa, SP.eps_b)
    a2 = landing_point(s)
    assert 0 < a2 < loop_extrema(s)[0] < a1
    assert abs(loop_y(a2, s)) < 1e-12


def test_polyline():
    s = spec()
    poly = loop_polyline(s)
    assert poly.shape == (2000, 3)
    assert poly[0, 0] == s.alpha1 and poly[-1, 0] == pytest.approx(landing_point(s))
    assert np.all(poly[:, 2] >= 0)
    assert np.allclose(poly[:, 1], invariant_line(s, poly[:, 0]))
    r = poly[:-1, 0] / poly[1:, 0]
    assert np.allclose(r, r[0])
