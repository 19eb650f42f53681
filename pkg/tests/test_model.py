import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from olsen_gspt.errors import DomainError
from olsen_gspt.integrate import IntegratorConfig, integrate
from olsen_gspt.model import (OlsenParams, RegimeTag, ScaledParams, classify_regime, consistent_kappa,
                              jac_fast, jac_original, jac_scaled, original_to_scaled, preset, rhs_fast,
                              rhs_original, rhs_scaled, scale_factors, scale_state, scaled_preset,
                              scaled_to_original, transform_params, unscale_state)


def test_rate_constants_k041():
    sp = transform_params(preset("olsen-0.41"))
    assert sp.mu == pytest.approx(0.97, abs=5e-3)
    assert sp.alpha == pytest.approx(0.37, abs=5e-3)
    assert sp.eps_b == pytest.approx(0.062, abs=5e-4)
    assert sp.eps2 == pytest.approx(0.013, abs=5e-4)
    assert sp.xi == pytest.approx(0.98, abs=5e-3)
    assert sp.delta == pytest.approx(1.2e-5, abs=5e-7)


def test_kappa_from_rates():
    assert transform_params(preset("olsen-0.41")).kappa == pytest.approx(math.sqrt(2 * 250 * 0.825) / 5.35)
    assert transform_params(preset("olsen-0.41")).kappa == pytest.approx(3.796, abs=5e-4)


def test_equal_k7_k8_gives_mu_one():
    assert transform_params(OlsenParams(k1=0.41, k7=0.5, k8=0.5)).mu == 1.0


def test_transform_deterministic():
    p = preset("olsen-0.16")
    assert transform_params(p) == transform_params(p)


def test_nonpositive_rates_rejected():
    with pytest.raises(DomainError):
        OlsenParams(k1=-0.1)


@pytest.mark.parametrize("name,tag", [("olsen-0.41", RegimeTag.EPS_B_MUCH_LARGER),
                                      ("olsen-0.16", RegimeTag.EPS_B_MUCH_SMALLER)])
def test_regimes(name, tag):
    assert classify_regime(transform_params(preset(name))).tag is tag


def test_regime_comparable():
    sp = ScaledParams(mu=1, alpha=0.3, eps_b=0.01, eps=0.1, xi=0.98, delta=0.0, kappa=3.9)
    assert classify_regime(sp).tag is RegimeTag.COMPARABLE


def test_rhs_original_at_origin():
    p = preset("olsen-0.41")
    assert np.allclose(rhs_original([0, 0, 0, 0], p), [p.k7, p.k8, p.k6, 0.0])


def test_rhs_fast_on_critical_manifold():
    sp = scaled_preset("fig6").replace(eps=1e-300, delta=0.0)
    a, b, x = 1.3, 0.7, 0.4
    y = x * x / (3 * a * b)
    # the x-component carries 1/eps; its numerator is what vanishes on C0
    f = rhs_fast([a, b, x, y], sp)
    assert abs(f[2] * sp.eps) < 1e-12


def test_scale_state_example_and_round_trip():
    assert np.allclose(scale_state([1, 1, 1, 1], 0.1), [1, 1, 0.1, 0.01])
    rng = np.random.default_rng(3)
    for z in rng.uniform(0, 2, (20, 4)):
        assert np.allclose(unscale_state(scale_state(z, 0.07), 0.07), z, rtol=1e-15)


def _pushforward_error(p, exact, kappa):
    sp = dataclasses.replace(transform_params(p), kappa=kappa)
    c = scale_factors(p, exact=exact)
    fac = np.array([c["A"], c["B"], c["X"], c["Y"]])
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(10):
        z2 = rng.uniform(0.1, 2.0, 4)
        Z = scaled_to_original(z2, p, exact=exact)
        lhs = rhs_original(Z, p) * c["T"] / fac
        rhs = rhs_scaled(z2, sp)
        worst = max(worst, float(np.max(np.abs(lhs - rhs) / (np.abs(rhs) + 1e-300))))
    return worst


def test_chain_rule_stated_scalings():
    # literal requirement: printed scalings and parameters reproduce the scaled field
    p = preset("olsen-0.41")
    err = _pushforward_error(p, False, transform_params(p).kappa)
    assert err < 1e-10, f"printed scalings are not mutually consistent (rel err {err:.3g}); exact=True fixes it"


def test_chain_rule_consistent_scalings():
    p = preset("olsen-0.41")
    assert _pushforward_error(p, True, consistent_kappa(p)) < 1e-10


def test_original_scaled_round_trip():
    p = preset("olsen-0.35")
    z = np.array([0.3, 1.2, 0.4, 0.05])
    for exact in (False, True):
        assert np.allclose(original_to_scaled(scaled_to_original(z, p, exact), p, exact), z, rtol=1e-14)


def _fd(f, z, h=1e-7):
    z = np.asarray(z, float)
    J = np.empty((4, 4))
    for j in range(4):
        e = np.zeros(4)
        e[j] = h * max(1, abs(z[j]))
        J[:, j] = (f(z + e) - f(z - e)) / (2 * e[j])
    return J


def test_analytic_jacobians():
    p = preset("olsen-0.41")
    sp = scaled_preset("fig10")
    z = np.array([0.7, 0.9, 0.3, 0.05])
    assert np.allclose(jac_original(z, p), _fd(lambda u: rhs_original(u, p), z), rtol=1e-6, atol=1e-7)
    assert np.allclose(jac_scaled(z, sp), _fd(lambda u: rhs_scaled(u, sp), z), rtol=1e-6, atol=1e-5)
    assert np.allclose(jac_fast(z, sp), _fd(lambda u: rhs_fast(u, sp), z), rtol=1e-6, atol=1e-5)


def test_scaled_and_fast_flows_conjugate():
    sp = scaled_preset("fig10", eps=0.1)
    z0 = np.array([0.5, 0.9, 0.2, 0.05])
    cfg = IntegratorConfig(rtol=1e-11, atol=1e-13)
    s1 = 0.4
    tr_s = integrate(lambda t, z: rhs_scaled(z, sp), z0, 0.0, s1, cfg, jac=lambda t, z: jac_scaled(z, sp))
    tr_f = integrate(lambda t, z: rhs_fast(z, sp), scale_state(z0, sp.eps), 0.0, s1 / sp.eps2, cfg,
                     jac=lambda t, z: jac_fast(z, sp))
    a = scale_state(tr_s.final, sp.eps)
    assert np.allclose(a, tr_f.final, rtol=1e-6, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 3.0), st.floats(0.0, 3.0), st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_positivity_scaled(a, b, x, y):
    sp = scaled_preset("fig10", eps=0.2)
    cfg = IntegratorConfig(rtol=1e-7, atol=1e-10)
    tr = integrate(lambda t, z: rhs_scaled(z, sp), [a, b, x, y], 0.0, 0.5, cfg, jac=lambda t, z: jac_scaled(z, sp))
    assert tr.states.min() >= -cfg.atol * 10


def test_named_presets():
    s6, s10 = scaled_preset("fig6"), scaled_preset("fig10")
    assert (s6.mu, s6.alpha, s6.eps_b, s6.xi, s6.kappa) == (1.3, 0.37, 0.062, 0.98, 3.93)
    assert s6.delta == 0.0
    assert s10.delta == pytest.approx(2 * s10.eps ** 2)


def test_unknown_preset():
    with pytest.raises(DomainError):
        scaled_preset("nope")
