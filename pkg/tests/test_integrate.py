import json
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from olsen_gspt.errors import DomainError, NoCrossingError
from olsen_gspt.integrate import IntegratorConfig, SectionSpec, integrate, integrate_system, integrate_to_section
from olsen_gspt.model import original_system, preset, scaled_preset, scaled_system


def osc(t, z):
    return np.array([z[1], -z[0]])


@pytest.mark.parametrize("method", ["stiff-implicit", "explicit-adaptive"])
def test_harmonic_accuracy(method):
    cfg = IntegratorConfig(rtol=1e-10, atol=1e-12, method=method)
    tr = integrate(osc, [1.0, 0.0], 0.0, 2 * math.pi, cfg)
    assert np.allclose(tr.final, [1.0, 0.0], atol=1e-7)
    assert tr.n_steps > 0 and tr.n_rhs > 0


def robertson(t, y):
    return np.array([-0.04 * y[0] + 1e4 * y[1] * y[2],
                     0.04 * y[0] - 1e4 * y[1] * y[2] - 3e7 * y[1] ** 2,
                     3e7 * y[1] ** 2])


def test_stiff_robertson_against_scipy_radau():
    cfg = IntegratorConfig(rtol=1e-8, atol=1e-12)
    tr = integrate(robertson, [1, 0, 0], 0.0, 40.0, cfg)
    ref = solve_ivp(robertson, (0, 40), [1, 0, 0], method="Radau", rtol=1e-11, atol=1e-14).y[:, -1]
    assert np.allclose(tr.final, ref, rtol=1e-5, atol=1e-11)
    assert tr.n_steps < 2000


def test_section_crossing_located():
    sec = SectionSpec.coordinate(0, 0.0, direction=-1, name="x0")
    z, t = integrate_to_section(osc, [1.0, 0.0], sec, IntegratorConfig(rtol=1e-10, atol=1e-12))
    assert t == pytest.approx(math.pi / 2, abs=1e-8)
    assert abs(z[0]) < 1e-9 and z[1] == pytest.approx(-1.0, abs=1e-8)


def test_section_direction_filter():
    sec = SectionSpec.coordinate(0, 0.0, direction=+1, name="up")
    _, t = integrate_to_section(osc, [1.0, 0.0], sec, IntegratorConfig(rtol=1e-10, atol=1e-12))
    assert t == pytest.approx(3 * math.pi / 2, abs=1e-8)


def test_nonterminal_sections_recorded():
    sec = SectionSpec.coordinate(0, 0.0, terminal=False, name="any")
    tr = integrate(osc, [1.0, 0.0], 0.0, 10.0, IntegratorConfig(rtol=1e-10, atol=1e-12), sections=(sec,))
    assert [round(c.t, 6) for c in tr.crossings] == [round((k + 0.5) * math.pi, 6) for k in range(3)]
    assert tr.t_final == pytest.approx(10.0)


def test_no_crossing_raises():
    sec = SectionSpec.coordinate(0, 5.0)
    with pytest.raises(NoCrossingError):
        integrate_to_section(osc, [1.0, 0.0], sec, horizon=20.0)


def test_bad_inputs():
    with pytest.raises(DomainError):
        integrate(osc, [1.0, 0.0], 1.0, 0.0)
    with pytest.raises(DomainError):
        integrate(osc, [np.nan, 0.0], 0.0, 1.0)
    with pytest.raises(DomainError):
        IntegratorConfig(method="euler")
    with pytest.raises(DomainError):
        IntegratorConfig(rtol=0.0)


def test_dense_output_interpolation():
    cfg = IntegratorConfig(rtol=1e-10, atol=1e-12, dense_output=True)
    tr = integrate(osc, [1.0, 0.0], 0.0, 3.0, cfg)
    ts = np.linspace(0.1, 2.9, 15)
    assert np.allclose(tr.at(ts)[:, 0], np.cos(ts), atol=1e-6)
    with pytest.raises(DomainError):
        integrate(osc, [1.0, 0.0], 0.0, 1.0).at(0.5)


def test_serialization(tmp_path):
    sp = scaled_preset("fig10", eps=0.1)
    tr = integrate_system(scaled_system(sp), [0.5, 0.9, 0.2, 0.05], 0.0, 0.2)
    p = tmp_path / "t.csv"
    tr.to_csv(p)
    rows = p.read_text().splitlines()
    assert rows[0] == "s,a2,b2,x2,y2"
    assert len(rows) == len(tr) + 1
    back = np.loadtxt(p, delimiter=",", skiprows=1)
    assert np.array_equal(back[:, 1:], tr.states)
    d = json.loads(tr.to_json(label="x"))
    assert d["label"] == "x" and d["n_steps"] == tr.n_steps


def test_full_model_positive_and_matches_scipy():
    p = preset("olsen-0.41")
    z0 = [7.0, 40.0, 1e-3, 1e-3]
    cfg = IntegratorConfig(rtol=1e-9, atol=1e-12)
    tr = integrate_system(original_system(p), z0, 0.0, 100.0, cfg)
    assert tr.states.min() > -1e-10
    sysm = original_system(p)
    ref = solve_ivp(sysm.rhs, (0, 100), z0, method="LSODA", jac=sysm.jac, rtol=1e-11, atol=1e-13).y[:, -1]
    assert np.allclose(tr.final, ref, rtol=1e-5, atol=1e-8)


def test_clamp_keeps_state_nonnegative():
    def drain(t, z):
        return np.array([-1.0, 1.0])

    cfg = IntegratorConfig(rtol=1e-8, atol=1e-10, clamp=(0,))
    tr = integrate(drain, [0.5, 0.0], 0.0, 2.0, cfg)
    assert tr.states[:, 0].min() >= 0.0
    assert tr.final[1] == pytest.approx(2.0)
    free = integrate(drain, [0.5, 0.0], 0.0, 2.0, cfg.replace(clamp=()))
    assert free.final[0] == pytest.approx(-1.5)
