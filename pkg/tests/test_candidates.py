import math

import numpy as np
import pytest

from olsen_gspt.candidates import (Case, W, W_c, W_j, alpha0_from_beta0, closure_residuals, dW_c_dxi_closed_form,
                                   find_roots, intersect_windows, mu_window_scan, solve_candidate, w_c, w_j)
from olsen_gspt.errors import BranchError, DomainError
from olsen_gspt.loops import LoopSpec, landing_point
from olsen_gspt.transcritical import canard_exit, jump_exit


@pytest.fixture(scope="module")
def canard(fig6):
    return solve_candidate("canard", fig6)


@pytest.fixture(scope="module")
def jump(fig10):
    return solve_candidate("jump", fig10)


def test_case_parse():
    assert Case.parse("canard") is Case.CANARD
    assert Case.parse("Jump") is Case.JUMP
    with pytest.raises(DomainError):
        Case.parse("fold")


def test_W_vanishes_at_xi(fig6):
    assert abs(W_c(fig6.xi, fig6)) < 1e-12
    assert abs(W_j(fig6.xi, fig6)) < 1e-12
    assert w_c(fig6.xi, fig6) == pytest.approx(-fig6.eps_b)


def test_w_c_series_continuity(fig6):
    # the series branch and the coth branch agree across the cutoff
    u_cut = 1e-4
    b_in = fig6.xi - 0.999 * u_cut * fig6.eps_b / fig6.alpha
    b_out = fig6.xi - 1.001 * u_cut * fig6.eps_b / fig6.alpha
    assert w_c(b_in, fig6) == pytest.approx(w_c(b_out, fig6), rel=1e-9)


def test_w_c_overflow_guard(fig6):
    v = w_c(1e-3, fig6.replace(eps_b=1e-4))
    assert math.isfinite(v)


def test_dW_c_at_xi(fig6):
    h = 2e-5
    xi = fig6.xi
    fd = (3 * W_c(xi, fig6) - 4 * W_c(xi - h, fig6) + W_c(xi - 2 * h, fig6)) / (2 * h)
    assert fd == pytest.approx(dW_c_dxi_closed_form(fig6), rel=1e-5)


def test_dW_j_at_xi_is_half_of_canard(fig6):
    h = 2e-5
    xi = fig6.xi
    fd = (3 * W_j(xi, fig6) - 4 * W_j(xi - h, fig6) + W_j(xi - 2 * h, fig6)) / (2 * h)
    assert fd == pytest.approx(0.5 * dW_c_dxi_closed_form(fig6), rel=1e-4)


def test_reference_roots(fig6, fig10):
    scale = abs(dW_c_dxi_closed_form(fig6))
    assert abs(W_c(0.9402, fig6)) < 1e-3 * scale
    assert abs(W_j(0.9023, fig10)) < 1e-3 * scale


def test_alpha0_from_reference_beta0(fig6, fig10):
    assert alpha0_from_beta0(0.9402, fig6, "canard") == pytest.approx(0.1176, abs=2e-3)
    assert alpha0_from_beta0(0.9023, fig10, "jump") == pytest.approx(0.1362, abs=2e-3)


def test_candidates_match_reference(canard, jump):
    assert (canard.alpha0, canard.beta0) == pytest.approx((0.1176, 0.9402), abs=5e-4)
    assert (jump.alpha0, jump.beta0) == pytest.approx((0.1362, 0.9023), abs=5e-4)


@pytest.mark.parametrize("name", ["canard", "jump"])
def test_candidate_invariants(name, request, fig6):
    c = request.getfixturevalue(name)
    xi = fig6.xi
    assert c.beta0 < xi and 2 * c.alpha0 * c.beta0 < 1 < 2 * c.alpha1 * c.beta1
    assert c.beta1 == pytest.approx(2 * xi - c.beta0 if name == "canard" else xi, abs=1e-15)
    assert c.closure_residual < 1e-8
    res = closure_residuals(c.alpha0, c.beta0, c.alpha1, c.beta1, fig6, c.case)
    assert np.max(np.abs(res)) < 1e-9


@pytest.mark.parametrize("name", ["canard", "jump"])
def test_itinerary_closes(name, request, fig6):
    c = request.getfixturevalue(name)
    exit_fn = canard_exit if name == "canard" else jump_exit
    a1, b1, _ = exit_fn(c.alpha0, c.beta0, fig6.replace(mu=c.mu)).exit
    spec = LoopSpec.from_params(a1, b1, fig6)
    a2 = landing_point(spec)
    b2 = spec.eps_b * a2 + spec.K1
    assert math.hypot(a2 - c.alpha0, b2 - c.beta0) < 1e-8


def test_canard_landing_recovers_alpha0(canard, fig6):
    a2 = landing_point(LoopSpec.from_params(canard.alpha1, canard.beta1, fig6))
    assert a2 == pytest.approx(0.1176, abs=1e-3)


def test_no_candidate_below_mu_one(fig6):
    assert solve_candidate("canard", fig6, mu=0.9) is None
    assert find_roots("jump", fig6, mu=0.9, beta_floor=0.5) == []


def test_root_stability_under_refinement(fig6, fig10):
    for case, sp in (("canard", fig6), ("jump", fig10)):
        r1 = find_roots(case, sp)[0]
        r4 = find_roots(case, sp, grid_n=4 * 512)[0]
        assert abs(r1 - r4) < 1e-6


def test_W_dispatch(fig6):
    assert W("canard", 0.95, fig6) == W_c(0.95, fig6)
    assert W(Case.JUMP, 0.95, fig6) == W_j(0.95, fig6)
    assert w_j(fig6.xi, fig6) == 0.0


def test_branch_error_names_factor(fig6):
    with pytest.raises(BranchError) as exc:
        W_c(0.9, fig6)
    assert exc.value.factor.startswith("beta0*alpha")


def test_polylines(canard):
    poly = canard.polyline_fast()
    assert poly.shape[1] == 4
    assert np.all(poly[: len(canard.slow_segment), 2:] == 0)
    assert canard.slow_segment[-1] == pytest.approx((canard.alpha1, canard.beta1), rel=1e-12)
    d = canard.as_dict()
    assert d["case"] == "Canard" and d["mu"] == 1.3


def test_mu_windows(fig6, fig10):
    wc = mu_window_scan("canard", fig6, (1.0, 2.0), grid_n=32)
    wj = mu_window_scan("jump", fig10, (1.0, 2.0), grid_n=32)
    assert any(w.mu_lo <= 1.3 <= w.mu_hi for w in wc)
    assert any(w.mu_lo <= 1.3 <= w.mu_hi for w in wj)
    both = intersect_windows(wc, wj)
    assert both and all(w.mu_lo < w.mu_hi for w in both)
    with pytest.raises(DomainError):
        mu_window_scan("canard", fig6, grid_n=8)
