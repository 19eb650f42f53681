import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.distance import directed_hausdorff

from olsen_gspt.candidates import solve_candidate
from olsen_gspt.errors import DomainError
from olsen_gspt.manifolds import branch_expansions
from olsen_gspt.model import preset, scaled_preset, transform_params
from olsen_gspt.returnmap import (SectionFrame, find_periodic_orbit, frame_from_simulation, hausdorff_distance,
                                  lemma_checks, lemma_first_order, lemma_margins, lift_to_sigma0, phi_c, phi_j,
                                  poincare_return)


@pytest.fixture(scope="module")
def canard_corner(fig6):
    c = solve_candidate("canard", fig6)
    return c.alpha0, c.beta0


def test_slow_maps_trivial(fig6):
    assert phi_c(0.3, fig6.xi, fig6) == (0.3, fig6.xi)
    r = fig6.mu / fig6.alpha
    sp = fig6.replace(mu=0.2 * fig6.alpha)
    assert phi_c(0.2, 0.9, sp)[0] == pytest.approx(0.2)
    assert phi_j(0.2, 0.9, sp) == pytest.approx((0.2, fig6.xi))
    a, b = phi_c(0.2, 0.9, fig6)
    assert b == pytest.approx(2 * fig6.xi - 0.9)
    assert a == pytest.approx(r + math.exp(-2 * fig6.alpha / fig6.eps_b * (fig6.xi - 0.9)) * (0.2 - r))
    with pytest.raises(DomainError):
        phi_j(1.0, 0.9, fig6)


def test_canard_orderings_at_rho_001(fig6, canard_corner):
    m = lemma_margins(*canard_corner, 0.01, fig6, "canard")
    assert set(m) == {"b_lo", "b_hi", "line_lo", "line_hi"}
    assert all(v > 0 for v in m.values())


def test_jump_bounds_at_rho_001(fig10):
    c = solve_candidate("jump", fig10)
    m = lemma_margins(c.alpha0, c.beta0, 0.01, fig10, "jump")
    assert all(v > 0 for v in m.values())


@pytest.mark.parametrize("case,pre", [("canard", "fig6"), ("jump", "fig10")])
def test_margins_linear_in_rho(case, pre):
    sp = scaled_preset(pre)
    r = lemma_checks(sp, case=case, rho_grid=(0.02, 0.01, 0.005, 0.0025))
    assert r.all_hold and r.largest_rho == 0.02
    assert r.linear()
    c = solve_candidate(case, sp)
    first = lemma_first_order(c.alpha0, c.beta0, sp, case)
    rho = 1e-5
    m = lemma_margins(c.alpha0, c.beta0, rho, sp, case)
    for k, v in m.items():
        assert v / rho == pytest.approx(first[k], rel=1e-3)


def test_hausdorff_trivial():
    rng = np.random.default_rng(0)
    P = np.cumsum(rng.normal(size=(50, 4)), axis=0)
    assert hausdorff_distance(P, P) == 0.0
    e = np.zeros(4)
    e[1] = 1.0
    assert hausdorff_distance(P, P + e) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        hausdorff_distance(np.empty((0, 4)), P)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_hausdorff_vs_dense_vertex_oracle(seed):
    rng = np.random.default_rng(seed)
    A = np.cumsum(rng.normal(size=(12, 3)), axis=0)
    B = np.cumsum(rng.normal(size=(9, 3)), axis=0)

    def dense(P, n=400):
        t = np.linspace(0, 1, n)[:, None]
        return np.vstack([P[i] + t * (P[i + 1] - P[i]) for i in range(len(P) - 1)])

    # vertices of one polyline against the densely sampled segments of the other
    ref = max(directed_hausdorff(A, dense(B))[0], directed_hausdorff(B, dense(A))[0])
    assert hausdorff_distance(A, B) == pytest.approx(ref, abs=1e-2)
    assert hausdorff_distance(A, B) <= ref + 1e-12


def test_section_frame(fig6, canard_corner):
    fr = SectionFrame(*canard_corner)
    assert fr.a_section == pytest.approx(canard_corner[0] + 0.02)
    assert [s.name for s in fr.sections()] == ["Sigma1", "Sigma2", "Sigma0"]
    assert fr.in_box(fr.full_state([canard_corner[1], 0.1, 0.01]), 0.05)
    assert not fr.in_box(fr.full_state([canard_corner[1] + 0.05, 0.1, 0.01]), 0.05)
    with pytest.raises(DomainError):
        SectionFrame(0.1, 0.9, rho=0.0)


def test_lift_uses_attracting_sheet(fig10):
    fr = SectionFrame(0.13, 0.90)
    z = lift_to_sigma0(fr, 0.90, fig10)
    p = branch_expansions(fr.a_section, 0.90, fig10.delta, fig10)["attracting"]
    assert p.x2 > 1e-2
    assert z == pytest.approx([0.90, p.x2, p.y2], rel=1e-15)
    # below the floor (delta = 0) the lift is raised to x2 = 1e-2 on the sheet y2 = x2^2/(1 + ab)
    z = lift_to_sigma0(fr, 0.90, fig10.replace(delta=0.0))
    assert z[1] == 1e-2 and z[2] == pytest.approx(1e-4 / (1 + fr.a_section * 0.90))


def test_single_return(canard_corner):
    sp = scaled_preset("fig6", eps=0.05)
    fr = SectionFrame(*canard_corner)
    z = lift_to_sigma0(fr, canard_corner[1], sp)
    pz, period, legs = poincare_return(z, fr, sp)
    assert [l.name for l in legs] == ["Sigma1", "Sigma2", "Sigma0"]
    assert all(abs(l.residual) < 1e-10 for l in legs)
    assert abs(pz[0] - z[0]) < 0.05
    assert period > 0
    assert sp.eps * pz[1] < fr.rho and sp.eps2 * pz[2] < fr.rho


def test_return_contracts_in_b(canard_corner):
    sp = scaled_preset("fig6", eps=0.05)
    fr = SectionFrame(*canard_corner)
    b0 = canard_corner[1]
    p1 = poincare_return(lift_to_sigma0(fr, b0 - 0.01, sp), fr, sp)[0]
    p2 = poincare_return(lift_to_sigma0(fr, b0 + 0.01, sp), fr, sp)[0]
    assert abs(p1[0] - p2[0]) < 0.02


def test_k041_preset_has_stable_orbit():
    sp = transform_params(preset("olsen-0.41"))
    assert solve_candidate("canard", sp) is None
    r = find_periodic_orbit(sp, frame=frame_from_simulation(sp), with_hausdorff=False)
    assert r.residual < 1e-8 and r.stable
    assert r.hausdorff_to_candidate is None


# ---- convergence table (shared, slow)


@pytest.mark.slow
@pytest.mark.parametrize("case", ["canard", "jump"])
def test_orbits_stable_at_every_eps(eps_tables, case):
    for row in eps_tables[case]:
        assert "error" not in row, row.get("error")
        assert row["stable"] and row["residual"] < 1e-8
        assert np.all(np.isfinite(row["moduli"]))


@pytest.mark.slow
def test_canard_closer_to_candidate_at_smaller_eps(eps_tables):
    dh = {r["eps"]: r["hausdorff"] for r in eps_tables["canard"]}
    assert math.isfinite(dh[0.05]) and dh[0.05] < dh[0.08] < dh[0.12]


@pytest.mark.slow
def test_sigma0_crossing_small(eps_tables):
    # fig6 parameters at the default eps: crossing state with x2, y2 < 1e-3
    row = next(r for r in eps_tables["canard"] if r["eps"] == 0.05)
    b2, x2, y2 = row["fixed_point"]
    assert x2 < 1e-3 and y2 < 1e-3, f"x2 = {x2:.3g}, y2 = {y2:.3g} (fast x = {0.05 * x2:.2e})"


@pytest.mark.slow
def test_canard_segment_beyond_xi(eps_tables):
    # the Sigma0 -> Sigma1 leg follows {x2 = 0} past b2 = xi with x2 < eps^2
    for row in eps_tables["canard"]:
        sp = scaled_preset("fig6", eps=row["eps"])
        c = solve_candidate("canard", sp)
        _, _, _, trajs = poincare_return(row["fixed_point"], SectionFrame(c.alpha0, c.beta0), sp, keep=True)
        s = trajs[0].states
        beyond = s[(s[:, 1] > sp.xi) & (s[:, 1] < sp.xi + 0.02)]
        assert len(beyond) > 10
        assert np.max(beyond[:, 2]) < sp.eps ** 2
