"""Global return map near a candidate orbit and its fixed point.

Sections, in the dimensionless variables (a2, b2, x2, y2) and time s:

    Sigma0 = {a2 = alpha0 + rho, a2 increasing}   (after landing near the fold set)
    Sigma1 = {x2 = k, x2 increasing}              (departure into the large loop)
    Sigma2 = {x2 = k, x2 decreasing}              (return from the large loop)

x2 = k is the same set as x = k eps in the fast variables. The map acts on
the coordinates (b2, x2, y2) of Sigma0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .candidates import Case, CandidateOrbit, solve_candidate
from .errors import DomainError, EscapeError, IntegrationError, NoCrossingError, NoOrbitError
from .integrate import IntegratorConfig, SectionSpec, Trajectory, integrate, integrate_to_section
from .manifolds import DEFAULT_UPSILON, ExclusionBall, branch_expansions
from .model import ScaledParams, jac_scaled, rhs_scaled

__all__ = [
    "SectionFrame",
    "ReturnMapResult",
    "LemmaReport",
    "phi_c",
    "phi_j",
    "lemma_margins",
    "lemma_first_order",
    "lemma_checks",
    "lift_to_sigma0",
    "poincare_return",
    "find_periodic_orbit",
    "frame_from_simulation",
    "orbit_fast_polyline",
    "hausdorff_distance",
    "DEFAULT_RHO",
    "DEFAULT_K",
]

DEFAULT_RHO = 0.02
DEFAULT_K = 1.0
DAMPING = 0.7
LIFT_X2_FLOOR = 1e-2


# --------------------------------------------------------------------------
# slow-flow maps and the contraction lemmas


def _check_pre(a, b, sp):
    if not (2.0 * a * b < 1.0 and b < sp.xi):
        raise DomainError("slow-flow map requires 2ab < 1 and b < xi")


def phi_c(a: float, b: float, sp: ScaledParams) -> tuple:
    if b == sp.xi:
        return a, b
    _check_pre(a, b, sp)
    r = sp.mu / sp.alpha
    return r + math.exp(-2.0 * sp.alpha / sp.eps_b * (sp.xi - b)) * (a - r), 2.0 * sp.xi - b


def phi_j(a: float, b: float, sp: ScaledParams) -> tuple:
    if b == sp.xi:
        return a, b
    _check_pre(a, b, sp)
    r = sp.mu / sp.alpha
    return r + math.exp(-sp.alpha / sp.eps_b * (sp.xi - b)) * (a - r), sp.xi


def lemma_margins(alpha0: float, beta0: float, rho: float, sp: ScaledParams, case) -> dict:
    """Signed margins of the contraction inequalities (positive when they hold).

    Canard: ordering of the images in b (``b_lo``, ``b_hi``) and position
    relative to the invariant lines through the box corners (``line_lo``,
    ``line_hi``).  Jump: the two bounds on the image abscissa (``a_lo``,
    ``a_hi``); both images use the jump map.
    """
    case = Case.parse(case)
    eb = sp.eps_b
    if case is Case.CANARD:
        _, b1 = phi_c(alpha0, beta0, sp)
        a_lo, b_lo = phi_c(alpha0, beta0 - rho, sp)
        a_hi, b_hi = phi_c(alpha0, beta0 + rho, sp)
        return {
            "b_lo": b_lo - b1,
            "b_hi": b1 - b_hi,
            "line_lo": b_lo - (eb * a_lo + beta0 - rho - eb * alpha0),
            "line_hi": (eb * a_hi + beta0 + rho - eb * alpha0) - b_hi,
        }
    a_lo, _ = phi_j(alpha0, beta0 - rho, sp)
    a_hi, _ = phi_j(alpha0, beta0 + rho, sp)
    return {
        "a_lo": (sp.xi - beta0 + rho + eb * alpha0) / eb - a_lo,
        "a_hi": a_hi - (sp.xi - beta0 - rho + eb * alpha0) / eb,
    }


def lemma_first_order(alpha0: float, beta0: float, sp: ScaledParams, case) -> dict:
    """d(margin)/d(rho) at rho = 0 for a closed candidate corner.

    The constant terms vanish because the candidate closes; what is left is
    linear in rho with these coefficients.
    """
    case = Case.parse(case)
    r = sp.mu / sp.alpha
    if case is Case.CANARD:
        E = math.exp(-2.0 * sp.alpha / sp.eps_b * (sp.xi - beta0))
        c = 2.0 + 2.0 * sp.alpha * E * (alpha0 - r)
        return {"b_lo": 1.0, "b_hi": 1.0, "line_lo": c, "line_hi": c}
    E = math.exp(-sp.alpha / sp.eps_b * (sp.xi - beta0))
    c = (1.0 + sp.alpha * E * (alpha0 - r)) / sp.eps_b
    return {"a_lo": c, "a_hi": c}


@dataclass(frozen=True)
class LemmaReport:
    case: str
    alpha0: float
    beta0: float
    rhos: tuple
    margins: tuple
    holds: tuple
    largest_rho: float | None
    slopes: dict
    first_order: dict
    remainder_slopes: dict

    @property
    def all_hold(self) -> bool:
        return all(self.holds)

    def linear(self, tol: float = 0.3) -> bool:
        """Margins equal c*rho + O(rho**2): the remainder decays with slope 2."""
        return all(abs(s - 2.0) <= tol or s > 2.0 for s in self.remainder_slopes.values())


def lemma_checks(sp: ScaledParams, mu: float | None = None, case="canard",
                 rho_grid=(0.02, 0.01, 0.005), candidate: CandidateOrbit | None = None) -> LemmaReport:
    """Evaluate the contraction inequalities at the candidate corner for each rho."""
    case = Case.parse(case)
    spm = sp if mu is None else sp.replace(mu=mu)
    cand = candidate or solve_candidate(case, spm)
    if cand is None:
        raise DomainError("no candidate orbit at these parameters")
    rhos = tuple(float(r) for r in rho_grid)
    ms = tuple(lemma_margins(cand.alpha0, cand.beta0, r, spm, case) for r in rhos)
    holds = tuple(all(v > 0 for v in m.values()) for m in ms)
    ok = [r for r, h in zip(rhos, holds) if h]
    c1 = lemma_first_order(cand.alpha0, cand.beta0, spm, case)
    slopes, rem = {}, {}
    if len(rhos) > 1:
        lr = np.log(rhos)
        for k in ms[0]:
            v = np.array([m[k] for m in ms])
            slopes[k] = float(np.polyfit(lr, np.log(v), 1)[0]) if np.all(v > 0) else math.nan
            d = np.abs(v - c1[k] * np.array(rhos))
            # exactly linear margins (remainder at round-off) count as linear
            rem[k] = float(np.polyfit(lr, np.log(d), 1)[0]) if np.all(d > 1e-14) else math.inf
    return LemmaReport(case.value, cand.alpha0, cand.beta0, rhos, ms, holds, max(ok) if ok else None,
                       slopes, c1, rem)


# --------------------------------------------------------------------------
# sections and the full return map


@dataclass(frozen=True)
class SectionFrame:
    alpha0: float
    beta0: float
    rho: float = DEFAULT_RHO
    k: float = DEFAULT_K
    upsilon: float = DEFAULT_UPSILON

    def __post_init__(self):
        if not self.rho > 0 or not self.k > 0:
            raise DomainError("rho and k must be positive")

    @property
    def a_section(self) -> float:
        return self.alpha0 + self.rho

    def sections(self) -> tuple:
        s1 = SectionSpec.coordinate(2, self.k, +1, name="Sigma1")
        s2 = SectionSpec.coordinate(2, self.k, -1, name="Sigma2")
        s0 = SectionSpec.coordinate(0, self.a_section, +1, name="Sigma0")
        return s1, s2, s0

    def in_box(self, state, eps: float) -> bool:
        """Membership of a Sigma0 point in the box b in [beta0 -/+ rho], x, y in [0, rho] (fast x, y)."""
        b, x2, y2 = state[1], state[2], state[3]
        return (abs(b - self.beta0) <= self.rho and 0 <= eps * x2 <= self.rho
                and 0 <= eps * eps * y2 <= self.rho)

    def clear_of_ball(self, xi: float) -> bool:
        ball = ExclusionBall(xi, self.upsilon)
        return ball.distance(self.a_section, self.beta0) > self.rho + self.upsilon

    def full_state(self, z3) -> np.ndarray:
        return np.array([self.a_section, z3[0], z3[1], z3[2]])


def lift_to_sigma0(frame: SectionFrame, b2: float, sp: ScaledParams, x2_floor: float = LIFT_X2_FLOOR) -> np.ndarray:
    """(b2, x2, y2) on Sigma0 from the attracting-sheet expansion, with x2 kept >= x2_floor."""
    a = frame.a_section
    x2 = y2 = 0.0
    if b2 < sp.xi and sp.delta > 0:
        p = branch_expansions(a, b2, sp.delta, sp)["attracting"]
        x2, y2 = p.x2, p.y2
    if x2 < x2_floor:
        x2 = x2_floor
        y2 = x2 * x2 / (1.0 + a * b2)
    return np.array([b2, x2, y2])


_RETURN_CFG = IntegratorConfig(rtol=1e-10, atol=1e-13, max_steps=5_000_000)


@dataclass
class _Leg:
    name: str
    state: np.ndarray
    s: float
    residual: float


def poincare_return(z3, frame: SectionFrame, sp: ScaledParams, cfg: IntegratorConfig | None = None,
                    horizon: float = 50.0, keep: bool = False):
    """One return Sigma0 -> Sigma1 -> Sigma2 -> Sigma0.

    Returns ``(z3_new, period, legs)`` or, with ``keep``, also the list of
    leg trajectories.
    """
    cfg = cfg or _RETURN_CFG
    z = frame.full_state(z3)
    rhs = lambda t, y: rhs_scaled(y, sp)  # noqa: E731
    jac = lambda t, y: jac_scaled(y, sp)  # noqa: E731
    t = 0.0
    legs, trajs = [], []
    for sec in frame.sections():
        try:
            st, tt, tr = integrate_to_section(rhs, z, sec, cfg, t0=t, jac=jac, horizon=horizon,
                                              return_trajectory=True)
        except (NoCrossingError, IntegrationError) as exc:
            raise EscapeError(f"leg to {sec.name} failed: {exc}", leg=sec.name) from exc
        legs.append(_Leg(sec.name, st, tt, float(sec.g(st))))
        if keep:
            trajs.append(tr)
        z, t = st, tt
    out = np.array([z[1], z[2], z[3]])
    if keep:
        return out, t, legs, trajs
    return out, t, legs


@dataclass
class ReturnMapResult:
    case: str
    eps: float
    frame: SectionFrame
    fixed_point: np.ndarray
    period: float
    residual: float
    jacobian: np.ndarray
    multipliers: np.ndarray
    iterations: int
    trace: list = field(repr=False, default_factory=list)
    orbit: Trajectory | None = field(repr=False, default=None)
    hausdorff_to_candidate: float | None = None

    @property
    def multiplier_moduli(self) -> np.ndarray:
        return np.abs(self.multipliers)

    @property
    def stable(self) -> bool:
        return bool(np.all(self.multiplier_moduli < 1.0))

    def period_in(self, scale: str) -> float:
        e2 = self.eps ** 2
        return {"s": self.period, "tau": self.period / e2, "t": self.period / self.eps}[scale]


def _return_jacobian(z, pz, frame, sp, cfg, eps):
    step = max(1e-6, 10.0 * eps * cfg.atol)
    J = np.empty((3, 3))
    for j in range(3):
        h = step * max(1.0, abs(z[j]))
        zp = z.copy()
        zp[j] += h
        J[:, j] = (poincare_return(zp, frame, sp, cfg)[0] - pz) / h
    return J


def _fixed_point(z, frame, spm, cfg, tol, max_iter, damping):
    """Damped fixed-point iteration of the return map with a secant step on b2."""
    trace = []
    prev = None
    res = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        try:
            pz, period, _ = poincare_return(z, frame, spm, cfg)
        except EscapeError as exc:
            raise NoOrbitError(f"return map escaped at iteration {it}: {exc}", trace) from exc
        d = pz - z
        res = float(np.max(np.abs(d)))
        trace.append((z.copy(), res))
        if not np.all(np.isfinite(pz)):
            raise NoOrbitError("non-finite iterate", trace)
        if res < tol:
            # keep the iterate whose residual was measured
            break
        # secant acceleration in b2 once the fast coordinates are slaved
        if prev is not None and it > 2:
            zb, db = prev
            slope = (d[0] - db) / (z[0] - zb) if z[0] != zb else 0.0
            if slope < 0.0 and abs(slope) < 1e6:
                step_b = -d[0] / slope
            else:
                step_b = damping * d[0]
        else:
            step_b = damping * d[0]
        prev = (z[0], d[0])
        z = np.array([z[0] + step_b, pz[1], pz[2]])
    else:
        raise NoOrbitError(f"no convergence in {max_iter} iterations (residual {res:.3e})", trace)
    return z, it, trace


def find_periodic_orbit(sp: ScaledParams, mu: float | None = None, case="canard", eps: float | None = None,
                        cfg: IntegratorConfig | None = None, *, frame: SectionFrame | None = None,
                        candidate: CandidateOrbit | None = None, rho: float = DEFAULT_RHO,
                        tol: float = 1e-8, max_iter: int = 60, damping: float = DAMPING,
                        z0=None, with_orbit: bool = True, with_hausdorff: bool = True) -> ReturnMapResult:
    """Fixed point of the return map, its Jacobian and Floquet-type multipliers."""
    case = Case.parse(case)
    spm = sp if mu is None else sp.replace(mu=mu)
    if eps is not None:
        spm = spm.replace(eps=eps)
    cfg = cfg or _RETURN_CFG
    anchored = frame is None
    if anchored:
        if candidate is None:
            candidate = solve_candidate(case, spm)
        if candidate is None:
            raise NoOrbitError("no candidate orbit; supply a frame (see frame_from_simulation)")
        frame = SectionFrame(candidate.alpha0, candidate.beta0, rho)
    z = np.asarray(z0, dtype=float) if z0 is not None else lift_to_sigma0(frame, frame.beta0, spm)
    try:
        z, it, trace = _fixed_point(z, frame, spm, cfg, tol, max_iter, damping)
    except NoOrbitError as exc:
        # the attractor can stay clear of the candidate-anchored Sigma0 at
        # larger eps; re-anchor the frame on the simulated attractor
        if not (anchored and isinstance(exc.__cause__, EscapeError)):
            raise
        frame = frame_from_simulation(spm, rho=rho)
        z = lift_to_sigma0(frame, frame.beta0, spm)
        z, it, trace = _fixed_point(z, frame, spm, cfg, tol, max_iter, damping)
    pz, period, _, trajs = poincare_return(z, frame, spm, cfg, keep=True)
    res = float(np.max(np.abs(pz - z)))
    J = _return_jacobian(z, pz, frame, spm, cfg, spm.eps)
    mult = np.linalg.eigvals(J)
    orbit = _join(trajs) if with_orbit else None
    out = ReturnMapResult(case.value, spm.eps, frame, z, period, res, J, mult, it, trace, orbit)
    if with_hausdorff and candidate is not None and orbit is not None:
        out.hausdorff_to_candidate = hausdorff_distance(orbit_fast_polyline(orbit, spm.eps),
                                                        candidate.polyline_fast())
    return out


def _join(trajs) -> Trajectory:
    ts = np.concatenate([trajs[0].times] + [t.times[1:] for t in trajs[1:]])
    ys = np.vstack([trajs[0].states] + [t.states[1:] for t in trajs[1:]])
    n = sum(t.n_steps for t in trajs)
    return Trajectory(ts, ys, "s", ("a2", "b2", "x2", "y2"), n, sum(t.n_rejected for t in trajs),
                      sum(t.n_rhs for t in trajs), sum(t.n_jac for t in trajs), None, [], trajs[0].method)


def frame_from_simulation(sp: ScaledParams, z0=(1.0, 1.0, 0.1, 0.01), settle: float = 200.0,
                          rho: float = DEFAULT_RHO, cfg: IntegratorConfig | None = None) -> SectionFrame:
    """Section frame anchored at the minimum of a2 over the last simulated cycles.

    Used where no singular candidate exists (for example mu < 1).
    """
    cfg = cfg or IntegratorConfig(rtol=1e-8, atol=1e-12, max_steps=5_000_000)
    tr = integrate(lambda t, y: rhs_scaled(y, sp), z0, 0.0, settle, cfg, jac=lambda t, y: jac_scaled(y, sp))
    tail = tr.states[tr.times > 0.5 * settle]
    if len(tail) < 10:
        raise NoOrbitError("simulation too short to locate the attractor")
    i = int(np.argmin(tail[:, 0]))
    return SectionFrame(float(tail[i, 0]), float(tail[i, 1]), rho)


# --------------------------------------------------------------------------
# Hausdorff distance


def orbit_fast_polyline(traj: Trajectory, eps: float) -> np.ndarray:
    """Trajectory states in fast coordinates (a, b, eps x2, eps**2 y2)."""
    s = traj.states
    return np.column_stack([s[:, 0], s[:, 1], eps * s[:, 2], eps * eps * s[:, 3]])


def _point_to_polyline(P, Q, chunk: int = 256) -> np.ndarray:
    """min over segments of Q of the distance from each point of P."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if len(Q) == 1:
        return np.linalg.norm(P - Q[0], axis=1)
    A = Q[:-1]
    D = Q[1:] - A
    dd = np.einsum("ij,ij->i", D, D)
    dd = np.where(dd == 0.0, 1.0, dd)
    out = np.empty(len(P))
    for i in range(0, len(P), chunk):
        p = P[i:i + chunk, None, :]
        t = np.clip(np.einsum("pij,ij->pi", p - A, D) / dd, 0.0, 1.0)
        proj = A + t[..., None] * D
        out[i:i + chunk] = np.sqrt(np.min(np.sum((p - proj) ** 2, axis=2), axis=1))
    return out


def hausdorff_distance(poly_a, poly_b) -> float:
    """Symmetric max over vertices of the min distance to the other polyline's segments."""
    A = np.atleast_2d(np.asarray(poly_a, dtype=float))
    B = np.atleast_2d(np.asarray(poly_b, dtype=float))
    if A.size == 0 or B.size == 0:
        raise DomainError("polylines must be nonempty")
    return float(max(_point_to_polyline(A, B).max(), _point_to_polyline(B, A).max()))
