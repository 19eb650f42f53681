"""Singular periodic candidates: slow drift near the fold set plus one large loop.

A candidate is fixed by its arrival corner (alpha0, beta0). The closure
conditions reduce to a scalar equation W(beta0) = 0, with W = W_c (maximal
canard delay, departure at b = 2 xi - beta0) or W = W_j (jump, departure at
b = xi). Both vanish identically at beta0 = xi; the admissible root is the
one nearest xi inside (beta_floor, xi).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import BranchError, DomainError, InfeasibleError
from .loops import LoopSpec, landing_point, loop_polyline
from .model import ScaledParams
from .transcritical import canard_exit, jump_exit

__all__ = [
    "Case",
    "CandidateOrbit",
    "MuWindow",
    "SERIES_CUTOFF",
    "w_c",
    "w_j",
    "W_c",
    "W_j",
    "W",
    "dW_c_dxi_closed_form",
    "alpha0_from_beta0",
    "closure_residuals",
    "find_roots",
    "solve_candidate",
    "mu_window_scan",
    "intersect_windows",
    "slow_segment",
]

SERIES_CUTOFF = 1e-4
EXP_CAP = 700.0
BETA_FLOOR = 0.3
GRID_N = 512
ROOT_XTOL = 1e-13


class Case(str, enum.Enum):
    CANARD = "Canard"
    JUMP = "Jump"

    @classmethod
    def parse(cls, v) -> "Case":
        if isinstance(v, cls):
            return v
        s = str(v).strip().lower()
        for c in cls:
            if c.value.lower() == s:
                return c
        raise DomainError(f"unknown case {v!r}")


def _mu(sp, mu):
    return sp.mu if mu is None else float(mu)


def _u(beta0, sp):
    return sp.alpha * (sp.xi - beta0) / sp.eps_b


def w_c(beta0: float, sp: ScaledParams) -> float:
    """alpha (beta0 - xi) coth[alpha (xi - beta0)/eps_b]."""
    u = _u(beta0, sp)
    if abs(u) < SERIES_CUTOFF:
        u2 = u * u
        return -sp.eps_b * (1.0 + u2 / 3.0 - u2 * u2 / 45.0)
    if abs(u) > EXP_CAP:
        return sp.alpha * (beta0 - sp.xi) * math.copysign(1.0, u)
    return sp.alpha * (beta0 - sp.xi) / math.tanh(u)


def w_j(beta0: float, sp: ScaledParams) -> float:
    """exp[alpha (xi - beta0)/eps_b] - 1."""
    u = _u(beta0, sp)
    if u > EXP_CAP:
        return math.inf
    return math.expm1(u)


def _expm1_over(u):
    """expm1(u)/u with its removable limit at 0."""
    if abs(u) < SERIES_CUTOFF:
        return 1.0 + u / 2.0 + u * u / 6.0 + u ** 3 / 24.0
    return math.expm1(u) / u


def _check_beta(beta0, sp):
    if not (0.0 < beta0 <= sp.xi):
        raise DomainError(f"beta0 = {beta0} outside (0, xi]")


def _safe_log_ratio(factors_num, factors_den, names):
    for v, n in zip(list(factors_num) + list(factors_den), names):
        if not v > 0:
            raise BranchError(f"logarithm factor {n} = {v:.6g} is not positive", factor=n)
    return sum(math.log(v) for v in factors_num) - sum(math.log(v) for v in factors_den)


def W_c(beta0: float, sp: ScaledParams, mu: float | None = None) -> float:
    _check_beta(beta0, sp)
    m = _mu(sp, mu)
    al, eb, xi = sp.alpha, sp.eps_b, sp.xi
    wc = w_c(beta0, sp)
    d = beta0 - xi
    num = al * d + eb * m + wc
    den = eb * m - al * d + wc
    lg = _safe_log_ratio((2.0 * xi - beta0, num), (beta0, den),
                         ("2xi-beta0", "beta0*alpha+eps_b*mu-alpha*xi+w_c", "beta0",
                          "eps_b*mu-alpha*beta0+alpha*xi+w_c"))
    return 4.0 * d * (eb * m - al * xi) + 4.0 * d * wc + al * eb * lg


def W_j(beta0: float, sp: ScaledParams, mu: float | None = None) -> float:
    _check_beta(beta0, sp)
    m = _mu(sp, mu)
    al, eb, xi = sp.alpha, sp.eps_b, sp.xi
    u = _u(beta0, sp)
    d = beta0 - xi
    if u > EXP_CAP:
        # w_j overflows; alpha d / w_j -> 0 and the log ratio tends to xi exp(u) ... / beta0
        raise BranchError("exponential overflow in w_j", factor="w_j")
    r = _expm1_over(u)  # w_j / u
    # alpha d / w_j = -eps_b / r
    lin = eb * m - al * xi - eb / r
    if u == 0.0:
        lg = math.log(xi / beta0)
    else:
        E = math.exp(u)
        # divide numerator and denominator of the log argument by eps_b u
        num = m * r - E
        den = m * r - 1.0
        lg = _safe_log_ratio((xi, num), (beta0, den),
                             ("xi", "mu*eps_b*w_j+alpha*(beta0-xi)*exp", "beta0", "mu*eps_b*w_j+alpha*(beta0-xi)"))
    return 2.0 * d * lin + al * eb * lg


def W(case, beta0: float, sp: ScaledParams, mu: float | None = None) -> float:
    return (W_c if Case.parse(case) is Case.CANARD else W_j)(beta0, sp, mu)


def dW_c_dxi_closed_form(sp: ScaledParams, mu: float | None = None) -> float:
    """Closed-form derivative of W_c at beta0 = xi."""
    m = _mu(sp, mu)
    if m == 1.0:
        raise DomainError("closed form singular at mu = 1")
    al, eb, xi = sp.alpha, sp.eps_b, sp.xi
    return 2.0 / xi * (eb - eb * m + al * xi) * (al - 2.0 * (m - 1.0) * xi) / (m - 1.0)


def alpha0_from_beta0(beta0: float, sp: ScaledParams, case, mu: float | None = None) -> float:
    _check_beta(beta0, sp)
    m = _mu(sp, mu)
    al, eb, xi = sp.alpha, sp.eps_b, sp.xi
    if Case.parse(case) is Case.CANARD:
        return (beta0 * al + eb * m - al * xi + w_c(beta0, sp)) / (al * eb)
    u = _u(beta0, sp)
    r = _expm1_over(u)
    # alpha0 = mu/alpha + (beta0 - xi)(1 + w_j)/(eps_b w_j)
    return m / al - math.exp(u) / (al * r)


def closure_residuals(alpha0, beta0, alpha1, beta1, sp: ScaledParams, case, mu=None) -> np.ndarray:
    """Residuals of the four corner equations with (alpha2, beta2) = (alpha0, beta0)."""
    m = _mu(sp, mu)
    al, eb, xi = sp.alpha, sp.eps_b, sp.xi
    r = m / al
    if Case.parse(case) is Case.CANARD:
        expo = -al * 2.0 * (xi - beta0) / eb
        b1 = 2.0 * xi - beta0
    else:
        expo = -al * (xi - beta0) / eb
        b1 = xi
    e1 = alpha1 - (r + math.exp(expo) * (alpha0 - r))
    e2 = beta1 - b1
    arg = beta1 * alpha0 / (alpha1 * (beta1 + eb * (alpha0 - alpha1)))
    e3 = 2.0 * (alpha0 - alpha1) * (beta1 - alpha1 * eb) - (math.log(arg) if arg > 0 else math.nan)
    e4 = beta1 - (eb * alpha1 + beta0 - eb * alpha0)
    return np.array([e1, e2, e3, e4])


# --------------------------------------------------------------------------
# root finding


def _safe_eval(f, x):
    try:
        v = f(x)
    except (BranchError, DomainError, OverflowError, ZeroDivisionError):
        return math.nan
    return v if math.isfinite(v) else math.nan


def _cell_roots(f, a, fa, b, fb, depth):
    """Sign-change roots in [a, b]; cells with an invalid endpoint are split."""
    if math.isnan(fa) or math.isnan(fb):
        if depth == 0:
            return []
        xs = np.linspace(a, b, 9)
        vs = [fa] + [_safe_eval(f, x) for x in xs[1:-1]] + [fb]
        out = []
        for i in range(8):
            out += _cell_roots(f, xs[i], vs[i], xs[i + 1], vs[i + 1], depth - 1)
        return out
    if fa == 0.0:
        return [a]
    if fa * fb < 0.0:
        return [brentq(f, a, b, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps)]
    return []


def find_roots(case, sp: ScaledParams, mu: float | None = None, beta_floor: float = BETA_FLOOR,
               grid_n: int = GRID_N) -> list:
    """All sign-change roots of W on (beta_floor, xi), sorted with the one nearest xi first."""
    f = lambda b: W(case, b, sp, mu)  # noqa: E731
    xs = np.linspace(beta_floor, sp.xi, grid_n + 1)[:-1]
    vs = [_safe_eval(f, x) for x in xs]
    roots = []
    for i in range(len(xs) - 1):
        roots += _cell_roots(f, xs[i], vs[i], xs[i + 1], vs[i + 1], depth=2)
    return sorted(set(roots), key=lambda r: sp.xi - r)


# --------------------------------------------------------------------------
# assembly


def slow_segment(alpha0, beta0, s1, sp: ScaledParams, n: int = 400, mu=None) -> np.ndarray:
    """(n, 2) samples of the affine slow flow a' = mu - alpha a, b' = eps_b from (alpha0, beta0)."""
    m = _mu(sp, mu)
    s = np.linspace(0.0, s1, n)
    r = m / sp.alpha
    return np.column_stack([r + np.exp(-sp.alpha * s) * (alpha0 - r), beta0 + sp.eps_b * s])


@dataclass(frozen=True)
class CandidateOrbit:
    case: Case
    alpha0: float
    beta0: float
    alpha1: float
    beta1: float
    alpha2: float
    beta2: float
    s1: float
    mu: float
    closure_residual: float
    loop: np.ndarray = field(repr=False)
    slow_segment: np.ndarray = field(repr=False)

    def polyline_fast(self) -> np.ndarray:
        """Whole candidate in fast coordinates (a, b, x, y), x = sqrt(3 a b y) on the loop."""
        ss = self.slow_segment
        slow = np.column_stack([ss, np.zeros((len(ss), 2))])
        a, b, y = self.loop.T
        loop = np.column_stack([a, b, np.sqrt(3.0 * a * b * y), y])
        return np.vstack([slow, loop])

    def as_dict(self) -> dict:
        return {k: (v.value if isinstance(v, Case) else v) for k, v in
                dict(case=self.case, alpha0=self.alpha0, beta0=self.beta0, alpha1=self.alpha1,
                     beta1=self.beta1, alpha2=self.alpha2, beta2=self.beta2, s1=self.s1, mu=self.mu,
                     closure_residual=self.closure_residual).items()}


def solve_candidate(case, sp: ScaledParams, mu: float | None = None, beta_floor: float = BETA_FLOOR,
                    grid_n: int = GRID_N, n_loop: int = 2000) -> CandidateOrbit | None:
    """Candidate orbit for the root of W nearest xi, or None if W has no root.

    Raises InfeasibleError when the root violates beta0 < xi, 2 alpha0 beta0 < 1
    or 2 alpha1 beta1 > 1.
    """
    case = Case.parse(case)
    m = _mu(sp, mu)
    spm = sp.replace(mu=m)
    roots = find_roots(case, spm, None, beta_floor, grid_n)
    if not roots:
        return None
    beta0 = roots[0]
    alpha0 = alpha0_from_beta0(beta0, spm, case)
    if not (beta0 < sp.xi and alpha0 > 0 and 2.0 * alpha0 * beta0 < 1.0):
        raise InfeasibleError(f"root beta0 = {beta0:.6g}, alpha0 = {alpha0:.6g} violates 2 alpha0 beta0 < 1")
    dr = (canard_exit if case is Case.CANARD else jump_exit)(alpha0, beta0, spm)
    alpha1, beta1 = dr.exit[0], dr.exit[1]
    if not 2.0 * alpha1 * beta1 > 1.0:
        raise InfeasibleError("departure corner below {2ab = 1}: no loop")
    spec = LoopSpec.from_params(alpha1, beta1, spm)
    alpha2 = landing_point(spec)
    beta2 = float(spec.eps_b * alpha2 + spec.K1)
    resid = math.hypot(alpha2 - alpha0, beta2 - beta0)
    return CandidateOrbit(case, alpha0, beta0, alpha1, beta1, alpha2, beta2, dr.s1, m, resid,
                          loop_polyline(spec, n_loop, alpha2), slow_segment(alpha0, beta0, dr.s1, spm))


@dataclass(frozen=True)
class MuWindow:
    case: str
    mu_lo: float
    mu_hi: float
    grid_n: int


def mu_window_scan(case, sp: ScaledParams, mu_range=(1.0, 2.0), grid_n: int = 64, **kw) -> list:
    """Maximal runs of grid values of mu for which ``solve_candidate`` succeeds."""
    if grid_n < 16:
        raise DomainError("grid_n must be at least 16")
    lo, hi = mu_range
    if not 0 < lo < hi:
        raise DomainError("need 0 < mu_lo < mu_hi")
    case = Case.parse(case)
    mus = np.linspace(lo, hi, grid_n)
    ok = []
    for m in mus:
        try:
            ok.append(solve_candidate(case, sp, m, n_loop=16, **kw) is not None)
        except (InfeasibleError, DomainError):
            ok.append(False)
    wins = []
    i = 0
    while i < len(mus):
        if ok[i]:
            j = i
            while j + 1 < len(mus) and ok[j + 1]:
                j += 1
            if j > i:
                wins.append(MuWindow(case.value, float(mus[i]), float(mus[j]), grid_n))
            i = j + 1
        else:
            i += 1
    return wins


def intersect_windows(a: list, b: list) -> list:
    out = []
    for u in a:
        for v in b:
            lo, hi = max(u.mu_lo, v.mu_lo), min(u.mu_hi, v.mu_hi)
            if lo < hi:
                out.append(MuWindow("Canard&Jump", lo, hi, max(u.grid_n, v.grid_n)))
    return out
