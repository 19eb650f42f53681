"""Passage through the line of transcritical points {b2 = xi, x2 = 0 = y2}.

Local coordinates around the base point (x2, a2, b2, y2) = (0, a0, xi, 0) are
X = x2, A = a2 - a0, B = b2 - xi, Y = y2, with eps and delta appended as
trivial dynamic variables. The reduced fast equation on the center manifold is

    eps**2 x2' = c2 x2**2 + c1(b2) x2 + c0.

Two center-manifold graphs Y = h(X, delta) are provided: the reference form
(``variant="printed"``) and one obtained by matching coefficients in the
invariance equation (``variant="rederived"``). They differ in the delta*X and
delta**2 terms.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateError, DomainError
from .integrate import IntegratorConfig, SectionSpec, integrate_to_section
from .manifolds import c20_roots
from .model import ScaledParams, jac_scaled, rhs_scaled

__all__ = [
    "TcCoefficients",
    "TcGenericity",
    "PassageCase",
    "TcClassification",
    "FastLinearization",
    "DelayResult",
    "DelayRun",
    "DELTA_HAT_MAX",
    "DEFAULT_RHO",
    "tc_coefficients",
    "m2_rhs",
    "m2_graph",
    "m2_residual",
    "tc_fast_field",
    "check_tc_genericity",
    "lambda_tc",
    "is_exponentially_small",
    "classify_passage",
    "fast_linearization",
    "pi_wiwo",
    "pi_root",
    "canard_exit",
    "jump_exit",
    "delay_run",
]

DELTA_HAT_MAX = 10.0
DEFAULT_RHO = 1e-2


@dataclass(frozen=True)
class TcCoefficients:
    a0: float
    c2: float
    c0: float
    delta: float
    kappa: float
    xi: float

    def c1_at(self, b2: float) -> float:
        g = 1.0 + self.a0 * self.xi
        return -self.delta / (self.kappa * g * g) + b2 - self.xi

    def reduced_rhs(self, x2: float, b2: float) -> float:
        """c2 x2**2 + c1(b2) x2 + c0."""
        return self.c2 * x2 * x2 + self.c1_at(b2) * x2 + self.c0


def tc_coefficients(a0: float, sp: ScaledParams) -> TcCoefficients:
    if a0 * sp.xi * 2.0 == 1.0:
        raise DegenerateError("a0 = 1/(2 xi): quadratic coefficient vanishes")
    g = 1.0 + a0 * sp.xi
    d = sp.delta
    return TcCoefficients(
        a0=a0,
        c2=(2.0 * a0 * sp.xi - 1.0) / g,
        c0=d + d * d / (sp.kappa ** 2 * g ** 3),
        delta=d,
        kappa=sp.kappa,
        xi=sp.xi,
    )


# --------------------------------------------------------------------------
# center manifold M2 and its invariance residual


def m2_rhs(z, a0: float, sp: ScaledParams) -> np.ndarray:
    """Six-dimensional extended chart-2 field in (X, A, B, eps, delta, Y), fast time."""
    X, A, B, e, dl, Y = z
    a = a0 + A
    b = sp.xi + B
    aby = a * b * Y
    e2 = e * e
    return np.array([
        3.0 * aby - X * X + B * X + dl,
        e2 * (sp.mu - sp.alpha * a - aby),
        e2 * sp.eps_b * (1.0 - b * X - aby),
        0.0,
        0.0,
        sp.kappa * (X * X - Y - aby),
    ])


_M2_COEFFS = {"printed": (-1.0, 1.0), "rederived": (-2.0, 2.0)}


def m2_graph(X, delta, a0: float, sp: ScaledParams, variant: str = "printed"):
    """Y = X**2/g + k1 delta X/(kappa g**2) + k2 delta**2/(kappa**2 g**3), g = 1 + a0 xi."""
    try:
        k1, k2 = _M2_COEFFS[variant]
    except KeyError:
        raise DomainError(f"unknown variant {variant!r}") from None
    g = 1.0 + a0 * sp.xi
    k = sp.kappa
    return X * X / g + k1 * delta * X / (k * g * g) + k2 * delta * delta / (k * k * g ** 3)


def m2_residual(point, a0: float, sp: ScaledParams, variant: str = "printed") -> float:
    """Invariance defect Y' - dh/dX X' at ``point = (X, A, B, eps, delta)`` with Y = h."""
    X, A, B, e, dl = point
    Y = m2_graph(X, dl, a0, sp, variant)
    f = m2_rhs((X, A, B, e, dl, Y), a0, sp)
    k1, _ = _M2_COEFFS[variant]
    g = 1.0 + a0 * sp.xi
    hx = 2.0 * X / g + k1 * dl / (sp.kappa * g * g)
    return float(f[5] - hx * f[0])


# --------------------------------------------------------------------------
# genericity and lambda_tc


def tc_fast_field(x2, bt, eps_hat, a0: float, sp: ScaledParams, delta_hat: float = 0.0) -> float:
    """f(x2, b~2; eps^) with b2 = eps_b b~2 and delta = eps^ delta^."""
    g = 1.0 + a0 * sp.xi
    c2 = (2.0 * a0 * sp.xi - 1.0) / g
    b2 = sp.eps_b * bt
    c1 = -eps_hat * delta_hat / (sp.kappa * g * g) + b2 - sp.xi
    c0 = eps_hat * delta_hat + (delta_hat * eps_hat) ** 2 / (sp.kappa ** 2 * g ** 3)
    return c2 * x2 * x2 + c1 * x2 + c0


@dataclass(frozen=True)
class TcGenericity:
    f: float
    f_x: float
    f_b: float
    det_hessian: float
    f_xx: float
    f_xb: float
    f_bb: float
    holds: tuple

    @property
    def all_hold(self) -> bool:
        return all(self.holds)


def check_tc_genericity(a0: float, sp: ScaledParams, h: float = 1e-3, tol: float = 1e-9) -> TcGenericity:
    """Evaluate the five transcritical conditions at p_tc = (0, xi/eps_b; 0) by central differences.

    f is quadratic in (x2, b~2), so the difference quotients are exact up to rounding.
    """
    if not a0 > 0.5 / sp.xi:
        raise DomainError("requires a0 > 1/(2 xi)")
    x0, b0 = 0.0, sp.xi / sp.eps_b

    def f(x, b):
        return tc_fast_field(x, b, 0.0, a0, sp)

    f0 = f(x0, b0)
    fx = (f(x0 + h, b0) - f(x0 - h, b0)) / (2 * h)
    fb = (f(x0, b0 + h) - f(x0, b0 - h)) / (2 * h)
    fxx = (f(x0 + h, b0) - 2 * f0 + f(x0 - h, b0)) / (h * h)
    fbb = (f(x0, b0 + h) - 2 * f0 + f(x0, b0 - h)) / (h * h)
    fxb = (f(x0 + h, b0 + h) - f(x0 + h, b0 - h) - f(x0 - h, b0 + h) + f(x0 - h, b0 - h)) / (4 * h * h)
    det = fxx * fbb - fxb * fxb
    holds = (abs(f0) <= tol, abs(fx) <= tol, abs(fb) <= tol, det < 0.0, abs(fxx) > tol)
    return TcGenericity(f0, fx, fb, det, fxx, fxb, fbb, holds)


def lambda_tc(a0: float, sp: ScaledParams, delta_hat: float) -> float:
    if delta_hat < 0:
        raise DomainError("delta_hat must be nonnegative")
    if not a0 > 0.5 / sp.xi:
        raise DomainError("requires a0 > 1/(2 xi)")
    c2 = (2.0 * a0 * sp.xi - 1.0) / (1.0 + a0 * sp.xi)
    return 1.0 + delta_hat / (2.0 * sp.eps_b) * c2


class PassageCase(str, enum.Enum):
    CANARD = "Canard"
    JUMP = "Jump"


@dataclass(frozen=True)
class TcClassification:
    case: PassageCase
    lambda_tc: float
    delta_hat: float


def is_exponentially_small(delta: float, eps: float, k1: float = 1.0) -> bool:
    """delta < eps**2 exp(-k1/(2 eps**2))."""
    return delta < eps * eps * math.exp(-k1 / (2.0 * eps * eps))


def classify_passage(a0: float, sp: ScaledParams, delta_of_eps: float | Callable | None = None,
                     k1: float = 1.0) -> TcClassification:
    """Canard or jump passage for the delta given as a number, a function of eps, or sp.delta."""
    if delta_of_eps is None:
        delta = sp.delta
    elif callable(delta_of_eps):
        delta = float(delta_of_eps(sp.eps))
    else:
        delta = float(delta_of_eps)
    if delta < 0:
        raise DomainError("delta must be nonnegative")
    dh = delta / sp.eps2
    if dh > DELTA_HAT_MAX:
        raise DomainError(f"delta/eps^2 = {dh:.3g} exceeds {DELTA_HAT_MAX:g}; regime delta >> eps^2 is out of scope")
    lam = lambda_tc(a0, sp, dh)
    case = PassageCase.CANARD if is_exponentially_small(delta, sp.eps, k1) else PassageCase.JUMP
    return TcClassification(case, lam, dh)


# --------------------------------------------------------------------------
# fast linearization along {x2 = 0 = y2}


@dataclass(frozen=True)
class FastLinearization:
    matrix: np.ndarray
    eigenvalues: tuple
    eigenvectors: tuple
    e1: bool
    e2: bool


def fast_linearization(a2: float, b2: float, sp: ScaledParams, include_kappa: bool = False) -> FastLinearization:
    """Linearization of the fast (x2, y2) subsystem along {x2 = 0 = y2}.

    By default the y-row is taken without the factor kappa, as in the
    reference matrix; ``include_kappa=True`` uses the exact linearization.
    """
    ab = a2 * b2
    k = sp.kappa if include_kappa else 1.0
    l1 = b2 - sp.xi
    l2 = -k * (1.0 + ab)
    den = l1 - l2
    if den == 0.0:
        raise DegenerateError("eigenvalues coincide; eigenvector formula singular")
    A = np.array([[l1, 3.0 * ab], [0.0, l2]])
    v1 = np.array([1.0, 0.0])
    v2 = np.array([-3.0 * ab / den, 1.0])
    e1 = (0.0 >= l1 > l2)
    e2 = (0.0 < l1 < abs(l2))
    return FastLinearization(A, (l1, l2), (v1, v2), e1, e2)


# --------------------------------------------------------------------------
# way-in/way-out


def pi_wiwo(s: float, s0: float, beta0: float, sp: ScaledParams) -> float:
    """Integral of (b2 - xi) along b2 = beta0 + eps_b (s - s0)."""
    ds = s - s0
    return sp.eps_b * ds * ds / 2.0 + (beta0 - sp.xi) * ds


def pi_root(s0: float, beta0: float, sp: ScaledParams) -> float:
    if not beta0 < sp.xi:
        raise DomainError("beta0 >= xi: no delay")
    return s0 + 2.0 * (sp.xi - beta0) / sp.eps_b


@dataclass(frozen=True)
class DelayResult:
    entry: tuple
    exit: tuple
    s1: float
    case: PassageCase


def _check_c1(alpha0, beta0, sp):
    if not (2.0 * alpha0 * beta0 < 1.0 and beta0 < sp.xi):
        raise DomainError("entry must satisfy 2 alpha0 beta0 < 1 and beta0 < xi (case C1)")


def canard_exit(alpha0: float, beta0: float, sp: ScaledParams, s0: float = 0.0) -> DelayResult:
    _check_c1(alpha0, beta0, sp)
    r = sp.mu / sp.alpha
    s1 = pi_root(s0, beta0, sp)
    a1 = r + math.exp(-sp.alpha * (s1 - s0)) * (alpha0 - r)
    return DelayResult((alpha0, beta0), (a1, 2.0 * sp.xi - beta0, 0.0), s1, PassageCase.CANARD)


def jump_exit(alpha0: float, beta0: float, sp: ScaledParams, s0: float = 0.0) -> DelayResult:
    _check_c1(alpha0, beta0, sp)
    r = sp.mu / sp.alpha
    s1 = s0 + (sp.xi - beta0) / sp.eps_b
    a1 = r + math.exp(-sp.alpha * (s1 - s0)) * (alpha0 - r)
    return DelayResult((alpha0, beta0), (a1, sp.xi, 0.0), s1, PassageCase.JUMP)


# --------------------------------------------------------------------------
# full-system delay experiment


@dataclass(frozen=True)
class DelayRun:
    eps: float
    delta: float
    start: np.ndarray
    exit_state: np.ndarray
    exit_s: float
    exit_b: float
    predicted_b: float
    n_steps: int

    @property
    def error(self) -> float:
        return abs(self.exit_b - self.predicted_b)


def delay_run(alpha0: float, beta0: float, sp: ScaledParams, case: PassageCase | str,
              rho: float = DEFAULT_RHO, exit_level: float | None = None,
              cfg: IntegratorConfig | None = None) -> DelayRun:
    """Integrate the dimensionless system through the passage and record where x2 leaves.

    Canard: start at x2 = rho/2 above {x2 = 0} and exit at x2 = rho.
    Jump: start on the attracting sheet and exit at x2 = ``exit_level``
    (default 1), since for delta = K eps**2 the sheet itself can sit above rho.
    """
    case = PassageCase(case)
    _check_c1(alpha0, beta0, sp)
    ab = alpha0 * beta0
    if case is PassageCase.CANARD:
        x0 = rho / 2.0
        level = rho if exit_level is None else exit_level
        pred = 2.0 * sp.xi - beta0
    else:
        roots = c20_roots(alpha0, beta0, sp)
        if not roots:
            raise DomainError("no attracting sheet at the entry point")
        x0 = roots[0].x2
        level = 1.0 if exit_level is None else exit_level
        if x0 >= level:
            raise DomainError(f"attracting sheet x2 = {x0:.3g} already above exit level {level:g}")
        pred = sp.xi
    z0 = np.array([alpha0, beta0, x0, x0 * x0 / (1.0 + ab)])
    cfg = cfg or IntegratorConfig(rtol=1e-8, atol=1e-14, max_steps=2_000_000)
    sec = SectionSpec.coordinate(2, level, +1, name="exit")
    horizon = 4.0 * (sp.xi - beta0) / sp.eps_b + 10.0
    st, s, traj = integrate_to_section(lambda t, z: rhs_scaled(z, sp), z0, sec, cfg,
                                       jac=lambda t, z: jac_scaled(z, sp), horizon=horizon,
                                       return_trajectory=True)
    return DelayRun(sp.eps, sp.delta, z0, st, s, float(st[1]), pred, traj.n_steps)
