"""Large loops: the slow flow on C0 written in (a, b, y),

    a' = -a b y,   b' = -eps_b a b y,   y' = kappa (2 a b - 1) y,

solved in closed form along the invariant lines b = eps_b a + K1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, InfeasibleError
from .integrate import IntegratorConfig, SectionSpec, integrate
from .model import ScaledParams

__all__ = [
    "LoopSpec",
    "loop_y",
    "loop_dy",
    "loop_extrema",
    "landing_point",
    "invariant_line",
    "on_line",
    "loop_polyline",
    "slow_flow_c0",
    "slow_flow_c0_jac",
    "integrate_loop",
]

# absolute tolerance effectively off; the relative one governs, since alpha2 can be small
LANDING_XTOL = float(np.finfo(float).tiny)
POLYLINE_POINTS = 2000


@dataclass(frozen=True)
class LoopSpec:
    alpha1: float
    beta1: float
    kappa: float
    eps_b: float

    def __post_init__(self):
        if not (self.alpha1 > 0 and self.beta1 > 0):
            raise DomainError("launch point must have alpha1, beta1 > 0")
        if not self.K1 > 0:
            raise DomainError("requires beta1 - eps_b alpha1 > 0")

    @property
    def K1(self) -> float:
        return self.beta1 - self.eps_b * self.alpha1

    @classmethod
    def from_params(cls, alpha1: float, beta1: float, sp: ScaledParams) -> "LoopSpec":
        return cls(alpha1, beta1, sp.kappa, sp.eps_b)


def loop_y(a, spec: LoopSpec):
    """Height of the loop launched from (alpha1, beta1, 0) above the abscissa a."""
    a = np.asarray(a, dtype=float)
    a1, b1, eb = spec.alpha1, spec.beta1, spec.eps_b
    arg_den = a1 * (b1 + eb * (a - a1))
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = b1 * a / arg_den
    if np.any(~(arg > 0)):
        raise DomainError("logarithm argument must be positive")
    out = spec.kappa / spec.K1 * (2.0 * (a - a1) * (a1 * eb - b1) + np.log(arg))
    return float(out) if out.ndim == 0 else out


def loop_dy(a, spec: LoopSpec):
    """dy/da = kappa (1 - 2 a b(a)) / (a b(a)) with b(a) on the invariant line."""
    b = spec.beta1 + (a - spec.alpha1) * spec.eps_b
    return spec.kappa * (1.0 - 2.0 * a * b) / (a * b)


def loop_extrema(spec: LoopSpec) -> tuple:
    """(a_plus, a_minus): the roots of 2 a b(a) = 1."""
    eb = spec.eps_b
    p = 2.0 * spec.alpha1 * eb - 2.0 * spec.beta1
    sq = math.sqrt(8.0 * eb + p * p)
    # a+ by the cancellation-free form, since p < 0
    a_plus = 2.0 / (sq - p)
    a_minus = (p - sq) / (4.0 * eb)
    return a_plus, a_minus


def landing_point(spec: LoopSpec, xtol: float = LANDING_XTOL) -> float:
    """Second zero alpha2 in (0, a_plus) of the loop profile."""
    if not 2.0 * spec.alpha1 * spec.beta1 > 1.0:
        raise InfeasibleError("2 alpha1 beta1 <= 1: no loop")
    a_plus, _ = loop_extrema(spec)
    if a_plus >= spec.alpha1:
        # collapsed loop: launch point numerically on {2ab = 1}
        return spec.alpha1
    lo = a_plus * 1e-6
    f_lo = loop_y(lo, spec)
    while f_lo >= 0.0:
        lo *= 1e-3
        f_lo = loop_y(lo, spec)
    f_hi = loop_y(a_plus, spec)
    if f_hi <= 0.0:
        return a_plus
    return brentq(lambda a: loop_y(a, spec), lo, a_plus, xtol=xtol, rtol=4 * np.finfo(float).eps)


def invariant_line(spec: LoopSpec, a):
    return spec.eps_b * np.asarray(a) + spec.K1


def on_line(point, spec: LoopSpec, tol: float = 1e-8) -> bool:
    a, b = point[0], point[1]
    return abs(b - float(invariant_line(spec, a))) <= tol


def loop_polyline(spec: LoopSpec, n: int = POLYLINE_POINTS, alpha2: float | None = None) -> np.ndarray:
    """(n, 3) array of (a, b, y) from alpha1 down to alpha2, log-spaced in a."""
    if alpha2 is None:
        alpha2 = landing_point(spec)
    a = np.geomspace(spec.alpha1, alpha2, n)
    y = np.maximum(loop_y(a, spec), 0.0)
    return np.column_stack([a, invariant_line(spec, a), y])


# --------------------------------------------------------------------------
# ODE oracle


def slow_flow_c0(z, kappa: float, eps_b: float) -> np.ndarray:
    a, b, y = z
    aby = a * b * y
    return np.array([-aby, -eps_b * aby, kappa * (2.0 * a * b - 1.0) * y])


def slow_flow_c0_jac(z, kappa: float, eps_b: float) -> np.ndarray:
    a, b, y = z
    return np.array([
        [-b * y, -a * y, -a * b],
        [-eps_b * b * y, -eps_b * a * y, -eps_b * a * b],
        [2.0 * kappa * b * y, 2.0 * kappa * a * y, kappa * (2.0 * a * b - 1.0)],
    ])


def integrate_loop(spec: LoopSpec, y0: float = 1e-9, cfg: IntegratorConfig | None = None,
                   horizon: float = 1e4):
    """Integrate the slow flow from (alpha1, beta1, y0) until y falls back to y0.

    Returns the trajectory; its last state is the numerical landing point.
    """
    cfg = cfg or IntegratorConfig(rtol=1e-11, atol=1e-15)
    k, eb = spec.kappa, spec.eps_b
    sec = SectionSpec.coordinate(2, y0, -1, name="landing")
    traj = integrate(lambda t, z: slow_flow_c0(z, k, eb), [spec.alpha1, spec.beta1, y0], 0.0, horizon, cfg,
                     jac=lambda t, z: slow_flow_c0_jac(z, k, eb), sections=(sec,),
                     time_scale="tau", names=("a", "b", "y"))
    if not traj.crossings:
        raise DomainError("loop did not return within the horizon")
    return traj
