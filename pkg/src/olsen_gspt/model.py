"""Olsen peroxidase-oxidase model in its three scalings.

Three right-hand sides are provided:

* ``rhs_original``: the dimensional model in (A, B, X, Y), time T.
* ``rhs_scaled``: the dimensionless model in (a2, b2, x2, y2), time s.
* ``rhs_fast``: the fast rescaling (a, b, x, y) = (a2, b2, eps*x2, eps**2*y2), time tau = s/eps**2.

Each comes with a hand-coded analytic Jacobian.
"""
from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError

__all__ = [
    "OlsenParams",
    "ScaledParams",
    "Regime",
    "RegimeTag",
    "System",
    "A_STAR",
    "B_STAR",
    "transform_params",
    "scale_factors",
    "consistent_kappa",
    "classify_regime",
    "rhs_original",
    "jac_original",
    "rhs_scaled",
    "jac_scaled",
    "rhs_fast",
    "jac_fast",
    "scale_state",
    "unscale_state",
    "original_to_scaled",
    "scaled_to_original",
    "in_domain",
    "original_system",
    "scaled_system",
    "fast_system",
    "PRESETS",
    "preset",
    "scaled_preset",
]

# default floors of the region D
A_STAR = 0.01
B_STAR = 0.1


@dataclass(frozen=True)
class OlsenParams:
    """Dimensional rate constants of the Olsen model."""

    k1: float
    k2: float = 250.0
    k3: float = 0.035
    k4: float = 20.0
    k5: float = 5.35
    k6: float = 1e-5
    k7: float = 0.8
    k_minus7: float = 0.1
    k8: float = 0.825

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise DomainError(f"rate constant {f.name} must be positive and finite, got {v!r}")

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class ScaledParams:
    """Dimensionless parameters (mu, alpha, eps_b, eps, xi, delta, kappa).

    ``eps`` is stored; ``eps2`` gives eps**2. ``delta`` may be zero, which is the
    exactly invariant canard setting of the slow plane {x2 = 0 = y2}.
    """

    mu: float
    alpha: float
    eps_b: float
    eps: float
    xi: float
    delta: float
    kappa: float

    def __post_init__(self):
        for name in ("mu", "alpha", "eps_b", "eps", "xi", "kappa"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive and finite, got {v!r}")
        if not (math.isfinite(self.delta) and self.delta >= 0):
            raise DomainError(f"delta must be nonnegative and finite, got {self.delta!r}")
        if self.eps >= 1:
            raise DomainError(f"eps must be < 1, got {self.eps!r}")

    @property
    def eps2(self) -> float:
        return self.eps * self.eps

    @property
    def delta_hat(self) -> float:
        return self.delta / self.eps2

    def replace(self, **changes) -> "ScaledParams":
        return dataclasses.replace(self, **changes)

    def with_eps(self, eps: float, delta_hat: float | None = None) -> "ScaledParams":
        """Copy with a new eps; if ``delta_hat`` is given, delta = delta_hat*eps**2."""
        delta = self.delta if delta_hat is None else delta_hat * eps * eps
        return dataclasses.replace(self, eps=eps, delta=delta)

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["eps2"] = self.eps2
        return d


class RegimeTag(str, enum.Enum):
    EPS_B_MUCH_SMALLER = "EpsBMuchSmaller"
    COMPARABLE = "Comparable"
    EPS_B_MUCH_LARGER = "EpsBMuchLarger"


@dataclass(frozen=True)
class Regime:
    tag: RegimeTag
    ratio: float
    threshold: float


def scale_factors(p: OlsenParams, exact: bool = False) -> dict:
    """Factors c with A = c['A']*a2, ..., T = c['T']*s.

    The default uses the conventional factors (X factor k8/(2 k2)). With ``exact=True`` the X
    factor is sqrt(k8/(2 k2)), the only choice for which the dimensionless
    system takes its stated form term by term (together with
    ``consistent_kappa``).
    """
    r = math.sqrt(2.0 * p.k2 * p.k8)
    return {
        "A": p.k1 * p.k5 / (p.k3 * r),
        "B": r / p.k1,
        "X": r / (2.0 * p.k2) if exact else p.k8 / (2.0 * p.k2),
        "Y": p.k8 / p.k5,
        "T": p.k1 * p.k5 / (p.k3 * p.k8 * r),
    }


def consistent_kappa(p: OlsenParams) -> float:
    """kappa = k5/sqrt(2 k2 k8): the value forced by the y-equation under exact scaling."""
    return p.k5 / math.sqrt(2.0 * p.k2 * p.k8)


def transform_params(p: OlsenParams) -> ScaledParams:
    """Map dimensional rate constants to the dimensionless parameter set."""
    if not isinstance(p, OlsenParams):
        raise DomainError("expected OlsenParams")
    r = math.sqrt(2.0 * p.k2 * p.k8)
    eps2 = p.k3 * p.k8 / (p.k1 * p.k5)
    if eps2 >= 1:
        raise DomainError(f"rate constants give eps**2 = {eps2} >= 1")
    return ScaledParams(
        mu=p.k7 / p.k8,
        alpha=p.k1 * p.k5 * p.k_minus7 / (p.k3 * p.k8 * r),
        eps_b=p.k1 * p.k1 * p.k5 / (2.0 * p.k2 * p.k3 * p.k8),
        eps=math.sqrt(eps2),
        xi=p.k4 / r,
        delta=p.k6 / p.k8,
        kappa=r / p.k5,
    )


def classify_regime(sp: ScaledParams, threshold: float = 3.0) -> Regime:
    """Compare eps_b with eps**2 using a symmetric multiplicative threshold."""
    if not threshold > 1:
        raise DomainError("threshold must exceed 1")
    ratio = sp.eps_b / sp.eps2
    if ratio > threshold:
        tag = RegimeTag.EPS_B_MUCH_LARGER
    elif ratio < 1.0 / threshold:
        tag = RegimeTag.EPS_B_MUCH_SMALLER
    else:
        tag = RegimeTag.COMPARABLE
    return Regime(tag, ratio, threshold)


# --------------------------------------------------------------------------
# right-hand sides


def rhs_original(z, p: OlsenParams) -> np.ndarray:
    A, B, X, Y = z
    r = p.k3 * A * B * Y
    return np.array([
        -r + p.k7 - p.k_minus7 * A,
        -r - p.k1 * B * X + p.k8,
        p.k1 * B * X - 2.0 * p.k2 * X * X + 3.0 * r - p.k4 * X + p.k6,
        -r + 2.0 * p.k2 * X * X - p.k5 * Y,
    ])


def jac_original(z, p: OlsenParams) -> np.ndarray:
    A, B, X, Y = z
    k3 = p.k3
    BY, AY, AB = k3 * B * Y, k3 * A * Y, k3 * A * B
    return np.array([
        [-BY - p.k_minus7, -AY, 0.0, -AB],
        [-BY, -AY - p.k1 * X, -p.k1 * B, -AB],
        [3.0 * BY, p.k1 * X + 3.0 * AY, p.k1 * B - 4.0 * p.k2 * X - p.k4, 3.0 * AB],
        [-BY, -AY, 4.0 * p.k2 * X, -AB - p.k5],
    ])


def rhs_scaled(z, sp: ScaledParams) -> np.ndarray:
    a, b, x, y = z
    e2 = sp.eps2
    aby = a * b * y
    return np.array([
        sp.mu - sp.alpha * a - aby,
        sp.eps_b * (1.0 - b * x - aby),
        (b * x - x * x + 3.0 * aby - sp.xi * x + sp.delta) / e2,
        sp.kappa * (x * x - y - aby) / e2,
    ])


def jac_scaled(z, sp: ScaledParams) -> np.ndarray:
    a, b, x, y = z
    e2 = sp.eps2
    eb, k = sp.eps_b, sp.kappa
    return np.array([
        [-sp.alpha - b * y, -a * y, 0.0, -a * b],
        [-eb * b * y, -eb * (x + a * y), -eb * b, -eb * a * b],
        [3.0 * b * y / e2, (x + 3.0 * a * y) / e2, (b - 2.0 * x - sp.xi) / e2, 3.0 * a * b / e2],
        [-k * b * y / e2, -k * a * y / e2, 2.0 * k * x / e2, -k * (1.0 + a * b) / e2],
    ])


def rhs_fast(z, sp: ScaledParams) -> np.ndarray:
    a, b, x, y = z
    e, e2, eb = sp.eps, sp.eps2, sp.eps_b
    aby = a * b * y
    return np.array([
        e2 * (sp.mu - sp.alpha * a) - aby,
        eb * e2 - eb * e * b * x - eb * aby,
        (-x * x + e * (b - sp.xi) * x + 3.0 * aby + e2 * sp.delta) / e,
        sp.kappa * (x * x - y - aby),
    ])


def jac_fast(z, sp: ScaledParams) -> np.ndarray:
    a, b, x, y = z
    e, e2, eb, k = sp.eps, sp.eps2, sp.eps_b, sp.kappa
    return np.array([
        [-e2 * sp.alpha - b * y, -a * y, 0.0, -a * b],
        [-eb * b * y, -eb * (e * x + a * y), -eb * e * b, -eb * a * b],
        [3.0 * b * y / e, (e * x + 3.0 * a * y) / e, (-2.0 * x + e * (b - sp.xi)) / e, 3.0 * a * b / e],
        [-k * b * y, -k * a * y, 2.0 * k * x, -k * (1.0 + a * b)],
    ])


# --------------------------------------------------------------------------
# state maps


def scale_state(z, eps: float) -> np.ndarray:
    """(a2, b2, x2, y2) -> (a, b, x, y) with x = eps*x2, y = eps**2*y2."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    z = np.asarray(z, dtype=float)
    out = z.copy()
    out[..., 2] = eps * z[..., 2]
    out[..., 3] = eps * eps * z[..., 3]
    return out


def unscale_state(z, eps: float) -> np.ndarray:
    if not eps > 0:
        raise DomainError("eps must be positive")
    z = np.asarray(z, dtype=float)
    out = z.copy()
    out[..., 2] = z[..., 2] / eps
    out[..., 3] = z[..., 3] / (eps * eps)
    return out


def original_to_scaled(z, p: OlsenParams, exact: bool = False) -> np.ndarray:
    c = scale_factors(p, exact)
    z = np.asarray(z, dtype=float)
    return z / np.array([c["A"], c["B"], c["X"], c["Y"]])


def scaled_to_original(z, p: OlsenParams, exact: bool = False) -> np.ndarray:
    c = scale_factors(p, exact)
    z = np.asarray(z, dtype=float)
    return z * np.array([c["A"], c["B"], c["X"], c["Y"]])


def in_domain(a: float, b: float, a_star: float = A_STAR, b_star: float = B_STAR) -> bool:
    """Membership of (a, b) in the region D (floors only; D is unbounded above)."""
    return a > a_star and b > b_star


# --------------------------------------------------------------------------
# systems bundled for the integrator


@dataclass(frozen=True)
class System:
    """Autonomous vector field plus Jacobian, in the form ``f(t, z)``."""

    rhs: Callable
    jac: Callable
    time_scale: str
    names: tuple = ("a2", "b2", "x2", "y2")


def original_system(p: OlsenParams) -> System:
    return System(lambda t, z: rhs_original(z, p), lambda t, z: jac_original(z, p),
                  "T", ("A", "B", "X", "Y"))


def scaled_system(sp: ScaledParams) -> System:
    return System(lambda t, z: rhs_scaled(z, sp), lambda t, z: jac_scaled(z, sp),
                  "s", ("a2", "b2", "x2", "y2"))


def fast_system(sp: ScaledParams) -> System:
    return System(lambda t, z: rhs_fast(z, sp), lambda t, z: jac_fast(z, sp),
                  "tau", ("a", "b", "x", "y"))


# --------------------------------------------------------------------------
# presets

_TABLE1_K1 = {"olsen-0.16": 0.16, "olsen-0.35": 0.35, "olsen-0.41": 0.41}

PRESETS = tuple(_TABLE1_K1) + ("fig6", "fig10")

# kappa = 3.93 is the value printed for the figure parameter sets
_FIG = dict(mu=1.3, alpha=0.37, eps_b=0.062, xi=0.98, kappa=3.93)
FIG_EPS = 0.05
FIG10_DELTA_HAT = 2.0


def preset(name: str) -> OlsenParams:
    """Dimensional parameters for one of the built-in rate-constant sets."""
    try:
        return OlsenParams(k1=_TABLE1_K1[name])
    except KeyError:
        raise DomainError(f"unknown dimensional preset {name!r}; choose from {sorted(_TABLE1_K1)}") from None


def scaled_preset(name: str, eps: float | None = None, delta: float | None = None) -> ScaledParams:
    """Scaled parameters by preset name.

    ``fig6`` is the canard setting (delta = 0); ``fig10`` the jump setting with
    delta = 2*eps**2. ``eps`` defaults to 0.05 for the figure presets.
    """
    if name in _TABLE1_K1:
        sp = transform_params(preset(name))
        if eps is not None:
            sp = sp.replace(eps=eps)
    elif name in ("fig6", "fig10"):
        e = FIG_EPS if eps is None else eps
        d = 0.0 if name == "fig6" else FIG10_DELTA_HAT * e * e
        sp = ScaledParams(eps=e, delta=d, **_FIG)
    else:
        raise DomainError(f"unknown preset {name!r}; choose from {list(PRESETS)}")
    if delta is not None:
        sp = sp.replace(delta=delta)
    return sp
