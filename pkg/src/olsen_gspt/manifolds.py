"""Critical manifolds, fold sets and normal hyperbolicity.

In the fast scaling the critical manifold is C0 = {y = x**2/(3ab)} with a
fold set along {x = 0 = y}. In the second chart (a2, b2, x2, y2) the fast
subsystem is

    x2' = 3 a2 b2 y2 - x2**2 + (b2 - xi) x2 + delta
    y2' = kappa (x2**2 - y2 - a2 b2 y2)

and eliminating y2 = x2**2/(1 + a2 b2) leaves the quadratic
q x2**2 + d x2 + delta = 0 with q = (2 a2 b2 - 1)/(1 + a2 b2), d = b2 - xi.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ClassificationError, DegenerateError, DomainError
from .model import A_STAR, B_STAR, ScaledParams

__all__ = [
    "Branch",
    "ExclusionBall",
    "FoldData",
    "BranchPoint",
    "DEFAULT_UPSILON",
    "ON_MANIFOLD_TOL",
    "c0_y",
    "fast_F",
    "fold_data_L0",
    "c20_point",
    "c20_residuals",
    "c20_roots",
    "l2_fold",
    "branch_expansions",
    "classify_point",
    "fast_jacobian",
    "fast_jacobian_eigs",
    "compensated_horner",
]

DEFAULT_UPSILON = 0.05
ON_MANIFOLD_TOL = 1e-8


class Branch(str, enum.Enum):
    S2A_MINUS = "S2aMinus"
    S2R_MINUS = "S2rMinus"
    S2A_PLUS = "S2aPlus"
    S2R_PLUS = "S2rPlus"
    FOLD_CURVE = "FoldCurve"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class ExclusionBall:
    """Disc of radius ``upsilon`` around (a2, b2) = (1/(2 xi), xi)."""

    xi: float
    upsilon: float = DEFAULT_UPSILON

    def __post_init__(self):
        if not self.upsilon > 0:
            raise DomainError("upsilon must be positive")

    @property
    def center(self) -> tuple:
        return (0.5 / self.xi, self.xi)

    def distance(self, a2: float, b2: float) -> float:
        ca, cb = self.center
        return math.hypot(a2 - ca, b2 - cb)

    def contains(self, a2: float, b2: float) -> bool:
        return self.distance(a2, b2) <= self.upsilon


class FoldData(NamedTuple):
    F: float
    F_x: float
    F_xx: float
    F_y: float


class BranchPoint(NamedTuple):
    x2: float
    y2: float


# --------------------------------------------------------------------------
# C0 and its fold set


def c0_y(a: float, b: float, x: float, a_star: float = A_STAR, b_star: float = B_STAR) -> float:
    """Height y of C0 above (a, b, x)."""
    if not (a > a_star and b > b_star):
        raise DomainError(f"(a, b) = ({a}, {b}) below the floors ({a_star}, {b_star})")
    return x * x / (3.0 * a * b)


def fast_F(a, b, x, y, eps, sp: ScaledParams):
    """eps times the x-component of the fast system: -x^2 + eps(b-xi)x + 3aby + eps^2 delta."""
    return -x * x + eps * (b - sp.xi) * x + 3.0 * a * b * y + eps * eps * sp.delta


def fold_data_L0(a: float, b: float, sp: ScaledParams | None = None) -> FoldData:
    """F and its partial derivatives at (x, y, eps) = (0, 0, 0)."""
    xi = sp.xi if sp is not None else 1.0
    x = y = eps = 0.0
    F = -x * x + eps * (b - xi) * x + 3.0 * a * b * y
    F_x = -2.0 * x + eps * (b - xi)
    F_xx = -2.0
    F_y = 3.0 * a * b
    return FoldData(F, F_x, F_xx, F_y)


# --------------------------------------------------------------------------
# second-chart critical manifold C_{2,0}


def c20_point(b2: float, x2: float, sp: ScaledParams, tol: float = 1e-300) -> tuple:
    """(a2, y2) on C_{2,0} above (b2, x2).

    For delta = 0 the common factor x2 is cancelled, so the parametrization
    extends continuously to x2 = 0 (where the curved sheet meets the
    invariant plane {x2 = 0 = y2} at a2 b2 = -1, or at a2 = 1/(2 xi) when b2 = xi).
    """
    xi, delta = sp.xi, sp.delta
    g = 2.0 * x2 * x2 + x2 * (b2 - xi) + delta
    y2 = g / 3.0
    if delta == 0.0:
        den = b2 * (2.0 * x2 + b2 - xi)
        num = x2 + xi - b2
        if den == 0.0 and num == 0.0:
            return 0.5 / xi, y2
    else:
        den = b2 * g
        num = x2 * x2 + x2 * (xi - b2) - delta
    if abs(den) <= tol:
        raise DegenerateError(f"parametrization singular at b2={b2}, x2={x2}")
    return num / den, y2


def c20_residuals(a2, b2, x2, y2, sp: ScaledParams) -> tuple:
    """Values of the two fast right-hand sides (without the 1/eps^2 factor)."""
    f1 = 3.0 * a2 * b2 * y2 - x2 * x2 + (b2 - sp.xi) * x2 + sp.delta
    f2 = sp.kappa * (x2 * x2 - y2 - a2 * b2 * y2)
    return f1, f2


def c20_roots(a2: float, b2: float, sp: ScaledParams) -> list:
    """Nonnegative x2 with (a2, b2, x2, x2^2/(1+a2 b2)) on C_{2,0}, ascending.

    Uses the cancellation-free quadratic formula.
    """
    ab = a2 * b2
    q = (2.0 * ab - 1.0) / (1.0 + ab)
    d = b2 - sp.xi
    delta = sp.delta
    roots = []
    if q == 0.0:
        if d != 0.0:
            roots = [-delta / d]
    else:
        disc = d * d - 4.0 * q * delta
        if disc >= 0.0:
            sq = math.sqrt(disc)
            t = -0.5 * (d + math.copysign(sq, d)) if d != 0.0 else 0.5 * sq
            cand = []
            if t != 0.0:
                cand.append(delta / t)
                cand.append(t / q)
            else:
                cand.append(0.0)
            roots = cand
    out = sorted(r for r in roots if r >= 0.0 and math.isfinite(r))
    return [BranchPoint(r, r * r / (1.0 + ab)) for r in out]


def l2_fold(a2: float, b2: float, xi: float) -> float:
    """x2 on the fold curve: (1 + a2 b2)(xi - b2)/(4 a2 b2 - 2)."""
    den = 4.0 * a2 * b2 - 2.0
    if den == 0.0:
        raise DegenerateError("fold curve undefined at 2 a2 b2 = 1")
    return (1.0 + a2 * b2) * (xi - b2) / den


# --------------------------------------------------------------------------


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _two_prod(a, b):
    p = a * b
    # Dekker splitting
    f = 134217729.0
    ca = f * a
    ah = ca - (ca - a)
    al = a - ah
    cb = f * b
    bh = cb - (cb - b)
    bl = b - bh
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def compensated_horner(coeffs, x: float) -> float:
    """Evaluate sum(coeffs[k] * x**k) by compensated Horner."""
    s = float(coeffs[-1])
    c = 0.0
    for a in reversed(coeffs[:-1]):
        p, pe = _two_prod(s, x)
        s, se = _two_sum(p, float(a))
        c = c * x + (pe + se)
    return s + c


def branch_expansions(a2: float, b2: float, delta: float, sp: ScaledParams) -> dict:
    """Second-order delta series of the attracting and repelling sheets for b2 < xi.

    Returns ``{"attracting": BranchPoint, "repelling": BranchPoint | None}``;
    the repelling sheet does not exist when 2 a2 b2 = 1.
    """
    if not b2 < sp.xi:
        raise DomainError("expansions hold only for b2 < xi")
    ab = a2 * b2
    d = b2 - sp.xi
    g = 1.0 + ab
    q = (2.0 * ab - 1.0) / g
    att_x = (0.0, -1.0 / d, -q / d ** 3)
    att_y = (0.0, 0.0, 1.0 / (g * d * d))
    out = {
        "attracting": BranchPoint(compensated_horner(att_x, delta), compensated_horner(att_y, delta)),
        "repelling": None,
    }
    if q != 0.0:
        rep_x = (-d / q, 1.0 / d, q / d ** 3)
        rep_y = (g * d * d / (2.0 * ab - 1.0) ** 2, 2.0 / (1.0 - 2.0 * ab), -1.0 / (g * d * d))
        out["repelling"] = BranchPoint(compensated_horner(rep_x, delta), compensated_horner(rep_y, delta))
    return out


# --------------------------------------------------------------------------
# fast Jacobian and classification


def fast_jacobian(a2, b2, x2, sp: ScaledParams) -> np.ndarray:
    ab = a2 * b2
    return np.array([[-2.0 * x2 + b2 - sp.xi, 3.0 * ab],
                     [2.0 * sp.kappa * x2, -sp.kappa * (1.0 + ab)]])


def fast_jacobian_eigs(point, sp: ScaledParams) -> np.ndarray:
    """Eigenvalues of the (x2, y2) fast-subsystem Jacobian at ``point = (a2, b2, x2[, y2])``."""
    a2, b2, x2 = point[0], point[1], point[2]
    return np.linalg.eigvals(fast_jacobian(a2, b2, x2, sp)).astype(complex)


def classify_point(a2, b2, x2, y2, sp: ScaledParams, upsilon: float = DEFAULT_UPSILON,
                   tol: float = ON_MANIFOLD_TOL, fold_tol: float = 1e-9) -> Branch:
    """Branch of C_{2,0} containing the point.

    The sheet type is read from the sign of the fast determinant
    kappa [2 x2 (1 - 2 a2 b2) - (b2 - xi)(1 + a2 b2)], which is the fold
    comparison x2 against l2 with the sign of 4 a2 b2 - 2 taken into account.
    """
    if ExclusionBall(sp.xi, upsilon).contains(a2, b2):
        return Branch.DEGENERATE
    f1, f2 = c20_residuals(a2, b2, x2, y2, sp)
    scale = 1.0 + abs(x2) ** 2 + abs(y2) * (1.0 + abs(a2 * b2))
    if max(abs(f1), abs(f2) / sp.kappa) > tol * scale:
        raise ClassificationError(f"point is off C_(2,0): residuals ({f1:.3e}, {f2:.3e})")
    ab = a2 * b2
    det_n = 2.0 * x2 * (1.0 - 2.0 * ab) - (b2 - sp.xi) * (1.0 + ab)
    if b2 == sp.xi or abs(det_n) <= fold_tol * (1.0 + abs(x2)):
        return Branch.FOLD_CURVE
    attracting = det_n > 0.0
    if b2 < sp.xi:
        return Branch.S2A_MINUS if attracting else Branch.S2R_MINUS
    return Branch.S2A_PLUS if attracting else Branch.S2R_PLUS
