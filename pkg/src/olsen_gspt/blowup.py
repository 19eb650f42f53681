"""Blow-up of the fold set {x = 0 = y, eps = 0}.

Chart 1 (entry/exit):  x = r1,     y = r1**2 y1, eps = r1 eps1
Chart 2 (rescaling):   x = r2 x2,  y = r2**2 y2, eps = r2

In chart 1 the vector field is desingularized by a time change; the raw
(pushed-forward) field, written for the time t = tau/eps of the fast system,
equals r1 times the desingularized one.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, DomainError
from .manifolds import DEFAULT_UPSILON, ExclusionBall
from .model import ScaledParams

__all__ = [
    "Chart1State",
    "EquilibriumKind",
    "Equilibrium",
    "ApproachCase",
    "to_chart1",
    "from_chart1",
    "chart12",
    "chart21",
    "rhs_chart1",
    "rhs_chart1_raw",
    "leaf_eps0_rhs",
    "leaf_r0_rhs",
    "leaf_r0_jacobian",
    "numeric_jacobian",
    "equilibria_chart1",
    "formal_p3",
    "formal_p3_jacobian",
    "m1_coefficients",
    "c22",
    "c22_normal_form",
    "m1_graph",
    "m1_flow",
    "m1_residual",
    "classify_approach",
]


@dataclass(frozen=True)
class Chart1State:
    a1: float
    b1: float
    r1: float
    y1: float
    eps1: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a1, self.b1, self.r1, self.y1, self.eps1])

    @classmethod
    def from_array(cls, z) -> "Chart1State":
        return cls(*(float(v) for v in z))


class EquilibriumKind(str, enum.Enum):
    UNSTABLE_NODE = "UnstableNode"
    CENTER_STABLE = "CenterStable"
    SADDLE = "Saddle"
    SINK = "Sink"
    ABSENT = "Absent"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class Equilibrium:
    name: str
    y1: float
    eps1: float
    kind: EquilibriumKind
    eigenvalues: tuple


class ApproachCase(str, enum.Enum):
    C1 = "C1"
    C2 = "C2"
    C3 = "C3"
    C4 = "C4"
    DEGENERATE = "Degenerate"


# --------------------------------------------------------------------------
# charts


def to_chart1(state, eps: float) -> Chart1State:
    """Fast-scaling state (a, b, x, y) at parameter eps -> chart-1 coordinates."""
    a, b, x, y = (float(v) for v in state)
    if not x > 0:
        raise DomainError("chart 1 requires x > 0")
    return Chart1State(a, b, x, y / (x * x), eps / x)


def from_chart1(c: Chart1State) -> tuple:
    """Chart-1 coordinates -> ((a, b, x, y), eps)."""
    if c.r1 < 0:
        raise DomainError("chart 1 requires r1 >= 0")
    r = c.r1
    return np.array([c.a1, c.b1, r, r * r * c.y1]), r * c.eps1


def chart12(c: Chart1State) -> tuple:
    """Chart 1 -> chart 2: returns ((a2, b2, x2, y2), r2)."""
    if c.eps1 == 0:
        raise DomainError("eps1 = 0 is the equator; not covered by chart 2")
    e = c.eps1
    return np.array([c.a1, c.b1, 1.0 / e, c.y1 / (e * e)]), c.r1 * e


def chart21(state2, r2: float) -> Chart1State:
    a2, b2, x2, y2 = (float(v) for v in state2)
    if not x2 > 0:
        raise DomainError("chart 1 requires x2 > 0")
    return Chart1State(a2, b2, r2 * x2, y2 / (x2 * x2), 1.0 / x2)


# --------------------------------------------------------------------------
# vector fields


def _unpack(c):
    if isinstance(c, Chart1State):
        return c.a1, c.b1, c.r1, c.y1, c.eps1
    return tuple(c)


def rhs_chart1(c, sp: ScaledParams, delta: float | None = None) -> np.ndarray:
    """Desingularized chart-1 vector field, ordered (a1, b1, r1, y1, eps1)."""
    a, b, r, y, e = _unpack(c)
    dl = sp.delta if delta is None else delta
    ab = a * b
    bk = -1.0 + e * (b - sp.xi) + 3.0 * ab * y + e * e * dl
    r2e = e * r * r
    return np.array([
        r2e * (e * e * (sp.mu - sp.alpha * a) - ab * y),
        r2e * sp.eps_b * (e * e - e * b - ab * y),
        r * bk,
        sp.kappa * e * (1.0 - y * (1.0 + ab)) - 2.0 * y * bk,
        -e * bk,
    ])


def rhs_chart1_raw(c, sp: ScaledParams, delta: float | None = None) -> np.ndarray:
    """Pushforward of eps*rhs_fast (time t = tau/eps): r1 times the desingularized field."""
    r = _unpack(c)[2]
    return r * rhs_chart1(c, sp, delta)


def leaf_eps0_rhs(r1, y1, a1, b1) -> np.ndarray:
    """Field on the invariant leaf {eps1 = 0, a1, b1 fixed}."""
    g = 3.0 * a1 * b1 * y1 - 1.0
    return np.array([r1 * g, -2.0 * y1 * g])


def leaf_r0_rhs(y1, eps1, a1, b1, sp: ScaledParams) -> np.ndarray:
    """Field on the invariant leaf {r1 = 0, a1, b1 fixed} (delta vanishes with eps)."""
    ab = a1 * b1
    bk = -1.0 + eps1 * (b1 - sp.xi) + 3.0 * ab * y1
    return np.array([sp.kappa * eps1 * (1.0 - y1 * (1.0 + ab)) - 2.0 * y1 * bk, -eps1 * bk])


def leaf_r0_jacobian(y1, eps1, a1, b1, sp: ScaledParams) -> np.ndarray:
    """Closed-form Jacobian of ``leaf_r0_rhs`` with respect to (y1, eps1)."""
    ab, k, xi = a1 * b1, sp.kappa, sp.xi
    return np.array([
        [2.0 - ab * (12.0 * y1 + eps1 * k) - eps1 * (2.0 * b1 + k - 2.0 * xi),
         k - y1 * (k + b1 * (2.0 + a1 * k) - 2.0 * xi)],
        [-3.0 * ab * eps1, 1.0 - 3.0 * ab * y1 - 2.0 * b1 * eps1 + 2.0 * eps1 * xi],
    ])


def numeric_jacobian(f, z, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of a vector function f(z)."""
    z = np.asarray(z, dtype=float)
    f0 = np.asarray(f(z))
    J = np.empty((len(f0), len(z)))
    for j in range(len(z)):
        dz = h * max(1.0, abs(z[j]))
        zp, zm = z.copy(), z.copy()
        zp[j] += dz
        zm[j] -= dz
        J[:, j] = (np.asarray(f(zp)) - np.asarray(f(zm))) / (2.0 * dz)
    return J


# --------------------------------------------------------------------------
# equilibria on the r1 = 0 leaf


def _kind(eigs, tol) -> EquilibriumKind:
    re = np.real(eigs)
    pos = int(np.sum(re > tol))
    neg = int(np.sum(re < -tol))
    if pos == 2:
        return EquilibriumKind.UNSTABLE_NODE
    if neg == 2:
        return EquilibriumKind.SINK
    if pos == 1 and neg == 1:
        return EquilibriumKind.SADDLE
    if neg == 1:
        return EquilibriumKind.CENTER_STABLE
    raise DegenerateError(f"equilibrium with eigenvalues {eigs} is not classifiable")


def _eigs_at(y1, e1, a1, b1, sp):
    J = numeric_jacobian(lambda z: leaf_r0_rhs(z[0], z[1], a1, b1, sp), [y1, e1])
    ev = np.linalg.eigvals(J)
    # sort by real part for reproducible output
    ev = ev[np.argsort(np.real(ev))]
    return tuple(complex(v) if abs(v.imag) > 0 else float(v.real) for v in ev)


def formal_p3(a1, b1, sp: ScaledParams) -> tuple:
    """Location (y1, eps1) of the third equilibrium, ignoring the sign of eps1."""
    ab = a1 * b1
    if b1 == sp.xi:
        raise DegenerateError("p3 is at infinity for b1 = xi")
    return 1.0 / (1.0 + ab), (1.0 - 2.0 * ab) / ((1.0 + ab) * (b1 - sp.xi))


def formal_p3_jacobian(a1, b1, sp: ScaledParams) -> np.ndarray:
    """Numeric leaf Jacobian at the formal p3, whether or not p3 lies in the chart."""
    y3, e3 = formal_p3(a1, b1, sp)
    return numeric_jacobian(lambda z: leaf_r0_rhs(z[0], z[1], a1, b1, sp), [y3, e3])


def equilibria_chart1(a1s: float, b1s: float, sp: ScaledParams, tol: float = 1e-9) -> list:
    """Equilibria p1, p2, p3 of the r1 = 0 leaf with numerically computed types."""
    ab = a1s * b1s
    if 2.0 * ab == 1.0 and b1s == sp.xi:
        raise DegenerateError("2 a1 b1 = 1 and b1 = xi simultaneously")
    out = []
    for name, (y1, e1) in (("p1", (0.0, 0.0)), ("p2", (1.0 / (3.0 * ab), 0.0))):
        ev = _eigs_at(y1, e1, a1s, b1s, sp)
        out.append(Equilibrium(name, y1, e1, _kind(ev, tol), ev))
    if b1s == sp.xi:
        out.append(Equilibrium("p3", math.nan, math.nan, EquilibriumKind.ABSENT, ()))
        return out
    if 2.0 * ab == 1.0:
        # p3 collides with p2; left unclassified
        y3, e3 = formal_p3(a1s, b1s, sp)
        out.append(Equilibrium("p3", y3, e3, EquilibriumKind.DEGENERATE, ()))
        return out
    y3, e3 = formal_p3(a1s, b1s, sp)
    if (sp.xi - b1s) * (2.0 * ab - 1.0) < 0.0:
        out.append(Equilibrium("p3", y3, e3, EquilibriumKind.ABSENT, ()))
        return out
    ev = _eigs_at(y3, e3, a1s, b1s, sp)
    out.append(Equilibrium("p3", y3, e3, _kind(ev, tol), ev))
    return out


# --------------------------------------------------------------------------
# center manifold M1 at p2


def c22(a1, b1, sp: ScaledParams) -> float:
    ab = a1 * b1
    k = sp.kappa
    return k * (1.0 + 4.0 * ab) / (24.0 * ab) * (2.0 * (b1 - sp.xi) + k * (1.0 - 2.0 * ab))


def c22_normal_form(a1, b1, sp: ScaledParams) -> float:
    """c22 assembled from the normal-form constants k22 and K (cross-check)."""
    ab = a1 * b1
    k, xi = sp.kappa, sp.xi
    K = -(2.0 * b1 + k - 2.0 * ab * k - 2.0 * xi) / (3.0 * ab)
    k22 = 3.0 * ab * (1.0 + 4.0 * ab) * k / (4.0 * (b1 - xi) + 2.0 * k * (1.0 - 2.0 * ab))
    return k22 * K * K / 4.0


def m1_coefficients(a1, b1, sp: ScaledParams) -> tuple:
    """(c0, c1, c2) with y1 = c0 + c1 eps1 + c2 eps1**2 on M1."""
    ab = a1 * b1
    return (1.0 / (3.0 * ab),
            (2.0 * (sp.xi - b1) + sp.kappa * (2.0 * ab - 1.0)) / (6.0 * ab),
            c22(a1, b1, sp))


def m1_graph(r1, eps1, a1s, b1s, sp: ScaledParams):
    c0, c1, c2 = m1_coefficients(a1s, b1s, sp)
    return c0 + eps1 * (c1 + eps1 * c2)


def m1_flow(r1, eps1, a1s, b1s, sp: ScaledParams) -> tuple:
    """Truncated flow (r1', eps1') on M1."""
    ab = a1s * b1s
    g = sp.kappa * (2.0 * ab - 1.0) / 2.0 * eps1 + 3.0 * ab * c22(a1s, b1s, sp) * eps1 * eps1
    return r1 * g, -eps1 * g


def m1_residual(r1, eps1, a1s, b1s, sp: ScaledParams) -> float:
    """Invariance defect y1' - Dh . (r1', eps1') of the M1 graph under the 3D leaf system."""
    c0, c1, c2 = m1_coefficients(a1s, b1s, sp)
    y = c0 + eps1 * (c1 + eps1 * c2)
    ab = a1s * b1s
    bk = -1.0 + eps1 * (b1s - sp.xi) + 3.0 * ab * y
    dy = sp.kappa * eps1 * (1.0 - y * (1.0 + ab)) - 2.0 * y * bk
    de = -eps1 * bk
    # the graph does not depend on r1
    return dy - (c1 + 2.0 * c2 * eps1) * de


# --------------------------------------------------------------------------


def classify_approach(a: float, b: float, sp: ScaledParams, upsilon: float = DEFAULT_UPSILON) -> ApproachCase:
    """Approach/departure case near the fold set from the base point (a, b)."""
    if ExclusionBall(sp.xi, upsilon).contains(a, b):
        return ApproachCase.DEGENERATE
    s = 2.0 * a * b - 1.0
    if b == sp.xi:
        return ApproachCase.C4 if s > 0 else ApproachCase.DEGENERATE
    if s == 0.0:
        return ApproachCase.DEGENERATE
    if s < 0:
        return ApproachCase.C1 if b < sp.xi else ApproachCase.C2
    return ApproachCase.C3 if b < sp.xi else ApproachCase.C4
