"""Catalogue of sub-Riemannian normal forms.

Every model is a rank-2 distribution spanned by an orthonormal pair of vector
fields ``F1, F2`` on R^3 (R^4 for Engel), completed by ``F3`` (and ``F4``) to a
frame of the tangent space.  Geodesic states are written in frame-adjoint
coordinates ``P_i = <p, F_i(q)>`` and the normal Hamiltonian is
``H = (P1^2 + P2^2) / 2``.  The equations of motion follow from

    q' = P1 F1(q) + P2 F2(q),     P_j' = -sum_i P_i <p, [F_j, F_i](q)>.

Cylinder convention used for every family: ``P1 = cos(theta)``,
``P2 = sin(theta)`` and ``lambda = P3`` (``P4`` for Engel).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from srlab.errors import DegenerateError, DomainError, SingularMetricError


class Family(str, Enum):
    MARTINET_GRADED0 = "martinet_graded0"
    MARTINET_FLAT = "martinet_flat"
    CONTACT_GRADED1 = "contact_graded1"
    HEISENBERG = "heisenberg"
    TANGENTIAL_ELLIPTIC = "tangential_elliptic"
    TANGENTIAL_HYPERBOLIC = "tangential_hyperbolic"
    ENGEL_FLAT = "engel_flat"
    LIU_SUSSMANN = "liu_sussmann"


_MARTINET = (Family.MARTINET_GRADED0, Family.MARTINET_FLAT)
_CONTACT = (Family.CONTACT_GRADED1, Family.HEISENBERG)
_TANGENTIAL = (Family.TANGENTIAL_ELLIPTIC, Family.TANGENTIAL_HYPERBOLIC)


@dataclass(frozen=True)
class ModelSpec:
    """A model family with its parameters.

    Build instances with the named constructors, e.g.
    ``ModelSpec.martinet_graded0(alpha=1.0, beta=0.5)``.  Parameters not used
    by a family stay at zero.

    :arg alpha, beta, gamma: Martinet metric ``(1+alpha*y)^2 dx^2 + (1+beta*x+gamma*y)^2 dy^2``
    :arg a, b, c: coefficients of ``Q = a x^2 + 2 b x y + c y^2`` for the contact family
    :arg eps, m: tangential / Liu-Sussmann parameters
    """

    family: Family
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    eps: float = 0.0
    m: float = 0.0

    @classmethod
    def martinet_graded0(cls, alpha: float = 0.0, beta: float = 0.0, gamma: float = 0.0) -> "ModelSpec":
        return cls(Family.MARTINET_GRADED0, alpha=float(alpha), beta=float(beta), gamma=float(gamma))

    @classmethod
    def martinet_flat(cls) -> "ModelSpec":
        return cls(Family.MARTINET_FLAT)

    @classmethod
    def contact_graded1(cls, a: float = 0.0, b: float = 0.0, c: float = 0.0) -> "ModelSpec":
        return cls(Family.CONTACT_GRADED1, a=float(a), b=float(b), c=float(c))

    @classmethod
    def heisenberg(cls) -> "ModelSpec":
        return cls(Family.HEISENBERG)

    @classmethod
    def tangential_elliptic(cls, eps: float = 0.0, m: float = 0.0) -> "ModelSpec":
        return cls(Family.TANGENTIAL_ELLIPTIC, eps=float(eps), m=float(m))

    @classmethod
    def tangential_hyperbolic(cls, eps: float = 0.0, m: float = 0.0) -> "ModelSpec":
        return cls(Family.TANGENTIAL_HYPERBOLIC, eps=float(eps), m=float(m))

    @classmethod
    def engel_flat(cls) -> "ModelSpec":
        return cls(Family.ENGEL_FLAT)

    @classmethod
    def liu_sussmann(cls, eps: float = 0.0) -> "ModelSpec":
        return cls(Family.LIU_SUSSMANN, eps=float(eps))

    @property
    def dim(self) -> int:
        return 4 if self.family is Family.ENGEL_FLAT else 3

    @property
    def frame_arity(self) -> int:
        return 2

    @property
    def is_martinet(self) -> bool:
        return self.family in _MARTINET

    @property
    def martinet_params(self) -> tuple[float, float, float]:
        """``(alpha, beta, gamma)``; zeros for the flat model."""
        if self.family is Family.MARTINET_GRADED0:
            return self.alpha, self.beta, self.gamma
        if self.family is Family.MARTINET_FLAT:
            return 0.0, 0.0, 0.0
        raise DomainError(f"{self.family.value} is not a Martinet family")

    @property
    def contact_params(self) -> tuple[float, float, float]:
        if self.family is Family.CONTACT_GRADED1:
            return self.a, self.b, self.c
        if self.family is Family.HEISENBERG:
            return 0.0, 0.0, 0.0
        raise DomainError(f"{self.family.value} is not a contact family")


@dataclass
class GeodesicState:
    """Point ``q`` and frame-adjoint coordinates ``P`` of a normal extremal."""

    q: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float).copy()
        self.P = np.asarray(self.P, dtype=float).copy()
        if self.q.shape != self.P.shape or self.q.ndim != 1:
            raise DomainError(f"q and P must be 1-d of equal length, got {self.q.shape} and {self.P.shape}")

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.P])

    @classmethod
    def from_vector(cls, v) -> "GeodesicState":
        v = np.asarray(v, dtype=float)
        n = v.size // 2
        return cls(v[:n], v[n:])

    @property
    def energy(self) -> float:
        return 0.5 * float(self.P[0] ** 2 + self.P[1] ** 2)

    @property
    def theta(self) -> float:
        return math.atan2(self.P[1], self.P[0])


@dataclass(frozen=True)
class CylinderCoords:
    theta: float
    lam: float


def cylinder_coords(spec: ModelSpec, s: GeodesicState) -> CylinderCoords:
    """Angle of ``(P1, P2)`` and the constant momentum (``P3``, or ``P4`` for Engel)."""
    lam = s.P[3] if spec.family is Family.ENGEL_FLAT else s.P[2]
    return CylinderCoords(theta=math.atan2(s.P[1], s.P[0]), lam=float(lam))


def cylinder_lift(spec: ModelSpec, theta0: float, lam: float, p3: Optional[float] = None) -> GeodesicState:
    """Initial state at the origin with ``P1 = cos(theta0)``, ``P2 = sin(theta0)``.

    For Martinet, contact, tangential and Liu-Sussmann models ``P3 = lam``.
    For Engel ``P4 = lam`` and ``P3 = p3`` (default 0).
    """
    c, s = math.cos(theta0), math.sin(theta0)
    if spec.family is Family.ENGEL_FLAT:
        P = [c, s, 0.0 if p3 is None else float(p3), float(lam)]
    else:
        if p3 is not None:
            raise DomainError("p3 is only meaningful for the Engel model")
        P = [c, s, float(lam)]
    return GeodesicState(np.zeros(spec.dim), np.array(P))


# ---------------------------------------------------------------------------
# tangential normal forms: f(x, y, z) and derivatives


def _tangential_f(spec: ModelSpec, x: float, y: float, z: float) -> tuple[float, float, float]:
    """Return ``(f, f_x, f_y)``."""
    e, m = spec.eps, spec.m
    if spec.family is Family.TANGENTIAL_ELLIPTIC:
        f = e * x * y + x ** 3 / 3.0 + x * z * z + m * x ** 3 * z * z
        fx = e * y + x * x + z * z + 3.0 * m * x * x * z * z
    else:
        f = e * x * y + x * x * z + m * x ** 3 * z * z
        fx = e * y + 2.0 * x * z + 3.0 * m * x * x * z * z
    return f, fx, e * x


def _martinet_scales(alpha, beta, gamma, x, y):
    sa = 1.0 + alpha * y
    sc = 1.0 + beta * x + gamma * y
    if sa <= 0.0 or sc <= 0.0:
        raise SingularMetricError(f"metric singular at x={x:.6g}, y={y:.6g} (1+alpha*y={sa:.3g}, 1+beta*x+gamma*y={sc:.3g})")
    return sa, sc


def frame_matrix(spec: ModelSpec, q) -> np.ndarray:
    """Matrix whose columns are the frame fields ``F_1, ..., F_dim`` at ``q``."""
    q = np.asarray(q, dtype=float)
    fam = spec.family
    if fam in _MARTINET:
        al, be, ga = spec.martinet_params
        x, y = q[0], q[1]
        sa, sc = _martinet_scales(al, be, ga, x, y)
        return np.array([[1.0 / sa, 0.0, 0.0], [0.0, 1.0 / sc, 0.0], [0.5 * y * y / sa, 0.0, 1.0]])
    if fam in _CONTACT:
        a, b, c = spec.contact_params
        x, y = q[0], q[1]
        g = 1.0 + a * x * x + 2.0 * b * x * y + c * y * y
        return np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.5 * y * g, -0.5 * x * g, 1.0]])
    if fam in _TANGENTIAL:
        f, _, _ = _tangential_f(spec, *q)
        return np.array([[1.0, 0.0, 0.0], [0.0, f, 1.0], [0.0, 1.0, 0.0]])
    if fam is Family.ENGEL_FLAT:
        y = q[1]
        return np.array(
            [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [y, 0.0, 1.0, 0.0], [0.5 * y * y, 0.0, y, 1.0]]
        )
    if fam is Family.LIU_SUSSMANN:
        y = q[1]
        s = 1.0 + spec.eps * y
        if s <= 0.0:
            raise SingularMetricError(f"frame singular at y={y:.6g} (1+eps*y={s:.3g})")
        return np.array([[s, 0.0, 0.0], [0.0, 1.0, 0.0], [0.5 * y * y, 0.0, 1.0]])
    raise DomainError(f"unknown family {fam!r}")


def to_adjoint(spec: ModelSpec, q, p) -> np.ndarray:
    """Frame-adjoint coordinates ``P_i = <p, F_i(q)>`` of a covector ``p``."""
    return frame_matrix(spec, q).T @ np.asarray(p, dtype=float)


def to_covector(spec: ModelSpec, q, P) -> np.ndarray:
    """Inverse of :func:`to_adjoint`."""
    return np.linalg.solve(frame_matrix(spec, q).T, np.asarray(P, dtype=float))


def canonical_hamiltonian(spec: ModelSpec, q, p) -> float:
    """``H(q, p) = (<p, F1(q)>^2 + <p, F2(q)>^2) / 2`` in canonical coordinates."""
    P = to_adjoint(spec, q, p)
    return 0.5 * float(P[0] ** 2 + P[1] ** 2)


def rhs_function(spec: ModelSpec) -> Callable[[float, np.ndarray], np.ndarray]:
    """Vector field ``f(t, y)`` of the normal flow on ``y = (q, P)``."""
    fam = spec.family
    if fam in _MARTINET:
        al, be, ga = spec.martinet_params

        def f(t, y):
            x, yy, _, P1, P2, P3 = y
            sa, sc = _martinet_scales(al, be, ga, x, yy)
            w = (yy * P3 - al * P1 + be * P2) / (sa * sc)
            return np.array([P1 / sa, P2 / sc, 0.5 * yy * yy * P1 / sa, P2 * w, -P1 * w, 0.0])

        return f
    if fam in _CONTACT:
        a, b, c = spec.contact_params

        def f(t, y):
            x, yy, _, P1, P2, P3 = y
            Q = a * x * x + 2.0 * b * x * yy + c * yy * yy
            w = (1.0 + 2.0 * Q) * P3
            return np.array([P1, P2, 0.5 * (P1 * yy - P2 * x) * (1.0 + Q), P2 * w, -P1 * w, 0.0])

        return f
    if fam in _TANGENTIAL:

        def f(t, y):
            x, yy, z, P1, P2, P3 = y
            fv, fx, fy = _tangential_f(spec, x, yy, z)
            return np.array([P1, P2 * fv, P2, -fx * P2 * P3, fx * P1 * P3, -fy * P2 * P3])

        return f
    if fam is Family.ENGEL_FLAT:

        def f(t, y):
            _, yy, _, _, P1, P2, P3, P4 = y
            return np.array([P1, P2, yy * P1, 0.5 * yy * yy * P1, P2 * P3, -P1 * P3, P2 * P4, 0.0])

        return f
    if fam is Family.LIU_SUSSMANN:
        e = spec.eps

        def f(t, y):
            _, yy, _, P1, P2, P3 = y
            s = 1.0 + e * yy
            if s <= 0.0:
                raise SingularMetricError(f"frame singular at y={yy:.6g} (1+eps*y={s:.3g})")
            px = (P1 - 0.5 * yy * yy * P3) / s
            w = e * px + yy * P3
            return np.array([s * P1, P2, 0.5 * yy * yy * P1, P2 * w, -P1 * w, 0.0])

        return f
    raise DomainError(f"unknown family {fam!r}")


def hamiltonian_rhs(spec: ModelSpec, s: GeodesicState) -> GeodesicState:
    """Time derivative ``(q', P')`` of the normal flow at state ``s``."""
    if s.q.size != spec.dim:
        raise DomainError(f"state dimension {s.q.size} does not match model dimension {spec.dim}")
    return GeodesicState.from_vector(rhs_function(spec)(0.0, s.vector))


def martinet_theta_rate(spec: ModelSpec, s: GeodesicState) -> float:
    """``theta'`` for Martinet families: ``-(y*lambda - alpha*cos(theta) + beta*sin(theta)) / (sa*sc)``."""
    al, be, ga = spec.martinet_params
    x, y = s.q[0], s.q[1]
    sa, sc = _martinet_scales(al, be, ga, x, y)
    th = s.theta
    return -(y * s.P[2] - al * math.cos(th) + be * math.sin(th)) / (sa * sc)


# ---------------------------------------------------------------------------
# abnormal trajectories


@dataclass
class AbnormalPath:
    """Sampled abnormal trajectory.

    :arg times: sample times (signed for the chosen direction)
    :arg points: ``len(times) x dim`` coordinates
    :arg equilibrium: True when the seed is a rest point of the abnormal flow
    """

    times: np.ndarray
    points: np.ndarray
    equilibrium: bool = False
    notes: list = field(default_factory=list)

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]


def tangential_abnormal_field(spec: ModelSpec, x: float, z: float) -> tuple[float, float, float]:
    """Abnormal direction ``(x', y', z')`` on the Martinet surface ``f_x = 0`` of a tangential model.

    The surface is solved for ``y``; the control ``(u1, u2)`` annihilates the
    second brackets, ``u1 = f_xz + f f_xy``, ``u2 = -f_xx``, and the motion is
    ``x' = u1, z' = u2, y' = f u2``.
    """
    e, m = spec.eps, spec.m
    if e == 0.0:
        raise DomainError("the tangential Martinet surface is degenerate for eps = 0")
    if spec.family is Family.TANGENTIAL_ELLIPTIC:
        y = -(x * x + z * z + 3.0 * m * x * x * z * z) / e
        fxx = 2.0 * x + 6.0 * m * x * z * z
        fxz = 2.0 * z + 6.0 * m * x * x * z
    elif spec.family is Family.TANGENTIAL_HYPERBOLIC:
        y = -(2.0 * x * z + 3.0 * m * x * x * z * z) / e
        fxx = 2.0 * z + 6.0 * m * x * z * z
        fxz = 2.0 * x + 6.0 * m * x * x * z
    else:
        raise DomainError(f"{spec.family.value} is not a tangential family")
    f, _, _ = _tangential_f(spec, x, y, z)
    u1 = fxz + f * e
    u2 = -fxx
    return u1, f * u2, u2


def tangential_surface_y(spec: ModelSpec, x: float, z: float) -> float:
    """The ``y`` coordinate of the Martinet surface above ``(x, z)``."""
    e, m = spec.eps, spec.m
    if e == 0.0:
        raise DomainError("the tangential Martinet surface is degenerate for eps = 0")
    if spec.family is Family.TANGENTIAL_ELLIPTIC:
        return -(x * x + z * z + 3.0 * m * x * x * z * z) / e
    return -(2.0 * x * z + 3.0 * m * x * x * z * z) / e


def abnormal_flow(
    spec: ModelSpec,
    t: float,
    sign: int = 1,
    seed: Optional[tuple[float, float]] = None,
    samples: int = 65,
) -> AbnormalPath:
    """Abnormal trajectory of duration ``t`` in direction ``sign``.

    Martinet, Liu-Sussmann and Engel models: the line ``(sign*t, 0, 0[, 0])``
    through the origin.  Tangential models: the planar flow on the Martinet
    surface from ``seed = (x0, z0)``; the origin is a rest point and yields a
    constant path flagged ``equilibrium``.
    """
    if sign not in (1, -1):
        raise DomainError("sign must be +1 or -1")
    times = np.linspace(0.0, float(t), samples)
    fam = spec.family
    if fam in _MARTINET or fam in (Family.LIU_SUSSMANN, Family.ENGEL_FLAT):
        pts = np.zeros((samples, spec.dim))
        pts[:, 0] = sign * times
        return AbnormalPath(sign * times, pts)
    if fam in _CONTACT:
        raise DegenerateError("contact distributions carry no abnormal geodesics")
    if seed is None:
        raise DomainError("tangential abnormal flow needs a seed (x0, z0) on the Martinet surface")
    x0, z0 = map(float, seed)
    y0 = tangential_surface_y(spec, x0, z0)
    u1, _, u2 = tangential_abnormal_field(spec, x0, z0)
    if u1 == 0.0 and u2 == 0.0:
        pts = np.tile([x0, y0, z0], (samples, 1))
        return AbnormalPath(sign * times, pts, equilibrium=True, notes=["seed is an equilibrium"])

    def g(_, w):
        vx, vy, vz = tangential_abnormal_field(spec, w[0], w[2])
        return [sign * vx, sign * vy, sign * vz]

    sol = solve_ivp(g, (0.0, float(t)), [x0, y0, z0], method="DOP853", rtol=1e-11, atol=1e-13, t_eval=times)
    return AbnormalPath(sign * sol.t, sol.y.T.copy(), notes=[] if sol.success else [sol.message])
