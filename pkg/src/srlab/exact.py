"""Closed-form geodesics and quadrature formulas for the integrable cases.

* Flat Martinet geodesics through Jacobi functions (elastica).
* Heisenberg geodesics (circles in the ``(x, y)`` plane).
* The characteristic quartic ``F(y) = (1 + alpha*y)^2 - (p_x + lambda*y^2/2)^2``
  of the conservative Martinet model (``beta = 0``) and the quadrature
  formulas for its period and for the section hits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from srlab.elliptic import Modulus, complete_integrals, jacobi_epsilon, jacobi_functions
from srlab.errors import DegenerateError, DomainError


# ---------------------------------------------------------------------------
# flat Martinet closed form


@dataclass(frozen=True)
class FlatGeodesicParams:
    """Initial data ``(theta0, lambda)`` of a flat geodesic and its modulus.

    ``2 k^2 = 1 - cos(theta0)``; the modulus pair is computed as
    ``k = |sin(theta0/2)|``, ``k' = |cos(theta0/2)|`` to keep full precision.
    """

    theta0: float
    lam: float
    modulus: Modulus = field(init=False)

    def __post_init__(self):
        k = abs(math.sin(0.5 * self.theta0))
        kp = abs(math.cos(0.5 * self.theta0))
        if k < kp:
            mod = Modulus.from_k(k)
        else:
            mod = Modulus.from_kprime(kp)
        object.__setattr__(self, "modulus", mod)

    @property
    def k(self) -> float:
        return self.modulus.k

    @property
    def kprime(self) -> float:
        return self.modulus.kprime


def _flat_canonical(theta0: float, lam: float, t: np.ndarray) -> np.ndarray:
    """Closed form for ``theta0`` in ``(0, pi)`` and ``lam > 0``."""
    p = FlatGeodesicParams(theta0, lam)
    mod = p.modulus
    pair = complete_integrals(mod)
    rl = math.sqrt(lam)
    u = pair.K + t * rl
    sn, cn, dn = jacobi_functions(u, mod)
    dE = np.asarray(jacobi_epsilon(u, mod)) - pair.E
    k2 = mod.k ** 2
    y = -(2.0 * mod.k / rl) * cn
    x = -t + (2.0 / rl) * dE
    z = (2.0 / (3.0 * lam * rl)) * ((2.0 * k2 - 1.0) * dE + mod.kprime ** 2 * t * rl + 2.0 * k2 * sn * cn * dn)
    return np.array([x, y, z])


def flat_geodesic(p: FlatGeodesicParams, t) -> np.ndarray:
    """Point ``(x, y, z)`` of the flat Martinet geodesic with data ``p`` at time(s) ``t``.

    Canonical case ``theta0`` in ``(0, pi)``, ``lambda > 0``:
    ``y = -(2k/sqrt(l)) cn u``, ``x = -t + (2/sqrt(l))(E(u) - E)`` and
    ``z = 2/(3 l^{3/2}) [(2k^2-1)(E(u)-E) + k'^2 t sqrt(l) + 2k^2 sn cn dn]``
    with ``u = K + t sqrt(l)``.  Other initial data follow from the
    symmetries ``(x,y,z,theta) -> (x,-y,z,-theta)`` and
    ``(x,y,z,theta,lambda) -> (-x,y,-z,pi-theta,-lambda)``; ``lambda = 0``
    gives the straight line.

    :raises DegenerateError: for ``theta0`` in ``{0, pi}`` (abnormal line or its reverse)
    """
    t = np.asarray(t, dtype=float)
    th = math.remainder(p.theta0, 2.0 * math.pi)
    lam = p.lam
    if math.sin(th) == 0.0:
        raise DegenerateError("theta0 = 0 or pi is the abnormal direction; the closed form degenerates")
    if lam == 0.0:
        c, s = math.cos(th), math.sin(th)
        return np.array([c * t, s * t, c * s * s * t ** 3 / 6.0])
    if lam < 0.0:
        x, y, z = flat_geodesic(FlatGeodesicParams(math.pi - th, -lam), t)
        return np.array([-x, y, -z])
    if th < 0.0:
        x, y, z = _flat_canonical(-th, lam, t)
        return np.array([x, -y, z])
    return _flat_canonical(th, lam, t)


def flat_hit_times(p: FlatGeodesicParams, count: int) -> np.ndarray:
    """Section hit times ``t_i = 2 i K(k) / sqrt(|lambda|)``, ``i = 1..count``."""
    K = complete_integrals(p.modulus).K
    return 2.0 * K * np.arange(1, count + 1) / math.sqrt(abs(p.lam))


# ---------------------------------------------------------------------------
# Heisenberg


@dataclass(frozen=True)
class HeisenbergPoint:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    straight_line: bool = False


def heisenberg_geodesic(theta0: float, lam: float, t) -> HeisenbergPoint:
    """Heisenberg geodesic from the origin with ``P = (cos theta0, sin theta0, lambda)``.

    With ``theta(t) = theta0 - lambda t`` the projection is a circle of radius
    ``1/|lambda|`` centred at ``(sin theta0, -cos theta0)/lambda`` and
    ``z = (lambda t - sin(lambda t)) / (2 lambda^2)``.  For ``lambda = 0``
    the straight line is returned and flagged.
    """
    t = np.asarray(t, dtype=float)
    c0, s0 = math.cos(theta0), math.sin(theta0)
    if lam == 0.0:
        return HeisenbergPoint(c0 * t, s0 * t, np.zeros_like(t), straight_line=True)
    th = theta0 - lam * t
    x = (s0 - np.sin(th)) / lam
    y = (np.cos(th) - c0) / lam
    phi = lam * t
    z = (phi - np.sin(phi)) / (2.0 * lam * lam)
    return HeisenbergPoint(x, y, z)


# ---------------------------------------------------------------------------
# conservative Martinet model: the characteristic quartic


@dataclass(frozen=True)
class QuarticData:
    """Quartic ``F(y) = (1 + alpha y)^2 - (p_x + lambda y^2/2)^2`` and its roots.

    ``F = A * B`` with ``A = 1 + alpha y - p_x - lambda y^2/2`` (zeros where
    ``P1 = 1``) and ``B = 1 + alpha y + p_x + lambda y^2/2`` (zeros where
    ``P1 = -1``).  ``m2 = (1 - p_x + alpha^2/(2 lambda))/2`` and
    ``m2pp = (1 + p_x - alpha^2/(2 lambda))/2`` sum to one; ``m2pp > 0`` is the
    oscillating regime, ``m2pp < 0`` the rotating one.
    """

    alpha: float
    p_x: float
    lam: float
    coefficients: tuple
    roots: tuple
    real_roots: tuple
    classification: str
    m2: float
    m2pp: float

    def __call__(self, y):
        """Evaluate ``F`` in factored form."""
        y = np.asarray(y, dtype=float)
        A = 1.0 + self.alpha * y - self.p_x - 0.5 * self.lam * y * y
        B = 1.0 + self.alpha * y + self.p_x + 0.5 * self.lam * y * y
        return A * B

    @property
    def y_minus(self) -> float:
        neg = [r for r in self.real_roots if r < 0.0]
        if not neg:
            raise DomainError("no negative real root")
        return max(neg)

    @property
    def y_plus(self) -> float:
        pos = [r for r in self.real_roots if r > 0.0]
        if not pos:
            raise DomainError("no positive real root")
        return min(pos)


def _quadratic_roots(a: float, b: float, c: float) -> tuple:
    """Roots of ``a y^2 + b y + c`` without cancellation."""
    disc = b * b - 4.0 * a * c
    if disc >= 0.0:
        sq = math.sqrt(disc)
        qv = -0.5 * (b + math.copysign(sq, b))
        if qv == 0.0:
            return (0.0, 0.0)
        return (qv / a, c / qv)
    sq = math.sqrt(-disc)
    return (complex(-b / (2.0 * a), sq / (2.0 * a)), complex(-b / (2.0 * a), -sq / (2.0 * a)))


def characteristic_quartic(alpha: float, p_x: float, lam: float) -> QuarticData:
    """Coefficients, roots and regime of the conservative-case quartic."""
    if lam <= 0.0:
        raise DomainError("the characteristic quartic is set up for lambda > 0")
    coeffs = (
        -0.25 * lam * lam,
        0.0,
        alpha * alpha - p_x * lam,
        2.0 * alpha,
        1.0 - p_x * p_x,
    )
    ra = _quadratic_roots(-0.5 * lam, alpha, 1.0 - p_x)
    rb = _quadratic_roots(0.5 * lam, alpha, 1.0 + p_x)
    roots = ra + rb
    real = tuple(sorted(float(r) for r in roots if not isinstance(r, complex)))
    m2 = 0.5 * (1.0 - p_x + alpha * alpha / (2.0 * lam))
    m2pp = 0.5 * (1.0 + p_x - alpha * alpha / (2.0 * lam))
    if abs(m2pp) <= 1e-10:
        cls = "critical"
    elif m2pp > 0.0:
        cls = "two_real"
    else:
        cls = "four_real"
    return QuarticData(alpha, p_x, lam, coeffs, roots, real, cls, m2, m2pp)


# ---------------------------------------------------------------------------
# quadrature with endpoint square-root singularities

_GL8 = np.polynomial.legendre.leggauss(8)
_GL16 = np.polynomial.legendre.leggauss(16)


def _gl(f: Callable, a: float, b: float, rule) -> float:
    x, w = rule
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * float(np.dot(w, f(mid + half * x)))


def adaptive_gauss_legendre(f: Callable, a: float, b: float, tol: float = 1e-13, depth: int = 50) -> tuple[float, float]:
    """Adaptive Gauss-Legendre quadrature by interval bisection.

    Each panel compares the 8- and 16-point rules and is split until the
    difference falls below its share of ``tol``.  Returns ``(value, error_estimate)``.
    """
    total, err = 0.0, 0.0
    stack = [(a, b, depth)]
    width = abs(b - a) if b != a else 1.0
    while stack:
        lo, hi, d = stack.pop()
        g8 = _gl(f, lo, hi, _GL8)
        g16 = _gl(f, lo, hi, _GL16)
        share = tol * max(abs(hi - lo) / width, 1e-6)
        if abs(g16 - g8) <= max(share, 1e-15 * abs(g16)) or d == 0:
            total += g16
            err += abs(g16 - g8)
        else:
            mid = 0.5 * (lo + hi)
            stack.append((lo, mid, d - 1))
            stack.append((mid, hi, d - 1))
    return total, err


@dataclass(frozen=True)
class ConservativeResult:
    """Period (time between returns to the same side) and the N-th section hit."""

    period: float
    x: float
    z: float
    t: float
    error: float


def _root_quotient(quartic: QuarticData, root: float) -> Callable:
    """``F(y) / (y - root)`` from the factored quadratics, free of cancellation at ``root``."""
    al, px, lam = quartic.alpha, quartic.p_x, quartic.lam
    ra = _quadratic_roots(-0.5 * lam, al, 1.0 - px)
    rb = _quadratic_roots(0.5 * lam, al, 1.0 + px)
    for group, lead, in_a in ((ra, -0.5 * lam, True), (rb, 0.5 * lam, False)):
        for i, r in enumerate(group):
            if not isinstance(r, complex) and r == root:
                partner = group[1 - i]

                def quotient(y, partner=partner, lead=lead, in_a=in_a):
                    if in_a:
                        other = 1.0 + al * y + px + 0.5 * lam * y * y
                    else:
                        other = 1.0 + al * y - px - 0.5 * lam * y * y
                    return lead * (y - partner) * other

                return quotient
    raise DomainError("root not found in the factored quartic")


def conservative_integrals(alpha: float, gamma: float, p_x: float, lam: float, N: int, sigma: int) -> ConservativeResult:
    """Period and ``N``-th section hit of a conservative (``beta = 0``) Martinet geodesic.

    On the flow ``P1 = (p_x + lambda y^2/2)/(1 + alpha y)`` and
    ``1 - P1^2 = F(y)/(1 + alpha y)^2``; ``y`` oscillates between the roots
    ``y_- < 0 < y_+`` nearest to zero.  With ``g = 1/sqrt(1 - P1^2)``:

    * period ``= 2 int (1+gamma y) g dy`` over ``[y_-, y_+]``,
    * ``x`` increments use ``P1 (1+gamma y)/(1+alpha y) g``,
    * ``z`` increments use ``y^2/2`` times the ``x`` integrand.

    An odd hit ``N`` adds a half loop on the side ``sigma`` (``y_+`` for
    ``sigma = +1``) to ``(N-1)/2`` full loops; an even hit is ``N/2`` full loops
    and does not depend on ``sigma``.  Near each endpoint the substitution
    ``y = y_end -/+ u^2`` removes the inverse square-root singularity.
    """
    if N < 1:
        raise DomainError("hit index N must be >= 1")
    if sigma not in (1, -1):
        raise DomainError("sigma must be +1 or -1")
    quartic = characteristic_quartic(alpha, p_x, lam)
    if quartic.classification == "critical":
        raise DegenerateError("critical case m'' = 0: the period is infinite")
    try:
        y_lo, y_hi = quartic.y_minus, quartic.y_plus
    except DomainError as exc:
        raise DomainError(f"no oscillation around y = 0: {exc}") from exc
    if 1.0 + alpha * y_lo <= 0.0 or 1.0 + gamma * y_lo <= 0.0 or 1.0 + alpha * y_hi <= 0.0 or 1.0 + gamma * y_hi <= 0.0:
        raise DomainError("the oscillation interval reaches a metric singularity")

    def weights(y):
        sa = 1.0 + alpha * y
        sc = 1.0 + gamma * y
        P1 = (p_x + 0.5 * lam * y * y) / sa
        return (sc * sa, P1 * sc, 0.5 * y * y * P1 * sc)

    def leg(end: float) -> tuple[np.ndarray, float]:
        """Integrals of the three integrands over the interval between 0 and ``end``.

        The inner half is integrated directly, the outer half after the
        substitution ``y = end - sign(end) u^2`` which turns ``dy / sqrt(F)``
        into ``2 du / sqrt(F / (y - end))``.
        """
        quotient = _root_quotient(quartic, end)
        sgn = 1.0 if end > 0.0 else -1.0
        split = 0.5 * end
        U = math.sqrt(abs(end - split))
        out = np.zeros(3)
        err = 0.0
        for j in range(3):
            def regular(y, j=j):
                return weights(y)[j] / np.sqrt(np.abs(quotient(y) * (y - end)))

            def outer(u, j=j):
                y = end - sgn * u * u
                return 2.0 * weights(y)[j] / np.sqrt(np.abs(quotient(y)))

            v1, e1 = adaptive_gauss_legendre(regular, min(0.0, split), max(0.0, split))
            v2, e2 = adaptive_gauss_legendre(outer, 0.0, U)
            out[j] = v1 + v2
            err += e1 + e2
        return out, err

    # each leg (outgoing or returning) between 0 and a turning point
    # contributes the same positive-orientation integral
    up, e_up = leg(y_hi)
    dn, e_dn = leg(y_lo)
    loop = 2.0 * (up + dn)
    full = (N - 1) // 2 if N % 2 else N // 2
    acc = full * loop
    if N % 2:
        acc = acc + 2.0 * (up if sigma > 0 else dn)
    period = float(loop[0])
    return ConservativeResult(period=period, x=float(acc[1]), z=float(acc[2]), t=float(acc[0]), error=e_up + e_dn)
