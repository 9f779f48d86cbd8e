"""Asymptotic laws of the sphere trace near the abnormal endpoint and fitting tools.

Laws in normalized coordinates ``X = (x + r)/(2r)``, ``Z = z / r^3``:

* ``C2``: ``Z = X^3 / 24``
* ``C1``: ``Z = X^3/6 + (r^2 alpha^2/64 + pi r (alpha+gamma)/32) X^4``
* ``D2``: ``Z = X^3/6 + (r^2 alpha^2/64 - pi r (alpha+gamma)/32) X^4``
* ``D1``: ``Z = -2/(r^2 alpha^2) X^2`` (order-two contact, ``beta != 0`` context)
* ``D1_integrable``: ``Z = -8/(r^2 alpha^2) X^2`` (law quoted for ``beta = 0``)
* ``C1bar``: in raw coordinates near ``(r, 0)``, ``z = -(2 r^2/(3 pi^2)) (x - r)``

and the flat-case compensation ``Z = X^3/6 - 4 X^3 exp(-1/X) + ...``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from srlab.elliptic import NEAR_UNIT_MAX, complete_near_unit, e_minus_one_near_unit
from srlab.errors import DomainError

# tie tolerance for the branch selector
TIE_TOL = 1e-12


@dataclass(frozen=True)
class BranchLaw:
    """Truncated expansion ``Z = sum_p coeffs[p] X^p`` of one branch.

    ``variable`` is ``"X"`` for normalized coordinates or ``"x-r"`` for the
    raw ``C1bar`` law; ``validity`` is the advisory range of ``|X|``.
    """

    tag: str
    coeffs: dict
    variable: str = "X"
    validity: tuple = (0.0, 0.3)
    flat_term: tuple = ()
    context: str = ""

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        out = np.zeros_like(X)
        for p, c in sorted(self.coeffs.items()):
            out = out + c * X ** p
        return out if out.ndim else float(out)

    @property
    def leading_order(self) -> int:
        return min(self.coeffs)


def branch_law(tag: str, r: float, alpha: float = 0.0, gamma: float = 0.0) -> BranchLaw:
    """The law of branch ``tag`` for radius ``r`` and model parameters ``alpha``, ``gamma``."""
    if r <= 0.0:
        raise DomainError("radius must be positive")
    c4_common = r * r * alpha * alpha / 64.0
    c4_split = math.pi * r * (alpha + gamma) / 32.0
    if tag == "C2":
        return BranchLaw("C2", {3: 1.0 / 24.0})
    if tag == "C1":
        return BranchLaw("C1", {3: 1.0 / 6.0, 4: c4_common + c4_split})
    if tag == "D2":
        return BranchLaw("D2", {3: 1.0 / 6.0, 4: c4_common - c4_split})
    if tag in ("D1", "D1_integrable"):
        if alpha == 0.0:
            raise DomainError("the D1 law needs alpha != 0 (the abnormal direction is not strict for alpha = 0)")
        num = -2.0 if tag == "D1" else -8.0
        ctx = "beta != 0" if tag == "D1" else "beta = 0"
        return BranchLaw(tag, {2: num / (r * r * alpha * alpha)}, context=ctx)
    if tag == "C1bar":
        return BranchLaw("C1bar", {1: -2.0 * r * r / (3.0 * math.pi ** 2)}, variable="x-r")
    if tag == "flat":
        return BranchLaw("flat", {3: 1.0 / 6.0}, flat_term=(-4.0, 1.0), context="alpha = beta = gamma = 0")
    raise DomainError(f"unknown branch tag {tag!r}")


def branch_graph(tag: str, r: float, alpha: float, gamma: float, X):
    """Leading-order ``Z(X)`` of branch ``tag``.

    For ``tag = "C1bar"`` the argument is the raw ``x - r`` and the result
    is the raw ``z``.  The expansions are asymptotic at ``X = 0``; ``|X| <= 0.3``
    is the advisory range.
    """
    return branch_law(tag, r, alpha, gamma)(X)


def law_difference_d2_c1(r: float, alpha: float, gamma: float, X):
    """``D2 - C1`` at equal ``X``: ``-(pi r/16)(alpha + gamma) X^4``."""
    return branch_graph("D2", r, alpha, gamma, X) - branch_graph("C1", r, alpha, gamma, X)


def branch_selector(alpha: float, gamma: float) -> str:
    """Which of ``C1``/``D2`` lies in the sphere: ``C1`` if ``gamma > -alpha``, ``D2`` if ``gamma < -alpha``.

    Returns ``"tie"`` when ``|alpha + gamma| <= 1e-12`` (vanishing Gauss
    curvature at the origin).
    """
    if alpha < 0.0:
        raise DomainError("the selector uses the normalization alpha >= 0")
    s = alpha + gamma
    if abs(s) <= TIE_TOL:
        return "tie"
    return "C1" if s > 0.0 else "D2"


# ---------------------------------------------------------------------------
# flat term


@dataclass(frozen=True)
class FlatTermPoint:
    """One sample of the flat-case compensation.

    ``delta = Z - X^3/6``; ``ratio = delta / (X^3 exp(-decay/X))``;
    ``lead_relation = |ln(k'/4) + 1/X| / (1/X)``; ``error`` bounds the
    absolute error of ``delta``.
    """

    kprime: float
    X: float
    Z: float
    delta: float
    ratio: float
    lead_relation: float
    error: float
    flagged: bool


def flat_term_ratio(r: float, kprime_grid: Sequence[float], decay: float = 1.0) -> list:
    """Flat-term samples ``(X, ratio)`` on the flat trace ``C_1`` for ``k'`` in ``[1e-9, 1e-3]``.

    ``X = E/K`` and ``Z = [(2k^2-1)E + k'^2 K]/(6K^3)`` do not depend on
    ``r``.  The difference ``Z - X^3/6`` is formed as
    ``[-E e1 (2 + e1) - 2k'^2 E + k'^2 K] / (6K^3)`` with ``e1 = E - 1``
    taken from the logarithmic expansion, so no cancellation occurs.  A
    point is flagged when the error estimate exceeds 10% of ``|delta|``.
    """
    if r <= 0.0:
        raise DomainError("radius must be positive")
    out = []
    eps = np.finfo(float).eps
    for kp in kprime_grid:
        kp = float(kp)
        if not 1e-9 <= kp <= NEAR_UNIT_MAX:
            raise DomainError(f"k' must lie in [1e-9, {NEAR_UNIT_MAX}], got {kp!r}")
        pair = complete_near_unit(kp)
        K, E = pair.K, pair.E
        e1 = e_minus_one_near_unit(kp)
        q = kp * kp
        terms = (-E * e1 * (2.0 + e1), -2.0 * q * E, q * K)
        num = sum(terms)
        delta = num / (6.0 * K ** 3)
        X = E / K
        Z = X ** 3 / 6.0 + delta
        L = math.log(4.0 / kp)
        # series truncation after k'^4 leaves O(k'^6 L) in K, E and e1
        trunc = 4.0 * q ** 3 * L * (1.0 + L)
        rounding = 8.0 * eps * sum(abs(t) for t in terms)
        err = (trunc + rounding) / (6.0 * K ** 3)
        ratio = delta / (X ** 3 * math.exp(-decay / X))
        lead = abs(math.log(kp / 4.0) + 1.0 / X) * X
        out.append(FlatTermPoint(kp, X, Z, delta, ratio, lead, err, err > 0.1 * abs(delta)))
    return out


# ---------------------------------------------------------------------------
# fitting


@dataclass(frozen=True)
class ContactFit:
    """Result of fitting ``Z = c X^p`` on log-transformed data."""

    coefficient: float
    exponent: int
    residual: float
    n_points: int
    span_decades: float


def _xy(points, raw: bool, r: float | None):
    if isinstance(points, tuple) and len(points) == 2 and not hasattr(points[0], "X"):
        return np.asarray(points[0], dtype=float), np.asarray(points[1], dtype=float)
    pts = list(points)
    if raw:
        if r is None:
            raise DomainError("raw fits need the radius r")
        return np.array([p.x - r for p in pts]), np.array([p.z for p in pts])
    return np.array([p.X for p in pts]), np.array([p.Z for p in pts])


def fit_contact(points, exponent: int, raw: bool = False, r: float | None = None) -> ContactFit:
    """Least-squares fit of ``Z = c X^exponent`` in log coordinates.

    ``ln|Z| - exponent ln|X|`` is averaged to give ``ln|c|``; the sign of
    ``c`` is the common sign of ``Z / X^exponent``.  With ``raw = True`` the
    fit uses ``(x - r, z)`` instead of ``(X, Z)``.  ``points`` is a
    sequence of branch points or a pair of arrays ``(X, Z)``.

    :raises DomainError: fewer than five points, ``|X|`` spanning less than
        half a decade, mixed signs or zero values
    """
    if exponent not in (1, 2, 3, 4):
        raise DomainError("exponent must be one of 1, 2, 3, 4")
    X, Z = _xy(points, raw, r)
    if X.size < 5:
        raise DomainError(f"at least 5 points are needed, got {X.size}")
    if np.any(X == 0.0) or np.any(Z == 0.0) or not np.all(np.isfinite(X)) or not np.all(np.isfinite(Z)):
        raise DomainError("X and Z must be finite and nonzero for a log fit")
    span = float(np.log10(np.max(np.abs(X)) / np.min(np.abs(X))))
    if span < 0.5:
        raise DomainError(f"ill-conditioned fit: |X| spans {span:.3f} decades (< 0.5)")
    q = Z / X ** exponent
    if not (np.all(q > 0.0) or np.all(q < 0.0)):
        raise DomainError("Z / X^p changes sign: no single contact law fits")
    sign = 1.0 if q[0] > 0.0 else -1.0
    logc = float(np.mean(np.log(np.abs(Z)) - exponent * np.log(np.abs(X))))
    c = sign * math.exp(logc)
    resid = float(np.max(np.abs(Z - c * X ** exponent) / np.abs(Z)))
    return ContactFit(c, exponent, resid, int(X.size), span)


def linear_slope(points, r: float) -> float:
    """Least-squares slope through the origin of ``z`` against ``x - r``."""
    u, z = _xy(points, True, r)
    return float(np.dot(u, z) / np.dot(u, u))


def normalized_gap(points, tag: str, r: float, alpha: float, gamma: float, power: int = 4) -> np.ndarray:
    """``(Z - law(X)) / X^power`` for each sample against the law of ``tag``."""
    X, Z = _xy(points, False, None)
    return (Z - branch_graph(tag, r, alpha, gamma, X)) / X ** power


__all__ = [
    "BranchLaw",
    "ContactFit",
    "FlatTermPoint",
    "branch_graph",
    "branch_law",
    "branch_selector",
    "fit_contact",
    "flat_term_ratio",
    "law_difference_d2_c1",
    "linear_slope",
    "normalized_gap",
]
