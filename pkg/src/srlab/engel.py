"""Engel group: first integrals and reductions to the Heisenberg and flat Martinet flows.

Frame: ``F1 = d/dx + y d/dz + (y^2/2) d/dw`` and ``F2 = d/dy``, with
``P3`` and ``P4`` the components on the brackets.  The flow in ``(q, P)`` is

    q' = (P1, P2, y P1, y^2 P1 / 2),   P' = (P2 P3, -P1 P3, P2 P4, 0).

Reductions at the origin:

* ``P3(0) = 0`` (``p_z = 0``) and ``P4 = lambda``: then ``P3 = lambda y`` and
  ``(x, y, w)`` is the flat Martinet geodesic ``(x, y, z)``.
* ``P4 = 0`` (``p_w = 0``) and ``P3 = lambda``: ``(x, y)`` moves on the
  Heisenberg circle and ``z - x y / 2`` is the Heisenberg ``z`` (the two
  frames differ by the exact form ``d(xy/2)``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from srlab.errors import DomainError
from srlab.exact import FlatGeodesicParams, flat_geodesic, heisenberg_geodesic
from srlab.flow import integrate
from srlab.models import GeodesicState, ModelSpec, rhs_function

ENGEL = ModelSpec.engel_flat()


@dataclass(frozen=True)
class EngelIntegrals:
    """``h = P1^2 + P2^2``, the Casimir ``C = -2 P1 P4 + P3^2`` and ``P4``."""

    h: float
    casimir_c: float
    p4: float


def engel_integrals(s: GeodesicState) -> EngelIntegrals:
    P = np.asarray(s.P, dtype=float)
    if s.q.size != 4 or P.size != 4:
        raise DomainError(f"Engel states have dimension 4, got q of size {s.q.size} and P of size {P.size}")
    P1, P2, P3, P4 = P
    return EngelIntegrals(h=float(P1 * P1 + P2 * P2), casimir_c=float(-2.0 * P1 * P4 + P3 * P3), p4=float(P4))


def integral_drift(states: np.ndarray) -> EngelIntegrals:
    """Largest deviation of each first integral from its initial value along ``states`` (rows ``(q, P)``)."""
    P1, P2, P3, P4 = states[:, 4], states[:, 5], states[:, 6], states[:, 7]
    h = P1 * P1 + P2 * P2
    c = -2.0 * P1 * P4 + P3 * P3
    return EngelIntegrals(
        h=float(np.max(np.abs(h - h[0]))), casimir_c=float(np.max(np.abs(c - c[0]))), p4=float(np.max(np.abs(P4 - P4[0])))
    )


def engel_lift(theta0: float, p3: float, p4: float) -> GeodesicState:
    return GeodesicState(np.zeros(4), np.array([math.cos(theta0), math.sin(theta0), float(p3), float(p4)]))


@dataclass(frozen=True)
class ReductionReport:
    max_dev_heisenberg: float
    max_dev_martinet: float
    drift_heisenberg: EngelIntegrals
    drift_martinet: EngelIntegrals


def _sample(theta0: float, p3: float, p4: float, t: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    t_end = float(np.max(t))
    if t_end <= 0.0:
        return np.zeros((8, t.size)), np.zeros((1, 8))
    tr = integrate(ENGEL, engel_lift(theta0, p3, p4), t_end, tol=tol)
    return np.asarray(tr(t)), tr.states


def reduction_check(theta0: float, lam: float, t_grid: Sequence[float], tol: float = 1e-12) -> ReductionReport:
    """Sup deviations of the two Engel reductions from their closed forms on ``t_grid``.

    Martinet: Engel with ``P3(0) = 0``, ``P4 = lambda``; ``(x, y, w)`` against
    the flat Martinet geodesic.  Heisenberg: Engel with ``P3 = lambda``,
    ``P4 = 0``; ``(x, y, z - xy/2)`` against the Heisenberg geodesic.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.size == 0 or np.any(t < 0.0) or np.any(t > 5.0):
        raise DomainError("t_grid must be a nonempty subset of [0, 5]")
    # Martinet reduction
    V, states_m = _sample(theta0, 0.0, lam, t, tol)
    if math.sin(theta0) == 0.0:
        # abnormal direction: y stays 0 and the Martinet closed form is the line
        ref = np.array([math.cos(theta0) * t, np.zeros_like(t), np.zeros_like(t)])
    else:
        ref = flat_geodesic(FlatGeodesicParams(theta0, lam), t)
    dev_m = float(np.max(np.abs(np.array([V[0], V[1], V[3]]) - ref)))
    # Heisenberg reduction
    W, states_h = _sample(theta0, lam, 0.0, t, tol)
    hp = heisenberg_geodesic(theta0, lam, t)
    z_h = W[2] - 0.5 * W[0] * W[1]
    dev_h = float(np.max(np.abs(np.array([W[0] - hp.x, W[1] - hp.y, z_h - hp.z]))))
    return ReductionReport(dev_h, dev_m, integral_drift(states_h), integral_drift(states_m))


def pendulum_residual(theta0: float, p3: float, p4: float, t_end: float = 5.0, samples: int = 200, tol: float = 1e-12) -> float:
    """Residual of ``theta'' + P4 sqrt(h) sin(theta) = 0`` along an Engel geodesic.

    ``theta' = (P1 P2' - P2 P1')/h`` is taken from the vector field and
    differentiated once more with a five-point stencil on the dense output.
    """
    tr = integrate(ENGEL, engel_lift(theta0, p3, p4), t_end, tol=tol)
    f = rhs_function(ENGEL)

    def rate(t):
        v = tr(t)
        d = f(t, v)
        h = v[4] ** 2 + v[5] ** 2
        return (v[4] * d[5] - v[5] * d[4]) / h

    step = 1e-3
    ts = np.linspace(2.0 * step, t_end - 2.0 * step, samples)
    worst = 0.0
    for t in ts:
        acc = (-rate(t + 2 * step) + 8.0 * rate(t + step) - 8.0 * rate(t - step) + rate(t - 2 * step)) / (12.0 * step)
        v = tr(t)
        th = math.atan2(v[5], v[4])
        worst = max(worst, abs(acc + v[7] * math.sqrt(v[4] ** 2 + v[5] ** 2) * math.sin(th)))
    return worst


__all__ = [
    "EngelIntegrals",
    "ReductionReport",
    "engel_integrals",
    "engel_lift",
    "integral_drift",
    "pendulum_residual",
    "reduction_check",
]
