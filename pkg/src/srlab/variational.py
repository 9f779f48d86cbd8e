"""Jacobi fields, conjugate times and the tangency probe.

Jacobi fields are variations ``(dq, dP)`` of a normal geodesic written in the
frame-adjoint coordinates ``(q, P)``.  They solve the linearized flow
``d' = Df(y) d``, integrated together with the base geodesic.  The product
``Df(y) d`` is evaluated as a central finite difference of the vector field
along ``d``, which avoids forming the Hessian of the Hamiltonian.

A time ``t_c > 0`` is conjugate when the projections ``dq`` of the vertical
fields (``dq(0) = 0``) fail to span, together with the velocity, the tangent
space: the determinant ``det[dq_theta, dq_lambda, (dq_p3), qdot]`` vanishes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from srlab.errors import DegenerateError, DomainError, IntegrationError
from srlab.flow import Trajectory, _Driver, _check_tol, integrate
from srlab.models import Family, GeodesicState, ModelSpec, cylinder_lift, rhs_function

# relative finite-difference step for directional derivatives of the vector field
FD_REL_STEP = 1e-6


def _linearized(fun, n_state: int, n_fields: int, h_rel: float = FD_REL_STEP):
    """Vector field of the base state augmented with ``n_fields`` variations."""

    def g(t, w):
        y = w[:n_state]
        out = np.empty_like(w)
        out[:n_state] = fun(t, y)
        scale = max(1.0, float(np.max(np.abs(y))))
        for j in range(n_fields):
            d = w[n_state * (j + 1): n_state * (j + 2)]
            nd = float(np.max(np.abs(d)))
            if nd == 0.0:
                out[n_state * (j + 1): n_state * (j + 2)] = 0.0
                continue
            h = h_rel * scale / nd
            out[n_state * (j + 1): n_state * (j + 2)] = (fun(t, y + h * d) - fun(t, y - h * d)) / (2.0 * h)
        return out

    return g


@dataclass
class JacobiField:
    """Variations along a base geodesic.

    ``deltas[i, :, j]`` is field ``j`` at ``times[i]`` (``2n`` components).
    ``dense`` evaluates the augmented state (base then fields) at any time.
    """

    base: Trajectory
    times: np.ndarray
    deltas: np.ndarray
    vertical: bool
    dense: object

    @property
    def n_fields(self) -> int:
        return self.deltas.shape[2]

    def at(self, t) -> np.ndarray:
        """Fields at time(s) ``t`` with shape ``(2n, n_fields)`` (or ``(len(t), 2n, n_fields)``)."""
        n = self.base.states.shape[1]
        w = np.asarray(self.dense(t))
        if w.ndim == 1:
            return w[n:].reshape(self.n_fields, n).T
        return np.transpose(w[n:].reshape(self.n_fields, n, -1), (2, 1, 0))

    def dq(self, t) -> np.ndarray:
        d = self.base.spec.dim
        return self.at(t)[..., :d, :]


def jacobi_integrate(
    spec: ModelSpec, s0: GeodesicState, t_end: float, delta0, tol: float = 1e-11
) -> JacobiField:
    """Integrate Jacobi fields with initial variations ``delta0`` along the geodesic from ``s0``.

    :arg delta0: array of shape ``(2n,)`` or ``(2n, m)`` with columns ``(dq, dP)``
    :raises IntegrationError: when the base flow cannot be integrated
    """
    _check_tol(tol)
    fun = rhs_function(spec)
    y0 = s0.vector
    n = y0.size
    D0 = np.asarray(delta0, dtype=float)
    if D0.ndim == 1:
        D0 = D0[:, None]
    if D0.shape[0] != n:
        raise DomainError(f"delta0 must have {n} rows, got {D0.shape[0]}")
    m = D0.shape[1]
    w0 = np.concatenate([y0] + [D0[:, j] for j in range(m)])
    g = _linearized(fun, n, m)
    # the base part decides the step size; fields are linear and carried along
    atol = np.concatenate([np.full(n, tol * 1e-2)] + [np.full(n, tol * 1e-2 * max(1.0, float(np.max(np.abs(D0[:, j]))))) for j in range(m)])
    driver = _Driver(g, w0, float(t_end), tol, atol)
    try:
        while driver.step():
            pass
    except IntegrationError:
        raise
    W = np.array(driver.ys)
    base = Trajectory(
        spec=spec, times=np.array(driver.ts), states=W[:, :n], dense=_BaseView(driver.dense(), n),
        diagnostics={"steps": len(driver.ts) - 1}, hits=[],
    )
    deltas = np.transpose(W[:, n:].reshape(len(W), m, n), (0, 2, 1))
    vertical = bool(np.all(D0[: spec.dim, :] == 0.0))
    return JacobiField(base=base, times=np.array(driver.ts), deltas=deltas, vertical=vertical, dense=driver.dense())


class _BaseView:
    """Dense output restricted to the base components."""

    def __init__(self, sol, n):
        self.sol, self.n = sol, n

    def __call__(self, t):
        return np.asarray(self.sol(t))[: self.n]


# ---------------------------------------------------------------------------
# conjugate times


def vertical_basis(spec: ModelSpec, theta0: float, lam: float) -> np.ndarray:
    """Initial vertical variations ``(0, dP)``: along ``theta0``, ``lambda`` (and ``P3`` for Engel)."""
    n = spec.dim
    c, s = math.cos(theta0), math.sin(theta0)
    cols = []
    d = np.zeros(2 * n)
    d[n], d[n + 1] = -s, c
    cols.append(d)
    if spec.family is Family.ENGEL_FLAT:
        d = np.zeros(2 * n)
        d[n + 2] = 1.0
        cols.append(d)
        d = np.zeros(2 * n)
        d[n + 3] = 1.0
        cols.append(d)
    else:
        d = np.zeros(2 * n)
        d[n + 2] = 1.0
        cols.append(d)
    return np.array(cols).T


@dataclass
class ConjugateResult:
    times: list
    determinant_scale: float
    field: JacobiField


def _det_function(spec: ModelSpec, jf: JacobiField):
    fun = rhs_function(spec)
    n = spec.dim
    N = jf.base.states.shape[1]

    def det(t):
        w = np.asarray(jf.dense(t))
        y = w[:N]
        qdot = fun(t, y)[:n]
        dq = w[N:].reshape(jf.n_fields, N)[:, :n].T
        M = np.column_stack([dq, qdot])
        return float(np.linalg.det(M))

    return det


def conjugate_times(
    spec: ModelSpec,
    theta0: float,
    lam: float,
    t_max: float,
    p3: Optional[float] = None,
    tol: float = 1e-11,
    samples_per_step: int = 4,
    xtol: float = 1e-10,
) -> ConjugateResult:
    """Conjugate times in ``(0, t_max]`` of the arc-length geodesic with data ``(theta0, lambda)``.

    The determinant of the projected vertical Jacobi basis and the velocity
    is sampled on every integration step and each sign change is refined by
    Brent's method on the dense output.

    :raises DegenerateError: when the determinant stays below ``1e-14``
        relative to its natural scale ``t^k`` (degenerate family)
    """
    if t_max <= 0.0:
        raise DomainError("t_max must be positive")
    s0 = cylinder_lift(spec, theta0, lam, p3) if spec.family is Family.ENGEL_FLAT else cylinder_lift(spec, theta0, lam)
    jf = jacobi_integrate(spec, s0, t_max, vertical_basis(spec, theta0, lam), tol=tol)
    det = _det_function(spec, jf)
    ts = [0.0]
    for a, b in zip(jf.times[:-1], jf.times[1:]):
        ts.extend(np.linspace(a, b, samples_per_step + 1)[1:])
    ts = np.array(ts)
    vals = np.array([det(t) for t in ts])
    scale = float(np.max(np.abs(vals)))
    if scale < 1e-14 * max(1.0, t_max) ** spec.dim:
        raise DegenerateError("the Jacobi determinant vanishes identically: degenerate family")
    out = []
    # skip the zero at t = 0
    start = 1
    while start < len(vals) and vals[start] == 0.0:
        start += 1
    for i in range(start, len(vals) - 1):
        if vals[i] == 0.0:
            out.append(float(ts[i]))
        elif (vals[i] < 0.0) != (vals[i + 1] < 0.0) and vals[i + 1] != 0.0:
            out.append(float(brentq(det, ts[i], ts[i + 1], xtol=xtol, maxiter=200)))
    if len(vals) > 1 and vals[-1] == 0.0:
        out.append(float(ts[-1]))
    return ConjugateResult(times=sorted(set(out)), determinant_scale=scale, field=jf)


# ---------------------------------------------------------------------------
# finite-difference exponential map oracle


@dataclass
class ExponentialJacobian:
    """Finite-difference derivative of ``(theta0, lambda, [p3], t) -> q(t)``."""

    trajectories: dict
    step: float
    spec: ModelSpec

    def matrix(self, t: float) -> np.ndarray:
        n = self.spec.dim
        cols = []
        for key in sorted(k for k in self.trajectories if k != "base"):
            plus, minus = self.trajectories[key]
            cols.append((plus(t)[:n] - minus(t)[:n]) / (2.0 * self.step))
        base = self.trajectories["base"]
        cols.append(rhs_function(self.spec)(t, base(t))[:n])
        return np.column_stack(cols)

    def det(self, t: float) -> float:
        return float(np.linalg.det(self.matrix(t)))

    def singular_ratio(self, t: float) -> float:
        sv = np.linalg.svd(self.matrix(t), compute_uv=False)
        return float(sv[-1] / sv[0])


def exponential_jacobian(
    spec: ModelSpec, theta0: float, lam: float, t_max: float, p3: Optional[float] = None, h: float = 1e-5, tol: float = 1e-12
) -> ExponentialJacobian:
    """Integrate the geodesics with perturbed ``theta0``, ``lambda`` (and ``p3``) for central differences."""

    def lift(th, la, pp):
        if spec.family is Family.ENGEL_FLAT:
            return cylinder_lift(spec, th, la, pp)
        return cylinder_lift(spec, th, la)

    pp = 0.0 if p3 is None else p3
    trajs = {"base": integrate(spec, lift(theta0, lam, pp), t_max, tol=tol)}
    trajs["0_theta"] = (integrate(spec, lift(theta0 + h, lam, pp), t_max, tol=tol), integrate(spec, lift(theta0 - h, lam, pp), t_max, tol=tol))
    trajs["1_lambda"] = (integrate(spec, lift(theta0, lam + h, pp), t_max, tol=tol), integrate(spec, lift(theta0, lam - h, pp), t_max, tol=tol))
    if spec.family is Family.ENGEL_FLAT:
        trajs["2_p3"] = (integrate(spec, lift(theta0, lam, pp + h), t_max, tol=tol), integrate(spec, lift(theta0, lam, pp - h), t_max, tol=tol))
    return ExponentialJacobian(trajectories=trajs, step=h, spec=spec)


def fd_conjugate_times(
    spec: ModelSpec, theta0: float, lam: float, t_max: float, p3: Optional[float] = None, grid: int = 400
) -> list:
    """Conjugate times from sign changes of the finite-difference exponential-map determinant."""
    ej = exponential_jacobian(spec, theta0, lam, t_max, p3)
    ts = np.linspace(0.0, t_max, grid + 1)[1:]
    vals = np.array([ej.det(t) for t in ts])
    out = []
    for i in range(len(ts) - 1):
        if (vals[i] < 0.0) != (vals[i + 1] < 0.0):
            out.append(float(brentq(ej.det, ts[i], ts[i + 1], xtol=1e-10)))
    return out


# ---------------------------------------------------------------------------
# tangency probe


@dataclass
class TangencyReport:
    """Normals of a planar trace ``(x, z)`` approaching an endpoint.

    ``slopes`` are ``dz/dx`` between consecutive samples ordered by their
    distance to the endpoint; ``limit_slope`` is the slope between the two
    samples closest to it and ``limit_angle`` the angle (radians) between
    the limiting tangent and the plane ``z = 0``.
    """

    normals: np.ndarray
    slopes: np.ndarray
    normalized_slopes: np.ndarray
    limit_slope: float
    limit_normalized_slope: float
    limit_angle: float
    limit_normal: np.ndarray
    endpoint: tuple


def tangency_probe(spec: ModelSpec, r: float, branch, endpoint: Optional[str] = None) -> TangencyReport:
    """Limiting tangent of a trace branch at an abnormal endpoint.

    ``endpoint = "A"`` is ``(-r, 0)`` (distance ``X``), ``"B"`` is
    ``(r, 0)`` (distance ``1 - X``); by default ``B`` is used for
    ``C1bar`` branches and ``A`` otherwise.

    :raises DomainError: fewer than four samples within distance ``0.1``, or
        ``alpha = 0`` for a branch approaching ``A`` in a Martinet model
    """
    tag = getattr(branch, "tag", "generic")
    if endpoint is None:
        endpoint = "B" if tag == "C1bar" else "A"
    if endpoint not in ("A", "B"):
        raise DomainError("endpoint must be 'A' or 'B'")
    pts = list(branch.points)
    X = np.array([p.X for p in pts])
    x = np.array([p.x for p in pts])
    z = np.array([p.z for p in pts])
    dist = np.abs(X) if endpoint == "A" else np.abs(1.0 - X)
    if endpoint == "A" and spec.is_martinet and spec.martinet_params[0] == 0.0 and tag != "generic":
        raise DomainError("the tangency probe at (-r, 0) needs alpha != 0")
    if int(np.sum(dist < 0.1)) < 4:
        raise DomainError("insufficient data: fewer than 4 samples within distance 0.1 of the endpoint")
    order = np.argsort(dist)
    x, z, X = x[order], z[order], X[order]
    dx, dz = np.diff(x), np.diff(z)
    tangents = np.column_stack([dx, dz])
    tangents /= np.linalg.norm(tangents, axis=1)[:, None]
    normals = np.column_stack([-tangents[:, 1], tangents[:, 0]])
    normals *= np.where(normals[:, 1] < 0.0, -1.0, 1.0)[:, None]
    slopes = dz / dx
    norm_slopes = slopes * 2.0 / (r * r)
    return TangencyReport(
        normals=normals,
        slopes=slopes,
        normalized_slopes=norm_slopes,
        limit_slope=float(slopes[0]),
        limit_normalized_slope=float(norm_slopes[0]),
        limit_angle=float(math.atan(abs(slopes[0]))),
        limit_normal=normals[0],
        endpoint=(-r, 0.0) if endpoint == "A" else (r, 0.0),
    )


__all__ = [
    "ConjugateResult",
    "ExponentialJacobian",
    "JacobiField",
    "TangencyReport",
    "conjugate_times",
    "exponential_jacobian",
    "fd_conjugate_times",
    "jacobi_integrate",
    "tangency_probe",
    "vertical_basis",
]
