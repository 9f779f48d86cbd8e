"""Adaptive integration of geodesic flows, section events and the pendulum projection.

Integration uses the explicit Runge-Kutta 8(5,3) pair of Dormand and Prince
(``scipy.integrate.DOP853``) driven step by step, so that every accepted step
contributes its dense-output polynomial.  Crossings of a coordinate plane
(``y = 0`` by default) are located on the dense output by bracketing and
bisection, then polished by Newton steps using the vector field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import DOP853
from scipy.integrate._ivp.common import OdeSolution
from scipy.optimize import brentq

from srlab.errors import DomainError, IntegrationError, SingularMetricError
from srlab.models import Family, GeodesicState, ModelSpec, cylinder_coords, rhs_function

_SECTION_INDEX = {"x": 0, "y": 1, "z": 2}
# interior probes per step used to catch two crossings inside one step
_PROBES = 4


@dataclass
class SectionHit:
    """Intersection of a geodesic with the section plane.

    :arg n: hit index, starting at 1
    :arg t: arc-length time of the hit
    :arg q: point of the hit (the section coordinate is ~0)
    :arg theta0, lam: cylinder parameters of the initial condition
    :arg sigma: sign of the initial velocity across the section
    :arg theta: angle of ``(P1, P2)`` at the hit
    :arg state: full ``(q, P)`` vector at the hit
    :arg degenerate: True for a grazing hit (normal velocity below 1e-12)
    """

    n: int
    t: float
    q: np.ndarray
    theta0: float
    lam: float
    sigma: int
    theta: float
    state: np.ndarray
    degenerate: bool = False

    @property
    def x(self) -> float:
        return float(self.q[0])

    @property
    def y(self) -> float:
        return float(self.q[1])

    @property
    def z(self) -> float:
        return float(self.q[2])

    @property
    def w(self) -> float:
        return float(self.q[3]) if self.q.size > 3 else float("nan")


@dataclass
class Trajectory:
    """Dense solution of the normal flow.

    ``states[i]`` is the ``(q, P)`` vector at ``times[i]``; calling the
    trajectory evaluates the dense interpolant.
    """

    spec: ModelSpec
    times: np.ndarray
    states: np.ndarray
    dense: Optional[OdeSolution]
    diagnostics: dict = field(default_factory=dict)
    hits: list = field(default_factory=list)

    def __call__(self, t):
        if self.dense is None:
            if np.all(np.asarray(t) == self.times[0]):
                return self.states[0] if np.ndim(t) == 0 else np.tile(self.states[0][:, None], (1, np.size(t)))
            raise DomainError("trajectory has no dense output")
        return self.dense(t)

    def state(self, t: float) -> GeodesicState:
        return GeodesicState.from_vector(self(t))

    @property
    def dim(self) -> int:
        return self.states.shape[1] // 2

    @property
    def q(self) -> np.ndarray:
        return self.states[:, : self.dim]

    @property
    def P(self) -> np.ndarray:
        return self.states[:, self.dim :]

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def energy_drift(self) -> float:
        return float(self.diagnostics.get("energy_drift", float("nan")))


def _energy(states: np.ndarray, dim: int) -> np.ndarray:
    return 0.5 * (states[:, dim] ** 2 + states[:, dim + 1] ** 2)


def _wrap_rhs(fun):
    def g(t, y):
        return fun(t, y)

    return g


def _section_sign(fun, y0: np.ndarray, idx: int) -> int:
    """Sign of the initial normal velocity, or of the normal acceleration if the velocity vanishes."""
    v = fun(0.0, y0)
    if v[idx] != 0.0:
        return 1 if v[idx] > 0 else -1
    h = 1e-6 / max(1.0, float(np.linalg.norm(v)))
    acc = (fun(0.0, y0 + h * v)[idx] - fun(0.0, y0 - h * v)[idx]) / (2.0 * h)
    if acc == 0.0:
        return 0
    return 1 if acc > 0 else -1


class _Driver:
    """Step-by-step DOP853 run collecting nodes, interpolants and section crossings."""

    def __init__(self, fun, y0, t_end, rtol, atol, first_step=None, max_step=np.inf):
        self.fun = fun
        self.solver = DOP853(fun, 0.0, np.asarray(y0, dtype=float), t_end, rtol=rtol, atol=atol,
                             first_step=first_step, max_step=max_step)
        self.ts = [0.0]
        self.ys = [np.asarray(y0, dtype=float).copy()]
        self.interps = []
        self.nfev_failures = 0

    def dense(self) -> Optional[OdeSolution]:
        if not self.interps:
            return None
        return OdeSolution(np.array(self.ts), self.interps)

    def step(self) -> bool:
        """Advance one step; returns False when finished."""
        if self.solver.status != "running":
            return False
        try:
            msg = self.solver.step()
        except SingularMetricError as exc:
            raise IntegrationError(str(exc)) from exc
        if self.solver.status == "failed":
            raise IntegrationError(f"integrator failed (step underflow, stiff or singular flow): {msg}")
        self.interps.append(self.solver.dense_output())
        self.ts.append(self.solver.t)
        self.ys.append(self.solver.y.copy())
        return True


def _refine_crossing(fun, interp, idx: int, a: float, b: float, time_scale: float) -> float:
    g = lambda t: interp(t)[idx]
    t = brentq(g, a, b, xtol=1e-15 * max(1.0, time_scale), rtol=4.0 * np.finfo(float).eps, maxiter=200)
    lo, hi = min(a, b), max(a, b)
    for _ in range(3):
        yv = interp(t)
        d = fun(t, yv)[idx]
        if d == 0.0 or yv[idx] == 0.0:
            break
        tn = t - yv[idx] / d
        if not lo <= tn <= hi or abs(interp(tn)[idx]) >= abs(yv[idx]):
            break
        t = tn
    return t


def _scan_step(driver: _Driver, idx: int, t_min_gap: float) -> list:
    """Crossing times of coordinate ``idx`` inside the last accepted step."""
    ta, tb = driver.ts[-2], driver.ts[-1]
    interp = driver.interps[-1]
    probe_t = np.linspace(ta, tb, _PROBES + 1)
    vals = [driver.ys[-2][idx]] + [interp(t)[idx] for t in probe_t[1:-1]] + [driver.ys[-1][idx]]
    out = []
    for j in range(_PROBES):
        g0, g1 = vals[j], vals[j + 1]
        if g0 == 0.0:
            continue
        if g1 == 0.0:
            out.append(probe_t[j + 1])
        elif (g0 < 0.0) != (g1 < 0.0):
            out.append(_refine_crossing(driver.fun, interp, idx, probe_t[j], probe_t[j + 1], abs(tb)))
    return [t for t in out if abs(t) > t_min_gap]


def _build(spec, driver: _Driver, hits=None, extra=None) -> Trajectory:
    times = np.array(driver.ts)
    states = np.array(driver.ys)
    diag = {"steps": len(driver.ts) - 1, "nfev": driver.solver.nfev}
    dim = spec.dim
    en = _energy(states, dim)
    diag["energy_drift"] = float(np.max(np.abs(en - en[0]))) if en.size else 0.0
    if extra:
        diag.update(extra)
    return Trajectory(spec=spec, times=times, states=states, dense=driver.dense(), diagnostics=diag, hits=hits or [])


def _check_tol(tol: float):
    if not 1e-13 <= tol <= 1e-4:
        raise DomainError(f"tolerance must lie in [1e-13, 1e-4], got {tol!r}")


def integrate(
    spec: ModelSpec,
    s0: GeodesicState,
    t_end: float,
    tol: float = 1e-10,
    atol: Optional[float] = None,
    max_step: float = np.inf,
) -> Trajectory:
    """Integrate the normal flow from ``s0`` over ``[0, t_end]``.

    A negative ``t_end`` integrates backward in time.

    :arg tol: relative local error tolerance in ``[1e-13, 1e-4]``
    :arg atol: absolute tolerance (default ``tol * 1e-2``)
    :raises IntegrationError: on a metric singularity or step underflow; the
        partial trajectory is attached as ``exc.partial``
    """
    _check_tol(tol)
    if t_end == 0.0:
        raise DomainError("t_end must be nonzero")
    if s0.q.size != spec.dim:
        raise DomainError(f"state dimension {s0.q.size} does not match model dimension {spec.dim}")
    if not np.any(s0.P != 0.0):
        raise DomainError("P = 0 is not a normal geodesic")
    fun = rhs_function(spec)
    driver = _Driver(fun, s0.vector, float(t_end), tol, tol * 1e-2 if atol is None else atol, max_step=max_step)
    try:
        while driver.step():
            pass
    except IntegrationError as exc:
        exc.partial = _build(spec, driver)
        raise
    return _build(spec, driver)


def integrate_with_section(
    spec: ModelSpec,
    s0: GeodesicState,
    t_end: float,
    max_hits: int = 8,
    tol: float = 1e-12,
    section: str = "y",
    atol: Optional[float] = None,
) -> tuple[Trajectory, list]:
    """Integrate and record crossings of the plane ``section = 0``.

    Stops after ``max_hits`` crossings or at ``t_end``.  The initial point
    itself never counts as a hit.
    """
    _check_tol(tol)
    if section not in _SECTION_INDEX:
        raise DomainError(f"section must be one of {sorted(_SECTION_INDEX)}, got {section!r}")
    if section != "y" and spec.family not in (Family.TANGENTIAL_HYPERBOLIC, Family.TANGENTIAL_ELLIPTIC):
        raise DomainError("sections other than y = 0 are only offered for tangential models")
    idx = _SECTION_INDEX[section]
    fun = rhs_function(spec)
    y0 = s0.vector
    sigma = _section_sign(fun, y0, idx)
    cyl = cylinder_coords(spec, s0)
    driver = _Driver(fun, y0, float(t_end), tol, tol * 1e-2 if atol is None else atol)
    hits: list = []
    t_gap = 1e-12 * max(1.0, abs(t_end))
    try:
        while len(hits) < max_hits and driver.step():
            for th in _scan_step(driver, idx, t_gap):
                if len(hits) >= max_hits:
                    break
                if hits and th <= hits[-1].t:
                    continue
                v = driver.interps[-1](th)
                speed = fun(th, v)[idx]
                n = spec.dim
                hits.append(
                    SectionHit(
                        n=len(hits) + 1,
                        t=float(th),
                        q=v[:n].copy(),
                        theta0=cyl.theta,
                        lam=cyl.lam,
                        sigma=sigma,
                        theta=math.atan2(v[n + 1], v[n]),
                        state=v.copy(),
                        degenerate=abs(speed) < 1e-12,
                    )
                )
    except IntegrationError as exc:
        exc.partial = _build(spec, driver, hits)
        raise
    traj = _build(spec, driver, hits, {"sigma": sigma})
    return traj, hits


def coordinate_extrema(traj: Trajectory, index: int, kind: str = "max") -> np.ndarray:
    """Times and values of local extrema of a state component along a trajectory.

    Extrema are zeros of the component's time derivative, located on the
    dense output.  Returns an array of shape ``(k, 2)`` with rows ``(t, value)``.
    """
    fun = rhs_function(traj.spec)
    out = []
    deriv = lambda t: fun(t, traj(t))[index]
    grid = []
    for a, b in zip(traj.times[:-1], traj.times[1:]):
        grid.extend(np.linspace(a, b, _PROBES + 1)[:-1])
    grid.append(traj.times[-1])
    vals = [deriv(t) for t in grid]
    for j in range(len(grid) - 1):
        if vals[j] == 0.0 or (vals[j] < 0.0) == (vals[j + 1] < 0.0):
            continue
        is_max = vals[j] > 0.0
        if (kind == "max") != is_max:
            continue
        t = brentq(deriv, grid[j], grid[j + 1], xtol=1e-14)
        out.append((t, traj(t)[index]))
    return np.array(out).reshape(-1, 2)


# ---------------------------------------------------------------------------
# pendulum projection for the Martinet families


@dataclass
class PendulumProjection:
    """Phase-plane image ``(theta, dtheta/ds)`` of a Martinet geodesic.

    ``s = sqrt(|lambda|) * tau`` with ``d tau = dt / ((1+alpha*y)(1+beta*x+gamma*y))``.
    ``theta`` is unwrapped.  ``energy`` holds the first integral
    ``dtheta^2/2 - (cos(theta) + eps^2 alpha^2 cos(theta)^2 / 2)`` when
    ``beta = 0`` and ``lambda > 0`` (NaN otherwise).
    """

    t: np.ndarray
    s: np.ndarray
    theta: np.ndarray
    dtheta_ds: np.ndarray
    energy: np.ndarray
    y: np.ndarray


def pendulum_point(spec: ModelSpec, s: GeodesicState) -> tuple[float, float]:
    """``(theta, dtheta/ds)`` of a single Martinet state."""
    al, be, ga = spec.martinet_params
    lam = float(s.P[2])
    if lam == 0.0:
        raise DomainError("the pendulum projection is undefined for lambda = 0")
    y = s.q[1]
    th = math.atan2(s.P[1], s.P[0])
    rate = -(y * lam - al * math.cos(th) + be * math.sin(th))
    return th, rate / math.sqrt(abs(lam))


def section_slope(spec: ModelSpec, theta: float, lam: float) -> float:
    """``dtheta/ds`` of the section ``y = 0``: ``eps * (alpha*cos(theta) - beta*sin(theta))``."""
    al, be, _ = spec.martinet_params
    if lam == 0.0:
        raise DomainError("the pendulum projection is undefined for lambda = 0")
    return (al * math.cos(theta) - be * math.sin(theta)) / math.sqrt(abs(lam))


def pendulum_energy(spec: ModelSpec, theta, dtheta_ds, lam: float):
    """First integral of the projected pendulum in the conservative case ``beta = 0``."""
    al, be, _ = spec.martinet_params
    if be != 0.0:
        raise DomainError("the pendulum first integral exists only for beta = 0")
    if lam <= 0.0:
        raise DomainError("the first integral is written for lambda > 0")
    e2 = al * al / lam
    c = np.cos(theta)
    return 0.5 * np.asarray(dtheta_ds) ** 2 - (c + 0.5 * e2 * c * c)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _arc_parameter(traj: Trajectory, t_query: np.ndarray) -> np.ndarray:
    """``s(t) = sqrt(|lambda|) * int_0^t dt / (sa*sc)`` by 8-point Gauss-Legendre per step."""
    al, be, ga = traj.spec.martinet_params
    lam = float(traj.states[0, 5])
    root = math.sqrt(abs(lam))

    def rate(t):
        v = traj(t)
        return root / ((1.0 + al * v[1]) * (1.0 + be * v[0] + ga * v[1]))

    def piece(a, b):
        if a == b:
            return 0.0
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        nodes = mid + half * _GL_X
        return half * float(np.dot(_GL_W, rate(nodes)))

    knots = traj.times
    cum = np.concatenate([[0.0], np.cumsum([piece(a, b) for a, b in zip(knots[:-1], knots[1:])])])
    out = np.empty_like(t_query, dtype=float)
    forward = knots[-1] >= knots[0]
    for i, t in enumerate(t_query):
        j = int(np.searchsorted(knots, t, side="right") - 1) if forward else int(np.searchsorted(-knots, -t, side="right") - 1)
        j = min(max(j, 0), len(knots) - 2)
        out[i] = cum[j] + piece(knots[j], t)
    return out


def pendulum_project(spec: ModelSpec, traj: Trajectory, times: Optional[Sequence[float]] = None) -> PendulumProjection:
    """Project a Martinet trajectory onto the pendulum phase plane."""
    if not spec.is_martinet:
        raise DomainError("the pendulum projection is defined for Martinet families")
    al, be, ga = spec.martinet_params
    lam = float(traj.states[0, 5])
    if lam == 0.0:
        raise DomainError("the pendulum projection is undefined for lambda = 0")
    t = np.asarray(traj.times if times is None else times, dtype=float)
    V = traj(t)
    y, P1, P2 = V[1], V[3], V[4]
    theta = np.unwrap(np.arctan2(P2, P1))
    dth = -(y * lam - al * np.cos(theta) + be * np.sin(theta)) / math.sqrt(abs(lam))
    s = _arc_parameter(traj, t)
    if be == 0.0 and lam > 0.0:
        energy = pendulum_energy(spec, theta, dth, lam)
    else:
        energy = np.full_like(t, np.nan)
    return PendulumProjection(t=t, s=s, theta=theta, dtheta_ds=dth, energy=energy, y=y)
