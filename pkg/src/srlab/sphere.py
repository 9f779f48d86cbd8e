"""Return mappings, traces of spheres and wave fronts on the Martinet plane ``y = 0``.

Normalized trace coordinates near the abnormal endpoint ``(-r, 0)`` are
``X = (x + r) / (2r)`` and ``Z = z / r^3``.

Branch names follow the pendulum regime of the generating geodesic and the
index of the return:

========  ==========================================================
``C1``    oscillating pendulum, first return
``C2``    oscillating pendulum, second return
``D1``    rotating pendulum, first return (the only branch in ``z < 0``)
``D2``    rotating pendulum, second return
``C1bar`` oscillating, first return, on the side of ``(r, 0)`` (``x > 0``)
========  ==========================================================

The regime is read off the conservative part of the pendulum: with
``m'' = (1 + cos(theta0) - alpha^2/(2 lambda)) / 2`` the motion oscillates
for ``m'' > 0`` and rotates for ``m'' < 0``.  When ``beta != 0`` this is the
leading-order classification of the initial condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from srlab.elliptic import Modulus, complete_integrals
from srlab.errors import DomainError, IntegrationError, NotFoundError
from srlab.flow import SectionHit, integrate, integrate_with_section
from srlab.models import Family, GeodesicState, ModelSpec, cylinder_lift
from srlab.parallel import ordered_map

BRANCH_TAGS = ("C1bar", "C1", "C2", "D1", "D2", "generic")
# hit-time accuracy demanded from the shooting solvers
HIT_TIME_TOL = 1e-9


@dataclass(frozen=True)
class BranchPoint:
    """Point of a trace with ``y = 0`` and its generating geodesic.

    ``X = (x + r)/(2r)``, ``Z = z / r^3``; ``(theta0, lam, n)`` identify the
    geodesic and the hit; ``alternates`` lists further ``(theta0, lam)``
    reaching the same point with the same length.
    """

    X: float
    Z: float
    x: float
    z: float
    theta0: float
    lam: float
    n: int
    t: float = float("nan")
    tag: str = "generic"
    alternates: tuple = ()

    @classmethod
    def from_raw(cls, r: float, x: float, z: float, theta0: float, lam: float, n: int, **kw) -> "BranchPoint":
        return cls(X=(x + r) / (2.0 * r), Z=z / r ** 3, x=float(x), z=float(z), theta0=float(theta0), lam=float(lam), n=int(n), **kw)


@dataclass
class BranchCurve:
    """Ordered samples of one branch of the trace.

    ``skipped`` records grid values for which no point could be produced,
    as ``(grid value, reason)``.
    """

    tag: str
    points: list
    r: float
    params: tuple
    skipped: list = field(default_factory=list)

    def __post_init__(self):
        if self.tag not in BRANCH_TAGS:
            raise DomainError(f"unknown branch tag {self.tag!r}")

    def __len__(self):
        return len(self.points)

    @property
    def X(self) -> np.ndarray:
        return np.array([p.X for p in self.points])

    @property
    def Z(self) -> np.ndarray:
        return np.array([p.Z for p in self.points])

    @property
    def x(self) -> np.ndarray:
        return np.array([p.x for p in self.points])

    @property
    def z(self) -> np.ndarray:
        return np.array([p.z for p in self.points])


def _params(spec: ModelSpec) -> tuple:
    return spec.martinet_params if spec.is_martinet else ()


def m_double_prime(alpha: float, theta0: float, lam: float) -> float:
    """``m'' = (1 + cos(theta0) - alpha^2/(2 lambda))/2``; its sign gives the pendulum regime."""
    half = 0.5 * (math.pi - abs(math.remainder(theta0, 2.0 * math.pi)))
    # 1 + cos(theta0) = 2 sin^2((pi - |theta0|)/2), accurate near theta0 = +-pi
    return 0.5 * (2.0 * math.sin(half) ** 2 - alpha * alpha / (2.0 * lam))


def classify(spec: ModelSpec, theta0: float, lam: float, n: int, x: float = float("nan")) -> str:
    """Branch tag of the ``n``-th hit generated by ``(theta0, lam)``."""
    if not spec.is_martinet or lam <= 0.0 or n not in (1, 2):
        return "generic"
    alpha = spec.martinet_params[0]
    mpp = m_double_prime(alpha, theta0, lam)
    if mpp > 0.0:
        if n == 1:
            return "C1bar" if x > 0.0 else "C1"
        return "C2"
    if mpp < 0.0:
        return "D1" if n == 1 else "D2"
    return "generic"


# ---------------------------------------------------------------------------
# return mapping


def _period_estimate(spec: ModelSpec, theta0: float, lam: float) -> float:
    """Period of the flat pendulum through ``theta0``, used only to size horizons."""
    kp = abs(math.cos(0.5 * theta0))
    K = math.log(4.0 / max(kp, 1e-300)) + 1.0 if kp < 1e-6 else complete_integrals(Modulus.from_kprime(kp)).K
    return 4.0 * K / math.sqrt(abs(lam))


def _is_separatrix(spec: ModelSpec, theta0: float, lam: float) -> bool:
    if not spec.is_martinet:
        return False
    alpha, beta, _ = spec.martinet_params
    if beta != 0.0 or lam <= 0.0:
        return False
    return abs(m_double_prime(alpha, theta0, lam)) <= 1e-15


def return_map(
    spec: ModelSpec,
    theta0: float,
    lam: float,
    n: int,
    tol: float = 1e-12,
    atol: Optional[float] = None,
    s0: Optional[GeodesicState] = None,
    horizon: Optional[float] = None,
) -> Optional[SectionHit]:
    """``n``-th intersection with ``y = 0`` of the geodesic from the origin with data ``(theta0, lam)``.

    Returns ``None`` when the pendulum image of the geodesic is a separatrix
    (no return).  ``s0`` overrides the lifted initial state, which is useful
    when ``theta0`` is too close to ``pi`` to be represented through its
    cosine and sine; ``horizon`` then overrides the integration horizon.

    :raises NotFoundError: when fewer than ``n`` hits occur within twenty
        expected periods
    """
    if lam == 0.0:
        raise DomainError("lambda = 0: the return mapping is undefined")
    if n < 1:
        raise DomainError("hit index must be >= 1")
    if s0 is None and _is_separatrix(spec, theta0, lam):
        return None
    if horizon is None:
        horizon = 20.0 * max(1, math.ceil(n / 2)) * _period_estimate(spec, theta0, lam)
    state = cylinder_lift(spec, theta0, lam) if s0 is None else s0
    try:
        _, hits = integrate_with_section(spec, state, horizon, max_hits=n, tol=tol, atol=atol)
    except IntegrationError as exc:
        raise NotFoundError(f"integration stopped before hit {n}: {exc}") from exc
    if len(hits) < n:
        raise NotFoundError(f"only {len(hits)} hits of y = 0 within the horizon {horizon:.6g}")
    return hits[n - 1]


def lift_near_abnormal(spec: ModelSpec, kprime: float, lam: float, side: int = 1) -> GeodesicState:
    """Initial state with ``theta0 = side * (pi - 2 asin(k'))`` kept accurate for tiny ``k'``.

    ``P1 = 2k'^2 - 1`` and ``P2 = side * 2 k k'``, so ``k' = cos(theta0/2)``.
    """
    mod = Modulus.from_kprime(kprime)
    P = [2.0 * mod.kprime ** 2 - 1.0, side * 2.0 * mod.k * mod.kprime, float(lam)]
    if spec.family is Family.ENGEL_FLAT:
        P = P[:2] + [0.0, float(lam)]
    return GeodesicState(np.zeros(spec.dim), np.array(P))


# ---------------------------------------------------------------------------
# flat closed-form traces


def flat_trace_point(r: float, i: int, mod: Modulus) -> tuple[float, float]:
    """``(x_i, z_i)`` of the flat trace curve ``C_i`` at modulus ``mod``."""
    pair = complete_integrals(mod)
    K, E = pair.K, pair.E
    x = -r + 2.0 * r * E / K
    z = r ** 3 / (6.0 * i * i * K ** 3) * ((2.0 * mod.k ** 2 - 1.0) * E + mod.kprime ** 2 * K)
    return x, z


def sphere_trace_flat(r: float, i: int, k_grid: Sequence[float]) -> BranchCurve:
    """Exact trace curve ``C_i(k)``: ``x = -r + 2rE/K``, ``z = r^3/(6 i^2 K^3)[(2k^2-1)E + k'^2 K]``.

    The generating geodesic has ``cos(theta0) = 1 - 2k^2`` and
    ``lambda = (2iK/r)^2`` (its ``i``-th return happens at time ``r``).
    ``C_1`` is the trace of the sphere in ``z > 0``.
    """
    if i < 1:
        raise DomainError("curve index i must be >= 1")
    if r <= 0.0:
        raise DomainError("radius must be positive")
    pts = []
    for k in k_grid:
        if not 0.0 < k < 1.0:
            raise DomainError(f"k must lie in (0, 1), got {k!r}")
        mod = Modulus.from_k(k)
        x, z = flat_trace_point(r, i, mod)
        K = complete_integrals(mod).K
        lam = (2.0 * i * K / r) ** 2
        theta0 = 2.0 * math.asin(k)
        tag = ("C1bar" if x > 0.0 else "C1") if i == 1 else ("C2" if i == 2 else "generic")
        pts.append(BranchPoint.from_raw(r, x, z, theta0, lam, i, t=r, tag=tag))
    tag = "C1" if i == 1 else ("C2" if i == 2 else "generic")
    return BranchCurve(tag=tag, points=pts, r=r, params=(0.0, 0.0, 0.0))


def cut_locus_flat(r: float, k_grid: Sequence[float]) -> tuple[BranchCurve, BranchCurve]:
    """The flat cut locus ``C_1 U -C_1``.

    Each point of ``C_1`` is reached at length ``r`` by the two minimizers
    ``(theta0, lambda)`` and ``(-theta0, lambda)``, exchanged by ``y -> -y``.
    ``-C_1`` is the image under ``(x, z) -> (-x, -z)``, generated by
    ``(pi - theta0, -lambda)`` and ``(theta0 - pi, -lambda)``.
    """
    c1 = sphere_trace_flat(r, 1, k_grid)
    plus, minus = [], []
    for p in c1.points:
        plus.append(BranchPoint.from_raw(r, p.x, p.z, p.theta0, p.lam, 1, t=r, tag=p.tag, alternates=((-p.theta0, p.lam),)))
        th = math.pi - p.theta0
        minus.append(BranchPoint.from_raw(r, -p.x, -p.z, th, -p.lam, 1, t=r, tag=p.tag, alternates=((-th, -p.lam),)))
    return (
        BranchCurve(tag=c1.tag, points=plus, r=r, params=c1.params),
        BranchCurve(tag=c1.tag, points=minus, r=r, params=c1.params),
    )


# ---------------------------------------------------------------------------
# numeric traces by shooting on the n-th hit time


def _hit_time(spec, n, tol, theta0, lam):
    try:
        h = return_map(spec, theta0, lam, n, tol=tol)
    except NotFoundError:
        return math.inf, None
    if h is None:
        return math.inf, None
    return h.t, h


def _bracket(g, x0: float, step: float, lo: float, hi: float, max_expand: int = 24):
    """Find ``a < b`` in ``[lo, hi]`` with a sign change of ``g``, expanding from ``x0``."""
    a = b = min(max(x0, lo), hi)
    ga = gb = g(a)
    if ga == 0.0:
        return a, a
    d = step
    for _ in range(max_expand):
        a_new, b_new = max(a - d, lo), min(b + d, hi)
        if a_new < a:
            g_new = g(a_new)
            if (g_new < 0.0) != (ga < 0.0):
                return a_new, a
            a, ga = a_new, g_new
        if b_new > b:
            g_new = g(b_new)
            if (g_new < 0.0) != (gb < 0.0):
                return b, b_new
            b, gb = b_new, g_new
        if a == lo and b == hi:
            break
        d *= 2.0
    raise NotFoundError("no sign change of t_n - r found")


def _finite(v: float, cap: float) -> float:
    return v if math.isfinite(v) else cap


def _trace_point_fixed_theta(spec, r, n, tol, lam_sign, theta0):
    """Solve ``lambda`` (through ``ln|lambda|``) so that ``t_n = r`` at fixed ``theta0``."""
    kp = abs(math.cos(0.5 * theta0))
    if kp == 0.0:
        return None, "theta0 = pi is the abnormal direction"
    K = complete_integrals(Modulus.from_kprime(min(kp, 1.0))).K
    l0 = 2.0 * math.log(2.0 * n * K / r)
    cap = 1e6 * r

    def g(ell):
        return _finite(_hit_time(spec, n, tol, theta0, lam_sign * math.exp(ell))[0], cap) - r

    try:
        a, b = _bracket(g, l0, 0.25, l0 - 20.0, l0 + 20.0)
        ell = a if a == b else brentq(g, a, b, xtol=1e-14, rtol=1e-15, maxiter=200)
    except (NotFoundError, ValueError) as exc:
        return None, f"bracketing failed: {exc}"
    lam = lam_sign * math.exp(ell)
    t, h = _hit_time(spec, n, tol, theta0, lam)
    if h is None or abs(t - r) > HIT_TIME_TOL:
        return None, f"hit time residual {abs(t - r):.3g} above {HIT_TIME_TOL}"
    return (theta0, lam, h), ""


def _trace_point_fixed_lambda(spec, r, n, tol, side, lam):
    """Solve ``theta0 = side*(pi - 2 asin k')`` through ``ln k'`` so that ``t_n = r`` at fixed ``lambda``."""
    cap = 1e6 * r

    def theta_of(lk):
        return side * (math.pi - 2.0 * math.asin(math.exp(lk)))

    def g(lk):
        return _finite(_hit_time(spec, n, tol, theta_of(lk), lam)[0], cap) - r

    # flat guess: K(k) = r sqrt|lam| / (2n), K ~ ln(4/k') for k' small
    Kt = r * math.sqrt(abs(lam)) / (2.0 * n)
    l0 = min(-1e-3, math.log(4.0) - Kt) if Kt > math.pi / 2 else -0.35
    try:
        a, b = _bracket(g, l0, 0.5, -45.0, -1e-12)
        lk = a if a == b else brentq(g, a, b, xtol=1e-14, rtol=1e-15, maxiter=200)
    except (NotFoundError, ValueError) as exc:
        return None, f"bracketing failed: {exc}"
    theta0 = theta_of(lk)
    t, h = _hit_time(spec, n, tol, theta0, lam)
    if h is None or abs(t - r) > HIT_TIME_TOL:
        return None, f"hit time residual {abs(t - r):.3g} above {HIT_TIME_TOL}"
    return (theta0, lam, h), ""


@dataclass(frozen=True)
class Sweep:
    """Grid over one cylinder parameter; the other one is solved for.

    ``variable`` is ``"theta0"`` (then ``lambda`` is solved, with sign
    ``sign``) or ``"lambda"`` (then ``theta0`` is solved on the side
    ``sign``, i.e. in ``(0, pi)`` for ``+1`` and ``(-pi, 0)`` for ``-1``).
    """

    variable: str
    values: tuple
    sign: int = 1

    def __post_init__(self):
        if self.variable not in ("theta0", "lambda"):
            raise DomainError(f"sweep variable must be 'theta0' or 'lambda', got {self.variable!r}")
        if self.sign not in (1, -1):
            raise DomainError("sweep sign must be +1 or -1")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))


def _numeric_point(spec, r, n, tol, sweep_var, sign, value):
    if sweep_var == "theta0":
        return _trace_point_fixed_theta(spec, r, n, tol, sign, value)
    if abs(value) < 1e-3:
        return None, "|lambda| < 1e-3 rejected: the projection degenerates at the equator"
    return _trace_point_fixed_lambda(spec, r, n, tol, sign, value)


def sphere_trace_numeric(
    spec: ModelSpec, r: float, n: int, sweep: Sweep, tol: float = 1e-12, workers: Optional[int] = None
) -> BranchCurve:
    """Trace points from shooting ``t_n = r`` along a sweep.

    For each grid value the free parameter is root-found (bracket expansion
    and Brent's method) until the ``n``-th hit time equals ``r`` to
    ``1e-9``.  Failed grid values are listed in ``skipped``.  The curve tag
    is the majority tag of its points.
    """
    if n not in (1, 2):
        raise DomainError("sphere_trace_numeric supports n in {1, 2}")
    if r <= 0.0:
        raise DomainError("radius must be positive")
    job = partial(_numeric_point, spec, r, n, tol, sweep.variable, sweep.sign)
    results = ordered_map(job, sweep.values, workers)
    pts, skipped = [], []
    for value, (res, reason) in zip(sweep.values, results):
        if res is None:
            skipped.append((value, reason))
            continue
        theta0, lam, h = res
        tag = classify(spec, theta0, lam, n, h.x)
        pts.append(BranchPoint.from_raw(r, h.x, h.z, theta0, lam, n, t=h.t, tag=tag))
    tags = [p.tag for p in pts]
    tag = max(set(tags), key=lambda s: (tags.count(s), s)) if tags else "generic"
    return BranchCurve(tag=tag, points=pts, r=r, params=_params(spec), skipped=skipped)


# ---------------------------------------------------------------------------
# branches near the saddle of the pendulum


def _require_graded(spec: ModelSpec) -> tuple[float, float, float]:
    if not spec.is_martinet:
        raise DomainError("branch shooting is set up for the Martinet families")
    alpha, beta, gamma = spec.martinet_params
    if alpha <= 0.0:
        raise DomainError("the near-saddle branches use the normalization alpha > 0")
    return alpha, beta, gamma


def _saddle_point(spec, r, n, regime, side, tol, lam):
    """Shoot on ``ln|m''|`` with ``1 + cos(theta0) = alpha^2/(2 lam) + 2 m''`` so that ``t_n = r``."""
    alpha = spec.martinet_params[0]
    base = alpha * alpha / (2.0 * lam)

    def theta_of(lm):
        s = base + 2.0 * regime * math.exp(lm)
        if not 0.0 < s < 2.0:
            return None
        return side * (math.pi - 2.0 * math.asin(math.sqrt(0.5 * s)))

    def hit(lm):
        th = theta_of(lm)
        if th is None:
            return math.nan, None
        try:
            h = return_map(spec, th, lam, n, tol=tol, atol=1e-18)
        except NotFoundError:
            return math.inf, None
        return (math.inf, None) if h is None else (h.t, h)

    prev = None
    root = None
    for j in range(80):
        lm = -0.5 - float(j)
        v = hit(lm)[0] - r
        if not math.isfinite(v) and not v == math.inf:
            continue
        v = _finite(v, 1e6 * r)
        if prev is not None and (v > 0.0) != (prev[1] > 0.0):
            g = lambda s: _finite(hit(s)[0], 1e6 * r) - r
            root = brentq(g, lm, prev[0], xtol=1e-13, maxiter=200)
            break
        prev = (lm, v)
    if root is None:
        return None, "no sign change of t_n - r along ln|m''| (branch absent at this lambda)"
    t, h = hit(root)
    if h is None or abs(t - r) > HIT_TIME_TOL:
        return None, f"hit time residual {abs(t - r):.3g} above {HIT_TIME_TOL}"
    return (theta_of(root), lam, h), ""


_SADDLE_BRANCHES = {"C1": (1, 1), "C2": (2, 1), "D1": (1, -1), "D2": (2, -1)}


def saddle_branch(
    spec: ModelSpec,
    r: float,
    which: str,
    lam_grid: Sequence[float],
    side: int = -1,
    tol: float = 1e-13,
    workers: Optional[int] = None,
) -> BranchCurve:
    """Near-saddle branch samples by shooting from the origin.

    The initial angle is parametrized by ``m''`` through
    ``1 + cos(theta0) = alpha^2/(2 lambda) + 2 m''`` with ``m'' > 0``
    (oscillating, ``C`` branches) or ``m'' < 0`` (rotating, ``D``
    branches), ``theta0`` on the side ``side``.  For every ``lambda`` the
    value ``ln|m''|`` is scanned downward from ``-0.5`` in unit steps and
    refined by Brent's method so that the ``n``-th hit occurs at time ``r``.
    With ``alpha > 0`` the ``C1`` branch comes from ``side = -1``.
    """
    if which not in _SADDLE_BRANCHES:
        raise DomainError(f"which must be one of {sorted(_SADDLE_BRANCHES)}, got {which!r}")
    _require_graded(spec)
    n, regime = _SADDLE_BRANCHES[which]
    for lam in lam_grid:
        if lam <= 0.0:
            raise DomainError("near-saddle branches need lambda > 0")
    job = partial(_saddle_point, spec, r, n, regime, side, tol)
    results = ordered_map(job, list(lam_grid), workers)
    pts, skipped = [], []
    for lam, (res, reason) in zip(lam_grid, results):
        if res is None:
            skipped.append((lam, reason))
            continue
        theta0, lam_v, h = res
        pts.append(BranchPoint.from_raw(r, h.x, h.z, theta0, lam_v, n, t=h.t, tag=which))
    return BranchCurve(tag=which, points=pts, r=r, params=_params(spec), skipped=skipped)


def _d1_rhs(alpha, beta, gamma, lam):
    """Flow in saddle-centred variables, arc parameter ``s`` with ``dt/ds = sa*sc/sqrt(lam)``.

    ``u = theta + pi`` and ``v = (y + alpha/lam) lam / alpha``, so the saddle
    sits at ``u = 0``, ``v = 0`` and the section ``y = 0`` is ``v = 1``.
    """
    sl = math.sqrt(lam)
    ya = alpha / lam

    def f(s, w):
        x, v, z, u, t = w
        y = ya * (v - 1.0)
        sa = 1.0 + alpha * y
        sc = 1.0 + beta * x + gamma * y
        cu, su = math.cos(u), math.sin(u)
        h = math.sin(0.5 * u)
        return [
            -sc * cu / sl,
            -sa * su / (sl * ya),
            -0.5 * y * y * sc * cu / sl,
            -(v * alpha - 2.0 * alpha * h * h - beta * su) / sl,
            sa * sc / sl,
        ]

    return f


def _d1_leg(f, xm, vm, direction, tol):
    ev = lambda s, w: w[1] - 1.0
    ev.terminal = True
    sol = solve_ivp(
        f, [0.0, direction * 1e3], [xm, vm, 0.0, 0.0, 0.0], method="DOP853", rtol=tol,
        atol=[1e-14, 1e-300, 1e-18, 1e-300, 1e-14], events=ev, first_step=1e-3,
    )
    if sol.status == -1 or len(sol.y_events[0]) == 0:
        raise NotFoundError("the leg from the midpoint does not reach y = 0")
    return sol.y_events[0][0]


def _d1_point(spec, r, tol, lam):
    """Midpoint shooting for the first-return rotating geodesic with ``t_1 = r``.

    The geodesic is symmetric about its passage through ``theta = -pi``
    (``u = 0``) in the conservative case; in general both legs are
    integrated from the midpoint ``(x_m, v_m)`` until ``y = 0``.  ``x_m`` is
    fixed so that the backward leg ends at ``x = 0``, and ``ln v_m`` so that
    the total time is ``r``.
    """
    alpha, beta, gamma = spec.martinet_params
    f = _d1_rhs(alpha, beta, gamma, lam)
    state = {"xm": -0.5 * r}

    def legs(lv):
        vm = math.exp(lv)
        xm = state["xm"]
        b = None
        for _ in range(60):
            b = _d1_leg(f, xm, vm, -1, tol)
            if abs(b[0]) < 1e-15:
                break
            xm -= b[0]
        state["xm"] = xm
        return xm, b, _d1_leg(f, xm, vm, 1, tol)

    def g(lv):
        _, b, fw = legs(lv)
        return (fw[4] - b[4]) - r

    sf = math.sqrt(lam) * r
    try:
        lv = -0.5 * sf + 2.0
        gv = g(lv)
        guard = 0
        while gv > 0.0:
            lv += 1.0
            gv = g(lv)
            guard += 1
            if guard > 200:
                raise NotFoundError("no upper bracket for ln v_m")
        while True:
            lv2 = lv - 1.0
            if g(lv2) > 0.0:
                break
            lv = lv2
            guard += 1
            if guard > 400:
                raise NotFoundError("no lower bracket for ln v_m")
        root = brentq(g, lv2, lv, xtol=1e-12, maxiter=200)
        xm, b, fw = legs(root)
    except (NotFoundError, ValueError) as exc:
        return None, f"midpoint shooting failed: {exc}"
    t_len = fw[4] - b[4]
    if abs(t_len - r) > HIT_TIME_TOL:
        return None, f"hit time residual {abs(t_len - r):.3g} above {HIT_TIME_TOL}"
    x, z = fw[0], fw[2] - b[2]
    theta0 = math.remainder(b[3] - math.pi, 2.0 * math.pi)
    return (x, z, theta0, t_len), ""


def d1_branch(
    spec: ModelSpec, r: float, lam_grid: Sequence[float], tol: float = 1e-12, workers: Optional[int] = None
) -> BranchCurve:
    """Samples of the ``D1`` branch (rotating, first return) for large ``lambda``.

    Uses midpoint shooting in saddle-centred variables, which keeps full
    relative precision on the exponentially small excursion in ``y`` where
    shooting from the origin loses it (``lambda`` beyond a few hundred).
    """
    _require_graded(spec)
    for lam in lam_grid:
        if lam <= 0.0:
            raise DomainError("D1 samples need lambda > 0")
    job = partial(_d1_point, spec, r, tol)
    results = ordered_map(job, list(lam_grid), workers)
    pts, skipped = [], []
    for lam, (res, reason) in zip(lam_grid, results):
        if res is None:
            skipped.append((lam, reason))
            continue
        x, z, theta0, t = res
        pts.append(BranchPoint.from_raw(r, x, z, theta0, lam, 1, t=t, tag="D1"))
    return BranchCurve(tag="D1", points=pts, r=r, params=_params(spec), skipped=skipped)


# ---------------------------------------------------------------------------
# wave fronts


@dataclass(frozen=True)
class WavefrontPoint:
    x: float
    y: float
    z: float
    theta0: float
    lam: float
    n: int
    abnormal: bool = False
    flag: str = ""


def wavefront_trace(
    spec: ModelSpec,
    r: float,
    theta_grid: Sequence[float],
    lam_grid: Sequence[float] = (),
    mode: str = "slice_y0",
    n_max: int = 2,
    tol: float = 1e-12,
    workers: Optional[int] = None,
) -> list:
    """Points of the wave front of length ``r``.

    ``slice_y0``: for each ``theta0`` of the grid and each ``n <= n_max``,
    the endpoint of the length-``r`` geodesic whose ``n``-th section hit
    happens at time ``r``, plus the abnormal endpoints ``(+-r, 0, 0)``.
    ``cloud3d``: the endpoint ``exp(r)`` for every ``(theta0, lambda)`` pair.
    Failures are kept as flagged points with NaN coordinates.
    """
    if mode not in ("slice_y0", "cloud3d"):
        raise DomainError(f"mode must be 'slice_y0' or 'cloud3d', got {mode!r}")
    out = []
    if mode == "slice_y0":
        for sign in (1, -1):
            for n in range(1, n_max + 1):
                job = partial(_numeric_point, spec, r, n, tol, "theta0", sign)
                for th, (res, reason) in zip(theta_grid, ordered_map(job, list(theta_grid), workers)):
                    if res is None:
                        out.append(WavefrontPoint(math.nan, 0.0, math.nan, th, math.nan, n, flag=reason))
                        continue
                    theta0, lam, h = res
                    out.append(WavefrontPoint(h.x, h.y, h.z, theta0, lam, n))
        out.append(WavefrontPoint(r, 0.0, 0.0, 0.0, 0.0, 0, abnormal=True))
        out.append(WavefrontPoint(-r, 0.0, 0.0, math.pi, 0.0, 0, abnormal=True))
        return out
    pairs = [(th, lam) for th in theta_grid for lam in lam_grid]
    job = partial(_endpoint, spec, r, tol)
    for (th, lam), (q, reason) in zip(pairs, ordered_map(job, pairs, workers)):
        if q is None:
            out.append(WavefrontPoint(math.nan, math.nan, math.nan, th, lam, 0, flag=reason))
        else:
            out.append(WavefrontPoint(float(q[0]), float(q[1]), float(q[2]), th, lam, 0))
    return out


def _endpoint(spec, r, tol, pair):
    th, lam = pair
    try:
        tr = integrate(spec, cylinder_lift(spec, th, lam), r, tol=tol)
    except IntegrationError as exc:
        return None, str(exc)
    return tr.states[-1, : spec.dim], ""


# ---------------------------------------------------------------------------
# non-properness of the return mapping in the flat case


# smallest k' for which the double-precision flow still resolves the first return
FLOW_KPRIME_FLOOR = 1e-4


@dataclass
class NonPropernessResult:
    """Preimage points of the ball ``B((-r, 0), radius*r)`` under ``R_1`` in the flat case.

    ``kprimes[i]`` solves ``x_1 = -r`` at ``lams[i]``; ``slope``,
    ``intercept`` and ``r_squared`` describe the fit
    ``ln k' = intercept + slope * sqrt(lambda)``.  ``flow_deviation`` holds
    the distance between the closed-form and the integrated first return
    where the flow can resolve ``k'`` (NaN elsewhere).
    """

    lams: np.ndarray
    kprimes: np.ndarray
    points: list
    inside: np.ndarray
    slope: float
    intercept: float
    r_squared: float
    flow_deviation: np.ndarray


def _horizon_kprime(kprime: float, lam: float, n: int) -> float:
    K = complete_integrals(Modulus.from_kprime(kprime)).K
    return 20.0 * max(1, math.ceil(n / 2)) * 4.0 * K / math.sqrt(abs(lam))


def flat_return(kprime: float, lam: float, n: int = 1) -> tuple[float, float, float]:
    """Closed-form ``n``-th return ``(t_n, x_n, z_n)`` of the flat geodesic with ``theta0 = pi - 2 asin k'``, ``lambda > 0``.

    ``t_n = 2nK/sqrt(l)``, ``x_n = (4nE - 2nK)/sqrt(l)`` and
    ``z_n = 4n[(2k^2-1)E + k'^2 K]/(3 l^{3/2})``.
    """
    mod = Modulus.from_kprime(kprime)
    pair = complete_integrals(mod)
    rl = math.sqrt(lam)
    t = 2.0 * n * pair.K / rl
    x = (4.0 * pair.E - 2.0 * pair.K) * n / rl
    z = 4.0 * n * ((2.0 * mod.k ** 2 - 1.0) * pair.E + mod.kprime ** 2 * pair.K) / (3.0 * lam * rl)
    return t, x, z


def _flow_return(kprime: float, lam: float, n: int):
    flat = ModelSpec.martinet_flat()
    return return_map(flat, 0.0, lam, n, tol=1e-12, atol=1e-40, s0=lift_near_abnormal(flat, kprime, lam),
                      horizon=_horizon_kprime(kprime, lam, n))


def nonproperness_probe(r: float, lams: Sequence[float] = (1e2, 1e3, 1e4), radius: float = 0.05) -> NonPropernessResult:
    """Follow ``R_1^{-1}(-r, 0)`` of the flat model to large ``lambda``.

    For each ``lambda`` the value ``ln k'`` is root-found so that the first
    return lands at ``x = -r``.  The return is evaluated in closed form:
    along this branch ``k'`` decays like ``exp(-r sqrt(lambda)/2)``, far
    below what a double-precision integration resolves near the saddle.
    Where ``k' >= 1e-4`` the point is recomputed with the flow and the
    deviation recorded.
    """
    from scipy.stats import linregress

    lams = np.asarray(lams, dtype=float)
    if np.any(lams <= 0.0):
        raise DomainError("lambda values must be positive")
    if r <= 0.0:
        raise DomainError("radius must be positive")
    kps, pts, inside, devs = [], [], [], []
    for lam in lams:
        g = lambda lk: flat_return(math.exp(lk), lam)[1] + r
        # 2K - 4E = r sqrt(lam) with K ~ ln(4/k'), E ~ 1
        l0 = math.log(4.0) - 0.5 * (r * math.sqrt(lam) + 4.0)
        a, b = _bracket(g, min(l0, -1e-3), 0.5, -700.0, -1e-9)
        lk = a if a == b else brentq(g, a, b, xtol=1e-13, maxiter=200)
        kp = math.exp(lk)
        t, x, z = flat_return(kp, lam)
        dev = math.nan
        if kp >= FLOW_KPRIME_FLOOR:
            h = _flow_return(kp, lam, 1)
            dev = max(abs(h.x - x), abs(h.z - z), abs(h.t - t))
        theta0 = math.pi - 2.0 * math.asin(kp)
        kps.append(kp)
        devs.append(dev)
        pts.append(BranchPoint.from_raw(r, x, z, theta0, lam, 1, t=t, tag="C1"))
        inside.append(math.hypot(x + r, z) <= radius * r)
    kps = np.array(kps)
    if len(lams) >= 2:
        fit = linregress(np.sqrt(lams), np.log(kps))
        slope, intercept, r2 = float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2)
    else:
        slope = intercept = r2 = math.nan
    return NonPropernessResult(lams, kps, pts, np.array(inside), slope, intercept, r2, np.array(devs))


@dataclass(frozen=True)
class AbnormalBranchSample:
    n: int
    kprime: float
    lam: float
    x: float
    z: float
    distance: float
    inside: bool
    flow_deviation: float


def abnormal_branches_probe(r: float, n_max: int = 6, radius: float = 0.05, kprime: float = 1e-18) -> list:
    """Length-``r`` flat geodesics with ``n`` section hits ending near ``(-r, 0)``, ``n = 1..n_max``.

    With ``lambda = (2nK/r)^2`` the ``n``-th hit happens at time ``r`` at
    ``x = -r + 2rE/K``, within ``radius*r`` of ``(-r, 0)`` once ``K`` is
    large (``k'`` tiny).  When ``k' >= 1e-4`` the point is also recomputed
    with the flow and the deviation stored; otherwise it is NaN.
    """
    mod = Modulus.from_kprime(kprime)
    K = complete_integrals(mod).K
    out = []
    for n in range(1, n_max + 1):
        lam = (2.0 * n * K / r) ** 2
        x, z = flat_trace_point(r, n, mod)
        dev = math.nan
        if kprime >= FLOW_KPRIME_FLOOR:
            h = _flow_return(kprime, lam, n)
            dev = max(abs(h.x - x), abs(h.z - z), abs(h.t - r))
        d = math.hypot(x + r, z)
        out.append(AbnormalBranchSample(n, kprime, lam, x, z, d, d <= radius * r, dev))
    return out


__all__ = [
    "AbnormalBranchSample",
    "BranchCurve",
    "BranchPoint",
    "NonPropernessResult",
    "Sweep",
    "WavefrontPoint",
    "abnormal_branches_probe",
    "classify",
    "cut_locus_flat",
    "d1_branch",
    "flat_return",
    "flat_trace_point",
    "lift_near_abnormal",
    "m_double_prime",
    "nonproperness_probe",
    "return_map",
    "saddle_branch",
    "sphere_trace_flat",
    "sphere_trace_numeric",
    "wavefront_trace",
]
