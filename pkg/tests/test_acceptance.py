"""Acceptance criteria, one test per criterion.

Each test records a single pass/fail line (printed in the terminal summary)
and then asserts at the stated tolerance.  Criteria 5 and 6 are evaluated
literally; see the README for why they do not pass.
"""

import math
import time

import mpmath
import numpy as np

from srlab.asymptotics import flat_term_ratio, linear_slope, normalized_gap, fit_contact
from srlab.elliptic import Modulus, complete_integrals
from srlab.engel import reduction_check
from srlab.exact import FlatGeodesicParams, flat_geodesic, flat_hit_times
from srlab.flow import integrate, integrate_with_section, pendulum_project
from srlab.models import ModelSpec, cylinder_lift
from srlab.sphere import Sweep, d1_branch, nonproperness_probe, saddle_branch, sphere_trace_flat, sphere_trace_numeric
from srlab.variational import conjugate_times, fd_conjugate_times

FLAT = ModelSpec.martinet_flat()


def _oracle_KE(k: float) -> tuple:
    mpmath.mp.dps = 30
    k2 = mpmath.mpf(k) ** 2
    K = mpmath.quad(lambda p: 1 / mpmath.sqrt(1 - k2 * mpmath.sin(p) ** 2), [0, mpmath.pi / 2])
    E = mpmath.quad(lambda p: mpmath.sqrt(1 - k2 * mpmath.sin(p) ** 2), [0, mpmath.pi / 2])
    return float(K), float(E)


def test_c01_elliptic_oracle(acceptance):
    ks = np.linspace(0.0, 0.9999, 200)
    t0 = time.perf_counter()
    ours = [complete_integrals(Modulus.from_k(k)) for k in ks]
    elapsed = time.perf_counter() - t0
    worst = 0.0
    for k, pair in zip(ks, ours):
        K, E = _oracle_KE(k)
        worst = max(worst, abs(pair.K - K) / K, abs(pair.E - E) / E)
    ok = worst <= 1e-11 and elapsed < 1.0
    acceptance(1, "elliptic oracle equivalence", ok, f"max rel err {worst:.2e} (<= 1e-11), runtime {elapsed:.3f} s (< 1 s)")
    assert ok


def test_c02_closed_form_vs_flow(acceptance):
    rng = np.random.default_rng(2)
    t = np.linspace(0.0, 3.0, 301)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        th = rng.uniform(-math.pi, math.pi)
        lam = rng.uniform(0.5, 50.0)
        tr = integrate(FLAT, cylinder_lift(FLAT, th, lam), 3.0, tol=1e-12)
        ref = flat_geodesic(FlatGeodesicParams(th, lam), t)
        worst = max(worst, float(np.max(np.abs(tr(t)[:3] - ref))))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-7 and elapsed < 10.0
    acceptance(2, "closed form vs flow", ok, f"sup err {worst:.2e} (<= 1e-7), runtime {elapsed:.2f} s (< 10 s)")
    assert ok


def test_c03_hit_times(acceptance):
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(10):
        th = rng.choice([-1.0, 1.0]) * rng.uniform(0.2, 3.0)
        lam = rng.uniform(0.5, 50.0)
        p = FlatGeodesicParams(th, lam)
        expected = flat_hit_times(p, 4)
        _, hits = integrate_with_section(FLAT, cylinder_lift(FLAT, th, lam), 1.05 * expected[-1], max_hits=4, tol=1e-12)
        assert len(hits) == 4
        worst = max(worst, max(abs(h.t - e) for h, e in zip(hits, expected)))
    ok = worst <= 1e-7
    acceptance(3, "hit times 2iK/sqrt(lambda)", ok, f"max |t_i - 2iK/sqrt(lambda)| = {worst:.2e} (<= 1e-7)")
    assert ok


def test_c04_sphere_trace_formulas(acceptance):
    r = 1.0
    worst = 0.0
    for i in (1, 2):
        ks = [0.2, 0.5, 0.8]
        curve = sphere_trace_numeric(FLAT, r, i, Sweep("theta0", [2.0 * math.asin(k) for k in ks], 1))
        assert len(curve.points) == 3, curve.skipped
        for k, p in zip(ks, curve.points):
            pair = complete_integrals(Modulus.from_k(k))
            K, E, kp = pair.K, pair.E, math.sqrt(1 - k * k)
            x = -r + 2 * r * E / K
            z = r ** 3 / (6 * i * i * K ** 3) * ((2 * k * k - 1) * E + kp * kp * K)
            worst = max(worst, abs(p.x - x), abs(p.z - z))
    ok = worst <= 1e-6
    acceptance(4, "numeric sphere trace vs closed form", ok, f"max deviation {worst:.2e} (<= 1e-6)")
    assert ok


def test_c05_c1bar_slope(acceptance):
    r = 1.0
    curve = sphere_trace_flat(r, 1, np.geomspace(1e-3, 5e-2, 40))
    slope = linear_slope(curve.points, r)
    target = -2.0 * r * r / (3.0 * math.pi ** 2)
    rel = abs(slope / target - 1.0)
    ok = rel <= 0.01
    acceptance(
        5, "C1bar slope -2r^2/(3 pi^2)", ok,
        f"slope {slope:.6g} vs target {target:.6g}, rel err {rel:.3f} (<= 0.01); -r^2/pi^2 = {-r * r / math.pi ** 2:.6g}",
    )
    assert ok


def test_c06_flat_term(acceptance):
    t0 = time.perf_counter()
    pts = flat_term_ratio(1.0, np.geomspace(2e-6, 1e-3, 60))
    elapsed = time.perf_counter() - t0
    window = [p for p in pts if 0.07 <= p.X <= 0.13 and not p.flagged]
    good = [p for p in window if abs(p.ratio / -4.0 - 1.0) <= 0.1]
    ok = len(good) >= 5 and elapsed < 1.0
    ratios = ", ".join(f"{p.ratio:.3g}" for p in window[:: max(1, len(window) // 4)])
    acceptance(
        6, "flat-term ratio -> -4", ok,
        f"{len(good)} of {len(window)} unflagged points in X in [0.07, 0.13] within 10% of -4 (need 5); sample ratios {ratios}",
    )
    assert ok


def test_c07_d1_contact(acceptance):
    spec = ModelSpec.martinet_graded0(1.0, 0.5, 0.0)
    r = 0.5
    t0 = time.perf_counter()
    curve = d1_branch(spec, r, np.geomspace(1e3, 3e4, 6))
    elapsed = time.perf_counter() - t0
    fit = fit_contact(curve.points, 2)
    target = -2.0 / (r * r)
    rel = abs(fit.coefficient / target - 1.0)
    ok = rel <= 0.15 and elapsed < 60.0 and all(p.tag == "D1" for p in curve.points)
    acceptance(7, "D1 order-two contact", ok, f"coefficient {fit.coefficient:.4g} vs {target:.4g}, rel {rel:.3f} (<= 0.15), runtime {elapsed:.1f} s (< 60 s)")
    assert ok


def test_c08_branch_ordering(acceptance):
    r = 0.5
    lams = [300.0, 1000.0, 3000.0]
    signs, details = [], []
    for gamma in (0.0, -2.0):
        spec = ModelSpec.martinet_graded0(1.0, 0.0, gamma)
        curve = saddle_branch(spec, r, "C1", lams, side=-1)
        assert len(curve.points) == len(lams), curve.skipped
        gap = normalized_gap(curve.points, "D2", r, 1.0, gamma)
        predicted = math.copysign(1.0, math.pi * r * (1.0 + gamma) / 16.0)
        signs.append(bool(np.all(np.sign(gap) == predicted)))
        details.append(f"gamma={gamma:g}: gaps {', '.join(f'{g:+.3f}' for g in gap)} (predicted sign {predicted:+.0f})")
    ok = all(signs)
    acceptance(8, "C1 above/below D2 law", ok, "; ".join(details))
    assert ok


def _first_integral_drift(beta: float):
    spec = ModelSpec.martinet_graded0(0.5, beta, 0.0)
    th, lam = 1.0, 4.0
    ref = ModelSpec.martinet_graded0(0.5, 0.0, 0.0)
    tr0, hits = integrate_with_section(ref, cylinder_lift(ref, th, lam), 20.0, max_hits=3, tol=1e-12)
    period = hits[2].t - hits[0].t
    tr = integrate(spec, cylinder_lift(spec, th, lam), 5.0 * period, tol=1e-12)
    t = np.linspace(0.0, 5.0 * period, 5001)
    pp = pendulum_project(spec, tr, t)
    first = np.max(pp.theta[t <= period])
    last = np.max(pp.theta[t >= 4.0 * period])
    return tr, pp, abs(last - first)


def test_c09_conservation(acceptance):
    models = [
        ModelSpec.martinet_flat(),
        ModelSpec.martinet_graded0(1.0, 0.5, -0.3),
        ModelSpec.heisenberg(),
        ModelSpec.contact_graded1(0.2, -0.1, 0.3),
        ModelSpec.tangential_elliptic(0.5, 0.1),
        ModelSpec.tangential_hyperbolic(0.5, 0.1),
        ModelSpec.engel_flat(),
        ModelSpec.liu_sussmann(0.5),
    ]
    drift = 0.0
    for spec in models:
        s0 = cylinder_lift(spec, 0.9, 2.0)
        tr = integrate(spec, s0, 4.0, tol=1e-12)
        drift = max(drift, tr.energy_drift)
    _, pp0, _ = _first_integral_drift(0.0)
    fi = float(np.max(np.abs(pp0.energy - pp0.energy[0])))
    _, _, amp = _first_integral_drift(0.3)
    ok = drift <= 1e-8 and fi <= 1e-8 and amp > 1e-3
    acceptance(9, "conservation suite", ok, f"energy drift {drift:.1e} (<= 1e-8), first integral drift {fi:.1e} (<= 1e-8), beta=0.3 amplitude drift {amp:.3g} (> 1e-3)")
    assert ok


def test_c10_engel_reductions(acceptance):
    rng = np.random.default_rng(10)
    t = np.linspace(0.0, 5.0, 51)
    dev = cas = 0.0
    for _ in range(10):
        rep = reduction_check(rng.uniform(-math.pi, math.pi), rng.uniform(0.5, 10.0), t)
        dev = max(dev, rep.max_dev_heisenberg, rep.max_dev_martinet)
        cas = max(cas, rep.drift_heisenberg.casimir_c, rep.drift_martinet.casimir_c)
    ok = dev <= 1e-8 and cas <= 1e-8
    acceptance(10, "Engel reductions", ok, f"max deviation {dev:.1e}, Casimir drift {cas:.1e} (both <= 1e-8)")
    assert ok


def test_c11_conjugate_oracle(acceptance):
    cases = [(ModelSpec.heisenberg(), 0.7, lam, 1.3 * 2 * math.pi / lam) for lam in (1.0, 2.0, 4.0)]
    cases.append((FLAT, math.pi / 2, 9.0, 3.0))
    worst, counts_ok, firsts = 0.0, True, []
    for spec, th, lam, t_max in cases:
        jac = conjugate_times(spec, th, lam, t_max).times
        fd = fd_conjugate_times(spec, th, lam, t_max)
        counts_ok &= len(jac) == len(fd) and len(jac) > 0
        for a, b in zip(jac, fd):
            worst = max(worst, abs(a - b))
        firsts.append(jac[0] if jac else math.nan)
    ok = counts_ok and worst <= 1e-3
    acceptance(11, "conjugate times vs exponential-map oracle", ok,
               f"max |t_J - t_FD| {worst:.1e} (<= 1e-3), first times {', '.join(f'{t:.6f}' for t in firsts)}")
    assert ok


def test_c12_nonproperness(acceptance):
    res = nonproperness_probe(1.0)
    ok = bool(np.all(res.inside)) and res.r_squared > 0.99
    acceptance(12, "non-properness probe", ok,
               f"k' = {', '.join(f'{k:.2e}' for k in res.kprimes)} all in ball: {bool(np.all(res.inside))}, R^2 = {res.r_squared:.12f} (> 0.99)")
    assert ok
