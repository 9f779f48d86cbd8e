import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from srlab.errors import DomainError
from srlab.exact import FlatGeodesicParams, flat_geodesic
from srlab.models import ModelSpec
from srlab.sphere import (
    Sweep,
    abnormal_branches_probe,
    classify,
    cut_locus_flat,
    d1_branch,
    flat_return,
    lift_near_abnormal,
    m_double_prime,
    nonproperness_probe,
    return_map,
    saddle_branch,
    sphere_trace_flat,
    sphere_trace_numeric,
    wavefront_trace,
)

FLAT = ModelSpec.martinet_flat()


def test_flat_trace_endpoints():
    c = sphere_trace_flat(1.0, 1, [1e-6, 0.5, 0.999999, 1.0 - 1e-15])
    assert c.points[0].x == pytest.approx(1.0, abs=1e-9)
    # x -> -r only logarithmically: X = E/K with K ~ ln(4/k')
    xs = [p.x for p in c.points]
    assert all(a > b for a, b in zip(xs, xs[1:]))
    assert c.points[-1].X == pytest.approx(1.0 / math.log(4.0 / math.sqrt(2e-15)), rel=0.05)
    assert all(p.z > 0 for p in c.points)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 0.95), st.integers(1, 3), st.floats(0.2, 3.0))
def test_flat_trace_point_is_reached_at_length_r(k, i, r):
    p = sphere_trace_flat(r, i, [k]).points[0]
    q = flat_geodesic(FlatGeodesicParams(p.theta0, p.lam), [r])[:, 0]
    assert q[1] == pytest.approx(0.0, abs=1e-12)
    assert q[0] == pytest.approx(p.x, abs=1e-12)
    assert q[2] == pytest.approx(p.z, abs=1e-12)


def test_cut_locus_symmetry():
    plus, minus = cut_locus_flat(1.0, [0.3, 0.7])
    for a, b in zip(plus.points, minus.points):
        assert b.x == -a.x and b.z == -a.z
        ((th, lam),) = a.alternates
        q = flat_geodesic(FlatGeodesicParams(th, lam), [1.0])[:, 0]
        assert q[0] == pytest.approx(a.x, abs=1e-12) and q[2] == pytest.approx(a.z, abs=1e-12)


def test_m_double_prime_regimes():
    assert m_double_prime(0.0, 1.0, 1.0) == pytest.approx((1 + math.cos(1.0)) / 2)
    assert m_double_prime(1.0, math.pi, 10.0) < 0
    spec = ModelSpec.martinet_graded0(1.0, 0.0, 0.0)
    assert classify(spec, 1.0, 10.0, 1, x=-0.2) == "C1"
    assert classify(spec, 1.0, 10.0, 1, x=0.2) == "C1bar"
    assert classify(spec, 1.0, 10.0, 2) == "C2"
    assert classify(spec, math.pi, 10.0, 1) == "D1"
    assert classify(spec, math.pi, 10.0, 2) == "D2"
    assert classify(ModelSpec.heisenberg(), 1.0, 1.0, 1) == "generic"


def test_return_map_matches_closed_form():
    h = return_map(FLAT, 1.5, 7.0, 2)
    t, x, z = flat_return(math.cos(0.75), 7.0, 2)
    assert h.t == pytest.approx(t, abs=1e-10)
    assert h.x == pytest.approx(x, abs=1e-10)
    assert h.z == pytest.approx(z, abs=1e-10)


def test_return_map_separatrix_is_none():
    spec = ModelSpec.martinet_graded0(1.0, 0.0, 0.0)
    lam = 4.0
    # 1 + cos(theta0) = alpha^2 / (2 lambda)
    th = math.acos(1.0 / 8.0 - 1.0)
    assert return_map(spec, th, lam, 1) is None
    with pytest.raises(DomainError):
        return_map(spec, 1.0, 0.0, 1)


def test_lift_near_abnormal_keeps_unit_speed():
    s = lift_near_abnormal(FLAT, 1e-12, 100.0, side=-1)
    assert s.P[0] ** 2 + s.P[1] ** 2 == pytest.approx(1.0, abs=1e-15)
    assert s.P[1] < 0


def test_numeric_trace_lambda_sweep_flat():
    curve = sphere_trace_numeric(FLAT, 1.0, 1, Sweep("lambda", [12.0, 20.0], 1))
    for p in curve.points:
        assert p.t == pytest.approx(1.0, abs=1e-9)
        ref = sphere_trace_flat(1.0, 1, [math.sin(p.theta0 / 2)]).points[0]
        assert p.x == pytest.approx(ref.x, abs=1e-8)


def test_numeric_trace_rejects_equatorial_lambda():
    curve = sphere_trace_numeric(FLAT, 1.0, 1, Sweep("lambda", [1e-4], 1))
    assert not curve.points and curve.skipped


def test_sweep_validation():
    with pytest.raises(DomainError):
        Sweep("k", [0.1])
    with pytest.raises(DomainError):
        Sweep("lambda", [1.0], 0)


def test_saddle_branch_tags_and_time():
    spec = ModelSpec.martinet_graded0(1.0, 0.0, 0.0)
    curve = saddle_branch(spec, 0.5, "C2", [400.0, 1000.0])
    assert [p.tag for p in curve.points] == ["C2", "C2"]
    assert all(abs(p.t - 0.5) < 1e-9 for p in curve.points)
    d2 = saddle_branch(spec, 0.5, "D2", [1000.0])
    assert d2.points[0].tag == "D2"
    # for small lambda the second return of length 0.5 does not exist
    short = saddle_branch(spec, 0.5, "C2", [100.0])
    assert not short.points and "branch absent" in short.skipped[0][1]


def test_d1_branch_small_sample():
    spec = ModelSpec.martinet_graded0(1.0, 0.5, 0.0)
    curve = d1_branch(spec, 0.5, [300.0, 600.0])
    assert [p.tag for p in curve.points] == ["D1", "D1"]
    # order-two contact: Z / X^2 is close to -2/(r alpha)^2 = -8
    for p in curve.points:
        assert -11.0 < p.Z / p.X ** 2 < -7.0


def test_wavefront_slice_contains_abnormal_endpoints():
    pts = wavefront_trace(FLAT, 1.0, [1.0, 2.0], n_max=1)
    ab = [p for p in pts if p.abnormal]
    assert sorted(p.x for p in ab) == [-1.0, 1.0]
    for p in pts:
        if not p.abnormal:
            assert abs(p.y) < 1e-10


def test_wavefront_cloud_is_on_unit_length_geodesics():
    pts = wavefront_trace(FLAT, 1.0, [0.5], [3.0], mode="cloud3d")
    q = flat_geodesic(FlatGeodesicParams(0.5, 3.0), [1.0])[:, 0]
    assert np.allclose([pts[0].x, pts[0].y, pts[0].z], q, atol=1e-10)


def test_nonproperness_probe():
    res = nonproperness_probe(1.0)
    assert np.all(res.inside)
    assert res.r_squared > 0.99
    assert res.slope == pytest.approx(-0.5, abs=0.05)
    # the flow confirms the closed form where it can resolve k'
    assert np.nanmax(res.flow_deviation) < 1e-6


def test_abnormal_branches_probe():
    samples = abnormal_branches_probe(1.0, n_max=4)
    assert [s.n for s in samples] == [1, 2, 3, 4]
    assert all(s.inside for s in samples)
    checked = abnormal_branches_probe(1.0, n_max=2, kprime=1e-3, radius=0.5)
    assert all(s.flow_deviation < 1e-6 for s in checked)
