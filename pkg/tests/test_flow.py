import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from srlab.errors import DomainError
from srlab.exact import FlatGeodesicParams, flat_geodesic, flat_hit_times, heisenberg_geodesic
from srlab.flow import (
    coordinate_extrema,
    integrate,
    integrate_with_section,
    pendulum_energy,
    pendulum_point,
    pendulum_project,
    section_slope,
)
from srlab.models import ModelSpec, cylinder_lift

FLAT = ModelSpec.martinet_flat()


def test_tolerance_range_is_enforced():
    s0 = cylinder_lift(FLAT, 1.0, 1.0)
    with pytest.raises(DomainError):
        integrate(FLAT, s0, 1.0, tol=1e-15)
    with pytest.raises(DomainError):
        integrate(FLAT, s0, 1.0, tol=1e-3)


def test_heisenberg_flow_matches_circle():
    H = ModelSpec.heisenberg()
    t = np.linspace(0, 4, 41)
    tr = integrate(H, cylinder_lift(H, 0.4, 1.7), 4.0, tol=1e-12)
    ref = heisenberg_geodesic(0.4, 1.7, t)
    V = tr(t)
    assert np.max(np.abs(V[0] - ref.x)) < 1e-10
    assert np.max(np.abs(V[1] - ref.y)) < 1e-10
    assert np.max(np.abs(V[2] - ref.z)) < 1e-10


@settings(max_examples=15, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(0.5, 40.0), st.sampled_from([-1.0, 1.0]))
def test_flat_flow_matches_closed_form(th, lam, sign):
    t = np.linspace(0, 2, 21)
    tr = integrate(FLAT, cylinder_lift(FLAT, sign * th, lam), 2.0, tol=1e-12)
    ref = flat_geodesic(FlatGeodesicParams(sign * th, lam), t)
    assert np.max(np.abs(tr(t)[:3] - ref)) < 1e-8


def test_energy_is_conserved_in_graded_model():
    spec = ModelSpec.martinet_graded0(1.0, 0.4, -0.3)
    tr = integrate(spec, cylinder_lift(spec, 2.0, 5.0), 6.0, tol=1e-12)
    assert tr.energy_drift < 1e-10


def test_backward_integration_retraces():
    spec = ModelSpec.martinet_graded0(0.7, 0.2, 0.1)
    fwd = integrate(spec, cylinder_lift(spec, 1.2, 3.0), 2.0, tol=1e-12)
    back = integrate(spec, fwd.state(2.0), -2.0, tol=1e-12)
    assert np.max(np.abs(back.states[-1] - fwd.states[0])) < 1e-9


def test_section_hits_flat():
    p = FlatGeodesicParams(1.3, 6.0)
    _, hits = integrate_with_section(FLAT, cylinder_lift(FLAT, 1.3, 6.0), 10.0, max_hits=3)
    assert [h.n for h in hits] == [1, 2, 3]
    assert np.allclose([h.t for h in hits], flat_hit_times(p, 3), atol=1e-10)
    assert all(abs(h.y) < 1e-12 for h in hits)
    assert hits[0].sigma == 1


def test_section_restricted_for_non_tangential():
    with pytest.raises(DomainError):
        integrate_with_section(FLAT, cylinder_lift(FLAT, 1.0, 1.0), 1.0, section="x")


def test_extrema_of_y_on_flat_geodesic():
    tr = integrate(FLAT, cylinder_lift(FLAT, 1.0, 4.0), 6.0, tol=1e-12)
    ext = coordinate_extrema(tr, 1, "max")
    # P1 = cos(theta) = 1 - 2 k^2 sn^2 ... y' = P2 vanishes at the turning points
    for t, _ in ext:
        assert abs(tr(t)[4]) < 1e-9


def test_pendulum_projection_conservative_case():
    spec = ModelSpec.martinet_graded0(0.8, 0.0, 0.3)
    tr = integrate(spec, cylinder_lift(spec, 1.1, 3.0), 8.0, tol=1e-12)
    pp = pendulum_project(spec, tr, np.linspace(0, 8, 200))
    assert np.max(np.abs(pp.energy - pp.energy[0])) < 1e-9
    assert np.all(np.diff(pp.s) > 0)
    th, rate = pendulum_point(spec, tr.state(0.0))
    assert rate == pytest.approx(section_slope(spec, th, 3.0))


def test_pendulum_energy_needs_beta_zero():
    with pytest.raises(DomainError):
        pendulum_energy(ModelSpec.martinet_graded0(1.0, 0.1, 0.0), 0.0, 0.0, 1.0)


def test_flat_pendulum_is_simple():
    # alpha = 0: dtheta/ds^2/2 - cos(theta) is constant
    tr = integrate(FLAT, cylinder_lift(FLAT, 2.0, 2.0), 5.0, tol=1e-12)
    pp = pendulum_project(FLAT, tr, np.linspace(0, 5, 50))
    assert np.max(np.abs(0.5 * pp.dtheta_ds ** 2 - np.cos(pp.theta) + math.cos(2.0))) < 1e-9
