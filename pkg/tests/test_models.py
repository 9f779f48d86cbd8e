import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from srlab.errors import DegenerateError, DomainError, SingularMetricError
from srlab.models import (
    GeodesicState,
    ModelSpec,
    abnormal_flow,
    canonical_hamiltonian,
    cylinder_coords,
    cylinder_lift,
    frame_matrix,
    rhs_function,
    tangential_abnormal_field,
    tangential_surface_y,
    to_adjoint,
    to_covector,
)

ALL = [
    ModelSpec.martinet_flat(),
    ModelSpec.martinet_graded0(1.0, 0.5, -0.2),
    ModelSpec.contact_graded1(0.3, -0.2, 0.1),
    ModelSpec.heisenberg(),
    ModelSpec.tangential_elliptic(0.5, 0.2),
    ModelSpec.tangential_hyperbolic(0.5, 0.2),
    ModelSpec.engel_flat(),
    ModelSpec.liu_sussmann(0.4),
]


@pytest.mark.parametrize("spec", ALL, ids=lambda s: s.family.value)
def test_lift_has_unit_speed(spec):
    s = cylinder_lift(spec, 0.8, 3.0)
    assert s.energy == pytest.approx(0.5)
    assert cylinder_coords(spec, s).lam == 3.0
    assert cylinder_coords(spec, s).theta == pytest.approx(0.8)


@pytest.mark.parametrize("spec", ALL, ids=lambda s: s.family.value)
def test_covector_roundtrip(spec):
    rng = np.random.default_rng(0)
    q = 0.1 * rng.standard_normal(spec.dim)
    p = rng.standard_normal(spec.dim)
    P = to_adjoint(spec, q, p)
    assert np.allclose(to_covector(spec, q, P), p, atol=1e-14)
    assert canonical_hamiltonian(spec, q, p) == pytest.approx(0.5 * (P[0] ** 2 + P[1] ** 2))


@pytest.mark.parametrize("spec", ALL, ids=lambda s: s.family.value)
def test_velocity_is_frame_combination(spec):
    rng = np.random.default_rng(1)
    q = 0.1 * rng.standard_normal(spec.dim)
    P = rng.standard_normal(spec.dim)
    v = rhs_function(spec)(0.0, np.concatenate([q, P]))
    F = frame_matrix(spec, q)
    assert np.allclose(v[: spec.dim], F[:, 0] * P[0] + F[:, 1] * P[1], atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.floats(-0.3, 0.3), st.floats(-0.3, 0.3), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_martinet_rhs_matches_canonical_equations(x, y, p1, p2, p3):
    """The (q, P) field equals Hamilton's equations of the canonical Hamiltonian."""
    spec = ModelSpec.martinet_graded0(1.0, 0.5, -0.3)
    q = np.array([x, y, 0.2])
    p = to_covector(spec, q, np.array([p1, p2, p3]))
    h = 1e-6
    grad_q = np.array([(canonical_hamiltonian(spec, q + h * e, p) - canonical_hamiltonian(spec, q - h * e, p)) / (2 * h) for e in np.eye(3)])
    grad_p = np.array([(canonical_hamiltonian(spec, q, p + h * e) - canonical_hamiltonian(spec, q, p - h * e)) / (2 * h) for e in np.eye(3)])
    v = rhs_function(spec)(0.0, np.concatenate([q, [p1, p2, p3]]))
    assert np.allclose(v[:3], grad_p, atol=1e-7)
    # P3 is the momentum of the cyclic z variable
    assert grad_q[2] == pytest.approx(0.0, abs=1e-8)
    assert v[5] == 0.0


def test_singular_metric_is_reported():
    spec = ModelSpec.martinet_graded0(1.0, 0.0, 0.0)
    with pytest.raises(SingularMetricError):
        rhs_function(spec)(0.0, np.array([0.0, -1.5, 0.0, 1.0, 0.0, 1.0]))


def test_engel_lift_needs_its_own_p3():
    with pytest.raises(DomainError):
        cylinder_lift(ModelSpec.martinet_flat(), 0.1, 1.0, p3=0.2)
    s = cylinder_lift(ModelSpec.engel_flat(), 0.1, 1.0, p3=0.2)
    assert s.P[2] == 0.2 and s.P[3] == 1.0


def test_state_vector_roundtrip():
    s = GeodesicState(np.array([1.0, 2.0, 3.0]), np.array([0.6, 0.8, 5.0]))
    t = GeodesicState.from_vector(s.vector)
    assert np.array_equal(t.q, s.q) and np.array_equal(t.P, s.P)
    assert s.theta == pytest.approx(math.atan2(0.8, 0.6))


def test_abnormal_line_for_martinet():
    path = abnormal_flow(ModelSpec.martinet_graded0(1.0, 0.2, 0.0), 2.0, sign=-1)
    assert np.allclose(path.points[:, 1:], 0.0)
    assert path.end[0] == pytest.approx(-2.0)


def test_contact_has_no_abnormal():
    with pytest.raises(DegenerateError):
        abnormal_flow(ModelSpec.heisenberg(), 1.0)


@pytest.mark.parametrize("ctor", [ModelSpec.tangential_elliptic, ModelSpec.tangential_hyperbolic])
def test_tangential_abnormal_stays_on_surface(ctor):
    spec = ctor(0.5, 0.3)
    path = abnormal_flow(spec, 0.5, seed=(0.2, 0.3))
    assert not path.equilibrium
    for x, y, z in path.points:
        assert y == pytest.approx(tangential_surface_y(spec, x, z), abs=1e-8)


def test_tangential_origin_is_equilibrium():
    spec = ModelSpec.tangential_elliptic(0.5, 0.0)
    assert tangential_abnormal_field(spec, 0.0, 0.0) == (0.0, 0.0, 0.0) or np.allclose(tangential_abnormal_field(spec, 0.0, 0.0), 0.0)
    assert abnormal_flow(spec, 1.0, seed=(0.0, 0.0)).equilibrium
