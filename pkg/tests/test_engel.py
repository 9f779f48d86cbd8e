
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from srlab.engel import engel_integrals, engel_lift, integral_drift, pendulum_residual, reduction_check
from srlab.errors import DomainError
from srlab.flow import integrate
from srlab.models import GeodesicState, ModelSpec


def test_integrals_at_lift():
    ints = engel_integrals(engel_lift(0.0, 0.5, 2.0))
    assert ints.h == pytest.approx(1.0)
    assert ints.casimir_c == pytest.approx(-4.0 + 0.25)
    assert ints.p4 == 2.0


def test_wrong_dimension():
    with pytest.raises(DomainError):
        engel_integrals(GeodesicState(np.zeros(3), np.array([1.0, 0.0, 1.0])))


@settings(max_examples=10, deadline=None)
@given(st.floats(-3, 3), st.floats(-2, 2), st.floats(-5, 5))
def test_casimir_conserved(th, p3, p4):
    tr = integrate(ModelSpec.engel_flat(), engel_lift(th, p3, p4), 3.0, tol=1e-12)
    drift = integral_drift(tr.states)
    assert drift.casimir_c < 1e-9 and drift.h < 1e-9 and drift.p4 == 0.0


@pytest.mark.parametrize("th,lam", [(0.4, 2.0), (2.5, 7.0), (-1.2, 0.7), (0.0, 3.0)])
def test_reductions(th, lam):
    rep = reduction_check(th, lam, np.linspace(0, 5, 26))
    assert rep.max_dev_heisenberg < 1e-9
    assert rep.max_dev_martinet < 1e-9


def test_reduction_grid_limits():
    with pytest.raises(DomainError):
        reduction_check(0.4, 1.0, [0.0, 6.0])


def test_pendulum_equation():
    assert pendulum_residual(0.8, 0.3, 2.0) < 1e-7
