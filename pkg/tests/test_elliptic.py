import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from srlab.elliptic import (
    Modulus,
    complete_integrals,
    complete_near_unit,
    e_minus_one_near_unit,
    jacobi_amplitude,
    jacobi_epsilon,
    jacobi_functions,
    jacobi_zeta,
)
from srlab.errors import DomainError

moduli = st.floats(min_value=0.0, max_value=0.999, allow_nan=False)
args = st.floats(min_value=-20.0, max_value=20.0, allow_nan=False)


def test_k_zero_gives_quarter_circle():
    pair = complete_integrals(0.0)
    assert pair.K == pytest.approx(math.pi / 2, rel=1e-15)
    assert pair.E == pytest.approx(math.pi / 2, rel=1e-15)


def test_k_one_raises():
    with pytest.raises(DomainError):
        complete_integrals(Modulus.from_k(1.0))


def test_modulus_rejects_out_of_range():
    with pytest.raises(DomainError):
        Modulus.from_k(1.5)
    with pytest.raises(DomainError):
        Modulus(0.6, 0.6)


@pytest.mark.parametrize("k", [0.1, 0.5, 0.9, 0.99, 0.999999])
def test_complete_against_mpmath(k):
    mpmath.mp.dps = 30
    m = mpmath.mpf(k) ** 2
    pair = complete_integrals(k)
    assert pair.K == pytest.approx(float(mpmath.ellipk(m)), rel=1e-13)
    assert pair.E == pytest.approx(float(mpmath.ellipe(m)), rel=1e-13)


@pytest.mark.parametrize("kp", [1e-3, 1e-5, 1e-8, 1e-12])
def test_near_unit_against_mpmath(kp):
    mpmath.mp.dps = 40
    m = 1 - mpmath.mpf(kp) ** 2
    pair = complete_near_unit(kp)
    assert pair.K == pytest.approx(float(mpmath.ellipk(m)), rel=1e-11)
    assert pair.E == pytest.approx(float(mpmath.ellipe(m)), rel=1e-11)
    assert e_minus_one_near_unit(kp) == pytest.approx(float(mpmath.ellipe(m) - 1), rel=1e-6)


def test_near_unit_switch_is_continuous():
    a = complete_integrals(Modulus.from_kprime(1.0000001e-6))
    b = complete_integrals(Modulus.from_kprime(0.9999999e-6))
    assert abs(a.K - b.K) < 1e-6 and abs(a.E - b.E) < 1e-11


@settings(max_examples=60, deadline=None)
@given(moduli)
def test_legendre_relation(k):
    if k < 1e-4 or k > 1 - 1e-4:
        return
    kp = math.sqrt(1 - k * k)
    a, b = complete_integrals(k), complete_integrals(kp)
    assert a.E * b.K + b.E * a.K - a.K * b.K == pytest.approx(math.pi / 2, rel=1e-12)


@settings(max_examples=80, deadline=None)
@given(args, moduli)
def test_jacobi_identities(u, k):
    sn, cn, dn = jacobi_functions(u, k)
    assert sn * sn + cn * cn == pytest.approx(1.0, abs=1e-14)
    assert dn * dn + k * k * sn * sn == pytest.approx(1.0, abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=-5, max_value=5), st.floats(min_value=0.01, max_value=0.99))
def test_jacobi_against_mpmath(u, k):
    m = k * k
    sn, cn, dn = jacobi_functions(u, k)
    assert sn == pytest.approx(float(mpmath.ellipfun("sn", u, m=m)), abs=1e-13)
    assert cn == pytest.approx(float(mpmath.ellipfun("cn", u, m=m)), abs=1e-13)
    assert dn == pytest.approx(float(mpmath.ellipfun("dn", u, m=m)), abs=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=-6, max_value=6), st.floats(min_value=0.01, max_value=0.99))
def test_epsilon_is_incomplete_e_of_amplitude(u, k):
    phi = jacobi_amplitude(u, k)
    assert jacobi_epsilon(u, k) == pytest.approx(float(mpmath.ellipe(phi, k * k)), abs=1e-12)


def test_periodicity_and_quasi_periodicity():
    k = 0.8
    K, E = complete_integrals(k).K, complete_integrals(k).E
    u = np.linspace(-3, 3, 13)
    sn0, cn0, dn0 = jacobi_functions(u, k)
    sn1, cn1, dn1 = jacobi_functions(u + 4 * K, k)
    assert np.max(np.abs(sn1 - sn0)) < 1e-13 and np.max(np.abs(cn1 - cn0)) < 1e-13
    assert np.max(np.abs(np.asarray(jacobi_zeta(u + 2 * K, k)) - jacobi_zeta(u, k))) < 1e-13
    assert np.max(np.abs(np.asarray(jacobi_epsilon(u + 2 * K, k)) - jacobi_epsilon(u, k) - 2 * E)) < 1e-12
    assert jacobi_amplitude(K, k) == pytest.approx(math.pi / 2, abs=1e-14)


def test_amplitude_is_increasing():
    u = np.linspace(-10, 10, 2001)
    assert np.all(np.diff(jacobi_amplitude(u, 0.95)) > 0)


def test_zeta_odd_and_zero_at_half_period():
    k = 0.6
    K = complete_integrals(k).K
    assert jacobi_zeta(K, k) == pytest.approx(0.0, abs=1e-14)
    assert jacobi_zeta(0.3, k) == pytest.approx(-jacobi_zeta(-0.3, k), abs=1e-15)
