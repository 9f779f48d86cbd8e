"""Complete elliptic integrals and Jacobi elliptic functions.

Everything here is built on the arithmetic-geometric mean (AGM) of Gauss.
The modulus is carried as the redundant pair ``(k, k')`` so that neither
degenerate end (``k -> 0`` or ``k' -> 0``) loses precision through a
subtraction ``1 - k**2``.

Conventions: ``k`` is the modulus (not the parameter ``m = k**2``);
``K(k) = int_0^{pi/2} (1 - k^2 sin^2 t)^{-1/2} dt`` and
``E(k) = int_0^{pi/2} (1 - k^2 sin^2 t)^{1/2} dt``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from srlab.errors import DomainError

ArrayLike = Union[float, np.ndarray]

_AGM_MAX_LEVELS = 40
# below this value of k' the AGM path is replaced by the logarithmic expansion
NEAR_UNIT_SWITCH = 1e-6
# upper end of the validity range accepted by complete_near_unit
NEAR_UNIT_MAX = 1e-3


@dataclass(frozen=True)
class Modulus:
    """Elliptic modulus stored together with its complement.

    Use the constructors :meth:`from_k`, :meth:`from_kprime` or
    :meth:`from_parameter`; they compute the larger member of the pair from
    the smaller one as ``sqrt((1 - s)(1 + s))``.
    """

    k: float
    kprime: float

    def __post_init__(self):
        k, kp = float(self.k), float(self.kprime)
        if not (0.0 <= k <= 1.0 and 0.0 <= kp <= 1.0):
            raise DomainError(f"modulus pair out of [0, 1]: k={k!r}, k'={kp!r}")
        if min(k, kp) >= 1e-8 and abs(k * k + kp * kp - 1.0) > 1e-14:
            raise DomainError(f"inconsistent modulus pair: k^2 + k'^2 - 1 = {k * k + kp * kp - 1.0:.3e}")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "kprime", kp)

    @classmethod
    def from_k(cls, k: float) -> "Modulus":
        k = float(k)
        if not 0.0 <= k <= 1.0:
            raise DomainError(f"k must lie in [0, 1], got {k!r}")
        return cls(k, math.sqrt((1.0 - k) * (1.0 + k)))

    @classmethod
    def from_kprime(cls, kprime: float) -> "Modulus":
        kp = float(kprime)
        if not 0.0 <= kp <= 1.0:
            raise DomainError(f"k' must lie in [0, 1], got {kp!r}")
        return cls(math.sqrt((1.0 - kp) * (1.0 + kp)), kp)

    @classmethod
    def from_parameter(cls, m: float) -> "Modulus":
        """Build from the parameter ``m = k**2``."""
        if not 0.0 <= m <= 1.0:
            raise DomainError(f"parameter m must lie in [0, 1], got {m!r}")
        return cls(math.sqrt(m), math.sqrt(1.0 - m))

    @property
    def m(self) -> float:
        return self.k * self.k


@dataclass(frozen=True)
class CompletePair:
    """Complete integrals of the first (``K``) and second (``E``) kind."""

    K: float
    E: float


@dataclass(frozen=True)
class _AGMTable:
    a: tuple
    c: tuple
    K: float
    E: float


def _as_modulus(m) -> Modulus:
    if isinstance(m, Modulus):
        return m
    return Modulus.from_k(float(m))


def _agm_table(mod: Modulus) -> _AGMTable:
    """Descending AGM sequence a_n, c_n started from (1, k', k)."""
    if mod.kprime == 0.0:
        raise DomainError("k = 1: the complete integral K diverges")
    a, b, c = 1.0, mod.kprime, mod.k
    a_seq, c_seq = [a], [c]
    weight = 0.5
    s = weight * c * c
    for _ in range(_AGM_MAX_LEVELS):
        if abs(c) <= 1e-17 * a:
            break
        a_next = 0.5 * (a + b)
        b = math.sqrt(a * b)
        # c_{n+1} = (a_n - b_n)/2 written without the cancelling difference
        c = c * c / (4.0 * a_next)
        a = a_next
        weight *= 2.0
        s += weight * c * c
        a_seq.append(a)
        c_seq.append(c)
    K = math.pi / (2.0 * a)
    return _AGMTable(tuple(a_seq), tuple(c_seq), K, K * (1.0 - s))


def near_unit_coefficients(kprime: float) -> tuple[float, float, float, float]:
    """Coefficients ``(u1, u2, u3, u4)`` of the expansions at ``k' = 0``.

    ``K = u3 ln(4/k') + u4`` and ``E = u1 ln(4/k') + u2``, with each ``u_i``
    a power series in ``k'^2`` truncated after the ``k'^4`` term.
    """
    q = kprime * kprime
    u1 = q / 2.0 + 3.0 * q * q / 16.0
    u2 = 1.0 - q / 4.0 - 13.0 * q * q / 64.0
    u3 = 1.0 + q / 4.0 + 9.0 * q * q / 64.0
    u4 = -q / 4.0 - 21.0 * q * q / 128.0
    return u1, u2, u3, u4


def e_minus_one_near_unit(kprime: float) -> float:
    """``E(k) - 1`` from the logarithmic expansion, free of the cancellation in ``E - 1``."""
    q = kprime * kprime
    L = math.log(4.0 / kprime)
    return L * (q / 2.0 + 3.0 * q * q / 16.0) - q / 4.0 - 13.0 * q * q / 64.0


def complete_near_unit(kprime: float) -> CompletePair:
    """``K`` and ``E`` for ``0 < k' <= 1e-3`` from their logarithmic expansions."""
    kprime = float(kprime)
    if not 0.0 < kprime <= NEAR_UNIT_MAX:
        raise DomainError(f"complete_near_unit needs 0 < k' <= {NEAR_UNIT_MAX}, got {kprime!r}")
    u1, u2, u3, u4 = near_unit_coefficients(kprime)
    L = math.log(4.0 / kprime)
    return CompletePair(K=u3 * L + u4, E=u1 * L + u2)


def complete_integrals(m) -> CompletePair:
    """Complete elliptic integrals ``(K, E)`` for a modulus.

    :arg m: a :class:`Modulus` or a float modulus ``k`` in ``[0, 1)``
    :raises DomainError: for ``k = 1`` where ``K`` diverges
    """
    mod = _as_modulus(m)
    if mod.kprime == 0.0:
        raise DomainError("k = 1: the complete integral K diverges")
    if mod.kprime < NEAR_UNIT_SWITCH:
        return complete_near_unit(mod.kprime)
    table = _agm_table(mod)
    return CompletePair(K=table.K, E=table.E)


def _phases(u: np.ndarray, table: _AGMTable) -> list:
    """Phases phi_0..phi_N of the descending Landen recursion for argument u."""
    a, c = table.a, table.c
    N = len(a) - 1
    phi = (2.0 ** N) * a[N] * u
    phases = [phi]
    for n in range(N, 0, -1):
        phi = 0.5 * (phi + np.arcsin(np.clip(c[n] / a[n] * np.sin(phi), -1.0, 1.0)))
        phases.append(phi)
    phases.reverse()
    return phases


def _reduce(u, period: float):
    u = np.asarray(u, dtype=float)
    j = np.round(u / period)
    return u - j * period, j


def jacobi_amplitude(u: ArrayLike, m) -> ArrayLike:
    """Jacobi amplitude ``am(u, k)``, continuous and increasing in ``u``."""
    mod = _as_modulus(m)
    table = _agm_table(mod)
    ur, j = _reduce(u, 4.0 * table.K)
    phi = _phases(ur, table)[0] + 2.0 * math.pi * j
    return phi if np.ndim(phi) else float(phi)


def jacobi_functions(u: ArrayLike, m) -> tuple:
    """Jacobi elliptic functions ``(sn, cn, dn)`` at ``u`` for modulus ``k < 1``.

    The argument is reduced modulo the real period ``4K`` before the AGM
    descent, so the result is periodic to rounding.
    """
    mod = _as_modulus(m)
    table = _agm_table(mod)
    ur, _ = _reduce(u, 4.0 * table.K)
    phi0 = _phases(ur, table)[0]
    sn = np.sin(phi0)
    cn = np.cos(phi0)
    dn = np.sqrt(mod.kprime ** 2 + (mod.k * cn) ** 2)
    if np.ndim(sn) == 0:
        return float(sn), float(cn), float(dn)
    return sn, cn, dn


def jacobi_zeta(u: ArrayLike, m) -> ArrayLike:
    """Jacobi zeta function ``Z(u) = E(am u) - (E/K) u``; periodic with period ``2K``."""
    mod = _as_modulus(m)
    table = _agm_table(mod)
    ur, _ = _reduce(u, 2.0 * table.K)
    phases = _phases(ur, table)
    z = np.zeros_like(np.asarray(ur, dtype=float))
    for n in range(1, len(table.a)):
        z = z + table.c[n] * np.sin(phases[n])
    return z if np.ndim(z) else float(z)


def jacobi_epsilon(u: ArrayLike, m) -> ArrayLike:
    """Jacobi epsilon ``E(u) = int_0^u dn^2``, the incomplete second-kind integral at ``am u``.

    Quasi-periodic: ``E(u + 2K) = E(u) + 2E``.
    """
    mod = _as_modulus(m)
    table = _agm_table(mod)
    pair = complete_integrals(mod)
    ur, j = _reduce(u, 2.0 * table.K)
    val = pair.E / pair.K * ur + np.asarray(jacobi_zeta(ur, mod)) + 2.0 * pair.E * j
    return val if np.ndim(val) else float(val)
