"""Closed-form analytics for the N-site ring (periodic boundary conditions).

Plane waves ``exp(i q n)`` diagonalize the ring Hamiltonian for every value of
the field, so static and time-dependent propagators share one Fourier basis
and only the accumulated phases ``int_0^t E_q(t') dt'`` differ.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .gauge import Constant, GaugeField, cosh_average, is_pseudo_hermitian_condition, sinh_average
from .numerics import DEFAULT_QUAD_TOL, DomainError


class DegenerateEllipseError(DomainError):
    """The spectral ellipse collapses onto the real axis when ``h0 = 0``."""


class ConditionNotMetError(ValueError):
    """The field does not have a vanishing period average of ``sinh h``."""


@dataclass(frozen=True)
class RingSpec:
    N: int
    kappa: float = 1.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 3:
            raise DomainError(f"ring needs N >= 3 sites, got {self.N}")
        if not self.kappa > 0:
            raise DomainError(f"kappa must be positive, got {self.kappa}")

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.N) / self.N


@dataclass(frozen=True)
class QuasiEnergySpectrum:
    values: np.ndarray
    branch: str

    @property
    def max_im(self) -> float:
        return float(np.max(np.abs(self.values.imag))) if len(self.values) else 0.0


def hamiltonian(spec: RingSpec, h: float) -> np.ndarray:
    """Dense ring Hamiltonian: ``H[n, n+1] = kappa e^h``, ``H[n+1, n] = kappa e^-h`` (mod N)."""
    N, k = spec.N, spec.kappa
    H = np.zeros((N, N), complex)
    n = np.arange(N)
    H[n, (n + 1) % N] = k * math.exp(h)
    H[(n + 1) % N, n] = k * math.exp(-h)
    return H


def _band(spec: RingSpec, cosh_part: float, sinh_part: float) -> np.ndarray:
    q = spec.wavenumbers
    return 2.0 * spec.kappa * (np.cos(q) * cosh_part + 1j * np.sin(q) * sinh_part)


def _fourier_propagator(spec: RingSpec, phases: np.ndarray) -> np.ndarray:
    """``(1/N) sum_s exp(i q_s (n - m) - i phases_s)``."""
    n = np.arange(spec.N)
    F = np.exp(1j * np.outer(n, spec.wavenumbers))
    return (F * np.exp(-1j * phases)) @ F.conj().T / spec.N


def stationary_spectrum(spec: RingSpec, h0: float) -> QuasiEnergySpectrum:
    """``E_l = 2 kappa (cosh h0 cos q_l + i sinh h0 sin q_l)`` with ``q_l = 2 pi l / N``."""
    return QuasiEnergySpectrum(_band(spec, math.cosh(h0), math.sinh(h0)),
                               "exact energies, l = 0..N-1")


def ellipse_residual(E: complex, h0: float, kappa: float = 1.0) -> float:
    """Distance of ``E`` from the spectral ellipse, ``|LHS - 4 kappa^2|``."""
    if h0 == 0:
        raise DegenerateEllipseError("ellipse is degenerate for h0 = 0; test Im E = 0 instead")
    lhs = (E.real / math.cosh(h0)) ** 2 + (E.imag / math.sinh(h0)) ** 2
    return abs(lhs - 4.0 * kappa ** 2)


def propagator_stationary(spec: RingSpec, h0: float, t: float) -> np.ndarray:
    if t < 0:
        raise DomainError("t must be non-negative")
    return _fourier_propagator(spec, stationary_spectrum(spec, h0).values * t)


def phase_integrals(f: GaugeField, t: float, tol: float = DEFAULT_QUAD_TOL) -> tuple[float, float]:
    """``(int_0^t cosh h, int_0^t sinh h)`` as whole periods plus a remainder."""
    if isinstance(f, Constant):
        return math.cosh(f.h0) * t, math.sinh(f.h0) * t
    T = f.period
    m = math.floor(t / T)
    r = t - m * T
    c = m * T * cosh_average(f, tol) + f.integral_of(math.cosh, 0.0, r, tol)
    s = m * T * sinh_average(f, tol) + f.integral_of(math.sinh, 0.0, r, tol)
    return c, s


def propagator_periodic(spec: RingSpec, f: GaugeField, t: float,
                        tol: float = DEFAULT_QUAD_TOL) -> np.ndarray:
    """Exact propagator from 0 to ``t`` for an arbitrary field ``f``."""
    if t < 0:
        raise DomainError("t must be non-negative")
    c, s = phase_integrals(f, t, tol)
    return _fourier_propagator(spec, _band(spec, c, s))


def quasienergies(spec: RingSpec, f: GaugeField) -> QuasiEnergySpectrum:
    """Quasi energies from the period averages of ``cosh h`` and ``sinh h``.

    They are exact and unfolded: no logarithm is taken, so there is no branch
    ambiguity.  All values are real iff the ``sinh`` average vanishes.
    """
    return QuasiEnergySpectrum(_band(spec, cosh_average(f), sinh_average(f)),
                               "exact averaged band, l = 0..N-1, not folded")


def effective_hamiltonian(spec: RingSpec, f: GaugeField, tol: float = 1e-10) -> np.ndarray:
    """Hermitian ring with hopping ``kappa * <cosh h>``, valid stroboscopically.

    Raises ``ConditionNotMetError`` unless ``|<sinh h>| <= tol``.
    """
    if not is_pseudo_hermitian_condition(f, tol):
        raise ConditionNotMetError(
            f"period average of sinh h is {sinh_average(f):.3e}, not zero within {tol:.1e}")
    eff = RingSpec(spec.N, spec.kappa * cosh_average(f))
    return hamiltonian(eff, 0.0)
