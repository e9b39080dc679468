"""First-order secular (multiple-scales) theory of the weakly driven chain.

For ``|h| << 1`` the chain obeys ``i dc/dt = A c + h(t) (B1 - B2) c``.  In the
eigenbasis of ``A`` the coupling becomes ``P = T (B1 - B2) T`` and removing
secular terms at first order leaves the slow flow ``i dA/dT1 = R A`` with
``R[n, m] = P[n, m] <h(t) exp(i (E_n - E_m) t)>``, non-zero only on resonance
``E_n - E_m = l omega`` (``l != 0``).  The eigenvalues of ``R`` are purely
imaginary; their imaginary parts are the leading-order ``Im`` of the quasi
energies.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .chain import ChainSpec, stationary_spectrum
from .gauge import GaugeField, mean
from .numerics import DEFAULT_QUAD_TOL, integrate_periodic

DEFAULT_DETUNING_TOL = 0.02


@dataclass(frozen=True)
class PerturbationSetup:
    N: int
    kappa: float
    T_matrix: np.ndarray
    E_diag: np.ndarray
    P_matrix: np.ndarray


@dataclass(frozen=True)
class SlowFlowMatrix:
    R: np.ndarray
    harmonics_used: list[tuple[int, int, int]] = field(default_factory=list)
    growth_rates: np.ndarray = field(default_factory=lambda: np.zeros(0))


def hopping_matrices(spec: ChainSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(A, B1, B2)`` with ``A = B1 + B2``, ``B1`` on the super- and ``B2`` on the sub-diagonal."""
    ones = spec.kappa * np.ones(spec.N - 1)
    B1 = np.diag(ones, 1)
    B2 = np.diag(ones, -1)
    return B1 + B2, B1, B2


def eigenbasis(spec: ChainSpec) -> np.ndarray:
    """``T[n, m] = sqrt(2/(N+1)) sin(n m pi / (N+1))``; real symmetric and its own inverse."""
    s = spec.sites
    return math.sqrt(2.0 / (spec.N + 1)) * np.sin(np.pi * np.outer(s, s) / (spec.N + 1))


def coupling_matrix(spec: ChainSpec) -> np.ndarray:
    """Closed form of ``T (B1 - B2) T``; zero whenever ``n + m`` is even."""
    N = spec.N
    n = spec.sites[:, None]
    m = spec.sites[None, :]
    odd = (n + m) % 2 == 1
    P = np.zeros((N, N))
    # for odd n + m neither cotangent argument is a multiple of pi
    a = np.pi * (n + m) / (2 * (N + 1))
    b = np.pi * (n - m) / (2 * (N + 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (2.0 / (N + 1)) * np.sin(m * np.pi / (N + 1)) * (1 / np.tan(a) + 1 / np.tan(b))
    P[odd] = spec.kappa * val[odd]
    return P


def build_setup(spec: ChainSpec, check_tol: float = 1e-10) -> PerturbationSetup:
    T = eigenbasis(spec)
    E = stationary_spectrum(spec)
    A, _, _ = hopping_matrices(spec)
    scale = max(1.0, spec.kappa)
    if np.abs(A @ T - T * E).max() > check_tol * scale:
        raise ArithmeticError("eigenbasis does not diagonalize the hopping matrix")
    return PerturbationSetup(spec.N, spec.kappa, T, E, coupling_matrix(spec).astype(complex))


def fourier_coefficient(f: GaugeField, frequency: float, tol: float = DEFAULT_QUAD_TOL) -> complex:
    """``<(h - <h>) exp(i frequency t)>`` over one period of ``f``.

    The mean is removed first: a static part only rescales sites and does not
    touch the quasi energies.  ``frequency`` should be a harmonic ``l omega``.
    """
    h0 = mean(f, tol)
    T = f.period
    re = integrate_periodic(lambda t: (f.value_at(t) - h0) * math.cos(frequency * t), T, tol, f.breakpoints)
    im = integrate_periodic(lambda t: (f.value_at(t) - h0) * math.sin(frequency * t), T, tol, f.breakpoints)
    return complex(re, im)


def build_R(setup: PerturbationSetup, f: GaugeField,
            detuning_tol: float = DEFAULT_DETUNING_TOL) -> SlowFlowMatrix:
    """Slow-flow matrix for the drive ``f``.

    A pair ``(n, m)`` contributes when ``|E_n - E_m - l omega| <= detuning_tol``
    for a non-zero integer ``l``; the time average is then evaluated at the
    exact harmonic ``l omega``.  ``harmonics_used`` lists ``(n, m, l)`` with
    1-based site labels and signed ``l``, for every pair with a non-zero
    coupling ``P[n, m]``.
    """
    N = setup.N
    omega = f.omega
    E = setup.E_diag
    R = np.zeros((N, N), complex)
    used = []
    coeffs: dict[int, complex] = {}
    for n in range(N):
        for m in range(N):
            if n == m or setup.P_matrix[n, m] == 0:
                continue
            delta = E[n] - E[m]
            l = int(round(delta / omega))
            if l == 0 or abs(delta - l * omega) > detuning_tol:
                continue
            if l not in coeffs:
                coeffs[l] = fourier_coefficient(f, l * omega)
            R[n, m] = setup.P_matrix[n, m] * coeffs[l]
            used.append((n + 1, m + 1, l))
    # R is anti-Hermitian, so -iR is Hermitian with real slow exponents
    rates = np.linalg.eigvalsh(-1j * R) if N else np.zeros(0)
    return SlowFlowMatrix(R, used, rates)


def predicted_growth_rate(R: SlowFlowMatrix, h_scale: float = 1.0) -> float:
    """Leading-order ``max |Im E|``: the largest ``|Im lambda|`` over eigenvalues of R.

    ``h_scale`` rescales the drive amplitude; the prediction is linear in it.
    """
    if not len(R.growth_rates):
        return 0.0
    return abs(h_scale) * float(np.max(np.abs(R.growth_rates)))
