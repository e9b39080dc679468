"""Open chain: static spectrum, gauge transformation, monodromy and dynamics.

The static propagator factors as ``U0(h; t) = D_h W(t) D_h^-1`` with
``D_h = diag(exp(-h n))`` and ``W(t)`` the unitary propagator of the
Hermitian chain.  Ordered products of such factors are accumulated in the
form ``W D_{h_k - h_{k-1}} W ...``, so only field *differences* ever reach
the exponentials.  Floquet multipliers are taken from the cyclically similar
matrix ``M D_{h_last}``, which is exactly unitary for a static field.
"""
from __future__ import annotations

from dataclasses import dataclass
import math
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import ring
from .gauge import Constant, GaugeField, PiecewiseTwoLevel, SquareWave
from .numerics import DomainError, eig_general, principal_log
from .ring import QuasiEnergySpectrum, RingSpec

DEFAULT_STEPS = 2048
MAX_GAUGE_EXPONENT = 300.0


class GaugeRangeError(DomainError):
    """``|h * N|`` is too large for double-precision site weights."""


@dataclass(frozen=True)
class ChainSpec:
    N: int
    kappa: float = 1.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise DomainError(f"chain needs N >= 2 sites, got {self.N}")
        if not self.kappa > 0:
            raise DomainError(f"kappa must be positive, got {self.kappa}")

    @property
    def sites(self) -> np.ndarray:
        return np.arange(1, self.N + 1)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    amplitudes: np.ndarray  # shape (len(times), N)

    @property
    def norms(self) -> np.ndarray:
        """``|c_n(t)|`` per sample and site."""
        return np.abs(self.amplitudes)


@dataclass(frozen=True)
class MonodromyResult:
    U_T: np.ndarray
    quasi_energies: QuasiEnergySpectrum
    floquet_multipliers: np.ndarray
    period: float
    steps: int
    exact: bool
    error_estimate: float | None = None

    @property
    def instability(self) -> float:
        """``max |Im E|`` (in the units of kappa used to build the chain)."""
        return self.quasi_energies.max_im

    @property
    def imbalance(self) -> float:
        """``|sum Im E|``, zero in exact arithmetic since ``|det U(T)| = 1``.

        A value far above rounding level means the Floquet operator is too
        non-normal for its eigenvalues to be resolved in double precision.
        """
        return float(abs(np.sum(self.quasi_energies.values.imag)))


def hamiltonian(spec: ChainSpec, h: float) -> np.ndarray:
    N, k = spec.N, spec.kappa
    H = np.zeros((N, N), complex)
    n = np.arange(N - 1)
    H[n, n + 1] = k * math.exp(h)
    H[n + 1, n] = k * math.exp(-h)
    return H


def stationary_spectrum(spec: ChainSpec) -> np.ndarray:
    """``2 kappa cos(l pi / (N + 1))`` for ``l = 1..N``; independent of a static field."""
    return 2.0 * spec.kappa * np.cos(np.pi * spec.sites / (spec.N + 1))


def _check_range(N: int, h) -> None:
    if np.max(np.abs(h), initial=0.0) * N > MAX_GAUGE_EXPONENT:
        raise GaugeRangeError(f"|h| * N exceeds {MAX_GAUGE_EXPONENT:g}; site weights would overflow")


def gauge_transform(c, h0: float, direction: str = "to_hermitian") -> np.ndarray:
    """Site rescaling ``a_n = c_n exp(h0 n)`` (``to_hermitian``) or its inverse.

    Sites are numbered from 1.
    """
    c = np.asarray(c, dtype=complex)
    n = np.arange(1, len(c) + 1)
    _check_range(len(c), h0)
    if direction == "to_hermitian":
        return c * np.exp(h0 * n)
    if direction == "from_hermitian":
        return c * np.exp(-h0 * n)
    raise ValueError(f"direction must be 'to_hermitian' or 'from_hermitian', got {direction!r}")


def hermitian_propagator(spec: ChainSpec, t: float) -> np.ndarray:
    """``W_{n,l}(t) = 2/(N+1) sum_s sin(pi n s/(N+1)) sin(pi l s/(N+1)) exp(-i E_s t)``."""
    s = spec.sites
    S = np.sin(np.pi * np.outer(s, s) / (spec.N + 1))
    return (2.0 / (spec.N + 1)) * (S * np.exp(-1j * stationary_spectrum(spec) * t)) @ S


def propagator_stationary(spec: ChainSpec, h0: float, t: float) -> np.ndarray:
    if t < 0:
        raise DomainError("t must be non-negative")
    _check_range(spec.N, h0)
    n = spec.sites
    return np.exp(h0 * (n[None, :] - n[:, None])) * hermitian_propagator(spec, t)


def _centered(N: int) -> np.ndarray:
    # shifting n by a constant leaves every D_h W D_h^-1 unchanged
    return np.arange(1, N + 1) - 0.5 * (N + 1)


def gauge_product(Ws: Sequence[np.ndarray], hs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ordered product ``U0(h_P) ... U0(h_1)`` for a batch of field sequences.

    Parameters
    ----------
    Ws : sequence of P Hermitian-chain propagators ``W(dt_k)``, first-applied first.
    hs : array ``(B, P)`` of field values, one row per batch member.

    Returns
    -------
    U, K : arrays ``(B, N, N)``; ``U`` is the product and ``K`` a similar matrix
        with the same eigenvalues and far better conditioning.
    """
    hs = np.atleast_2d(np.asarray(hs, dtype=float))
    n = _centered(Ws[0].shape[0])
    M = Ws[0][None, :, :] * np.exp(np.outer(hs[:, 0], n))[:, None, :]
    for k in range(1, hs.shape[1]):
        g = np.exp(np.outer(hs[:, k] - hs[:, k - 1], n))
        M = Ws[k] @ (g[:, :, None] * M)
    last = np.exp(-np.outer(hs[:, -1], n))
    return last[:, :, None] * M, M * last[:, None, :]


def _pieces(spec: ChainSpec, f: GaugeField, steps: int, method: str):
    """Field values and durations of the factors making up one period."""
    T = f.period
    if method == "auto":
        if isinstance(f, Constant):
            return np.array([f.h0]), [T], True
        if isinstance(f, SquareWave):
            return np.array([f.h1, -f.h1]), [T / 2, T / 2], True
        if isinstance(f, PiecewiseTwoLevel):
            return np.array([f.h1, -f.h2]), [f.t1, T - f.t1], True
    elif method != "stepping":
        raise ValueError(f"method must be 'auto' or 'stepping', got {method!r}")
    if steps < 1:
        raise DomainError("steps must be >= 1")
    dt = T / steps
    return f((np.arange(steps) + 0.5) * dt), [dt] * steps, False


def fold_quasienergies(mu, period: float) -> np.ndarray:
    """``E = (i/T) ln mu`` on the principal branch, real part folded to ``(-w/2, w/2]``."""
    E = 1j / period * principal_log(mu)
    omega = 2.0 * np.pi / period
    re = 0.5 * omega - np.mod(0.5 * omega - E.real, omega)
    return re + 1j * E.imag


def _sort_order(E: np.ndarray, omega: float) -> np.ndarray:
    # round the primary key so conjugate-like pairs tie and fall back to Im
    key = np.round(E.real / omega, 9)
    return np.lexsort((E.imag, key))


def _quasi_from_K(K: np.ndarray, period: float) -> tuple[np.ndarray, np.ndarray]:
    mu = eig_general(K, vectors=False).eigenvalues
    E = fold_quasienergies(mu, period)
    order = _sort_order(E, 2.0 * np.pi / period)
    return E[order], mu[order]


def quasi_energy_distance(E1, E2, omega: float) -> float:
    """Largest difference after optimal pairing, with real parts compared modulo ``omega``."""
    d = np.subtract.outer(np.asarray(E1), np.asarray(E2))
    re = np.mod(d.real + 0.5 * omega, omega) - 0.5 * omega
    cost = np.hypot(re, d.imag)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def monodromy(spec: ChainSpec, f: GaugeField, steps: int = DEFAULT_STEPS,
              method: str = "auto", estimate_error: bool = True) -> MonodromyResult:
    """One-period propagator ``U(T)`` and its Floquet spectrum.

    Constant, square-wave and two-level fields use their exact one- or
    two-factor product.  Other fields (or ``method="stepping"``) are sampled at
    step midpoints, each factor being the exact static propagator.  With
    ``estimate_error`` the stepping result is compared against ``steps // 2``.
    """
    T = f.period
    hs, dts, exact = _pieces(spec, f, steps, method)
    _check_range(spec.N, hs)
    cache: dict[float, np.ndarray] = {}
    for dt in dts:
        if dt not in cache:
            cache[dt] = hermitian_propagator(spec, dt)
    U, K = gauge_product([cache[dt] for dt in dts], hs[None, :])
    E, mu = _quasi_from_K(K[0], T)

    err = 0.0 if exact else None
    if estimate_error and not exact and steps >= 2:
        coarse = monodromy(spec, f, steps // 2, "stepping", estimate_error=False)
        err = quasi_energy_distance(E, coarse.quasi_energies.values, f.omega)
    branch = "principal log, Re(E) in (-omega/2, omega/2], sorted by Re then Im"
    return MonodromyResult(U[0], QuasiEnergySpectrum(E, branch), mu, T,
                           len(dts), exact, err)


def _stepper(spec, f: GaugeField, dt: float):
    """Return ``advance(c, h)`` applying the static propagator for one step."""
    if isinstance(spec, RingSpec):
        n = np.arange(spec.N)
        F = np.exp(1j * np.outer(n, spec.wavenumbers))
        Fh = F.conj().T / spec.N

        def advance(c, h):
            E = ring.stationary_spectrum(spec, h).values
            return F @ (np.exp(-1j * E * dt) * (Fh @ c))
        return advance

    W = hermitian_propagator(spec, dt)
    n = _centered(spec.N)

    def advance(c, h):
        return np.exp(-h * n) * (W @ (np.exp(h * n) * c))
    return advance


def simulate(spec: ChainSpec | RingSpec, f: GaugeField, c0, t_end: float,
             steps_per_period: int = DEFAULT_STEPS) -> Trajectory:
    """Evolve amplitudes from ``c0`` over ``[0, t_end]``.

    Each step applies the exact static propagator at the field's midpoint
    value, so a zero field conserves the norm to rounding.  Samples are taken
    at every step boundary; a final shorter step lands exactly on ``t_end``.
    """
    c = np.asarray(c0, dtype=complex).copy()
    if c.shape != (spec.N,):
        raise DomainError(f"initial vector must have length {spec.N}")
    if not np.linalg.norm(c) > 0:
        raise DomainError("initial vector must be non-zero")
    if t_end < 0:
        raise DomainError("t_end must be non-negative")
    dt = f.period / steps_per_period
    full = int(math.floor(t_end / dt + 1e-9))
    rest = t_end - full * dt
    times = list(dt * np.arange(full + 1))
    if rest > 1e-12 * dt:
        times.append(t_end)
    else:
        times[-1] = t_end if full else 0.0
    out = np.empty((len(times), spec.N), complex)
    out[0] = c
    advance = _stepper(spec, f, dt)
    for k in range(1, full + 1):
        c = advance(c, f.value_at((k - 0.5) * dt))
        out[k] = c
    if len(times) > full + 1:
        last = _stepper(spec, f, rest)
        out[-1] = last(c, f.value_at(full * dt + 0.5 * rest))
    return Trajectory(np.asarray(times), out)
