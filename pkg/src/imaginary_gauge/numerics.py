"""Dense linear algebra and quadrature helpers shared by the lattice modules.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  The eigensolver
wraps LAPACK ``geev`` (balancing + Hessenberg + shifted QR) and adds the
residual contract the rest of the package relies on.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence
import warnings

import numpy as np
from scipy import integrate as _integrate

DEFAULT_EIG_TOL = 1e-10
DEFAULT_QUAD_TOL = 1e-12


class DimensionError(ValueError):
    """Raised for non-square or non-conformable matrices."""


class DomainError(ValueError):
    """Raised for arguments outside an operation's domain."""


class ConvergenceError(RuntimeError):
    """The eigensolver failed to converge or missed its residual bound."""

    def __init__(self, message: str, iterations: int | None = None):
        super().__init__(message)
        self.iterations = iterations


@dataclass(frozen=True)
class EigenResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None
    residual: float = 0.0


def _as_square(M) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DomainError("matrix has non-finite entries")
    return M


def eig_general(M, tol: float = DEFAULT_EIG_TOL, vectors: bool = True) -> EigenResult:
    """Eigen-decomposition of a general complex square matrix.

    Every returned pair satisfies ``||M v - lam v|| <= tol * ||M||`` (2-norm,
    unit-norm ``v``).  Eigenvalue ordering is unspecified.

    Raises
    ------
    DimensionError
        If ``M`` is not square.
    ConvergenceError
        If the QR iteration does not converge or the residual bound is missed.
    """
    M = _as_square(M)
    n = M.shape[0]
    if n == 0:
        return EigenResult(np.zeros(0, complex), np.zeros((0, 0), complex) if vectors else None)
    try:
        if vectors:
            w, v = np.linalg.eig(M)
        else:
            w, v = np.linalg.eigvals(M), None
    except np.linalg.LinAlgError as exc:
        # LAPACK reports failure without an iteration count; 30*n is its cap.
        raise ConvergenceError(f"eigenvalue iteration did not converge: {exc}", iterations=30 * n) from exc

    if v is None:
        return EigenResult(w)
    scale = max(np.linalg.norm(M, 2), np.finfo(float).tiny)
    res = np.linalg.norm(M @ v - v * w, axis=0).max() / scale
    if res > tol:
        raise ConvergenceError(f"eigenpair residual {res:.3e} exceeds tol {tol:.1e}")
    return EigenResult(w, v, float(res))


def eigvals_stack(Ms: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues of a stack ``(..., n, n)``; failed or non-finite slices become NaN.

    Returns ``(eigenvalues, failed)`` where ``failed`` marks the NaN slices.
    """
    Ms = np.asarray(Ms, dtype=complex)
    batch = Ms.shape[:-2]
    flat = Ms.reshape((-1,) + Ms.shape[-2:])
    out = np.full(flat.shape[:2], np.nan + 0j)
    ok = np.all(np.isfinite(flat), axis=(1, 2))
    if ok.any():
        try:
            out[ok] = np.linalg.eigvals(flat[ok])
        except np.linalg.LinAlgError:
            for i in np.flatnonzero(ok):
                try:
                    out[i] = np.linalg.eigvals(flat[i])
                except np.linalg.LinAlgError:
                    ok[i] = False
    return out.reshape(batch + flat.shape[1:2]), ~ok.reshape(batch)


def integrate(f: Callable[[float], float], a: float, b: float,
              tol: float = DEFAULT_QUAD_TOL, breakpoints: Iterable[float] = ()) -> float:
    """Integral of ``f`` over ``[a, b]``, split at every breakpoint inside the interval."""
    if b < a:
        return -integrate(f, b, a, tol, breakpoints)
    if b == a:
        return 0.0
    edges = [a] + sorted(p for p in set(breakpoints) if a < p < b) + [b]
    pieces = len(edges) - 1
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", _integrate.IntegrationWarning)
        for lo, hi in zip(edges[:-1], edges[1:]):
            try:
                val, _ = _integrate.quad(f, lo, hi, epsabs=tol / pieces, epsrel=0.0, limit=200)
            except _integrate.IntegrationWarning:
                # fall back to a relative target; smooth integrands here never need it
                val, _ = _integrate.quad(f, lo, hi, epsabs=tol / pieces, epsrel=1e-13, limit=500)
            total += val
    return total


def integrate_periodic(f: Callable[[float], float], period: float,
                       tol: float = DEFAULT_QUAD_TOL, breakpoints: Iterable[float] = ()) -> float:
    """Period average ``(1/T) * int_0^T f dt``."""
    if not period > 0:
        raise DomainError(f"period must be positive, got {period}")
    return integrate(f, 0.0, period, tol * period, breakpoints) / period


def matmul_chain(factors: Sequence[np.ndarray]) -> np.ndarray:
    """Ordered product ``factors[0] @ factors[1] @ ...``; the last factor acts first."""
    if len(factors) == 0:
        raise DimensionError("empty factor list")
    mats = [np.asarray(F, dtype=complex) for F in factors]
    for A, B in zip(mats[:-1], mats[1:]):
        if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
            raise DimensionError(f"cannot multiply {A.shape} by {B.shape}")
    if len(mats) == 1:
        return mats[0].copy()
    if len(mats) == 2:
        return mats[0] @ mats[1]
    return np.linalg.multi_dot(mats)


def principal_log(z) -> np.ndarray:
    """Complex log with imaginary part in (-pi, pi]."""
    z = np.asarray(z, dtype=complex)
    out = np.log(z)
    # numpy returns -pi on the negative real axis when imag is -0.0
    on_cut = np.isclose(out.imag, -np.pi, rtol=0, atol=1e-15)
    return np.where(on_cut, out.real + 1j * np.pi, out)
