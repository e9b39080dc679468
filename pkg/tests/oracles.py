"""Reference computations that share no code path with the package.

Propagators are built from dense Hamiltonians with ``scipy.linalg.expm``;
nothing here uses the Fourier/sine closed forms or the gauge factorization.
"""
import numpy as np
from scipy.linalg import expm
from scipy.optimize import linear_sum_assignment


def chain_h(N, h, kappa=1.0):
    H = np.zeros((N, N), complex)
    for n in range(N - 1):
        H[n, n + 1] = kappa * np.exp(h)
        H[n + 1, n] = kappa * np.exp(-h)
    return H


def ring_h(N, h, kappa=1.0):
    H = chain_h(N, h, kappa)
    H[N - 1, 0] = kappa * np.exp(h)
    H[0, N - 1] = kappa * np.exp(-h)
    return H


def ordered_product(build, f, t, steps):
    """Midpoint ``expm`` product over ``[0, t]`` split at the field's jumps.

    ``steps`` is distributed over the pieces in proportion to their length,
    so piecewise-constant fields are integrated exactly.
    """
    cuts = [0.0] + f.breakpoints_between(0.0, t) + [t]
    N = build(0.0).shape[0]
    U = np.eye(N, dtype=complex)
    for a, b in zip(cuts[:-1], cuts[1:]):
        k = max(1, int(round(steps * (b - a) / t)))
        dt = (b - a) / k
        for j in range(k):
            U = expm(-1j * dt * build(f.value_at(a + (j + 0.5) * dt))) @ U
    return U


def match_distance(a, b):
    """Largest gap between two point sets after optimal pairing."""
    cost = np.abs(np.subtract.outer(np.asarray(a), np.asarray(b)))
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())
