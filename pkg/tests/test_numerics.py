import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from imaginary_gauge.numerics import (ConvergenceError, DimensionError, DomainError, eig_general,
                                      eigvals_stack, integrate_periodic, matmul_chain, principal_log)

from oracles import chain_h, match_distance


def test_eig_identity_and_diagonal():
    assert np.allclose(eig_general(np.eye(3)).eigenvalues, 1.0)
    vals = eig_general(np.diag([2.0, 0.0, -2.0])).eigenvalues
    assert np.allclose(np.sort(vals.real), [-2, 0, 2])


def test_eig_three_site_hopping():
    vals = eig_general(chain_h(3, 0.0)).eigenvalues
    assert np.allclose(np.sort(vals.real), [-math.sqrt(2), 0, math.sqrt(2)], atol=1e-12)


def test_eig_residual_contract():
    rng = np.random.default_rng(0)
    M = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    res = eig_general(M, tol=1e-10)
    V, lam = res.eigenvectors, res.eigenvalues
    for k in range(6):
        assert np.linalg.norm(M @ V[:, k] - lam[k] * V[:, k]) <= 1e-10 * np.linalg.norm(M, 2)
    assert res.residual <= 1e-10 * np.linalg.norm(M, 2)


def test_eig_rejects_bad_input():
    with pytest.raises(DimensionError):
        eig_general(np.ones((2, 3)))
    with pytest.raises(DomainError):
        eig_general(np.array([[1.0, np.nan], [0.0, 1.0]]))


def test_convergence_error_carries_iterations():
    err = ConvergenceError("no luck", iterations=30)
    assert err.iterations == 30


def test_eig_hermitian_input_is_real():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(7, 7)) + 1j * rng.normal(size=(7, 7))
    vals = eig_general(A + A.conj().T).eigenvalues
    assert np.abs(vals.imag).max() <= 1e-10


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 8), seed=st.integers(0, 2**31 - 1))
def test_eig_similarity_invariance(n, seed):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    # orthogonal factor times a mild diagonal keeps the condition number small
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    S = Q @ np.diag(rng.uniform(1.0, 2.0, n))
    a = eig_general(M).eigenvalues
    b = eig_general(S @ M @ np.linalg.inv(S)).eigenvalues
    assert match_distance(a, b) <= 1e-8 * max(1.0, np.linalg.norm(M, 2))


def test_eigvals_stack_marks_failures():
    Ms = np.stack([np.eye(2), np.full((2, 2), np.nan)])
    vals, failed = eigvals_stack(Ms)
    assert list(failed) == [False, True]
    assert np.allclose(vals[0], 1.0) and np.all(np.isnan(vals[1]))


def test_integrate_periodic_examples():
    w = 1.0
    T = 2 * math.pi / w
    assert abs(integrate_periodic(lambda t: math.sinh(0.4 * math.sin(w * t)), T)) < 1e-12
    assert integrate_periodic(lambda t: math.cosh(0.3), T) == pytest.approx(math.cosh(0.3), abs=1e-13)
    # modified Bessel function I0(0.4)
    assert integrate_periodic(lambda t: math.cosh(0.4 * math.sin(w * t)), T) == \
        pytest.approx(1.0404017822293412, abs=1e-11)


def test_integrate_periodic_jump_split():
    T = 3.0
    step = lambda t: 1.0 if t < 1.0 else -2.0
    assert integrate_periodic(step, T, breakpoints=[1.0]) == pytest.approx(-1.0, abs=1e-13)


def test_integrate_periodic_tolerance_refinement():
    f = lambda t: math.exp(math.cos(t))
    a = integrate_periodic(f, 2 * math.pi, tol=1e-6)
    b = integrate_periodic(f, 2 * math.pi, tol=5e-7)
    assert abs(a - b) < 1e-6


def test_integrate_periodic_domain():
    with pytest.raises(DomainError):
        integrate_periodic(math.cos, 0.0)


def test_matmul_chain():
    rng = np.random.default_rng(1)
    M = rng.normal(size=(4, 4))
    assert np.allclose(matmul_chain([np.eye(4), M]), M)
    assert np.allclose(matmul_chain([M, np.linalg.inv(M)]), np.eye(4), atol=1e-12)
    A, B, C = (rng.normal(size=(3, 3)) for _ in range(3))
    assert np.allclose(matmul_chain([A, B, C]), A @ B @ C)
    with pytest.raises(DimensionError):
        matmul_chain([np.eye(2), np.eye(3)])


def test_principal_log_branch():
    z = np.exp(1j * np.array([np.pi, -np.pi + 1e-3, 0.5]))
    im = principal_log(z).imag
    assert np.all(im > -np.pi) and np.all(im <= np.pi)
    assert im[0] == pytest.approx(np.pi)
