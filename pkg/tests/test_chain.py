import math

import numpy as np
import pytest

from imaginary_gauge.chain import (ChainSpec, GaugeRangeError, fold_quasienergies, gauge_transform,
                                   hamiltonian, hermitian_propagator, monodromy,
                                   propagator_stationary, quasi_energy_distance, simulate,
                                   stationary_spectrum)
from imaginary_gauge.gauge import Constant, PiecewiseTwoLevel, Sampled, Sinusoidal, SquareWave
from imaginary_gauge.numerics import DomainError, eig_general
from imaginary_gauge.ring import RingSpec

from oracles import chain_h, match_distance, ordered_product


def test_spec_validation():
    with pytest.raises(DomainError):
        ChainSpec(1)
    with pytest.raises(DomainError):
        ChainSpec(3, kappa=-1.0)


def test_stationary_spectrum_examples():
    assert np.allclose(stationary_spectrum(ChainSpec(2)), [1, -1])
    assert np.allclose(stationary_spectrum(ChainSpec(3)), [math.sqrt(2), 0, -math.sqrt(2)], atol=1e-15)
    spec = ChainSpec(50)
    dense = eig_general(hamiltonian(spec, 0.3)).eigenvalues
    assert match_distance(stationary_spectrum(spec), dense) < 1e-9


def test_hamiltonian_matches_oracle():
    assert np.allclose(hamiltonian(ChainSpec(4, 0.7), 0.5), chain_h(4, 0.5, 0.7))


def test_gauge_transform():
    c = np.array([1.0, 2j, -0.5, 0.1 + 0.3j])
    assert np.allclose(gauge_transform(c, 0.0), c)
    back = gauge_transform(gauge_transform(c, 0.8, "to_hermitian"), 0.8, "from_hermitian")
    assert np.abs(back - c).max() < 1e-14
    with pytest.raises(GaugeRangeError):
        gauge_transform(np.ones(100), 4.0)
    with pytest.raises(ValueError):
        gauge_transform(c, 0.1, "sideways")


def test_gauge_transform_maps_to_hermitian_dynamics():
    spec = ChainSpec(4)
    c0 = np.array([1.0, 0.5j, 0.0, -0.2])
    t = 1.7
    c_t = propagator_stationary(spec, 0.6, t) @ c0
    a_t = hermitian_propagator(spec, t) @ gauge_transform(c0, 0.6)
    assert np.abs(gauge_transform(c_t, 0.6) - a_t).max() < 1e-12


def test_propagator_stationary():
    spec = ChainSpec(5)
    assert np.allclose(propagator_stationary(spec, 0.7, 0.0), np.eye(5), atol=1e-14)
    U = propagator_stationary(spec, 0.0, 3.3)
    assert np.abs(U.conj().T @ U - np.eye(5)).max() < 1e-10
    ref = ordered_product(lambda h: chain_h(3, h), Constant(0.4), 0.9, 10_000)
    assert np.abs(propagator_stationary(ChainSpec(3), 0.4, 0.9) - ref).max() < 1e-10


@pytest.mark.parametrize("h0", [0.0, 0.3, 1.0])
def test_constant_field_quasienergies(h0):
    spec = ChainSpec(6)
    f = Constant(h0, omega=1.7)
    res = monodromy(spec, f)
    assert res.exact and res.error_estimate == 0.0
    assert quasi_energy_distance(res.quasi_energies.values, stationary_spectrum(spec), 1.7) < 1e-9
    assert np.allclose(res.floquet_multipliers, np.exp(-1j * res.quasi_energies.values * f.period))


def test_branch_and_sorting():
    res = monodromy(ChainSpec(7), Sinusoidal(0.3, 0.9), steps=256)
    E = res.quasi_energies.values
    assert np.all(E.real > -0.45 - 1e-12) and np.all(E.real <= 0.45 + 1e-12)
    assert np.all(np.diff(np.round(E.real / 0.9, 9)) >= 0)
    assert np.allclose(E, 1j / res.period * np.log(res.floquet_multipliers))


def test_fold_quasienergies_edge():
    T = 2 * math.pi
    # multiplier exactly at -1 lands on +omega/2
    assert fold_quasienergies(np.array([-1.0 + 0j]), T)[0].real == pytest.approx(0.5)


@pytest.mark.parametrize("f", [SquareWave(0.4, 1.3), PiecewiseTwoLevel(0.5, 0.2, 1.0, 3.0)])
def test_exact_product_vs_oracle(f):
    spec = ChainSpec(4)
    res = monodromy(spec, f)
    assert res.exact
    ref = ordered_product(lambda h: chain_h(4, h), f, f.period, 2)
    assert np.abs(res.U_T - ref).max() < 1e-11


def test_stepping_vs_oracle():
    spec = ChainSpec(4)
    f = Sinusoidal(0.5, 1.2)
    res = monodromy(spec, f, steps=512)
    ref = ordered_product(lambda h: chain_h(4, h), f, f.period, 512)
    assert np.abs(res.U_T - ref).max() < 1e-11
    assert res.error_estimate is not None and res.error_estimate < 1e-4


def test_sampled_field_runs():
    f = Sampled((0.0, 1.0, 2.0), (0.2, -0.1, 0.0), 3.0)
    res = monodromy(ChainSpec(3), f, steps=600)
    assert not res.exact
    assert abs(np.sum(res.quasi_energies.values.imag)) < 1e-8


def test_stable_and_unstable_three_site_points():
    assert monodromy(ChainSpec(3), SquareWave(0.4, math.sqrt(2))).instability > 1e-3
    assert monodromy(ChainSpec(3), Sinusoidal(0.4, 1.0)).instability < 1e-8


@pytest.mark.parametrize("N", [3, 4, 6, 10])
def test_spectral_symmetry_square_wave(N):
    # the multiset {E} is closed under E -> -E (mod omega)
    for w in (0.9, math.sqrt(2), 2.6):
        E = monodromy(ChainSpec(N), SquareWave(0.4, w)).quasi_energies.values
        assert quasi_energy_distance(E, -E, w) < 1e-8


def test_gauge_range_guard():
    with pytest.raises(GaugeRangeError):
        monodromy(ChainSpec(200), Constant(2.0))


def test_simulate_sampling():
    spec = ChainSpec(3)
    f = Sinusoidal(0.4, 1.0)
    c0 = np.array([1.0, 0, 0])
    tr = simulate(spec, f, c0, 2.5 * f.period, steps_per_period=64)
    assert np.allclose(tr.amplitudes[0], c0)
    assert tr.times[0] == 0.0 and tr.times[-1] == pytest.approx(2.5 * f.period)
    assert len(tr.times) == 161
    assert tr.norms.shape == (161, 3)


def test_simulate_partial_step():
    spec = ChainSpec(3)
    f = Constant(0.3)
    c0 = np.array([0, 1.0, 0])
    tr = simulate(spec, f, c0, 1.234, steps_per_period=10)
    assert tr.times[-1] == 1.234
    assert np.abs(tr.amplitudes[-1] - propagator_stationary(spec, 0.3, 1.234) @ c0).max() < 1e-12


def test_simulate_matches_monodromy():
    spec = ChainSpec(5)
    f = Sinusoidal(0.3, 1.1)
    c0 = np.linspace(1, 2, 5) + 0j
    tr = simulate(spec, f, c0, 3 * f.period, steps_per_period=256)
    U = monodromy(spec, f, steps=256).U_T
    assert np.abs(tr.amplitudes[-1] - np.linalg.matrix_power(U, 3) @ c0).max() < 1e-10


def test_simulate_ring_hermitian_norm():
    tr = simulate(RingSpec(6), Constant(0.0), np.eye(6)[2], 20.0, steps_per_period=100)
    assert np.abs(np.linalg.norm(tr.amplitudes, axis=1) - 1).max() < 1e-12


def test_simulate_rejects_bad_input():
    spec = ChainSpec(3)
    f = Constant(0.1)
    with pytest.raises(DomainError):
        simulate(spec, f, np.zeros(3), 1.0)
    with pytest.raises(DomainError):
        simulate(spec, f, np.ones(4), 1.0)
    with pytest.raises(DomainError):
        simulate(spec, f, np.ones(3), -1.0)


def test_imbalance_small_when_well_conditioned():
    assert monodromy(ChainSpec(10), SquareWave(0.4, 1.0)).imbalance < 1e-10


def test_imbalance_exposes_ill_conditioning():
    # |det U(T)| = 1 exactly, so a large imbalance can only be rounding
    res = monodromy(ChainSpec(50), SquareWave(1.0, 0.7))
    assert res.imbalance > 1e-6
