import math

import numpy as np
import pytest

from ergolab.entropy import Measurement, OutcomeDistribution, outcome_distribution
from ergolab.errors import DimensionCap, NotRankOne, ValidationError
from ergolab.localopt import haar_random_unitary
from ergolab.protocol import (
    ProtocolConfig,
    certify,
    convergence_study,
    cooling_diagnostic,
    copy_energies,
    copy_populations,
    extraction_unitary,
    mean_work,
    passive_marginal,
    random_phase_unitary,
    simulate_extraction,
)
from ergolab.qstate import DensityMatrix, bell_state, dephase, random_density_matrix, tensor_power
from ergolab.streams import stream
from ergolab.thermo import Hamiltonian, thermal_state

from oracles import copy_vector, sorted_pairing_energy

# frozen from oracles.sorted_pairing_energy on the Bell instance, N = 1..8
BELL_WORK_PER_COPY = [0.5, 0.625, 0.6666666666666666, 0.65625, 0.675, 0.703125, 0.7075892857142857, 0.70068359375]


def random_instance(d, rng):
    rho = random_density_matrix(d, rng)
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = Hamiltonian((g + g.conj().T) / 2)
    return rho, h, Measurement.from_basis(haar_random_unitary(d, rng))


def bell_instance():
    h = Hamiltonian.diagonal([0.0, 1.0])
    return bell_state(), Hamiltonian.local_sum([h, h]), Measurement.computational(4, (2, 2))


def test_streams_are_reproducible_and_independent():
    a = stream(5, "extract", 0, 1).uniform(size=4)
    np.testing.assert_array_equal(a, stream(5, "extract", 0, 1).uniform(size=4))
    assert not np.allclose(a, stream(5, "extract", 1, 0).uniform(size=4))
    assert not np.allclose(a, stream(6, "extract", 0, 1).uniform(size=4))


def test_certify_exact_and_sampled(rng):
    rho, _, m = random_instance(3, rng)
    exact = certify(rho, m)
    np.testing.assert_allclose(exact.probabilities, outcome_distribution(rho, m).probabilities)
    n = 20000
    est = certify(rho, m, n, seed=4)
    assert est.samples == n
    assert est.probabilities.sum() == pytest.approx(1.0)
    se = np.sqrt(exact.probabilities * (1 - exact.probabilities) / n)
    assert np.all(np.abs(est.probabilities - exact.probabilities) <= 5 * se + 1e-12)
    np.testing.assert_array_equal(est.probabilities, certify(rho, m, n, seed=4).probabilities)
    with pytest.raises(ValidationError):
        certify(rho, m, 0)


def test_random_phases_dephase_on_average(rng):
    rho, _, m = random_instance(3, rng)
    acc = np.zeros((3, 3), dtype=complex)
    draws = 4000
    gen = stream(1, "phase-test")
    for _ in range(draws):
        u = random_phase_unitary(m, gen)
        acc += u @ rho.data @ u.conj().T
    # off-diagonal coherences average out at rate 1/sqrt(draws)
    np.testing.assert_allclose(acc / draws, dephase(rho, m).data, atol=5 / math.sqrt(draws))


def test_copy_vectors_match_oracle():
    p = [0.2, 0.5, 0.3]
    e = [0.0, 1.0, 2.7]
    np.testing.assert_allclose(copy_populations(p, 3), copy_vector(p, 3, lambda a, b: a * b))
    np.testing.assert_allclose(copy_energies(Hamiltonian.diagonal(e), 3), copy_vector(e, 3, lambda a, b: a + b))


def test_extraction_unitary_two_qubit_pairing():
    h = Hamiltonian.diagonal([0.0, 1.0])
    m = Measurement.computational(2)
    dist = OutcomeDistribution(np.array([0.3, 0.7]), m)
    u = extraction_unitary(dist, h, 2)
    cg = np.kron(np.diag([0.3, 0.7]), np.diag([0.3, 0.7]))
    out = u @ cg @ u.conj().T
    # populations 0.49, 0.21, 0.21, 0.09 land on energies 0, 1, 1, 2
    np.testing.assert_allclose(np.diag(out).real, [0.49, 0.21, 0.21, 0.09], atol=1e-15)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(4), atol=1e-15)


def test_mean_work_matches_sort_pairing_oracle(rng):
    # state diagonal in the energy basis: the closed form is a plain sort pairing
    p = rng.dirichlet(np.ones(3))
    e = [0.0, 0.6, 1.5]
    h = Hamiltonian.diagonal(e)
    m = Measurement.computational(3)
    rho = DensityMatrix(np.diag(p))
    dist = certify(rho, m)
    for n in (1, 2, 3):
        pn = copy_vector(list(p), n, lambda a, b: a * b)
        en = copy_vector(e, n, lambda a, b: a + b)
        expected = float(np.dot(pn, en)) - sorted_pairing_energy(pn, en)
        assert mean_work(rho, h, dist, n) == pytest.approx(expected, abs=1e-13)


# U^dag H_N U is diagonal in the product measurement basis, so it commutes
# with every phase draw: per-trial work is phase independent and the sample
# spread is pure round-off. Consistency is checked at 5 standard errors plus
# a round-off floor.
ROUNDOFF = 1e-12


@pytest.mark.parametrize("d,n", [(2, 1), (2, 2), (3, 2)])
def test_monte_carlo_is_unbiased_and_unitary(rng, d, n):
    rho, h, m = random_instance(d, rng)
    ws = simulate_extraction(rho, h, ProtocolConfig(n, 1500, 7, m))
    assert abs(ws.mean - ws.exact_mean) <= 5 * ws.std_error + ROUNDOFF
    assert np.ptp(ws.samples) < ROUNDOFF
    assert ws.max_purity_error <= 1e-10
    assert ws.exact_mean == pytest.approx(mean_work(rho, h, ws.distribution, n), abs=1e-12)


def test_extraction_beats_random_unitaries_on_dephased_input(rng):
    rho, h, m = random_instance(2, rng)
    n = 2
    ws = simulate_extraction(rho, h, ProtocolConfig(n, 2, 0, m))
    cg = tensor_power(dephase(rho, m), n).data
    h_n = np.kron(h.data, np.eye(2)) + np.kron(np.eye(2), h.data)
    for _ in range(300):
        v = haar_random_unitary(4, rng)
        w = ws.initial_energy - np.real(np.trace(h_n @ v @ cg @ v.conj().T))
        assert w <= ws.exact_mean + 1e-9


def test_simulation_is_deterministic(rng):
    rho, h, m = random_instance(2, rng)
    a = simulate_extraction(rho, h, ProtocolConfig(2, 50, 3, m))
    b = simulate_extraction(rho, h, ProtocolConfig(2, 50, 3, m))
    np.testing.assert_array_equal(a.samples, b.samples)
    c = simulate_extraction(rho, h, ProtocolConfig(2, 50, 4, m))
    assert not np.array_equal(a.samples, c.samples)


def test_phases_commuting_with_h_give_exact_samples():
    rho, h, m = bell_instance()
    ws = simulate_extraction(rho, h, ProtocolConfig(2, 20, 0, m))
    np.testing.assert_allclose(ws.samples, ws.exact_mean, atol=1e-12)
    assert ws.certified_initial_energy == pytest.approx(ws.initial_energy)
    assert ws.exact_mean / 2 == pytest.approx(BELL_WORK_PER_COPY[1], abs=1e-12)


def test_protocol_limits(rng):
    rho, h, m = random_instance(2, rng)
    with pytest.raises(DimensionCap):
        simulate_extraction(rho, h, ProtocolConfig(5, 2, 0, m, cap=16))
    pvm = Measurement([np.diag([1, 1, 0]), np.diag([0, 0, 1])])
    with pytest.raises(NotRankOne):
        ProtocolConfig(1, 1, 0, pvm)
    with pytest.raises(ValueError):
        ProtocolConfig(0, 1, 0, m)


def test_bell_convergence_rows():
    rho, h, m = bell_instance()
    rep = convergence_study(rho, h, m, 8, cap=256)
    np.testing.assert_allclose([r.work_per_copy for r in rep.rows], BELL_WORK_PER_COPY, atol=1e-12)
    assert all(r.work_per_copy <= rep.w_inf + 1e-12 for r in rep.rows)
    assert rep.gaps[-1] < rep.gaps[0] / 2


def test_sampled_certification_reference_uses_sampled_entropy(rng):
    rho, h, m = random_instance(3, rng)
    rep = convergence_study(rho, h, m, 2, certification=500, seed=2)
    assert rep.distribution.samples == 500
    assert rep.s_obs == pytest.approx(-sum(p * math.log(p) for p in rep.distribution.probabilities if p > 0))


def test_cooling_uniform_is_exact():
    h = Hamiltonian.diagonal([0.0, 1.0])
    dist = OutcomeDistribution(np.array([0.5, 0.5]), Measurement.computational(2))
    for n in range(1, 7):
        assert cooling_diagnostic(dist, h, n).trace_distance == pytest.approx(0.0, abs=1e-14)


def test_cooling_qutrit_marginal_approaches_thermal():
    h = Hamiltonian.diagonal([0.0, 1.0, 2.7])
    dist = OutcomeDistribution(np.array([0.2, 0.5, 0.3]), Measurement.computational(3))
    d = [cooling_diagnostic(dist, h, n).trace_distance for n in (1, 4, 8)]
    assert d[2] < d[1] < d[0]


def test_passive_marginal_copy_average():
    h = Hamiltonian.diagonal([0.0, 1.0])
    dist = OutcomeDistribution(np.array([0.3, 0.7]), Measurement.computational(2))
    marg = passive_marginal(dist, h, 3)
    assert marg.sum() == pytest.approx(1.0)
    # passive product of qubits: every copy is the thermal qubit (0.7, 0.3)
    np.testing.assert_allclose(marg, [0.7, 0.3], atol=1e-14)
    th = thermal_state(h, math.log(7 / 3)).populations
    np.testing.assert_allclose(marg, th, atol=1e-12)
    np.testing.assert_allclose(passive_marginal(dist, h, 3, copy=1), [0.7, 0.3], atol=1e-14)
