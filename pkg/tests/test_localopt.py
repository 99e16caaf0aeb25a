import math

import numpy as np
import pytest

from ergolab.entropy import entanglement_entropy, observational_entropy
from ergolab.errors import DimensionCap, MissingDims
from ergolab.localopt import (
    OptimizerConfig,
    haar_random_unitary,
    minimize_obs_entropy_product,
    product_entropy,
    quantum_correlation_entropy,
)
from ergolab.qstate import DensityMatrix, random_density_matrix, random_pure_state, werner_state

from oracles import binary_entropy, two_qubit_grid_min


def test_haar_moments(rng):
    d = 3
    samples = np.array([abs(haar_random_unitary(d, rng)[0, 0]) ** 2 for _ in range(4000)])
    # |U_00|^2 ~ Beta(1, d-1): mean 1/d, second moment 2/(d(d+1))
    assert samples.mean() == pytest.approx(1 / d, abs=0.015)
    assert (samples**2).mean() == pytest.approx(2 / (d * (d + 1)), abs=0.015)
    u = haar_random_unitary(4, rng)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-13)


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(restarts=0)
    with pytest.raises(ValueError):
        OptimizerConfig(strategy="annealing")


@pytest.mark.parametrize("dims", [(2, 2), (2, 3)])
def test_random_restarts_recover_entanglement_entropy(rng, dims):
    psi = random_pure_state(dims[0] * dims[1], rng, dims=dims)
    res = minimize_obs_entropy_product(psi, OptimizerConfig(restarts=4, seed=3))
    s_ent = entanglement_entropy(psi)
    assert res.s_min == pytest.approx(s_ent, abs=1e-8)
    # every Haar-started restart ends at the same minimum
    assert max(res.history) == pytest.approx(s_ent, abs=1e-6)
    assert observational_entropy(psi, res.basis.measurement()) == pytest.approx(res.s_min, abs=1e-12)


@pytest.mark.parametrize("p", [0.2, 0.5, 0.9])
def test_werner_closed_form(p):
    res = minimize_obs_entropy_product(werner_state(p), OptimizerConfig(restarts=4))
    assert res.s_min == pytest.approx(math.log(2) + binary_entropy((1 + p) / 2), abs=1e-8)


def test_mixed_state_against_grid_oracle(rng):
    rho = random_density_matrix(4, rng, dims=(2, 2))
    res = minimize_obs_entropy_product(rho)
    grid = two_qubit_grid_min(rho.data)
    assert res.s_min <= grid + 1e-12
    assert grid - res.s_min < 1e-4


def test_strategies_agree(rng):
    for dims in [(2, 2), (2, 3)]:
        rho = random_density_matrix(dims[0] * dims[1], rng, dims=dims)
        a = minimize_obs_entropy_product(rho, OptimizerConfig(restarts=6, strategy="givens_sweeps"))
        b = minimize_obs_entropy_product(rho, OptimizerConfig(restarts=6, strategy="exp_map_gradient"))
        assert a.s_min == pytest.approx(b.s_min, abs=1e-7)


def test_deterministic_for_fixed_seed(rng):
    rho = random_density_matrix(4, rng, dims=(2, 2))
    cfg = OptimizerConfig(restarts=3, seed=11)
    a = minimize_obs_entropy_product(rho, cfg)
    b = minimize_obs_entropy_product(rho, cfg)
    assert a.history == b.history
    np.testing.assert_array_equal(a.basis.basis_A, b.basis.basis_A)


def test_local_unitary_invariance(rng):
    rho = random_density_matrix(6, rng, dims=(2, 3))
    w = np.kron(haar_random_unitary(2, rng), haar_random_unitary(3, rng))
    rotated = DensityMatrix(w @ rho.data @ w.conj().T, (2, 3))
    a = minimize_obs_entropy_product(rho, OptimizerConfig(restarts=6)).s_min
    b = minimize_obs_entropy_product(rotated, OptimizerConfig(restarts=6)).s_min
    assert a == pytest.approx(b, abs=1e-7)


def test_classical_classical_state_has_zero_qce(rng):
    ua, ub = haar_random_unitary(2, rng), haar_random_unitary(3, rng)
    w = np.kron(ua, ub)
    p = rng.dirichlet(np.ones(6))
    rho = DensityMatrix(w @ np.diag(p) @ w.conj().T, (2, 3))
    qc = quantum_correlation_entropy(rho, OptimizerConfig(restarts=4))
    assert qc.s_qc == pytest.approx(0.0, abs=1e-8)
    assert qc.s_qc >= 0.0


def test_qce_is_nonnegative_and_consistent(rng):
    rho = random_density_matrix(4, rng, rank=2, dims=(2, 2))
    qc = quantum_correlation_entropy(rho, OptimizerConfig(restarts=4))
    assert qc.s_qc >= 0.0
    assert qc.s_qc == pytest.approx(qc.s_min - qc.s_vn, abs=1e-9)
    ua, ub = qc.basis.basis_A, qc.basis.basis_B
    assert product_entropy(rho.data, ua, ub) == pytest.approx(qc.s_min, abs=1e-12)


def test_limits():
    with pytest.raises(MissingDims):
        minimize_obs_entropy_product(np.eye(4) / 4)
    with pytest.raises(DimensionCap):
        minimize_obs_entropy_product(DensityMatrix(np.eye(18) / 18, (2, 9)))
