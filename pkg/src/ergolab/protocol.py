"""Certify-then-extract work protocol on N copies of an unknown source.

A certifier measures the source in a rank-1 basis and reports the outcome
distribution p. The extractor dephases every copy with an independent random
diagonal unitary (phases uniform on [0, 2pi)) and then applies the global
unitary U that sends rho_cg^{(x)N}, rho_cg = sum_i p_i |i><i|, to its passive
state. Averaged over the phases, the extracted work is

    <W_N> = tr[H_N rho^{(x)N}] - tr[H_N U rho_cg^{(x)N} U^dag],

and per copy it approaches the observational ergotropy as N grows.

The N-copy problem never needs a full diagonalization: rho_cg^{(x)N} is
diagonal in the product measurement basis and H_N in the product of local
eigenbases, so passive pairings are sorts of d^N-long vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .entropy import Measurement, OutcomeDistribution, outcome_distribution, shannon_entropy
from .errors import DimensionMismatch, NotRankOne, ValidationError
from .qstate import (
    DensityMatrix,
    as_density,
    check_dimension,
    check_vector_length,
    dephase,
    kron_power,
    tensor_power,
    trace_distance,
)
from .streams import stream
from .thermo import Hamiltonian, observational_ergotropy, passive_order, solve_beta, thermal_state, work_at_entropy

EXACT = "exact"


@dataclass(frozen=True)
class ProtocolConfig:
    copies: int
    trials: int
    seed: int
    measurement: Measurement
    certification: int | str = EXACT
    cap: int | None = None

    def __post_init__(self):
        if self.copies < 1:
            raise ValueError("copies must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        _check_certification(self.certification)
        if not self.measurement.rank_one:
            raise NotRankOne("protocol needs a rank-1 (basis) measurement")


@dataclass(frozen=True)
class WorkSamples:
    samples: np.ndarray
    mean: float
    std_error: float
    exact_mean: float
    config: ProtocolConfig
    distribution: OutcomeDistribution
    initial_energy: float
    max_purity_error: float
    # N * sum_i p_i <i|H|i>, only when the measurement basis diagonalizes H
    certified_initial_energy: float | None = None


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    work_per_copy: float
    gap: float


@dataclass(frozen=True)
class ConvergenceReport:
    rows: list[ConvergenceRow]
    w_inf: float
    beta: float
    s_obs: float
    distribution: OutcomeDistribution = field(repr=False)

    @property
    def gaps(self) -> np.ndarray:
        return np.array([r.gap for r in self.rows])


@dataclass(frozen=True)
class CoolingResult:
    trace_distance: float
    beta: float
    marginal: DensityMatrix = field(repr=False)
    thermal: DensityMatrix = field(repr=False)


def _check_certification(samples):
    if samples == EXACT:
        return
    if isinstance(samples, bool) or not isinstance(samples, (int, np.integer)) or samples < 1:
        raise ValidationError(f"certification must be 'exact' or a positive sample count, got {samples!r}")


def _basis(measurement: Measurement) -> np.ndarray:
    if not measurement.rank_one:
        raise NotRankOne("operation needs a rank-1 (basis) measurement")
    return measurement.basis


def certify(state, measurement: Measurement, samples: int | str = EXACT, seed: int = 0) -> OutcomeDistribution:
    """Outcome statistics the certifier reports: exact, or empirical frequencies of ``samples`` draws."""
    _check_certification(samples)
    exact = outcome_distribution(state, measurement)
    if samples == EXACT:
        return exact
    p = exact.probabilities / exact.probabilities.sum()
    counts = stream(seed, "certify").multinomial(int(samples), p)
    freq = counts / float(samples)
    freq.setflags(write=False)
    return OutcomeDistribution(freq, measurement, int(samples))


def random_phase_unitary(measurement: Measurement, rng: np.random.Generator) -> np.ndarray:
    """sum_i exp(i theta_i) |i><i| with theta_i i.i.d. uniform on [0, 2pi)."""
    b = _basis(measurement)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=b.shape[1])
    return (b * np.exp(1j * theta)) @ b.conj().T


def _product_vector(v: np.ndarray, n: int, op=np.multiply) -> np.ndarray:
    out = v
    for _ in range(n - 1):
        out = op.outer(out, v).ravel()
    return out


def copy_populations(p, n: int) -> np.ndarray:
    """Populations of rho_cg^{(x)n} in product-index order."""
    return _product_vector(np.asarray(p, dtype=float), n, np.multiply)


def copy_energies(h: Hamiltonian, n: int) -> np.ndarray:
    """Spectrum of H_N in the product order of local eigenvectors (unsorted)."""
    return _product_vector(np.asarray(h.energies, dtype=float), n, np.add)


def _local_sum_matrix(h: Hamiltonian, n: int) -> np.ndarray:
    d = h.dim
    total = np.zeros((d**n, d**n), dtype=complex)
    for k in range(n):
        total += np.kron(np.kron(np.eye(d**k), h.data), np.eye(d ** (n - k - 1)))
    return total


def extraction_unitary(p: OutcomeDistribution, h: Hamiltonian, n: int, cap: int | None = None) -> np.ndarray:
    """Global unitary taking rho_cg^{(x)n} to its passive state w.r.t. H_n.

    The k-th most populated product basis vector is sent to the k-th lowest
    product eigenvector of H_n (ties broken by index).
    """
    b = _basis(p.measurement)
    if b.shape[0] != h.dim:
        raise DimensionMismatch(f"measurement dimension {b.shape[0]} != Hamiltonian dimension {h.dim}")
    check_dimension(h.dim**n, cap, "extraction unitary")
    p_order, e_order = passive_order(copy_populations(p.probabilities, n), copy_energies(h, n))
    bn = kron_power(b, n)
    vn = kron_power(h.spectral.vectors, n)
    return vn[:, e_order] @ bn[:, p_order].conj().T


def _diagonalizes(basis: np.ndarray, h: Hamiltonian, tol: float = 1e-9) -> bool:
    hb = h.data @ basis
    diag = np.einsum("ki,ki->i", basis.conj(), hb)
    return float(np.max(np.abs(hb - basis * diag))) <= tol


def simulate_extraction(state, h: Hamiltonian, config: ProtocolConfig) -> WorkSamples:
    """Monte Carlo over phase draws of the full protocol.

    Trial t, copy k draws its phases from the stream (seed, "extract", t, k),
    so results do not depend on evaluation order.
    """
    rho = as_density(state)
    if rho.dim != h.dim:
        raise DimensionMismatch(f"state dimension {rho.dim} != Hamiltonian dimension {h.dim}")
    meas, n = config.measurement, config.copies
    check_dimension(rho.dim**n, config.cap, "N-copy state")
    dist = certify(rho, meas, config.certification, config.seed)
    u = extraction_unitary(dist, h, n, config.cap)
    rho_n = tensor_power(rho, n, config.cap).data
    h_n = _local_sum_matrix(h, n)
    e_initial = float(np.real(np.trace(h_n @ rho_n)))
    purity0 = float(np.real(np.vdot(rho_n, rho_n)))

    cg_n = tensor_power(dephase(rho, meas), n, config.cap).data
    exact_mean = e_initial - float(np.real(np.trace(h_n @ u @ cg_n @ u.conj().T)))

    samples = np.empty(config.trials)
    purity_err = 0.0
    for t in range(config.trials):
        phases = np.ones((1, 1), dtype=complex)
        for k in range(n):
            phases = np.kron(phases, random_phase_unitary(meas, stream(config.seed, "extract", t, k)))
        m = u @ phases
        sigma = m @ rho_n @ m.conj().T
        samples[t] = e_initial - float(np.real(np.trace(h_n @ sigma)))
        purity_err = max(purity_err, abs(float(np.real(np.vdot(sigma, sigma))) - purity0))

    mean = float(samples.mean())
    std_error = float(samples.std(ddof=1) / math.sqrt(config.trials)) if config.trials > 1 else 0.0
    certified = None
    if _diagonalizes(meas.basis, h):
        local = np.real(np.einsum("ki,kl,li->i", meas.basis.conj(), h.data, meas.basis))
        certified = n * float(dist.probabilities @ local)
    samples.setflags(write=False)
    return WorkSamples(samples, mean, std_error, exact_mean, config, dist, e_initial, purity_err, certified)


def mean_work(state, h: Hamiltonian, dist: OutcomeDistribution, n: int, cap: int | None = None) -> float:
    """Exact phase-averaged work <W_n> with U built from ``dist``.

    Works on d^n-long population vectors, so it is allowed up to cap**2.
    """
    rho = as_density(state)
    check_vector_length(h.dim**n, cap, "N-copy spectrum")
    true_p = outcome_distribution(rho, dist.measurement).probabilities
    p_order, e_order = passive_order(copy_populations(dist.probabilities, n), copy_energies(h, n))
    final = float(copy_populations(true_p, n)[p_order] @ copy_energies(h, n)[e_order])
    return n * rho.expectation(h.data) - final


def convergence_study(state, h: Hamiltonian, measurement: Measurement, n_max: int,
                      certification: int | str = EXACT, seed: int = 0, cap: int | None = None) -> ConvergenceReport:
    """Exact per-copy work for N = 1..n_max against the observational ergotropy."""
    rho = as_density(state)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    _basis(measurement)
    check_vector_length(h.dim**n_max, cap, "N-copy spectrum")
    dist = certify(rho, measurement, certification, seed)
    if certification == EXACT:
        ref = observational_ergotropy(rho, h, measurement)
    else:
        ref = work_at_entropy(rho, h, shannon_entropy(dist.probabilities), measurement)
    rows = []
    for n in range(1, n_max + 1):
        w = mean_work(rho, h, dist, n, cap) / n
        rows.append(ConvergenceRow(n, w, ref.work - w))
    return ConvergenceReport(rows, ref.work, ref.beta, ref.s_obs, dist)


def passive_marginal(p: OutcomeDistribution, h: Hamiltonian, n: int, copy: int | None = None,
                     cap: int | None = None) -> np.ndarray:
    """Single-copy populations (local energy eigenbasis) of the passive state of rho_cg^{(x)n}.

    ``copy=None`` averages the marginals over all copies, which makes the
    result independent of how ties inside degenerate levels of H_n are broken.
    """
    d = h.dim
    check_vector_length(d**n, cap, "N-copy spectrum")
    if len(p.probabilities) != d:
        raise DimensionMismatch(f"distribution has {len(p.probabilities)} outcomes, Hamiltonian dimension is {d}")
    pops = copy_populations(p.probabilities, n)
    p_order, e_order = passive_order(pops, copy_energies(h, n))
    passive = np.zeros_like(pops)
    passive[e_order] = pops[p_order]
    t = passive.reshape((d,) * n)
    axes = range(n) if copy is None else [copy]
    margs = [t.sum(axis=tuple(a for a in range(n) if a != k)) if n > 1 else t for k in axes]
    return np.mean(margs, axis=0)


def cooling_diagnostic(p: OutcomeDistribution, h: Hamiltonian, n: int, copy: int | None = None,
                       cap: int | None = None) -> CoolingResult:
    """Trace distance between the passive single-copy marginal and the entropy-matched thermal state."""
    beta = solve_beta(h, shannon_entropy(p.probabilities))
    pops = passive_marginal(p, h, n, copy, cap)
    v = h.spectral.vectors
    marginal = DensityMatrix._trusted((v * pops) @ v.conj().T)
    thermal = thermal_state(h, beta).state
    return CoolingResult(trace_distance(marginal, thermal), beta, marginal, thermal)
