"""Thermal states, the entropy-matching temperature solver and ergotropy.

Temperatures are restricted to beta in [0, +inf]; ``math.inf`` is the
zero-temperature sentinel (uniform mixture over the ground eigenspace).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .entropy import Measurement, entanglement_entropy, observational_entropy, schmidt
from .errors import DegenerateSpectrum, DimensionMismatch, EntropyOutOfRange, NotHermitian
from .qstate import (
    DensityMatrix,
    PureState,
    SpectralDecomposition,
    as_density,
    check_dimension,
    spectral,
)

HERMITIAN_TOL = 1e-10
BETA_CAP = 1e6
ENTROPY_SLACK = 1e-9


class Hamiltonian:
    """Hermitian observable with its spectral decomposition computed once."""

    __slots__ = ("data", "dims", "spectral")

    def __init__(self, entries, dims=None, *, _spectral: SpectralDecomposition | None = None):
        arr = np.array(entries, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise NotHermitian(f"Hamiltonian must be square, got shape {arr.shape}")
        err = float(np.max(np.abs(arr - arr.conj().T))) if arr.size else 0.0
        if err > HERMITIAN_TOL:
            raise NotHermitian(f"Hamiltonian not Hermitian: max |H_ij - conj(H_ji)| = {err:.3e}", violation=err)
        arr = 0.5 * (arr + arr.conj().T)
        arr.setflags(write=False)
        self.data = arr
        self.dims = tuple(dims) if dims is not None else None
        self.spectral = _spectral if _spectral is not None else spectral(arr)
        self.spectral.values.setflags(write=False)
        self.spectral.vectors.setflags(write=False)

    @classmethod
    def diagonal(cls, energies, dims=None) -> "Hamiltonian":
        return cls(np.diag(np.asarray(energies, dtype=float)), dims)

    @classmethod
    def local_sum(cls, terms: Sequence["Hamiltonian"], cap: int | None = None) -> "Hamiltonian":
        """sum_k I x ... x h_k x ... x I, diagonalized from the local spectra."""
        dims = [t.dim for t in terms]
        total = int(np.prod(dims))
        check_dimension(total, cap, "local-sum Hamiltonian")
        energies = np.zeros(1)
        vectors = np.ones((1, 1), dtype=complex)
        entries = np.zeros((1, 1), dtype=complex)
        for t in terms:
            energies = (energies[:, None] + t.spectral.values[None, :]).ravel()
            vectors = np.kron(vectors, t.spectral.vectors)
            entries = np.kron(entries, np.eye(t.dim)) + np.kron(np.eye(entries.shape[0]), t.data)
        order = np.argsort(energies, kind="stable")
        spec = SpectralDecomposition(energies[order], vectors[:, order])
        bip = (dims[0], total // dims[0]) if len(dims) >= 2 else None
        return cls(entries, bip, _spectral=spec)

    @classmethod
    def copies(cls, h: "Hamiltonian", n: int, cap: int | None = None) -> "Hamiltonian":
        """Total Hamiltonian of n non-interacting copies."""
        return h if n == 1 else cls.local_sum([h] * n, cap)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def energies(self) -> np.ndarray:
        return self.spectral.values

    def gaps(self) -> np.ndarray:
        """E_k - E_0 with numerically degenerate ground levels snapped to 0."""
        e = self.spectral.values
        g = e - e[0]
        tol = 1e-10 * max(1.0, float(np.max(np.abs(e))))
        return np.where(g <= tol, 0.0, g)

    @property
    def ground_degeneracy(self) -> int:
        return int(np.count_nonzero(self.gaps() == 0.0))

    def __repr__(self):
        return f"Hamiltonian(dim={self.dim}, dims={self.dims})"


@dataclass(frozen=True)
class ThermalState:
    beta: float
    hamiltonian: Hamiltonian
    populations: np.ndarray  # on ascending energies
    state: DensityMatrix
    partition_function: float  # ground-shifted: sum_k exp(-beta (E_k - E_0))
    log_partition: float  # ln of the unshifted Z

    @property
    def energy(self) -> float:
        return float(self.populations @ self.hamiltonian.energies)


def _weights(h: Hamiltonian, beta: float) -> np.ndarray:
    g = h.gaps()
    if beta < 0 or math.isnan(beta):
        raise ValueError(f"beta must be >= 0 or +inf, got {beta}")
    if math.isinf(beta):
        return (g == 0.0).astype(float)
    return np.exp(-beta * g)


def thermal_state(h: Hamiltonian, beta: float) -> ThermalState:
    w = _weights(h, beta)
    z = float(w.sum())
    q = w / z
    v = h.spectral.vectors
    rho = DensityMatrix._trusted((v * q) @ v.conj().T, h.dims)
    e0 = float(h.energies[0])
    if math.isinf(beta):
        log_z = -math.copysign(math.inf, e0) if e0 != 0 else math.log(z)
    else:
        log_z = math.log(z) - beta * e0
    return ThermalState(float(beta), h, q, rho, z, log_z)


def thermal_entropy(h: Hamiltonian, beta: float) -> float:
    """S(rho_beta) evaluated as beta <E - E_0> + ln Z' for relative accuracy at large beta."""
    g = h.gaps()
    g0 = int(np.count_nonzero(g == 0.0))
    if math.isinf(beta):
        return math.log(g0)
    if beta < 0 or math.isnan(beta):
        raise ValueError(f"beta must be >= 0 or +inf, got {beta}")
    w = np.exp(-beta * g)
    excited = float(w[g > 0].sum())
    z = g0 + excited
    mean_gap = float((g * w).sum()) / z
    return beta * mean_gap + math.log(g0) + math.log1p(excited / g0)


def entropy_range(h: Hamiltonian) -> tuple[float, float]:
    """Attainable thermal entropies for beta in [0, +inf]: [ln g_0, ln d]."""
    return math.log(h.ground_degeneracy), math.log(h.dim)


def solve_beta(h: Hamiltonian, s_target: float) -> float:
    """Inverse temperature beta >= 0 with S(rho_beta) = s_target.

    Bracketing by doubling beta from 1, then bisection; thermal entropy is
    monotone in beta so the search is globally convergent.
    """
    s_lo, s_hi = entropy_range(h)
    if h.ground_degeneracy == h.dim:
        if abs(s_target - s_hi) <= ENTROPY_SLACK:
            return 0.0
        raise DegenerateSpectrum(
            f"Hamiltonian is proportional to the identity; only S = ln d = {s_hi!r} is attainable",
            s_target=s_target,
            attainable=(s_hi, s_hi),
        )
    if s_target > s_hi + ENTROPY_SLACK or s_target < s_lo - ENTROPY_SLACK:
        raise EntropyOutOfRange(
            f"target entropy {s_target!r} outside attainable range [{s_lo!r}, {s_hi!r}]",
            s_target=s_target,
            attainable=(s_lo, s_hi),
        )
    if s_target >= s_hi:
        return 0.0
    if s_target <= s_lo:
        return math.inf

    lo, hi = 0.0, 1.0
    while thermal_entropy(h, hi) > s_target:
        lo = hi
        hi *= 2.0
        if hi > BETA_CAP:
            if thermal_entropy(h, BETA_CAP) - s_target < 1e-8:
                return math.inf
            raise EntropyOutOfRange(
                f"no beta <= {BETA_CAP:g} reaches entropy {s_target!r}",
                s_target=s_target,
                attainable=(s_lo, s_hi),
            )
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if thermal_entropy(h, mid) > s_target:
            lo = mid
        else:
            hi = mid
    r_lo = abs(thermal_entropy(h, lo) - s_target)
    r_hi = abs(thermal_entropy(h, hi) - s_target)
    return lo if r_lo <= r_hi else hi


# -- passive states and ergotropy ---------------------------------------------

@dataclass(frozen=True)
class PassiveTransform:
    passive_state: DensityMatrix
    unitary: np.ndarray
    extracted: float


def passive_order(populations, energies) -> tuple[np.ndarray, np.ndarray]:
    """Index orders pairing populations (descending) with energies (ascending).

    Ties are broken by index in both sorts.
    """
    p_order = np.argsort(-np.asarray(populations), kind="stable")
    e_order = np.argsort(np.asarray(energies), kind="stable")
    return p_order, e_order


def passive_energy(populations, energies) -> float:
    p_order, e_order = passive_order(populations, energies)
    return float(np.asarray(populations)[p_order] @ np.asarray(energies)[e_order])


def _check_dims_match(rho: DensityMatrix, h: Hamiltonian) -> None:
    if rho.dim != h.dim:
        raise DimensionMismatch(f"state dimension {rho.dim} != Hamiltonian dimension {h.dim}")


def passive_transform(state, h: Hamiltonian) -> PassiveTransform:
    rho = as_density(state)
    _check_dims_match(rho, h)
    r, rv = np.linalg.eigh(rho.data)
    r = np.clip(r, 0.0, None)
    p_order = np.argsort(-r, kind="stable")
    e, ev = h.energies, h.spectral.vectors
    unitary = ev @ rv[:, p_order].conj().T
    pops = r[p_order]
    passive = DensityMatrix._trusted((ev * pops) @ ev.conj().T, rho.dims)
    extracted = rho.expectation(h.data) - float(pops @ e)
    if -1e-10 < extracted < 0.0:
        extracted = 0.0
    return PassiveTransform(passive, unitary, extracted)


def ergotropy(state, h: Hamiltonian) -> float:
    return passive_transform(state, h).extracted


@dataclass(frozen=True)
class ObservationalErgotropy:
    work: float
    beta: float
    s_obs: float
    e_initial: float
    e_final: float
    measurement: Measurement | None = None

    @property
    def poorly_matched(self) -> bool:
        """Negative work: the measurement reveals less than a thermal state would."""
        return self.work < 0.0


def work_at_entropy(state, h: Hamiltonian, s: float, measurement: Measurement | None = None) -> ObservationalErgotropy:
    """tr[H rho] - tr[H rho_beta] with beta fixed by S(rho_beta) = s."""
    rho = as_density(state)
    _check_dims_match(rho, h)
    e_initial = rho.expectation(h.data)
    if h.ground_degeneracy == h.dim:
        # H proportional to I: every state has the same energy and no
        # temperature is singled out
        return ObservationalErgotropy(0.0, math.nan, s, e_initial, float(h.energies[0]), measurement)
    beta = solve_beta(h, s)
    e_final = thermal_state(h, beta).energy
    return ObservationalErgotropy(e_initial - e_final, beta, s, e_initial, e_final, measurement)


def observational_ergotropy(state, h: Hamiltonian, measurement: Measurement) -> ObservationalErgotropy:
    rho = as_density(state)
    _check_dims_match(rho, h)
    return work_at_entropy(rho, h, observational_entropy(rho, measurement), measurement)


def entanglement_ergotropy(state: PureState, h: Hamiltonian) -> ObservationalErgotropy:
    """Observational ergotropy at the local Schmidt basis; s_obs is the entanglement entropy."""
    meas = schmidt(state).product_measurement().measurement()
    return work_at_entropy(state, h, entanglement_entropy(state), meas)
