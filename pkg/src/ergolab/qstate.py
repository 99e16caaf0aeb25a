"""Dense quantum states and the linear algebra every other module builds on.

Bipartite index convention: ``index = i_A * d_B + i_B`` (subsystem A is the
slowest index), the same ordering ``numpy.kron`` produces.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionCap,
    DimensionMismatch,
    MissingDims,
    NotHermitian,
    NotNormalized,
    NotPositive,
    TraceNotOne,
    ValidationError,
)

VALIDATION_TOL = 1e-9
DEFAULT_DIM_CAP = 4096


def dimension_cap(cap: int | None = None) -> int:
    """Largest Hilbert-space dimension dense constructions may allocate.

    An explicit ``cap`` wins, then the ``ERGOLAB_DIM_CAP`` environment
    variable, then :data:`DEFAULT_DIM_CAP`.
    """
    if cap is not None:
        return int(cap)
    env = os.environ.get("ERGOLAB_DIM_CAP")
    if env:
        return int(env)
    return DEFAULT_DIM_CAP


def check_dimension(dim: int, cap: int | None = None, what: str = "state") -> None:
    limit = dimension_cap(cap)
    if dim > limit:
        raise DimensionCap(
            f"{what} dimension {dim} exceeds the dimension cap {limit} "
            "(override with ERGOLAB_DIM_CAP)",
            requested=dim,
            cap=limit,
        )


def check_vector_length(length: int, cap: int | None = None, what: str = "spectrum") -> None:
    # diagonal-only computations store d^N numbers, a d^N x d^N matrix stores
    # d^2N; the same memory budget therefore admits cap**2 entries
    limit = dimension_cap(cap)
    if length > limit * limit:
        raise DimensionCap(
            f"{what} length {length} exceeds cap**2 = {limit * limit} "
            f"(dimension cap {limit}; override with ERGOLAB_DIM_CAP)",
            requested=length,
            cap=limit,
        )


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=complex)
    out.setflags(write=False)
    return out


def _check_dims(dims, dim):
    if dims is None:
        return None
    d_a, d_b = (int(x) for x in dims)
    if d_a < 1 or d_b < 1 or d_a * d_b != dim:
        raise ValidationError(f"dims {dims} inconsistent with dimension {dim}")
    return (d_a, d_b)


def _raw(x) -> np.ndarray:
    return x.data if hasattr(x, "data") else np.asarray(x)


class DensityMatrix:
    """Validated d x d density matrix, optionally annotated with a bipartition.

    The underlying array is read-only; operations return new objects.
    """

    __slots__ = ("data", "dims")

    def __init__(self, data, dims=None, *, tol: float = VALIDATION_TOL, validate: bool = True):
        arr = _frozen(data)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValidationError(f"density matrix must be square, got shape {arr.shape}")
        if validate:
            _validate_density_array(arr, tol)
        self.data = arr
        self.dims = _check_dims(dims, arr.shape[0])

    @classmethod
    def _trusted(cls, data, dims=None) -> "DensityMatrix":
        return cls(data, dims, validate=False)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def with_dims(self, dims) -> "DensityMatrix":
        return DensityMatrix._trusted(self.data, dims)

    def expectation(self, operator) -> float:
        return float(np.real(np.trace(_raw(operator) @ self.data)))

    def purity(self) -> float:
        return float(np.real(np.vdot(self.data, self.data)))

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim}, dims={self.dims})"


class PureState:
    __slots__ = ("amplitudes", "dims")

    def __init__(self, amplitudes, dims=None, *, tol: float = VALIDATION_TOL, normalize: bool = False):
        vec = np.array(amplitudes, dtype=complex).reshape(-1)
        norm = float(np.real(np.vdot(vec, vec)))
        if normalize:
            if norm == 0.0:
                raise NotNormalized("zero vector cannot be normalized", violation=1.0)
            vec = vec / np.sqrt(norm)
        elif abs(norm - 1.0) > tol:
            raise NotNormalized(
                f"state is not normalized: |<psi|psi> - 1| = {abs(norm - 1.0):.3e}",
                violation=abs(norm - 1.0),
            )
        vec.setflags(write=False)
        self.amplitudes = vec
        self.dims = _check_dims(dims, vec.shape[0])

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def density(self) -> DensityMatrix:
        return DensityMatrix._trusted(np.outer(self.amplitudes, self.amplitudes.conj()), self.dims)

    def __repr__(self):
        return f"PureState(dim={self.dim}, dims={self.dims})"


@dataclass(frozen=True)
class SpectralDecomposition:
    values: np.ndarray  # ascending
    vectors: np.ndarray  # columns

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T


def _validate_density_array(arr: np.ndarray, tol: float) -> None:
    herm = float(np.max(np.abs(arr - arr.conj().T))) if arr.size else 0.0
    if herm > tol:
        raise NotHermitian(f"not Hermitian: max |rho_ij - conj(rho_ji)| = {herm:.3e}", violation=herm)
    tr = complex(np.trace(arr))
    if abs(tr - 1.0) > tol:
        raise TraceNotOne(f"trace is {tr.real:.12g}, |tr - 1| = {abs(tr - 1.0):.3e}", violation=abs(tr - 1.0))
    lam_min = float(np.linalg.eigvalsh(0.5 * (arr + arr.conj().T))[0])
    if lam_min < -tol:
        raise NotPositive(f"not positive semidefinite: min eigenvalue {lam_min:.3e}", violation=-lam_min)


def validate_density(entries, tol: float = VALIDATION_TOL, dims=None) -> DensityMatrix:
    """Check Hermiticity, unit trace and positivity; raise naming the violation.

    The input is copied, never modified.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    return DensityMatrix(entries, dims, tol=tol)


def as_density(state) -> DensityMatrix:
    if isinstance(state, DensityMatrix):
        return state
    if isinstance(state, PureState):
        return state.density()
    return DensityMatrix(state)


def partial_trace(state, keep: str = "A") -> DensityMatrix:
    """Reduced state of subsystem ``keep`` ("A" or "B")."""
    rho = as_density(state)
    if rho.dims is None:
        raise MissingDims("partial trace needs a bipartition (dims) annotation")
    d_a, d_b = rho.dims
    t = rho.data.reshape(d_a, d_b, d_a, d_b)
    if keep == "A":
        red = np.einsum("ijkj->ik", t)
    elif keep == "B":
        red = np.einsum("ijil->jl", t)
    else:
        raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")
    return DensityMatrix._trusted(red)


def tensor_product(a, b, cap: int | None = None) -> DensityMatrix:
    a, b = as_density(a), as_density(b)
    check_dimension(a.dim * b.dim, cap, "tensor product")
    return DensityMatrix._trusted(np.kron(a.data, b.data), (a.dim, b.dim))


def tensor_power(a, n: int, cap: int | None = None) -> DensityMatrix:
    """``a`` tensored with itself ``n`` times.

    For n >= 2 the result is annotated as (first copy, remaining copies).
    """
    a = as_density(a)
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return a
    check_dimension(a.dim**n, cap, "tensor power")
    out = a.data
    for _ in range(n - 1):
        out = np.kron(out, a.data)
    return DensityMatrix._trusted(out, (a.dim, a.dim ** (n - 1)))


def kron_power(m: np.ndarray, n: int) -> np.ndarray:
    out = m
    for _ in range(n - 1):
        out = np.kron(out, m)
    return out


def spectral(matrix, tol: float = VALIDATION_TOL) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    m = np.asarray(_raw(matrix), dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"matrix must be square, got shape {m.shape}")
    herm = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    if herm > tol:
        raise NotHermitian(f"not Hermitian: max |M_ij - conj(M_ji)| = {herm:.3e}", violation=herm)
    values, vectors = np.linalg.eigh(0.5 * (m + m.conj().T))
    return SpectralDecomposition(values, vectors)


def dephase(state, measurement) -> DensityMatrix:
    """Coarse-grained state sum_i P_i rho P_i."""
    rho = as_density(state)
    if measurement.dim != rho.dim:
        raise DimensionMismatch(f"measurement dimension {measurement.dim} != state dimension {rho.dim}")
    if measurement.basis is not None:
        b = measurement.basis
        p = np.real(np.einsum("ki,kl,li->i", b.conj(), rho.data, b))
        out = (b * p) @ b.conj().T
    else:
        out = sum(P @ rho.data @ P for P in measurement.projectors)
    return DensityMatrix._trusted(out, rho.dims)


def trace_distance(a, b) -> float:
    diff = _raw(as_density(a)) - _raw(as_density(b))
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))


# -- fixtures used by tests, docs and the CLI generators ---------------------

def bell_state() -> PureState:
    """(|00> + |11>)/sqrt(2)."""
    v = np.zeros(4, dtype=complex)
    v[0] = v[3] = 1 / np.sqrt(2)
    return PureState(v, (2, 2))


def werner_state(p: float) -> DensityMatrix:
    """p |Psi-><Psi-| + (1 - p) I/4 on two qubits."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"Werner weight must lie in [0, 1], got {p}")
    psi = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
    rho = p * np.outer(psi, psi.conj()) + (1 - p) * np.eye(4) / 4
    return DensityMatrix(rho, (2, 2))


def random_pure_state(dim: int, rng: np.random.Generator, dims=None) -> PureState:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return PureState(v, dims, normalize=True)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None, dims=None) -> DensityMatrix:
    """Hilbert-Schmidt (Ginibre) random state of the given rank."""
    k = dim if rank is None else rank
    g = rng.standard_normal((dim, k)) + 1j * rng.standard_normal((dim, k))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    return DensityMatrix(0.5 * (rho + rho.conj().T), dims)
