"""Von Neumann, observational and entanglement entropies (all in nats)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidMeasurement, MissingDims, NotUnitary, ValidationError
from .qstate import DensityMatrix, PureState, as_density, partial_trace

MEASUREMENT_TOL = 1e-10
PROBABILITY_FLOOR = 1e-15
EIGENVALUE_CLAMP = 1e-9


def _check_unitary(u: np.ndarray, tol: float, name: str = "basis") -> np.ndarray:
    u = np.array(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise NotUnitary(f"{name} must be a square matrix of columns, got shape {u.shape}")
    err = float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))
    if err > tol:
        raise NotUnitary(f"{name} columns are not orthonormal: max |U^dag U - I| = {err:.3e}", violation=err)
    u.setflags(write=False)
    return u


class Measurement:
    """Projective measurement: orthogonal projectors summing to the identity.

    Rank-1 measurements are stored by their basis (columns) and never
    materialize the d projectors unless asked for them.
    """

    def __init__(self, projectors, labels=None, *, tol: float = MEASUREMENT_TOL):
        ps = [np.array(p, dtype=complex) for p in projectors]
        if not ps:
            raise InvalidMeasurement("measurement needs at least one projector")
        d = ps[0].shape[0]
        ident = np.eye(d)
        total = np.zeros((d, d), dtype=complex)
        for i, p in enumerate(ps):
            if p.shape != (d, d):
                raise InvalidMeasurement(f"projector {i} has shape {p.shape}, expected {(d, d)}")
            err = max(float(np.max(np.abs(p @ p - p))), float(np.max(np.abs(p - p.conj().T))))
            if err > tol:
                raise InvalidMeasurement(f"projector {i} is not an orthogonal projector (error {err:.3e})", violation=err)
            total += p
        for i in range(len(ps)):
            for j in range(i + 1, len(ps)):
                err = float(np.max(np.abs(ps[i] @ ps[j])))
                if err > tol:
                    raise InvalidMeasurement(f"projectors {i} and {j} are not orthogonal (|P_i P_j| = {err:.3e})", violation=err)
        err = float(np.max(np.abs(total - ident)))
        if err > tol:
            raise InvalidMeasurement(f"projectors do not sum to identity (error {err:.3e})", violation=err)
        volumes = [int(round(np.trace(p).real)) for p in ps]
        if any(v < 1 for v in volumes):
            raise InvalidMeasurement("every projector must have rank >= 1")
        for p in ps:
            p.setflags(write=False)
        self._projectors = ps
        self.dim = d
        self.volumes = np.array(volumes, dtype=int)
        self.labels = list(labels) if labels is not None else None
        self.basis = None
        self.dims = None
        if np.all(self.volumes == 1):
            cols = np.column_stack([np.linalg.eigh(p)[1][:, -1] for p in ps])
            cols.setflags(write=False)
            self.basis = cols

    @classmethod
    def from_basis(cls, columns, labels=None, dims=None, *, tol: float = MEASUREMENT_TOL) -> "Measurement":
        u = _check_unitary(columns, tol)
        self = cls.__new__(cls)
        self._projectors = None
        self.dim = u.shape[0]
        self.volumes = np.ones(self.dim, dtype=int)
        self.labels = list(labels) if labels is not None else None
        self.basis = u
        self.dims = tuple(dims) if dims is not None else None
        return self

    @classmethod
    def computational(cls, dim: int, dims=None) -> "Measurement":
        return cls.from_basis(np.eye(dim), dims=dims)

    @property
    def rank_one(self) -> bool:
        return self.basis is not None

    @property
    def projectors(self) -> list[np.ndarray]:
        if self._projectors is None:
            b = self.basis
            return [np.outer(b[:, i], b[:, i].conj()) for i in range(self.dim)]
        return self._projectors

    def __len__(self):
        return len(self.volumes)

    def __repr__(self):
        kind = "basis" if self.basis is not None else "pvm"
        return f"Measurement({kind}, dim={self.dim}, outcomes={len(self)})"


@dataclass(frozen=True)
class ProductMeasurement:
    """Local basis C_A x C_B; outcome (i, j) has index i * d_B + j."""

    basis_A: np.ndarray
    basis_B: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "basis_A", _check_unitary(self.basis_A, MEASUREMENT_TOL, "basis_A"))
        object.__setattr__(self, "basis_B", _check_unitary(self.basis_B, MEASUREMENT_TOL, "basis_B"))

    @property
    def dims(self) -> tuple[int, int]:
        return (self.basis_A.shape[0], self.basis_B.shape[0])

    def measurement(self) -> Measurement:
        return Measurement.from_basis(np.kron(self.basis_A, self.basis_B), dims=self.dims)


@dataclass(frozen=True)
class OutcomeDistribution:
    probabilities: np.ndarray
    measurement: Measurement | None = None
    samples: int | None = None  # None: exact probabilities

    def joint(self) -> np.ndarray:
        """Probabilities reshaped to p_ij for a product measurement."""
        dims = getattr(self.measurement, "dims", None)
        if dims is None:
            raise MissingDims("distribution does not come from a bipartite measurement")
        return self.probabilities.reshape(dims)

    @property
    def volumes(self) -> np.ndarray:
        if self.measurement is None:
            return np.ones(len(self.probabilities), dtype=int)
        return self.measurement.volumes


@dataclass(frozen=True)
class SchmidtDecomposition:
    coefficients: np.ndarray  # populations lambda_i, descending, length min(d_A, d_B)
    basis_A: np.ndarray  # d_A x d_A, first columns paired with basis_B
    basis_B: np.ndarray
    dims: tuple[int, int] = field(default=(1, 1))

    def reconstruct(self) -> np.ndarray:
        r = len(self.coefficients)
        vec = np.zeros(self.dims[0] * self.dims[1], dtype=complex)
        for i in range(r):
            vec += np.sqrt(self.coefficients[i]) * np.kron(self.basis_A[:, i], self.basis_B[:, i])
        return vec

    def product_measurement(self) -> ProductMeasurement:
        return ProductMeasurement(self.basis_A, self.basis_B)


# -- entropy functionals ------------------------------------------------------

def shannon_entropy(p, volumes=None) -> float:
    """-sum p ln(p / V), terms with p below 1e-15 dropped."""
    p = np.asarray(p, dtype=float)
    keep = p > PROBABILITY_FLOOR
    if volumes is None:
        return float(-np.sum(p[keep] * np.log(p[keep])))
    v = np.asarray(volumes, dtype=float)
    return float(-np.sum(p[keep] * np.log(p[keep] / v[keep])))


def spectrum_entropy(values) -> float:
    lam = np.asarray(values, dtype=float)
    if np.any(lam < -EIGENVALUE_CLAMP):
        raise ValidationError(f"negative eigenvalue {lam.min():.3e} below clamp threshold")
    return shannon_entropy(np.clip(lam, 0.0, None))


def von_neumann_entropy(state) -> float:
    rho = as_density(state)
    return spectrum_entropy(np.linalg.eigvalsh(rho.data))


def _check_match(rho: DensityMatrix, measurement: Measurement) -> None:
    if measurement.dim != rho.dim:
        raise DimensionMismatch(f"measurement dimension {measurement.dim} != state dimension {rho.dim}")


def outcome_distribution(state, measurement: Measurement) -> OutcomeDistribution:
    rho = as_density(state)
    _check_match(rho, measurement)
    if measurement.basis is not None:
        b = measurement.basis
        p = np.real(np.einsum("ki,kl,li->i", b.conj(), rho.data, b))
    else:
        p = np.array([np.real(np.trace(P @ rho.data)) for P in measurement.projectors])
    p = np.where(p < 0.0, 0.0, p)
    p.setflags(write=False)
    return OutcomeDistribution(p, measurement)


def observational_entropy(state, measurement: Measurement) -> float:
    dist = outcome_distribution(state, measurement)
    return shannon_entropy(dist.probabilities, measurement.volumes)


def schmidt(state: PureState) -> SchmidtDecomposition:
    """Schmidt decomposition from the SVD of the d_A x d_B amplitude matrix."""
    if state.dims is None:
        raise MissingDims("Schmidt decomposition needs a bipartition (dims) annotation")
    d_a, d_b = state.dims
    u, s, vh = np.linalg.svd(state.amplitudes.reshape(d_a, d_b), full_matrices=True)
    lam = s**2
    return SchmidtDecomposition(lam, u, vh.T, (d_a, d_b))


def _as_pure(state) -> PureState:
    if isinstance(state, PureState):
        return state
    rho = as_density(state)
    if rho.dims is None:
        raise MissingDims("entanglement entropy needs a bipartition (dims) annotation")
    vals, vecs = np.linalg.eigh(rho.data)
    if abs(vals[-1] - 1.0) > 1e-9:
        raise ValidationError(f"state is not pure (largest eigenvalue {vals[-1]:.12g})")
    return PureState(vecs[:, -1], rho.dims, normalize=True)


def entanglement_entropy(state, subsystem: str = "A") -> float:
    """Von Neumann entropy of the reduced state of a bipartite pure state."""
    psi = _as_pure(state)
    if psi.dims is None:
        raise MissingDims("entanglement entropy needs a bipartition (dims) annotation")
    return von_neumann_entropy(partial_trace(psi, keep=subsystem))
