"""Minimization of observational entropy over local product bases.

For a pure state the minimum is the entanglement entropy; for a mixed state
the excess over the von Neumann entropy is the quantum correlation entropy.
The landscape is non-convex, so the search restarts from several initial
bases and reports how many restarts agree on the best value.

Two strategies are available:

``givens_sweeps``
    Cyclic sweeps over complex Givens rotations (one angle, one phase per
    plane) of each local basis, alternating subsystems. Within one plane the
    entropy depends on a unit vector n on the sphere; it is minimized by a
    Fibonacci-grid scan followed by a Riemannian Newton polish. Alternating
    sides crawls along coupled valleys, so every sweep ends with a
    Hooke-Jeeves pattern move that extrapolates the sweep's net rotation.
``exp_map_gradient``
    Riemannian steepest descent on U(d_A) x U(d_B) along the exponential map
    with Armijo backtracking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .entropy import PROBABILITY_FLOOR, ProductMeasurement, shannon_entropy, von_neumann_entropy
from .errors import DimensionCap, MissingDims
from .qstate import DensityMatrix, as_density, partial_trace
from .streams import stream

STRATEGIES = ("givens_sweeps", "exp_map_gradient")
MAX_LOCAL_DIM = 8
AGREEMENT_TOL = 1e-8


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 16
    max_sweeps: int = 200
    tol: float = 1e-10
    seed: int = 0
    strategy: str = "givens_sweeps"

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")


@dataclass(frozen=True)
class LocalMinResult:
    s_min: float
    basis: ProductMeasurement
    restarts_agreeing: int
    converged: bool
    history: tuple[float, ...]
    sweeps: tuple[int, ...]


@dataclass(frozen=True)
class QuantumCorrelation:
    s_qc: float
    s_min: float
    s_vn: float
    basis: ProductMeasurement
    result: LocalMinResult


def haar_random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary: QR of a complex Ginibre matrix, phases fixed by diag(R)."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def product_entropy(rho: np.ndarray, ua: np.ndarray, ub: np.ndarray) -> float:
    w = np.kron(ua, ub)
    p = np.real(np.einsum("kn,kl,ln->n", w.conj(), rho, w))
    return shannon_entropy(p)


def _eta(q: np.ndarray) -> np.ndarray:
    safe = np.where(q > PROBABILITY_FLOOR, q, 1.0)
    return np.where(q > PROBABILITY_FLOOR, -q * np.log(safe), 0.0)


def _fibonacci_sphere(n: int) -> np.ndarray:
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    r = np.sqrt(1.0 - z * z)
    phi = np.pi * (3.0 - np.sqrt(5.0)) * k
    return np.column_stack([z, r * np.cos(phi), r * np.sin(phi)])


_SPHERE = _fibonacci_sphere(96)


class _Problem:
    """The state reshaped for cheap local updates."""

    def __init__(self, rho: DensityMatrix):
        self.rho = rho.data
        self.d_a, self.d_b = rho.dims
        self.rho4 = rho.data.reshape(self.d_a, self.d_b, self.d_a, self.d_b)

    def entropy(self, ua, ub) -> float:
        return product_entropy(self.rho, ua, ub)

    def conditional(self, side: str, ua, ub) -> np.ndarray:
        """Unnormalized operators on ``side`` conditioned on each outcome of the other side."""
        if side == "A":
            return np.einsum("xb,ixjy,yb->bij", ub.conj(), self.rho4, ub)
        return np.einsum("xa,xiyj,ya->aij", ua.conj(), self.rho4, ua)


def _plane_terms(ops, x, y):
    a = np.real(np.einsum("i,bij,j->b", x.conj(), ops, x))
    c = np.real(np.einsum("i,bij,j->b", y.conj(), ops, y))
    z = np.einsum("i,bij,j->b", x.conj(), ops, y)
    return 0.5 * (a + c), np.stack([0.5 * (a - c), z.real, z.imag])


def _plane_value(m, r, n) -> np.ndarray:
    s = np.atleast_2d(n) @ r
    return np.sum(_eta(m + s) + _eta(m - s), axis=1)


def _tangent_basis(n: np.ndarray) -> np.ndarray:
    x, y, z = n
    if abs(x) < 0.9:
        e1 = np.array([0.0, z, -y])  # n x (1, 0, 0)
    else:
        e1 = np.array([-z, 0.0, x])  # n x (0, 1, 0)
    e1 /= np.sqrt(e1 @ e1)
    e2 = np.array([y * e1[2] - z * e1[1], z * e1[0] - x * e1[2], x * e1[1] - y * e1[0]])
    return np.column_stack([e1, e2])


def _best_direction(m, r) -> tuple[np.ndarray, float]:
    """Minimize the plane objective over the unit sphere: grid scan, then Newton."""
    vals = _plane_value(m, r, _SPHERE)
    i = int(np.argmin(vals))
    n, fn = _SPHERE[i].copy(), float(vals[i])
    for _ in range(60):
        s = r.T @ n
        q1 = np.maximum(m + s, PROBABILITY_FLOOR)
        q2 = np.maximum(m - s, PROBABILITY_FLOOR)
        grad = r @ (np.log(q2) - np.log(q1))
        b = _tangent_basis(n)
        g = b.T @ grad
        rb = b.T @ r
        h = -(rb * (1.0 / q1 + 1.0 / q2)) @ rb.T - float(n @ grad) * np.eye(2)
        det = h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]
        if h[0, 0] > 0 and det > 0:
            step = -np.array([h[1, 1] * g[0] - h[0, 1] * g[1], h[0, 0] * g[1] - h[1, 0] * g[0]]) / det
            decrement = -float(step @ g)
        else:
            step, decrement = -g, float(g @ g)
        if decrement < 1e-15:
            break
        alpha = 1.0
        while alpha > 1e-10:
            trial = n + b @ (alpha * step)
            trial /= np.sqrt(trial @ trial)
            ft = float(_plane_value(m, r, trial)[0])
            if ft < fn:
                break
            alpha *= 0.25
        else:
            break
        done = fn - ft < 1e-15
        n, fn = trial, ft
        if done:
            break
    return n, fn


def _rotate(u: np.ndarray, j: int, k: int, n: np.ndarray) -> np.ndarray:
    t = float(np.arccos(np.clip(n[0], -1.0, 1.0)))
    phi = float(np.arctan2(n[2], n[1]))
    c, s = np.cos(t / 2), np.sin(t / 2)
    x, y = u[:, j].copy(), u[:, k].copy()
    out = u.copy()
    out[:, j] = c * x + np.exp(-1j * phi) * s * y
    out[:, k] = -np.exp(1j * phi) * s * x + c * y
    return out


def _generator(u_new: np.ndarray, u_old: np.ndarray) -> np.ndarray:
    """Anti-Hermitian K with exp(K) = u_new u_old^dag."""
    vals, vecs = np.linalg.eig(u_new @ u_old.conj().T)
    return (vecs * (1j * np.angle(vals))) @ np.linalg.inv(vecs)


def _pattern_move(prob: _Problem, ua, ub, ua_old, ub_old, s):
    """Extrapolate the net rotation of the last sweep on both sides at once."""
    ka, kb = _generator(ua, ua_old), _generator(ub, ub_old)
    best = (ua, ub, s)
    t = 1.0
    while t <= 64.0:
        na, nb = expm(t * ka) @ ua, expm(t * kb) @ ub
        sn = prob.entropy(na, nb)
        if sn >= best[2]:
            break
        best = (na, nb, sn)
        t *= 2.0
    return best


def _givens_sweeps(prob: _Problem, ua, ub, config: OptimizerConfig):
    s = prob.entropy(ua, ub)
    identity = np.array([1.0, 0.0, 0.0])
    for sweep in range(1, config.max_sweeps + 1):
        ua_old, ub_old = ua, ub
        for side in ("A", "B"):
            ops = prob.conditional(side, ua, ub)
            u = ua if side == "A" else ub
            d = u.shape[0]
            for j in range(d):
                for k in range(j + 1, d):
                    m, r = _plane_terms(ops, u[:, j], u[:, k])
                    f0 = float(_plane_value(m, r, identity)[0])
                    n, fbest = _best_direction(m, r)
                    if f0 - fbest > config.tol:
                        u = _rotate(u, j, k, n)
            if side == "A":
                ua = u
            else:
                ub = u
        s_new = prob.entropy(ua, ub)
        if s - s_new < config.tol:
            return ua, ub, min(s, s_new), sweep, True
        ua, ub, s = _pattern_move(prob, ua, ub, ua_old, ub_old, s_new)
    return ua, ub, s, config.max_sweeps, False


def _gradient(prob: _Problem, ua, ub):
    w = np.kron(ua, ub)
    sigma = w.conj().T @ prob.rho @ w
    p = np.real(np.diag(sigma))
    logp = np.log(np.maximum(p, PROBABILITY_FLOOR))
    g = (logp[:, None] - logp[None, :]) * sigma
    g4 = g.reshape(prob.d_a, prob.d_b, prob.d_a, prob.d_b)
    return np.einsum("ijkj->ik", g4), np.einsum("ijil->jl", g4)


def _exp_map_gradient(prob: _Problem, ua, ub, config: OptimizerConfig):
    s = prob.entropy(ua, ub)
    planes = max(1, (prob.d_a * (prob.d_a - 1) + prob.d_b * (prob.d_b - 1)) // 2)
    budget = config.max_sweeps * planes
    t = 1.0
    for it in range(1, budget + 1):
        ga, gb = _gradient(prob, ua, ub)
        gnorm2 = float(np.sum(np.abs(ga) ** 2) + np.sum(np.abs(gb) ** 2))
        if gnorm2 < 1e-24:
            return ua, ub, s, it, True
        t = min(2.0 * t, 10.0)
        while True:
            na = ua @ expm(-t * ga)
            nb = ub @ expm(-t * gb)
            s_new = prob.entropy(na, nb)
            if s_new <= s - 1e-4 * t * gnorm2:
                break
            t *= 0.5
            if t < 1e-16:
                return ua, ub, s, it, True
        ua, ub = na, nb
        if s - s_new < config.tol:
            return ua, ub, s_new, it, True
        s = s_new
    return ua, ub, s, budget, False


def _reduced_eigenbasis(rho: DensityMatrix, keep: str) -> np.ndarray:
    vals, vecs = np.linalg.eigh(partial_trace(rho, keep).data)
    return vecs[:, np.argsort(-vals, kind="stable")]


def minimize_obs_entropy_product(state, config: OptimizerConfig | None = None) -> LocalMinResult:
    """Smallest observational entropy found over product bases C_A x C_B.

    Restart 0 starts from the eigenbases of the reduced states (exact for
    pure states); restart r >= 1 starts from a Haar-random pair drawn from
    the stream (seed, "localopt", r).
    """
    config = config or OptimizerConfig()
    rho = as_density(state)
    if rho.dims is None:
        raise MissingDims("local minimization needs a bipartition (dims) annotation")
    d_a, d_b = rho.dims
    if max(d_a, d_b) > MAX_LOCAL_DIM:
        raise DimensionCap(f"local dimensions {rho.dims} exceed {MAX_LOCAL_DIM}", requested=max(d_a, d_b), cap=MAX_LOCAL_DIM)
    prob = _Problem(rho)
    run = _givens_sweeps if config.strategy == "givens_sweeps" else _exp_map_gradient

    history, sweeps, bases, flags = [], [], [], []
    for r in range(config.restarts):
        if r == 0:
            ua, ub = _reduced_eigenbasis(rho, "A"), _reduced_eigenbasis(rho, "B")
        else:
            rng = stream(config.seed, "localopt", r)
            ua, ub = haar_random_unitary(d_a, rng), haar_random_unitary(d_b, rng)
        ua, ub, _, n_sweeps, ok = run(prob, ua, ub, config)
        # re-orthonormalize accumulated rounding before reporting
        ua, ub = np.linalg.qr(ua)[0], np.linalg.qr(ub)[0]
        history.append(prob.entropy(ua, ub))
        sweeps.append(n_sweeps)
        bases.append((ua, ub))
        flags.append(ok)

    best = int(np.argmin(history))
    s_min = history[best]
    agreeing = sum(1 for h in history if h - s_min <= AGREEMENT_TOL)
    return LocalMinResult(
        s_min=s_min,
        basis=ProductMeasurement(*bases[best]),
        restarts_agreeing=agreeing,
        converged=all(flags),
        history=tuple(history),
        sweeps=tuple(sweeps),
    )


def quantum_correlation_entropy(state, config: OptimizerConfig | None = None) -> QuantumCorrelation:
    """Minimal product-basis observational entropy minus the von Neumann entropy."""
    rho = as_density(state)
    res = minimize_obs_entropy_product(rho, config)
    s_vn = von_neumann_entropy(rho)
    s_qc = res.s_min - s_vn
    if -1e-9 <= s_qc < 0.0:
        s_qc = 0.0
    return QuantumCorrelation(s_qc, res.s_min, s_vn, res.basis, res)
