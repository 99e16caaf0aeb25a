import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ergolab.entropy import Measurement, von_neumann_entropy
from ergolab.errors import DimensionCap, MissingDims, NotHermitian, NotNormalized, NotPositive, TraceNotOne
from ergolab.qstate import (
    DensityMatrix,
    PureState,
    bell_state,
    dephase,
    partial_trace,
    random_density_matrix,
    random_pure_state,
    spectral,
    tensor_power,
    tensor_product,
    trace_distance,
    validate_density,
    werner_state,
)

from oracles import partial_trace_loops


def test_validation_names_the_violation():
    with pytest.raises(NotHermitian) as exc:
        validate_density([[0.5, 0.1], [0.3, 0.5]])
    assert exc.value.violation == pytest.approx(0.2)
    with pytest.raises(TraceNotOne):
        validate_density(np.eye(2))
    with pytest.raises(NotPositive) as exc:
        validate_density([[1.2, 0], [0, -0.2]])
    assert exc.value.violation == pytest.approx(0.2)
    with pytest.raises(NotNormalized):
        PureState([1.0, 1.0])


def test_validation_tolerance_and_no_mutation():
    rho = np.diag([0.5, 0.5 + 1e-11])
    before = rho.copy()
    out = validate_density(rho)
    assert np.array_equal(rho, before)
    assert not out.data.flags.writeable
    with pytest.raises(TraceNotOne):
        validate_density(rho, tol=1e-12)
    with pytest.raises(ValueError):
        validate_density(rho, tol=0.0)


def test_dims_must_multiply_to_dimension():
    with pytest.raises(ValueError):
        DensityMatrix(np.eye(6) / 6, dims=(2, 2))


@pytest.mark.parametrize("dims", [(2, 2), (2, 3), (3, 2), (3, 3)])
def test_partial_trace_matches_index_sum(rng, dims):
    rho = random_density_matrix(dims[0] * dims[1], rng, dims=dims)
    for keep in "AB":
        got = partial_trace(rho, keep).data
        np.testing.assert_allclose(got, partial_trace_loops(rho.data, *dims, keep), atol=1e-14)
        assert np.trace(got).real == pytest.approx(1.0)


def test_partial_trace_of_product_recovers_factors(rng):
    a = random_density_matrix(2, rng)
    b = random_density_matrix(3, rng)
    ab = tensor_product(a, b)
    assert ab.dims == (2, 3)
    np.testing.assert_allclose(partial_trace(ab, "A").data, a.data, atol=1e-14)
    np.testing.assert_allclose(partial_trace(ab, "B").data, b.data, atol=1e-14)


def test_partial_trace_needs_dims(rng):
    with pytest.raises(MissingDims):
        partial_trace(random_density_matrix(4, rng))


def test_bell_reduced_state_is_maximally_mixed():
    np.testing.assert_allclose(partial_trace(bell_state(), "B").data, np.eye(2) / 2, atol=1e-15)


def test_tensor_power_and_cap(rng):
    a = random_density_matrix(2, rng)
    t = tensor_power(a, 3)
    assert t.dims == (2, 4)
    np.testing.assert_allclose(t.data, np.kron(np.kron(a.data, a.data), a.data))
    assert tensor_power(a, 1) is a
    with pytest.raises(DimensionCap) as exc:
        tensor_power(a, 4, cap=8)
    assert exc.value.requested == 16 and exc.value.cap == 8


def test_dimension_cap_from_environment(rng, monkeypatch):
    monkeypatch.setenv("ERGOLAB_DIM_CAP", "4")
    with pytest.raises(DimensionCap):
        tensor_power(random_density_matrix(2, rng), 3)


def test_spectral_reconstructs(rng):
    rho = random_density_matrix(5, rng)
    dec = spectral(rho)
    assert np.all(np.diff(dec.values) >= 0)
    np.testing.assert_allclose(dec.reconstruct(), rho.data, atol=1e-14)
    with pytest.raises(NotHermitian):
        spectral(np.array([[0, 1], [0, 0]]))


def test_werner_spectrum():
    p = 0.6
    vals = np.linalg.eigvalsh(werner_state(p).data)
    np.testing.assert_allclose(vals, [0.1, 0.1, 0.1, 0.7], atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 5))
def test_dephase_idempotent_and_raises_entropy(seed, d):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(d, rng)
    q, _ = np.linalg.qr(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
    m = Measurement.from_basis(q)
    once = dephase(rho, m)
    np.testing.assert_allclose(dephase(once, m).data, once.data, atol=1e-13)
    assert von_neumann_entropy(once) >= von_neumann_entropy(rho) - 1e-12
    assert np.trace(once.data).real == pytest.approx(1.0)


def test_dephase_pvm_matches_projector_sum(rng):
    rho = random_density_matrix(3, rng)
    p0 = np.diag([1.0, 1.0, 0.0])
    p1 = np.diag([0.0, 0.0, 1.0])
    got = dephase(rho, Measurement([p0, p1])).data
    np.testing.assert_allclose(got, p0 @ rho.data @ p0 + p1 @ rho.data @ p1, atol=1e-15)


def test_trace_distance_orthogonal_pure_states():
    a = PureState([1, 0])
    b = PureState([0, 1])
    assert trace_distance(a, b) == pytest.approx(1.0)
    assert trace_distance(a, a) == pytest.approx(0.0, abs=1e-15)


def test_random_pure_state_normalized(rng):
    psi = random_pure_state(6, rng, dims=(2, 3))
    assert np.vdot(psi.amplitudes, psi.amplitudes).real == pytest.approx(1.0)
    assert psi.density().purity() == pytest.approx(1.0)
