import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swapsim.quantum_core import (
    SIGMA_X,
    SIGMA_Z,
    DensityMatrix,
    NotHermitianError,
    StateVector,
    embed,
    hermitian_eig,
    kron,
    partial_trace,
    propagator,
    random_density_matrix,
)


def test_kron_sigma_x_antidiagonal():
    m = kron(SIGMA_X, SIGMA_X)
    assert np.array_equal(m, np.fliplr(np.eye(4)))


def test_kron_identity_block_diagonal(rng):
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    m = kron(np.eye(2), a)
    assert np.allclose(m[:3, :3], a) and np.allclose(m[3:, 3:], a)
    assert np.allclose(m[:3, 3:], 0)


def test_kron_matches_index_loop(rng):
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    ref = np.zeros((6, 6), complex)
    for i in range(3):
        for j in range(3):
            for k in range(2):
                for l in range(2):
                    ref[i * 2 + k, j * 2 + l] = a[i, j] * b[k, l]
    assert np.max(np.abs(kron(a, b) - ref)) < 1e-14


def test_kron_associative(rng):
    a, b, c = (rng.normal(size=(2, 2)) for _ in range(3))
    assert np.allclose(kron(kron(a, b), c), kron(a, kron(b, c)), atol=1e-13)


def test_partial_trace_bell_marginal():
    v = np.array([1, 0, 0, 1]) / np.sqrt(2)
    rho = DensityMatrix.from_matrix(np.outer(v, v), (2, 2))
    assert np.allclose(partial_trace(rho, [0]).matrix, np.eye(2) / 2)


def test_partial_trace_product(rng):
    ra, rb = random_density_matrix(3, rng), random_density_matrix(2, rng)
    rho = DensityMatrix.from_matrix(kron(ra, rb), (3, 2))
    assert np.allclose(partial_trace(rho, [0]).matrix, ra, atol=1e-13)


def test_partial_trace_triple_sum_oracle(rng):
    dims = (2, 3, 2)
    r = random_density_matrix(12, rng)
    t = r.reshape(dims + dims)
    ref = np.zeros((4, 4), complex)
    for a in range(2):
        for c in range(2):
            for a2 in range(2):
                for c2 in range(2):
                    ref[a * 2 + c, a2 * 2 + c2] = sum(t[a, b, c, a2, b, c2] for b in range(3))
    got = partial_trace(DensityMatrix.from_matrix(r, dims), [0, 2]).matrix
    assert np.max(np.abs(got - ref)) < 1e-12


def test_partial_trace_all_and_trace(rng):
    r = DensityMatrix.from_matrix(random_density_matrix(8, rng), (2, 2, 2))
    assert np.allclose(partial_trace(r, [0, 1, 2]).matrix, r.matrix)
    assert abs(partial_trace(r, [1]).trace() - 1) < 1e-12


def test_partial_trace_bad_index(rng):
    r = DensityMatrix.from_matrix(random_density_matrix(4, rng), (2, 2))
    with pytest.raises(IndexError):
        partial_trace(r, [2])


def test_hermitian_eig_examples(rng):
    w, _ = hermitian_eig(SIGMA_Z)
    assert np.allclose(w, [1, -1])
    assert np.allclose(hermitian_eig(np.eye(4))[0], 1)
    a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    a = a + a.conj().T
    w, v = hermitian_eig(a)
    assert np.all(np.diff(w) <= 0)
    assert np.max(np.abs(v @ np.diag(w) @ v.conj().T - a)) < 1e-10
    assert np.allclose(v.conj().T @ v, np.eye(8), atol=1e-9)


def test_hermitian_eig_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        hermitian_eig(np.array([[0, 1], [0, 0]]))


def test_propagator_examples():
    assert np.allclose(propagator(np.zeros((3, 3)), 1.7), np.eye(3))
    omega = 2.0
    u = propagator(0.5 * omega * SIGMA_X, np.pi / omega)
    assert np.allclose(u, -1j * SIGMA_X, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 3), st.floats(0, 3), st.integers(0, 10_000))
def test_propagator_group_property(t1, t2, seed):
    r = np.random.default_rng(seed)
    a = r.normal(size=(4, 4)) + 1j * r.normal(size=(4, 4))
    h = a + a.conj().T
    u = propagator(h, t1) @ propagator(h, t2)
    assert np.max(np.abs(u - propagator(h, t1 + t2))) < 1e-10
    assert np.allclose(u.conj().T @ u, np.eye(4), atol=1e-9)


def test_state_types_validate():
    with pytest.raises(ValueError):
        DensityMatrix.from_matrix(np.eye(3), (2, 2))
    psi = StateVector.basis((2, 2), (1, 0))
    assert psi.amplitudes[2] == 1
    assert DensityMatrix.from_state(psi).is_physical()


def test_embed_places_operator():
    m = embed(SIGMA_Z, 1, (3, 2))
    assert np.allclose(m, kron(np.eye(3), SIGMA_Z))
