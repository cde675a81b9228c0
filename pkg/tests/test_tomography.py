import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swapsim.gates import bell_vector, dressed_gate_ideal_unitary
from swapsim.quantum_core import random_density_matrix, random_unitary
from swapsim.tomography import (
    PAULI_LABELS,
    SETTINGS,
    TomographySetting,
    chi_of_unitary,
    chi_to_json,
    concurrence,
    density_matrix_from_json,
    density_matrix_to_json,
    forward_distributions,
    linear_inversion,
    matrix_from_json,
    process_fidelity,
    process_tomography,
    project_physical,
    reconstruct_state,
    state_fidelity,
)


def _pure(v):
    return np.outer(v, v.conj())


def test_nine_settings():
    assert len(SETTINGS) == 9
    assert {s.names for s in SETTINGS} == {(a, b) for a in ("I", "X90", "Y90") for b in ("I", "X90", "Y90")}
    assert TomographySetting(5).names == ("X90", "Y90")  # k = 3a + b
    with pytest.raises(ValueError):
        TomographySetting(9)


def test_bell_roundtrip_before_projection():
    rho = _pure(bell_vector("Psi+"))
    assert np.max(np.abs(linear_inversion(forward_distributions(rho)) - rho)) < 1e-10


def test_mixed_roundtrip():
    assert reconstruct_state(forward_distributions(np.eye(4) / 4)).matrix == pytest.approx(np.eye(4) / 4)


def test_random_state_roundtrip(rng):
    for _ in range(5):
        rho = random_density_matrix(4, rng)
        assert np.max(np.abs(reconstruct_state(forward_distributions(rho)).matrix - rho)) < 1e-9


def test_inversion_input_checks():
    d = forward_distributions(np.eye(4) / 4)
    with pytest.raises(ValueError):
        linear_inversion({k: d[k] for k in range(8)})
    bad = dict(d)
    bad[3] = np.ones(3) / 3
    with pytest.raises(ValueError):
        linear_inversion(bad)


def test_projection_examples(rng):
    rho = random_density_matrix(4, rng)
    assert np.max(np.abs(project_physical(rho) - rho)) < 1e-12
    out = project_physical(np.diag([1.2, -0.2, 0, 0]).astype(complex))
    assert out == pytest.approx(np.diag([1, 0, 0, 0]))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_projection_physical_and_idempotent(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = a + a.conj().T
    h = h / np.trace(h).real if abs(np.trace(h)) > 1e-3 else h + np.eye(4) / 4
    p = project_physical(h)
    w = np.linalg.eigvalsh(p)
    assert w.min() > -1e-12
    assert np.trace(p).real == pytest.approx(1.0)
    assert np.max(np.abs(project_physical(p) - p)) < 1e-12


def test_state_fidelity_examples():
    v = bell_vector("Phi-")
    assert state_fidelity(_pure(v), v) == pytest.approx(1.0, abs=1e-12)
    assert state_fidelity(np.eye(4) / 4, v) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        state_fidelity(np.eye(2) / 2, v)


def test_concurrence_examples():
    for k in ("Psi+", "Psi-", "Phi+", "Phi-"):
        assert concurrence(_pure(bell_vector(k))) == pytest.approx(1.0, abs=1e-9)
    assert concurrence(np.eye(4) / 4) == pytest.approx(0.0, abs=1e-12)
    werner = 0.8 * _pure(bell_vector("Phi+")) + 0.2 * np.eye(4) / 4
    assert concurrence(werner) == pytest.approx(0.7, abs=1e-10)


def test_concurrence_product_state(rng):
    a, b = random_density_matrix(2, rng), random_density_matrix(2, rng)
    assert concurrence(np.kron(a, b)) == pytest.approx(0.0, abs=1e-8)


def test_concurrence_local_unitary_invariance(rng):
    for _ in range(20):
        rho = random_density_matrix(4, rng)
        u = np.kron(random_unitary(2, rng), random_unitary(2, rng))
        c0 = concurrence(rho)
        assert 0 <= c0 <= 1
        assert abs(c0 - concurrence(u @ rho @ u.conj().T)) < 1e-10


def test_identity_channel_chi():
    chi = process_tomography(lambda r: r)
    expect = np.zeros((16, 16))
    expect[0, 0] = 1
    assert chi == pytest.approx(expect, abs=1e-12)


def test_dressed_gate_chi_self_fidelity():
    u = dressed_gate_ideal_unitary()
    chi = process_tomography(lambda r: u @ r @ u.conj().T)
    assert process_fidelity(chi, chi_of_unitary(u)) == pytest.approx(1.0, abs=1e-12)
    assert np.trace(chi).real == pytest.approx(1.0)
    assert np.max(np.abs(chi - chi.conj().T)) < 1e-12


def test_depolarizing_chi(rng):
    chi = process_tomography(lambda r: np.trace(r) * np.eye(4) / 4)
    u = random_unitary(4, rng)
    assert process_fidelity(chi, chi_of_unitary(u)) == pytest.approx(1 / 16, abs=1e-12)


def test_gate_vs_identity():
    chi = process_tomography(lambda r: r)
    assert process_fidelity(chi, chi_of_unitary(dressed_gate_ideal_unitary())) == pytest.approx(0.5, abs=1e-12)


def test_batched_and_single_channels_agree(rng):
    u = random_unitary(4, rng)
    single = process_tomography(lambda r: u @ r @ u.conj().T)
    batched = process_tomography(lambda rs: np.einsum("ij,njk,lk->nil", u, rs, u.conj()))
    assert batched == pytest.approx(single, abs=1e-12)


def test_json_roundtrip(rng):
    rho = random_density_matrix(4, rng)
    text = json.dumps(density_matrix_to_json(rho, anchor="00"))
    back = density_matrix_from_json(text)
    assert back.dims == (2, 2)
    assert back.matrix == pytest.approx(rho)
    d = chi_to_json(chi_of_unitary(dressed_gate_ideal_unitary()))
    assert d["basis"] == PAULI_LABELS and d["basis"][:3] == ["II", "IX", "IY"]
    assert matrix_from_json(d).shape == (16, 16)
