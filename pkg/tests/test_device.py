import json
import math

import numpy as np
import pytest

from swapsim.device import (
    MHZ,
    US,
    ConfigError,
    DrivePulse,
    FrequencyAssignment,
    build_hamiltonian,
    collapse_operators,
    config_to_dict,
    default_config,
    dressed_basis,
    effective_coupling,
    load_config,
    operators,
)


def test_default_config_matches_table(cfg):
    assert cfg.resonator_frequency / (2 * math.pi * 1e9) == pytest.approx(5.588)
    q1 = cfg.qubit(1)
    assert q1.t1 == pytest.approx(27.1 * US)
    assert q1.g == pytest.approx(20.8 * MHZ)
    assert (q1.f0, q1.f1) == (0.975, 0.927)
    assert cfg.resonator_cutoff == 3


def test_effective_coupling_bare(cfg):
    no_direct = type(cfg)(cfg.resonator_frequency, cfg.qubits, {})
    lam = effective_coupling(no_direct, 1, 2, 308 * MHZ)
    assert lam / MHZ == pytest.approx(20.8 * 19.9 / 308, rel=1e-12)
    assert lam / MHZ == pytest.approx(1.344, abs=1e-3)
    # antisymmetric in the detuning sign without direct coupling
    assert effective_coupling(no_direct, 1, 2, -308 * MHZ) == pytest.approx(-lam)


def test_effective_coupling_calibrated(cfg):
    assert effective_coupling(cfg, 1, 2, 308 * MHZ) / MHZ == pytest.approx(0.82, abs=0.005)
    assert effective_coupling(cfg, 3, 4, 238 * MHZ) / MHZ == pytest.approx(1.1, abs=0.005)


def test_effective_coupling_errors(cfg):
    with pytest.raises(ValueError):
        effective_coupling(cfg, 1, 2, 0.0)
    with pytest.warns(UserWarning):
        effective_coupling(cfg, 1, 2, 50 * MHZ)


def test_hamiltonian_hermitian_with_drives(cfg, rng):
    fa = FrequencyAssignment({j: (5.0 + rng.random()) * 2 * math.pi * 1e9 for j in (1, 2, 3, 4)})
    drives = [
        DrivePulse(2, 5 * MHZ, 0.3, 100 * MHZ, 0.0, 50e-9),
        DrivePulse(4, 8 * MHZ, 1.1, -20 * MHZ, 0.0, 50e-9, "gaussian", 20e-9),
    ]
    h = build_hamiltonian(cfg, fa, drives, rng.random() * 50e-9, {2: 0.4, 4: -1.0})
    assert np.max(np.abs(h - h.conj().T)) < 1e-12 * np.max(np.abs(h))


def test_hamiltonian_conserves_excitations(cfg):
    fa = FrequencyAssignment({j: cfg.resonator_frequency for j in (1, 2, 3, 4)})
    h = build_hamiltonian(cfg, fa)
    n = operators(cfg.resonator_cutoff).total_excitation()
    assert np.max(np.abs(h @ n - n @ h)) < 1e-12 * np.max(np.abs(h))


def test_collapse_operators(cfg, ideal_cfg):
    cops = collapse_operators(cfg)
    ops = operators(cfg.resonator_cutoff)
    # relaxation of Q1 is the first operator: sqrt(1/T1) S-
    assert np.allclose(cops[0], math.sqrt(1 / (27.1 * US)) * ops.s_minus[1])
    assert all(np.count_nonzero(c) == 0 for c in collapse_operators(ideal_cfg))


def test_dephasing_protection_switch(cfg):
    from dataclasses import replace

    from swapsim.device import dephasing_time

    assert dephasing_time(cfg, 1) == pytest.approx(59.2 * US)
    off = replace(cfg, dephasing_protection=False)
    # exponential rate 1/T2* - 1/(2 T1)
    assert 1 / dephasing_time(off, 1) == pytest.approx(1 / (2.0 * US) - 0.5 / (27.1 * US))


def test_dressed_basis_unitary_and_labelled(cfg):
    w = dressed_basis(cfg, cfg.idle_assignment)
    assert np.allclose(w.conj().T @ w, np.eye(w.shape[0]), atol=1e-12)
    d = np.real(np.diag(w))
    assert np.all(d > 0.9)


def test_config_roundtrip(tmp_path, cfg):
    p = tmp_path / "dev.json"
    p.write_text(json.dumps(config_to_dict(cfg)))
    back = load_config(p)
    assert back.qubit(3).f1 == cfg.qubit(3).f1
    assert back.direct_coupling(2, 3) == pytest.approx(cfg.direct_coupling(2, 3))


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)
    d = config_to_dict(default_config())
    d["qubits"][0]["f0"] = 1.5
    bad.write_text(json.dumps(d))
    with pytest.raises(ConfigError):
        load_config(bad)


def test_frequency_assignment_range(cfg):
    with pytest.raises(ValueError):
        FrequencyAssignment({1: 6.5 * 2 * math.pi * 1e9})
