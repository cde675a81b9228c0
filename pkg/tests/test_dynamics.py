import math
from dataclasses import replace

import numpy as np
import pytest

from swapsim.device import MHZ, NS, US
from swapsim.dynamics import (
    IntegrationError,
    IntegratorSettings,
    evolve_lindblad,
    evolve_unitary,
    ground_state,
)
from swapsim.quantum_core import DensityMatrix, partial_trace
from swapsim.schedule import PulseSchedule, sequence_normal

COARSE = IntegratorSettings(static_step=10 * NS)


@pytest.fixture(scope="module")
def weak(cfg):
    """Device with qubits nearly decoupled from the bus (decay oracles)."""
    qs = tuple(replace(q, g=1e-3 * MHZ) for q in cfg.qubits)
    return replace(cfg, qubits=qs, direct_couplings={}, resonator_cutoff=2)


def _q1_state(c, amps):
    v = np.zeros(2 * 16, complex)
    v[0], v[8] = amps  # |0000>, |1000> with an empty bus
    return DensityMatrix.from_matrix(np.outer(v, v.conj()), c.dims)


def test_t1_decay(weak):
    t1 = weak.qubit(1).t1
    r = evolve_lindblad(_q1_state(weak, (0, 1)), PulseSchedule((), (), t1), weak, settings=COARSE)
    p1 = partial_trace(r.final_state, [1]).matrix[1, 1].real
    assert p1 == pytest.approx(math.exp(-1), abs=1e-4)


def test_pure_dephasing_decay(weak):
    t = 2 * US
    q = weak.qubit(1)
    s = 1 / math.sqrt(2)
    r = evolve_lindblad(_q1_state(weak, (s, s)), PulseSchedule((), (), t), weak, settings=COARSE)
    coh = abs(partial_trace(r.final_state, [1]).matrix[0, 1])
    assert coh == pytest.approx(0.5 * math.exp(-t / (2 * q.t1) - t / q.t_phi_dd), rel=1e-6)


def test_purity_conserved_without_noise(ideal_cfg):
    s = sequence_normal(ideal_cfg)
    tb = s.segment_labelled("bell-12").end
    r = evolve_lindblad(ground_state(ideal_cfg), s, ideal_cfg, window=(0, tb))
    m = r.final_state.matrix
    assert np.trace(m @ m).real == pytest.approx(1.0, abs=1e-6)


def test_unitary_matches_lindblad_when_noiseless(ideal_cfg):
    s = sequence_normal(ideal_cfg)
    tb = s.segment_labelled("bell-12").end
    psi0 = np.zeros(ideal_cfg.resonator_cutoff * 16, complex)
    psi0[0] = 1
    psi = evolve_unitary(psi0, s, ideal_cfg, window=(0, tb))
    rho = evolve_lindblad(ground_state(ideal_cfg), s, ideal_cfg, window=(0, tb)).final_state.matrix
    assert np.max(np.abs(rho - np.outer(psi, psi.conj()))) < 1e-6


def test_zero_length_window_is_identity(cfg):
    s = sequence_normal(cfg)
    rho0 = ground_state(cfg)
    r = evolve_lindblad(rho0, s, cfg, window=(10 * NS, 10 * NS))
    assert np.allclose(r.final_state.matrix, rho0.matrix)
    assert r.trace_drift == 0.0


def test_checkpoints_hermitian_and_trace(cfg):
    s = sequence_normal(cfg)
    tb = s.segment_labelled("bell-12").end
    r = evolve_lindblad(ground_state(cfg), s, cfg, window=(0, tb), checkpoints=True)
    assert len(r.checkpoints) > 2
    for _, m in r.checkpoints:
        assert np.max(np.abs(m - m.conj().T)) < 1e-8
        assert abs(np.trace(m) - 1) < 1e-6
    assert r.min_eigenvalue > -1e-8
    assert '"time_ns"' in r.checkpoints_json()


def test_trace_tolerance_raises(cfg):
    s = sequence_normal(cfg)
    bad = ground_state(cfg).matrix * 1.0
    bad[0, 0] = 1.0
    with pytest.raises(IntegrationError):
        # an absurd tolerance turns round-off into a reported failure
        evolve_lindblad(bad, s, cfg, window=(0, 60 * NS), settings=IntegratorSettings(trace_tol=1e-30))


def test_step_halving(cfg):
    s = sequence_normal(cfg)
    tb = s.segment_labelled("bell-12").end
    a = evolve_lindblad(ground_state(cfg), s, cfg, window=(0, tb)).final_state.matrix
    b = evolve_lindblad(ground_state(cfg), s, cfg, window=(0, tb), settings=IntegratorSettings().halved()).final_state.matrix
    assert np.max(np.abs(a - b)) < 1e-5


def test_settings_validation():
    with pytest.raises(ValueError):
        IntegratorSettings(method="euler")
    with pytest.raises(ValueError):
        IntegratorSettings(max_step=0)


def test_state_dims_checked(cfg):
    small = cfg.with_cutoff(2)
    with pytest.raises(ValueError):
        evolve_lindblad(ground_state(small), sequence_normal(cfg), cfg)
