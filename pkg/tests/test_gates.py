import math
import warnings

import numpy as np
import pytest

from swapsim.device import MHZ
from swapsim.gates import (
    ANCHOR_BELL,
    ANCHOR_PRODUCT,
    ANCHORS,
    BellLabel,
    EffectivePairCoupling,
    bell_vector,
    double_bell_state,
    dressed_gate_effective_propagator,
    dressed_gate_ideal_unitary,
    expand_double_bell,
    four_qubit_vector,
    gate_fidelity,
    pauli_pair,
    product_vector,
    swapped_state,
    xy_pair_propagator,
)

R2 = 1 / math.sqrt(2)


def test_bell_amplitudes():
    v = bell_vector("Psi+")
    assert v == pytest.approx(np.array([0, 1j * R2, R2, 0]))
    v = bell_vector("Phi-")
    assert v == pytest.approx(np.array([-1j * R2, 0, 0, R2]))
    with pytest.raises(ValueError):
        bell_vector("Chi")


def test_bell_label_validation():
    assert str(BellLabel("Phi+", (1, 4))) == "Phi+_14"
    with pytest.raises(ValueError):
        BellLabel("Phi+", (2, 2))
    with pytest.raises(ValueError):
        EffectivePairCoupling((1, 2), 0.0)


def test_sqrt_iswap_prepares_psi_plus():
    lam = 0.82 * MHZ
    u = xy_pair_propagator(EffectivePairCoupling((1, 2), lam), math.pi / (4 * lam))
    assert u @ product_vector("10") == pytest.approx(bell_vector("Psi+"))


def test_full_iswap():
    lam = 1.3 * MHZ
    u = xy_pair_propagator(lam, math.pi / (2 * lam))
    assert u @ product_vector("10") == pytest.approx(1j * product_vector("01"))
    assert u @ product_vector("11") == pytest.approx(product_vector("11"))


def test_dressed_gate_unitary_properties():
    u = dressed_gate_ideal_unitary()
    xx = pauli_pair("X", "X")
    assert u @ u.conj().T == pytest.approx(np.eye(4))
    assert u @ u == pytest.approx(1j * xx)
    # U maps each Bell state to a product state up to phase
    for kind in ("Psi+", "Psi-", "Phi+", "Phi-"):
        out = u @ bell_vector(kind)
        assert np.max(np.abs(out) ** 2) == pytest.approx(1.0)


def test_effective_propagator_at_operating_point():
    u = dressed_gate_effective_propagator(0.82 * MHZ, 20 * MHZ, 8 * MHZ)
    assert gate_fidelity(u, dressed_gate_ideal_unitary()) >= 0.99


def test_effective_propagator_small_coupling_limit():
    lam = 0.82 * MHZ
    u = dressed_gate_effective_propagator(0.0, 20 * MHZ, 8 * MHZ, tau=math.pi / (2 * lam))
    # no exchange leaves only the echoed drives, which cancel
    assert gate_fidelity(u, np.eye(4)) == pytest.approx(1.0, abs=1e-9)


def test_effective_propagator_improves_with_drive_contrast():
    lam = 1.0 * MHZ
    target = dressed_gate_ideal_unitary()
    fids = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for ratio in (2, 5, 20, 80):
            fids.append(gate_fidelity(dressed_gate_effective_propagator(lam, (ratio + 1) * lam, lam), target))
    assert all(b >= a for a, b in zip(fids, fids[1:]))
    assert fids[-1] > 0.999


def test_small_contrast_warns():
    with pytest.warns(UserWarning):
        dressed_gate_effective_propagator(1 * MHZ, 3 * MHZ, 1 * MHZ)


def test_double_bell_expansion_reassembles():
    total = np.zeros(16, complex)
    for k23, (amp, k14) in expand_double_bell().items():
        total += amp * four_qubit_vector(bell_vector(k14), bell_vector(k23))
    assert total == pytest.approx(double_bell_state())


def test_swapped_state_anchors():
    psi = swapped_state().reshape(2, 2, 2, 2)  # Q1 Q2 Q3 Q4
    for a in ANCHORS:
        b2, b3 = int(a[0]), int(a[1])
        v14 = psi[:, b2, b3, :].reshape(4)
        p = np.vdot(v14, v14).real
        assert p == pytest.approx(0.25)
        f = abs(np.vdot(bell_vector(ANCHOR_BELL[a]), v14)) ** 2 / p
        assert f == pytest.approx(1.0)


def test_product_anchors_without_gate():
    psi = double_bell_state().reshape(2, 2, 2, 2)
    for a in ANCHORS:
        v14 = psi[:, int(a[0]), int(a[1]), :].reshape(4)
        p = np.vdot(v14, v14).real
        assert p == pytest.approx(0.25)
        assert abs(v14[int(ANCHOR_PRODUCT[a], 2)]) ** 2 / p == pytest.approx(1.0)
