"""Closed-form two-qubit models: Bell states, the XY swap, the dressed-state
phase gate and the double-Bell expansion.

Bell states carry the ``i`` relative phase::

    Psi+- = (|10> +- i|01>) / sqrt(2)
    Phi+- = (|11> +- i|00>) / sqrt(2)

with the first label belonging to the first qubit of the pair. Matrices
act on ``(|00>, |01>, |10>, |11>)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .quantum_core import (
    IDENTITY_2,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Y,
    HilbertSpace,
    StateVector,
    kron,
    propagator,
)

BELL_KINDS = ("Psi+", "Psi-", "Phi+", "Phi-")
_R2 = 1 / math.sqrt(2)


@dataclass(frozen=True)
class BellLabel:
    kind: str
    pair: tuple[int, int] = (1, 2)

    def __post_init__(self):
        if self.kind not in BELL_KINDS:
            raise ValueError(f"unknown Bell state {self.kind!r}; expected one of {BELL_KINDS}")
        j, k = self.pair
        if j == k:
            raise ValueError("a Bell pair needs two distinct qubits")
        object.__setattr__(self, "pair", (int(j), int(k)))

    def __str__(self):
        return f"{self.kind}_{self.pair[0]}{self.pair[1]}"


@dataclass(frozen=True)
class EffectivePairCoupling:
    pair: tuple[int, int]
    lam: float  # rad/s

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("effective coupling must be positive")


def bell_vector(kind: str) -> np.ndarray:
    v = np.zeros(4, dtype=complex)
    if kind == "Psi+":
        v[2], v[1] = _R2, 1j * _R2
    elif kind == "Psi-":
        v[2], v[1] = _R2, -1j * _R2
    elif kind == "Phi+":
        v[3], v[0] = _R2, 1j * _R2
    elif kind == "Phi-":
        v[3], v[0] = _R2, -1j * _R2
    else:
        raise ValueError(f"unknown Bell state {kind!r}")
    return v


def bell_state(label: BellLabel | str) -> StateVector:
    kind = label.kind if isinstance(label, BellLabel) else str(label)
    return StateVector(HilbertSpace((2, 2)), bell_vector(kind))


def product_vector(bits: str) -> np.ndarray:
    """Computational basis vector for a bit string such as ``"10"``."""
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


# ---------------------------------------------------------------------------
# Hamiltonians and propagators


def xy_hamiltonian(lam: float) -> np.ndarray:
    """``-lam (S+_j S-_k + h.c.)`` on a pair."""
    hop = kron(SIGMA_PLUS, SIGMA_MINUS)
    return -lam * (hop + hop.conj().T)


def xy_pair_propagator(coupling: EffectivePairCoupling | float, t: float) -> np.ndarray:
    """Exact ``exp(-i H t)`` of the XY exchange; ``t = pi / (4 lam)`` is a sqrt(iSWAP)."""
    lam = coupling.lam if isinstance(coupling, EffectivePairCoupling) else float(coupling)
    return propagator(xy_hamiltonian(lam), t)


def dressed_gate_ideal_unitary() -> np.ndarray:
    return np.array([[1, 0, 0, 1j], [0, 1, 1j, 0], [0, 1j, 1, 0], [1j, 0, 0, 1]], dtype=complex) * _R2


def dressed_gate_hamiltonian(lambda23: float, omega2: float, omega3: float, phi: float = 0.0) -> np.ndarray:
    """Exchange plus two resonant drives: ``-lam (S+S- + h.c.) + sum_j Omega_j (e^{i phi} S+_j + h.c.)``."""
    h = xy_hamiltonian(lambda23)
    for om, site in ((omega2, 0), (omega3, 1)):
        d = om * (np.exp(1j * phi) * SIGMA_PLUS + np.exp(-1j * phi) * SIGMA_MINUS)
        h = h + (kron(d, IDENTITY_2) if site == 0 else kron(IDENTITY_2, d))
    return h


def dressed_gate_effective_propagator(
    lambda23: float, omega2: float, omega3: float, phi: float = 0.0, tau: float | None = None
) -> np.ndarray:
    """Echoed drive sequence: half of ``tau`` at phase ``phi``, half at ``phi + pi``.

    The echo cancels the single-qubit ``Omega_j S_z`` terms of the dressed
    Hamiltonian, so the result approaches the ideal gate directly; no
    extra single-qubit correction is applied.
    """
    if abs(omega2 - omega3) < 5 * abs(lambda23):
        warnings.warn("|Omega2 - Omega3| < 5 lambda; the dressed-state approximation is poor", stacklevel=2)
    tau = math.pi / (2 * lambda23) if tau is None else float(tau)
    u1 = propagator(dressed_gate_hamiltonian(lambda23, omega2, omega3, phi), 0.5 * tau)
    u2 = propagator(dressed_gate_hamiltonian(lambda23, omega2, omega3, phi + math.pi), 0.5 * tau)
    return u2 @ u1


def gate_fidelity(u: np.ndarray, target: np.ndarray) -> float:
    """Phase-insensitive overlap ``|tr(T^dag U)|^2 / d^2``."""
    d = target.shape[0]
    return float(abs(np.trace(target.conj().T @ u)) ** 2 / d**2)


def align_global_phase(u: np.ndarray, target: np.ndarray) -> np.ndarray:
    """``u`` multiplied by the global phase that best matches ``target``."""
    ov = np.trace(target.conj().T @ u)
    if abs(ov) < 1e-15:
        return u
    return u * (abs(ov) / ov)


# ---------------------------------------------------------------------------
# double-Bell bookkeeping

# outcome of the Q2Q3 computational readout after the gate -> Q1Q4 Bell state
ANCHOR_BELL = {"00": "Phi+", "01": "Psi-", "10": "Psi+", "11": "Phi-"}
# without the gate, Q1Q4 collapses onto the complementary product state
ANCHOR_PRODUCT = {"00": "11", "01": "10", "10": "01", "11": "00"}
ANCHORS = ("00", "01", "10", "11")


def expand_double_bell() -> dict[str, tuple[complex, str]]:
    """Terms of ``|Psi+_12>|Psi+_34>`` regrouped as ``(Q2Q3 Bell) x (Q1Q4 Bell)``."""
    return {
        "Psi+": (-0.5j, "Psi-"),
        "Psi-": (0.5j, "Psi+"),
        "Phi+": (0.5, "Phi+"),
        "Phi-": (-0.5, "Phi-"),
    }


def four_qubit_vector(v14: np.ndarray, v23: np.ndarray) -> np.ndarray:
    """Combine a (Q1, Q4) and a (Q2, Q3) state into Q1 Q2 Q3 Q4 order."""
    t = np.einsum("ad,bc->abcd", v14.reshape(2, 2), v23.reshape(2, 2))
    return t.reshape(16)


def double_bell_state() -> np.ndarray:
    """``|Psi+_12> |Psi+_34>`` in Q1 Q2 Q3 Q4 order."""
    return np.kron(bell_vector("Psi+"), bell_vector("Psi+"))


def swapped_state() -> np.ndarray:
    """Ideal four-qubit state after the gate acts on Q2 Q3."""
    u = np.kron(np.kron(IDENTITY_2, dressed_gate_ideal_unitary()), IDENTITY_2)
    return u @ double_bell_state()


def pauli_pair(a: str, b: str) -> np.ndarray:
    m = {"I": IDENTITY_2, "X": SIGMA_X, "Y": SIGMA_Y, "Z": np.diag([1.0 + 0j, -1.0])}
    return kron(m[a], m[b])
