"""Two-qubit state tomography, chi-matrix process tomography and metrics.

Tomography settings pre-rotate each qubit by one of

    I      identity (measures Z)
    X90    pi/2 about x (maps Y onto Z)
    Y90    pi/2 about y (maps X onto Z)

and the nine two-qubit settings are indexed ``k = 3 * a + b`` with ``a`` the
first and ``b`` the second qubit's choice. Pauli ordering for chi matrices
is II, IX, IY, IZ, XI, ..., ZZ.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .measurement import OutcomeDistribution
from .quantum_core import (
    IDENTITY_2,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DensityMatrix,
    HilbertSpace,
    StateVector,
    kron,
)

PAULI_1Q = {"I": IDENTITY_2, "X": SIGMA_X, "Y": SIGMA_Y, "Z": SIGMA_Z}
PAULI_LABELS = ["".join(p) for p in itertools.product("IXYZ", repeat=2)]
PAULI_2Q = [kron(PAULI_1Q[a], PAULI_1Q[b]) for a, b in PAULI_LABELS]

# (name, rotation angle, axis phase): axis = cos(phase) X + sin(phase) Y
PRE_ROTATIONS = (("I", 0.0, 0.0), ("X90", math.pi / 2, 0.0), ("Y90", math.pi / 2, math.pi / 2))


def rotation_matrix(angle: float, phase: float) -> np.ndarray:
    gen = math.cos(phase) * SIGMA_X + math.sin(phase) * SIGMA_Y
    return math.cos(angle / 2) * IDENTITY_2 - 1j * math.sin(angle / 2) * gen


@dataclass(frozen=True)
class TomographySetting:
    index: int

    def __post_init__(self):
        if not 0 <= self.index < 9:
            raise ValueError(f"tomography setting index must lie in 0..8, got {self.index}")

    @property
    def choices(self) -> tuple[int, int]:
        return divmod(self.index, 3)

    @property
    def names(self) -> tuple[str, str]:
        a, b = self.choices
        return PRE_ROTATIONS[a][0], PRE_ROTATIONS[b][0]

    def rotations(self) -> tuple[tuple[float, float], tuple[float, float]]:
        """(angle, phase) for each of the two qubits."""
        a, b = self.choices
        return PRE_ROTATIONS[a][1:], PRE_ROTATIONS[b][1:]

    def unitary(self) -> np.ndarray:
        (ta, pa), (tb, pb) = self.rotations()
        return kron(rotation_matrix(ta, pa), rotation_matrix(tb, pb))


SETTINGS = tuple(TomographySetting(k) for k in range(9))


def _measurement_operators() -> np.ndarray:
    """POVM elements ``R^dag |m><m| R`` for the 9 x 4 (setting, outcome) pairs."""
    ops = []
    for s in SETTINGS:
        r = s.unitary()
        for m in range(4):
            proj = np.zeros((4, 4), dtype=complex)
            proj[m, m] = 1
            ops.append(r.conj().T @ proj @ r)
    return np.array(ops)


_POVM = _measurement_operators()
# p = A c with rho = sum_P c_P P / 4
_A = np.real(np.einsum("kij,pji->kp", _POVM, np.array(PAULI_2Q))) / 4
_A_PINV = np.linalg.pinv(_A)


def forward_distributions(rho: np.ndarray | DensityMatrix) -> dict[int, OutcomeDistribution]:
    """Exact outcome distributions of the 9 settings for a two-qubit state."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    out = {}
    for s in SETTINGS:
        r = s.unitary()
        p = np.real(np.diag(r @ m @ r.conj().T))
        out[s.index] = OutcomeDistribution((1, 4), p)
    return out


def linear_inversion(distributions: Mapping[int, OutcomeDistribution | np.ndarray]) -> np.ndarray:
    """Unconstrained least-squares estimate (Hermitian, unit trace)."""
    if set(distributions) != set(range(9)):
        raise ValueError("state tomography needs all 9 settings")
    vecs = []
    for k in range(9):
        d = distributions[k]
        p = d.probs if isinstance(d, OutcomeDistribution) else np.asarray(d, dtype=float)
        if p.size != 4:
            raise ValueError(f"setting {k}: expected 4 outcome probabilities, got {p.size}")
        vecs.append(p)
    c = _A_PINV @ np.concatenate(vecs)
    rho = sum(ci * P for ci, P in zip(c, PAULI_2Q)) / 4
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def project_physical(rho_raw: np.ndarray) -> np.ndarray:
    """Closest unit-trace PSD matrix in Frobenius norm (eigenvalue water-filling)."""
    h = 0.5 * (np.asarray(rho_raw) + np.asarray(rho_raw).conj().T)
    w, v = np.linalg.eigh(h)
    mu = _waterfill(w, 1.0)
    lam = np.clip(w - mu, 0.0, None)
    return (v * lam) @ v.conj().T


def _waterfill(w: np.ndarray, total: float) -> float:
    # shift mu so that sum(max(w - mu, 0)) == total
    u = np.sort(w)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, u.size + 1)
    cond = u - (css - total) / k > 0
    r = k[cond][-1]
    return float((css[r - 1] - total) / r)


def reconstruct_state(distributions: Mapping[int, OutcomeDistribution | np.ndarray]) -> DensityMatrix:
    return DensityMatrix(HilbertSpace((2, 2)), project_physical(linear_inversion(distributions)))


def state_fidelity(rho: DensityMatrix | np.ndarray, target: StateVector | np.ndarray) -> float:
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    psi = target.amplitudes if isinstance(target, StateVector) else np.asarray(target)
    if m.shape != (psi.size, psi.size):
        raise ValueError(f"state of dim {m.shape[0]} vs target of dim {psi.size}")
    return float(np.real(np.vdot(psi, m @ psi)))


_YY = kron(SIGMA_Y, SIGMA_Y)


def concurrence(rho: DensityMatrix | np.ndarray) -> float:
    """Wootters concurrence of a two-qubit state."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    rt = _YY @ m.conj() @ _YY
    # eigenvalues of rho * rho~ equal those of sqrt(rho) rho~ sqrt(rho), which are real >= 0
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    sq = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    r = sq @ rt @ sq
    ev = np.linalg.eigvalsh(0.5 * (r + r.conj().T))
    lam = np.sqrt(np.clip(ev, 0, None))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


# ---------------------------------------------------------------------------
# process tomography


def process_inputs() -> list[np.ndarray]:
    """16 product preparations from {|0>, |1>, |+>, |+i>} on each qubit."""
    kets = [
        np.array([1, 0], complex),
        np.array([0, 1], complex),
        np.array([1, 1], complex) / math.sqrt(2),
        np.array([1, 1j], complex) / math.sqrt(2),
    ]
    out = []
    for a, b in itertools.product(kets, repeat=2):
        v = np.kron(a, b)
        out.append(np.outer(v, v.conj()))
    return out


def chi_from_choi(choi: np.ndarray) -> np.ndarray:
    """Chi matrix from ``J = sum_ij |i><j| (x) E(|i><j|)``."""
    omega = np.eye(4).reshape(16)
    vs = np.array([np.kron(np.eye(4), P) @ omega for P in PAULI_2Q])
    return vs.conj() @ choi @ vs.T / 16


def choi_from_outputs(inputs: Sequence[np.ndarray], outputs: Sequence[np.ndarray]) -> np.ndarray:
    """Choi matrix of the linear map fixed by ``inputs -> outputs`` (inputs must span 4x4)."""
    x = np.array([np.asarray(r).reshape(16) for r in inputs]).T  # 16 x n
    y = np.array([np.asarray(r).reshape(16) for r in outputs]).T
    s = y @ np.linalg.pinv(x)  # superoperator on row-major vec
    choi = np.zeros((16, 16), dtype=complex)
    for i in range(4):
        for j in range(4):
            e = np.zeros((4, 4), complex)
            e[i, j] = 1
            out = (s @ e.reshape(16)).reshape(4, 4)
            choi += np.kron(e, out)
    return choi


def process_tomography(channel: Callable[[np.ndarray], np.ndarray], project: bool = True) -> np.ndarray:
    """Chi matrix of a two-qubit channel probed with :func:`process_inputs`.

    ``channel`` may accept a single 4x4 matrix or a ``(16, 4, 4)`` batch.
    """
    inputs = process_inputs()
    try:
        outs = np.asarray(channel(np.array(inputs)))
        if outs.shape != (16, 4, 4):
            raise ValueError
    except (ValueError, TypeError, IndexError):
        outs = np.array([channel(r) for r in inputs])
    chi = chi_from_choi(choi_from_outputs(inputs, outs))
    chi = 0.5 * (chi + chi.conj().T)
    return project_physical(chi) if project else chi


def chi_of_unitary(u: np.ndarray) -> np.ndarray:
    c = np.array([np.trace(P.conj().T @ u) / 4 for P in PAULI_2Q])
    return np.outer(c, c.conj())


def process_fidelity(chi: np.ndarray, chi_ideal: np.ndarray) -> float:
    return float(np.real(np.trace(chi @ chi_ideal)))


# ---------------------------------------------------------------------------
# JSON


def matrix_to_json(m: np.ndarray, dims: Sequence[int], basis: Sequence[str] | None = None, **extra) -> dict:
    m = np.asarray(m)
    out = {
        "dims": list(dims),
        "basis": list(basis) if basis is not None else [format(i, f"0{len(dims)}b") for i in range(m.shape[0])],
        "real": m.real.tolist(),
        "imag": m.imag.tolist(),
    }
    out.update(extra)
    return out


def density_matrix_to_json(rho: DensityMatrix | np.ndarray, **extra) -> dict:
    if isinstance(rho, DensityMatrix):
        return matrix_to_json(rho.matrix, rho.dims, **extra)
    n = int(round(math.log2(np.asarray(rho).shape[0])))
    return matrix_to_json(rho, (2,) * n, **extra)


def chi_to_json(chi: np.ndarray, **extra) -> dict:
    return matrix_to_json(chi, (4, 4), PAULI_LABELS, **extra)


def matrix_from_json(d: dict | str) -> np.ndarray:
    if isinstance(d, str):
        d = json.loads(d)
    return np.array(d["real"], dtype=float) + 1j * np.array(d["imag"], dtype=float)


def density_matrix_from_json(d: dict | str) -> DensityMatrix:
    if isinstance(d, str):
        d = json.loads(d)
    return DensityMatrix(HilbertSpace(tuple(d["dims"])), matrix_from_json(d))
