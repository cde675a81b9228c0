"""Projective readout with assignment error, shot sampling and correction.

Outcome vectors are indexed by bit strings with the lowest-numbered qubit
as the most significant bit, so over ``(Q1, Q2, Q3, Q4)`` the entry
``int("0110", 2)`` is Q1=0, Q2=1, Q3=1, Q4=0.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import reduce
from typing import Mapping, Sequence

import numpy as np

from .device import QUBITS, DeviceConfig
from .quantum_core import DensityMatrix, HilbertSpace, partial_trace_array

PROB_TOL = 1e-9


class NullEventError(ValueError):
    """Conditioning on an outcome of (numerically) zero probability."""


def bitstrings(n: int) -> list[str]:
    return [format(i, f"0{n}b") for i in range(2**n)]


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    qubits: tuple[int, ...]
    probs: np.ndarray
    # corrected vector before clipping, kept for diagnostics
    raw: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).reshape(-1)
        q = tuple(int(j) for j in self.qubits)
        if p.size != 2 ** len(q):
            raise ValueError(f"{p.size} probabilities for {len(q)} qubits")
        object.__setattr__(self, "qubits", q)
        object.__setattr__(self, "probs", p)

    @property
    def n(self) -> int:
        return len(self.qubits)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(bitstrings(self.n), self.probs.tolist()))

    def __getitem__(self, outcome: str) -> float:
        return float(self.probs[int(outcome, 2)])

    def marginal(self, keep: Sequence[int]) -> "OutcomeDistribution":
        keep = [int(j) for j in keep]
        axes = tuple(i for i, j in enumerate(self.qubits) if j not in keep)
        t = self.probs.reshape([2] * self.n).sum(axis=axes)
        kept = [j for j in self.qubits if j in keep]
        order = [kept.index(j) for j in keep]
        return OutcomeDistribution(tuple(keep), np.transpose(t, order).reshape(-1))


@dataclass(frozen=True)
class ConfusionModel:
    """Per-qubit assignment fidelities ``{qubit: (f0, f1)}``."""

    fidelities: Mapping[int, tuple[float, float]]

    @classmethod
    def from_config(cls, cfg: DeviceConfig) -> "ConfusionModel":
        return cls({j: (cfg.qubit(j).f0, cfg.qubit(j).f1) for j in QUBITS})

    @classmethod
    def perfect(cls, qubits: Sequence[int] = QUBITS) -> "ConfusionModel":
        return cls({j: (1.0, 1.0) for j in qubits})

    def matrix(self, j: int) -> np.ndarray:
        """Column-stochastic ``M[reported, true]``."""
        f0, f1 = self.fidelities[j]
        return np.array([[f0, 1 - f1], [1 - f0, f1]])

    def full_matrix(self, qubits: Sequence[int]) -> np.ndarray:
        return reduce(np.kron, [self.matrix(j) for j in qubits])

    def inverse(self, j: int) -> np.ndarray:
        f0, f1 = self.fidelities[j]
        det = f0 + f1 - 1
        if det <= 0:
            raise ValueError(f"Q{j}: confusion matrix is not invertible (f0 + f1 = {f0 + f1:.3f} <= 1)")
        return np.array([[f1, f1 - 1], [f0 - 1, f0]]) / det


def _apply_per_qubit(p: np.ndarray, mats: Sequence[np.ndarray]) -> np.ndarray:
    t = p.reshape([2] * len(mats))
    for ax, m in enumerate(mats):
        t = np.moveaxis(np.tensordot(m, t, axes=([1], [ax])), 0, ax)
    return t.reshape(-1)


def measure_distribution(rho: DensityMatrix | np.ndarray, targets: Sequence[int], dims=None) -> OutcomeDistribution:
    """Born-rule distribution of the computational readout of ``targets``.

    ``targets`` are subsystem indices of ``rho`` (for the device space the
    resonator is subsystem 0, so qubit j is index j).
    """
    if isinstance(rho, DensityMatrix):
        m, dims = rho.matrix, rho.dims
    else:
        m = np.asarray(rho)
        dims = dims if dims is not None else (2,) * int(round(np.log2(m.shape[-1])))
    targets = [int(t) for t in targets]
    red = partial_trace_array(m, dims, sorted(targets))
    order = sorted(targets)
    p = np.real(np.diagonal(red, axis1=-2, axis2=-1)).reshape([2] * len(order))
    p = np.transpose(p, [order.index(t) for t in targets]).reshape(-1)
    return OutcomeDistribution(tuple(targets), p)


def project_outcome(
    rho: DensityMatrix, targets: Sequence[int], outcome: str
) -> tuple[DensityMatrix, float]:
    """Project ``targets`` onto ``outcome`` and return the normalised state of the rest."""
    targets = [int(t) for t in targets]
    if len(outcome) != len(targets):
        raise ValueError(f"outcome {outcome!r} does not match {len(targets)} targets")
    dims = rho.dims
    t = rho.matrix.reshape(tuple(dims) * 2)
    n = len(dims)
    idx: list = [slice(None)] * (2 * n)
    for q, b in zip(targets, outcome):
        if dims[q] != 2:
            raise ValueError(f"subsystem {q} is not a qubit")
        idx[q] = idx[q + n] = int(b)
    block = t[tuple(idx)]
    rest = [d for i, d in enumerate(dims) if i not in targets]
    dr = int(np.prod(rest)) if rest else 1
    block = block.reshape(dr, dr)
    prob = float(np.real(np.trace(block)))
    if prob < 1e-12:
        raise NullEventError(f"outcome {outcome} on {targets} has probability {prob:.2e}")
    return DensityMatrix(HilbertSpace(tuple(rest) or (1,)), block / prob), prob


def apply_confusion(d: OutcomeDistribution, model: ConfusionModel) -> OutcomeDistribution:
    mats = [model.matrix(j) for j in d.qubits]
    return OutcomeDistribution(d.qubits, _apply_per_qubit(d.probs, mats))


def readout_correct(d: OutcomeDistribution, model: ConfusionModel, clip: bool = True) -> OutcomeDistribution:
    """Invert the tensor-product confusion map; negatives are clipped and the rest renormalised."""
    mats = [model.inverse(j) for j in d.qubits]
    raw = _apply_per_qubit(d.probs, mats)
    if not clip:
        return OutcomeDistribution(d.qubits, raw, raw)
    p = np.clip(raw, 0.0, None)
    s = p.sum()
    p = p / s if s > 0 else np.full_like(p, 1 / p.size)
    return OutcomeDistribution(d.qubits, p, raw)


def sample_shots(d: OutcomeDistribution, n: int, seed: int | np.random.Generator) -> np.ndarray:
    """Multinomial counts for ``n`` shots; the generator is built from ``seed``."""
    if n <= 0:
        raise ValueError("shot count must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    p = np.clip(d.probs, 0.0, None)
    return rng.multinomial(int(n), p / p.sum())


def counts_to_distribution(qubits: Sequence[int], counts: np.ndarray) -> OutcomeDistribution:
    c = np.asarray(counts, dtype=float)
    return OutcomeDistribution(tuple(qubits), c / c.sum())


def postselect(
    joint: OutcomeDistribution, anchor: str, anchor_qubits: Sequence[int] = (2, 3)
) -> tuple[OutcomeDistribution, float]:
    """Conditional distribution of the remaining qubits given ``anchor`` on ``anchor_qubits``."""
    anchor_qubits = [int(j) for j in anchor_qubits]
    rest = [j for j in joint.qubits if j not in anchor_qubits]
    t = joint.probs.reshape([2] * joint.n)
    idx: list = [slice(None)] * joint.n
    for j, b in zip(anchor_qubits, anchor):
        idx[joint.qubits.index(j)] = int(b)
    sub = t[tuple(idx)].reshape(-1)
    prob = float(sub.sum())
    if prob <= 1e-12:
        raise NullEventError(f"anchor {anchor} has probability {prob:.2e}")
    return OutcomeDistribution(tuple(rest), sub / prob), prob


# ---------------------------------------------------------------------------
# count files


def counts_to_csv(counts: Mapping[int, np.ndarray], qubits: Sequence[int] = QUBITS) -> str:
    """``setting,outcome,count`` rows; outcome bits follow ``qubits`` order."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["setting", "outcome", "count"])
    labels = bitstrings(len(qubits))
    for k in sorted(counts):
        for lab, c in zip(labels, counts[k]):
            w.writerow([k, lab, int(c)])
    return buf.getvalue()


def counts_from_csv(text: str) -> dict[int, np.ndarray]:
    rows = list(csv.DictReader(io.StringIO(text)))
    out: dict[int, np.ndarray] = {}
    for r in rows:
        k = int(r["setting"])
        n = len(r["outcome"])
        out.setdefault(k, np.zeros(2**n, dtype=np.int64))[int(r["outcome"], 2)] = int(r["count"])
    return out
