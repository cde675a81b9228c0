"""Dense complex linear algebra and tensor-product bookkeeping.

Subsystem ordering used throughout the package: the bus resonator first,
followed by qubits Q1..Q4, i.e. dims ``(cutoff, 2, 2, 2, 2)``. Qubit basis
states are ``|0>`` (ground) and ``|1>`` (excited); ``S+ = |1><0|``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-9
POSITIVITY_TOL = 1e-8

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)
# |1><0| and |0><1| in the (|0>, |1>) basis
SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)


class NotHermitianError(ValueError):
    """Raised when an operator that must be Hermitian is not."""


@dataclass(frozen=True)
class HilbertSpace:
    subsystem_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.subsystem_dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"invalid subsystem dims {self.subsystem_dims!r}")
        object.__setattr__(self, "subsystem_dims", dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.subsystem_dims))

    @property
    def n_subsystems(self) -> int:
        return len(self.subsystem_dims)

    def subspace(self, keep: Iterable[int]) -> "HilbertSpace":
        return HilbertSpace(tuple(self.subsystem_dims[i] for i in sorted(keep)))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    space: HilbertSpace
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        n = self.space.total_dim
        if m.shape != (n, n):
            raise ValueError(f"matrix shape {m.shape} does not match space dim {n}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_matrix(cls, matrix, dims: Sequence[int]) -> "DensityMatrix":
        return cls(HilbertSpace(tuple(dims)), np.asarray(matrix, dtype=complex))

    @classmethod
    def from_state(cls, psi: "StateVector") -> "DensityMatrix":
        v = psi.amplitudes
        return cls(psi.space, np.outer(v, v.conj()))

    @property
    def dims(self) -> tuple[int, ...]:
        return self.space.subsystem_dims

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def min_eigenvalue(self) -> float:
        h = 0.5 * (self.matrix + self.matrix.conj().T)
        return float(np.linalg.eigvalsh(h)[0])

    def is_physical(self, tol: float = POSITIVITY_TOL) -> bool:
        return (
            self.hermiticity_error() < 1e-10
            and abs(self.trace() - 1) < tol
            and self.min_eigenvalue() >= -tol
        )


@dataclass(frozen=True, eq=False)
class StateVector:
    space: HilbertSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if v.size != self.space.total_dim:
            raise ValueError(f"{v.size} amplitudes for space of dim {self.space.total_dim}")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    @classmethod
    def from_amplitudes(cls, amplitudes, dims: Sequence[int]) -> "StateVector":
        return cls(HilbertSpace(tuple(dims)), np.asarray(amplitudes, dtype=complex))

    @classmethod
    def basis(cls, dims: Sequence[int], levels: Sequence[int]) -> "StateVector":
        """Product basis state, e.g. ``basis((2, 2), (1, 0))`` is ``|10>``."""
        space = HilbertSpace(tuple(dims))
        idx = int(np.ravel_multi_index(tuple(levels), space.subsystem_dims))
        v = np.zeros(space.total_dim, dtype=complex)
        v[idx] = 1.0
        return cls(space, v)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.space.subsystem_dims

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product ``(a ⊗ b)[i*rb + k, j*cb + l] = a[i, j] * b[k, l]``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("kron expects two matrices")
    ra, ca = a.shape
    rb, cb = b.shape
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(ra * rb, ca * cb)


def kron_all(mats: Iterable[np.ndarray]) -> np.ndarray:
    return reduce(kron, mats)


def embed(op: np.ndarray, site: int, dims: Sequence[int]) -> np.ndarray:
    """Place a local operator on subsystem ``site`` of the product space ``dims``."""
    mats = [np.eye(d, dtype=complex) for d in dims]
    if op.shape != (dims[site], dims[site]):
        raise ValueError(f"operator shape {op.shape} does not fit subsystem dim {dims[site]}")
    mats[site] = np.asarray(op, dtype=complex)
    return kron_all(mats)


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Reduced state on the subsystems in ``keep`` (returned in ascending order)."""
    dims = rho.dims
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep must name at least one subsystem")
    for k in keep:
        if not 0 <= k < len(dims):
            raise IndexError(f"subsystem index {k} out of range for {len(dims)} subsystems")
    reduced = partial_trace_array(rho.matrix, dims, keep)
    return DensityMatrix(rho.space.subspace(keep), reduced)


def partial_trace_array(m: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Partial trace on a bare array; leading batch axes are carried through."""
    n = len(dims)
    batch = m.shape[:-2]
    t = m.reshape(batch + tuple(dims) + tuple(dims))
    nb = len(batch)
    traced = [i for i in range(n) if i not in keep]
    # einsum with explicit index labels
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    bl = letters[:nb]
    row = list(letters[nb : nb + n])
    col = list(letters[nb + n : nb + 2 * n])
    for i in traced:
        col[i] = row[i]
    out = bl + "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    r = np.einsum(bl + "".join(row) + "".join(col) + "->" + out, t)
    dk = int(np.prod([dims[i] for i in keep]))
    return r.reshape(batch + (dk, dk))


def check_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    err = float(np.max(np.abs(a - dagger(a)))) if a.size else 0.0
    if err > tol:
        raise NotHermitianError(f"operator is not Hermitian (max |A - A^dag| = {err:.3e})")


def hermitian_eig(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix with eigenvalues in descending order."""
    a = np.asarray(a, dtype=complex)
    check_hermitian(a)
    w, v = np.linalg.eigh(0.5 * (a + dagger(a)))
    return w[::-1].copy(), v[:, ::-1].copy()


def propagator(h: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i h t)`` for a Hermitian ``h`` given in angular-frequency units."""
    w, v = hermitian_eig(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def fidelity_pure(rho: np.ndarray, psi: np.ndarray) -> float:
    return float(np.real(np.vdot(psi, rho @ psi)))


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
