"""Device description, Hamiltonian and dissipator construction.

All frequencies are angular (rad/s) and all times are seconds internally.
The simulation frame rotates at the resonator frequency for every
subsystem, so a qubit at frequency ``w_j`` carries the static term
``-Delta_j S+_j S-_j`` with ``Delta_j = w_r - w_j``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .quantum_core import SIGMA_MINUS, SIGMA_PLUS, SIGMA_Z, embed

TWO_PI = 2 * math.pi
GHZ = TWO_PI * 1e9
MHZ = TWO_PI * 1e6
US = 1e-6
NS = 1e-9

N_QUBITS = 4
QUBITS = (1, 2, 3, 4)
TUNING_RANGE = (5.0 * GHZ, 6.0 * GHZ)


class ConfigError(ValueError):
    """Invalid or unreadable device configuration."""


@dataclass(frozen=True)
class QubitParams:
    idle_frequency: float
    t1: float
    t2_star: float
    t_phi_dd: float
    g: float
    f0: float
    f1: float
    name: str = ""
    t2_se: float | None = None

    def __post_init__(self):
        for attr in ("t1", "t2_star", "t_phi_dd"):
            if not getattr(self, attr) > 0:
                raise ConfigError(f"{self.name or 'qubit'}: {attr} must be positive")
        if not self.g > 0:
            raise ConfigError(f"{self.name or 'qubit'}: g must be positive")
        for attr in ("f0", "f1"):
            if not 0.0 <= getattr(self, attr) <= 1.0:
                raise ConfigError(f"{self.name or 'qubit'}: {attr} must lie in [0, 1]")

    @property
    def t_phi_ramsey(self) -> float:
        """Exponential pure-dephasing time implied by T2* and T1 (protection disabled)."""
        rate = 1.0 / self.t2_star - 0.5 / self.t1
        return math.inf if rate <= 0 else 1.0 / rate


@dataclass(frozen=True)
class DeviceConfig:
    resonator_frequency: float
    qubits: tuple[QubitParams, ...]
    direct_couplings: Mapping[tuple[int, int], float] = field(default_factory=dict)
    resonator_cutoff: int = 3
    resonator_t1: float = math.inf
    dephasing_protection: bool = True

    def __post_init__(self):
        if len(self.qubits) != N_QUBITS:
            raise ConfigError(f"expected {N_QUBITS} qubits, got {len(self.qubits)}")
        if self.resonator_cutoff < 2:
            raise ConfigError("resonator_cutoff must be >= 2")
        couplings = {}
        for (j, k), lam in dict(self.direct_couplings).items():
            if j == k:
                raise ConfigError("direct coupling of a qubit to itself")
            if j not in QUBITS or k not in QUBITS:
                raise ConfigError(f"direct coupling references unknown qubit ({j}, {k})")
            key = (min(j, k), max(j, k))
            if key in couplings and couplings[key] != lam:
                raise ConfigError(f"asymmetric direct coupling for {key}")
            couplings[key] = float(lam)
        object.__setattr__(self, "direct_couplings", couplings)
        object.__setattr__(self, "qubits", tuple(self.qubits))

    def qubit(self, j: int) -> QubitParams:
        return self.qubits[j - 1]

    def direct_coupling(self, j: int, k: int) -> float:
        return self.direct_couplings.get((min(j, k), max(j, k)), 0.0)

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.resonator_cutoff,) + (2,) * N_QUBITS

    @property
    def idle_assignment(self) -> "FrequencyAssignment":
        return FrequencyAssignment({j: self.qubit(j).idle_frequency for j in QUBITS})

    def detuning(self, j: int, frequency: float) -> float:
        return self.resonator_frequency - frequency

    def with_cutoff(self, cutoff: int) -> "DeviceConfig":
        return replace(self, resonator_cutoff=int(cutoff))

    def ideal(self) -> "DeviceConfig":
        """Same device with every decoherence channel switched off."""
        qs = tuple(replace(q, t1=math.inf, t2_star=math.inf, t_phi_dd=math.inf) for q in self.qubits)
        return replace(self, qubits=qs, resonator_t1=math.inf)


@dataclass(frozen=True)
class FrequencyAssignment:
    """Operating frequency (rad/s) per qubit for one schedule interval."""

    frequencies: Mapping[int, float]

    def __post_init__(self):
        lo, hi = TUNING_RANGE
        for j, w in self.frequencies.items():
            if j not in QUBITS:
                raise ValueError(f"unknown qubit {j}")
            if not lo - 1e-6 <= w <= hi + 1e-6:
                raise ValueError(f"Q{j} frequency {w / GHZ:.4f} GHz outside tuning range 5-6 GHz")
        object.__setattr__(self, "frequencies", dict(self.frequencies))

    def __getitem__(self, j: int) -> float:
        return self.frequencies[j]

    def get(self, j: int, default=None):
        return self.frequencies.get(j, default)

    def merged(self, other: "FrequencyAssignment") -> "FrequencyAssignment":
        return FrequencyAssignment({**self.frequencies, **other.frequencies})

    @classmethod
    def from_detunings(cls, cfg: DeviceConfig, detunings: Mapping[int, float]) -> "FrequencyAssignment":
        return cls({j: cfg.resonator_frequency - d for j, d in detunings.items()})


@dataclass(frozen=True)
class DrivePulse:
    """Microwave drive on one qubit.

    ``phase`` is referenced to the target qubit's tracked rotating frame at
    the pulse start; ``detuning`` is the carrier frequency minus the resonator
    frequency (rad/s). The drive enters as ``rabi * env(t) * (e^{i phi} S+ + h.c.)``
    in the target's frame, so a resonant rectangular pulse of duration ``T``
    rotates the qubit by ``2 * rabi * T``.
    """

    target: int
    rabi: float
    phase: float
    detuning: float
    start: float
    duration: float
    envelope: str = "rectangular"
    fwhm: float | None = None
    phase_inversion_at: float | None = None

    def __post_init__(self):
        if self.target not in QUBITS:
            raise ValueError(f"unknown drive target {self.target}")
        if not self.duration > 0:
            raise ValueError("drive duration must be positive")
        if self.envelope not in ("rectangular", "gaussian"):
            raise ValueError(f"unknown envelope {self.envelope!r}")
        if self.envelope == "gaussian" and not (self.fwhm and self.fwhm > 0):
            raise ValueError("gaussian envelope needs a positive fwhm")
        if self.phase_inversion_at is not None and not 0 < self.phase_inversion_at < self.duration:
            raise ValueError("phase_inversion_at must lie strictly inside the pulse")

    @property
    def end(self) -> float:
        return self.start + self.duration

    def envelope_at(self, t):
        """Envelope value at absolute time ``t`` (vectorised; zero outside the pulse)."""
        t = np.asarray(t, dtype=float)
        inside = (t >= self.start) & (t <= self.end)
        if self.envelope == "rectangular":
            env = np.ones_like(t)
        else:
            sigma = self.fwhm / (2 * math.sqrt(2 * math.log(2)))
            tc = self.start + 0.5 * self.duration
            env = np.exp(-0.5 * ((t - tc) / sigma) ** 2)
        return np.where(inside, env, 0.0)

    def envelope_raw(self, t: float) -> float:
        """Envelope shape without the pulse-window cut-off."""
        if self.envelope == "rectangular":
            return 1.0
        sigma = self.fwhm / (2 * math.sqrt(2 * math.log(2)))
        tc = self.start + 0.5 * self.duration
        return math.exp(-0.5 * ((t - tc) / sigma) ** 2)

    def area(self) -> float:
        """Integral of the envelope over the pulse (s)."""
        if self.envelope == "rectangular":
            return self.duration
        sigma = self.fwhm / (2 * math.sqrt(2 * math.log(2)))
        half = 0.5 * self.duration
        return sigma * math.sqrt(2 * math.pi) * math.erf(half / (sigma * math.sqrt(2)))

    def phase_at(self, t: float) -> float:
        if self.phase_inversion_at is not None and t >= self.start + self.phase_inversion_at:
            return self.phase + math.pi
        return self.phase


# ---------------------------------------------------------------------------
# configuration file


def _cfg_from_dict(d: Mapping) -> DeviceConfig:
    try:
        qubits = []
        for q in d["qubits"]:
            qubits.append(
                QubitParams(
                    idle_frequency=float(q["idle_frequency_ghz"]) * GHZ,
                    t1=_time_us(q["t1_us"]),
                    t2_star=_time_us(q["t2_star_us"]),
                    t_phi_dd=_time_us(q["t_phi_dd_us"]),
                    g=float(q["g_mhz"]) * MHZ,
                    f0=float(q["f0"]),
                    f1=float(q["f1"]),
                    name=str(q.get("name", "")),
                    t2_se=_time_us(q["t2_se_us"]) if q.get("t2_se_us") is not None else None,
                )
            )
        couplings = {}
        for key, val in d.get("direct_couplings_mhz", {}).items():
            j, k = (int(s) for s in str(key).split("-"))
            couplings[(j, k)] = float(val) * MHZ
        res_t1 = d.get("resonator_t1_us")
        return DeviceConfig(
            resonator_frequency=float(d["resonator_frequency_ghz"]) * GHZ,
            qubits=tuple(qubits),
            direct_couplings=couplings,
            resonator_cutoff=int(d.get("resonator_cutoff", 3)),
            resonator_t1=math.inf if res_t1 is None else _time_us(res_t1),
            dephasing_protection=bool(d.get("dephasing_protection", True)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed device config: {exc}") from exc


def _time_us(v) -> float:
    v = float(v)
    return math.inf if math.isinf(v) else v * US


def config_to_dict(cfg: DeviceConfig) -> dict:
    def us(x):
        return None if math.isinf(x) else x / US

    return {
        "resonator_frequency_ghz": cfg.resonator_frequency / GHZ,
        "resonator_cutoff": cfg.resonator_cutoff,
        "resonator_t1_us": us(cfg.resonator_t1),
        "dephasing_protection": cfg.dephasing_protection,
        "qubits": [
            {
                "name": q.name,
                "idle_frequency_ghz": q.idle_frequency / GHZ,
                "t1_us": us(q.t1),
                "t2_star_us": us(q.t2_star),
                "t2_se_us": None if q.t2_se is None else us(q.t2_se),
                "t_phi_dd_us": us(q.t_phi_dd),
                "g_mhz": q.g / MHZ,
                "f0": q.f0,
                "f1": q.f1,
            }
            for q in cfg.qubits
        ],
        "direct_couplings_mhz": {f"{j}-{k}": v / MHZ for (j, k), v in cfg.direct_couplings.items()},
    }


def load_config(path: str | Path | None = None) -> DeviceConfig:
    """Load a device JSON file (GHz / us / MHz units); ``None`` gives the bundled default."""
    if path is None:
        text = resources.files("swapsim").joinpath("data/device_default.json").read_text()
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return _cfg_from_dict(data)


def default_config() -> DeviceConfig:
    return load_config(None)


# ---------------------------------------------------------------------------
# operators


@dataclass(frozen=True, eq=False)
class Operators:
    dims: tuple[int, ...]
    a: np.ndarray
    n_res: np.ndarray
    s_plus: dict
    s_minus: dict
    n: dict
    sz: dict

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def total_excitation(self) -> np.ndarray:
        return self.n_res + sum(self.n[j] for j in QUBITS)


@lru_cache(maxsize=8)
def operators(cutoff: int) -> Operators:
    dims = (cutoff,) + (2,) * N_QUBITS
    a_loc = np.diag(np.sqrt(np.arange(1, cutoff)), 1).astype(complex)
    a = embed(a_loc, 0, dims)
    sp = {j: embed(SIGMA_PLUS, j, dims) for j in QUBITS}
    sm = {j: embed(SIGMA_MINUS, j, dims) for j in QUBITS}
    nn = {j: sp[j] @ sm[j] for j in QUBITS}
    sz = {j: embed(SIGMA_Z, j, dims) for j in QUBITS}
    for m in (a, *sp.values(), *sm.values(), *nn.values(), *sz.values()):
        m.setflags(write=False)
    return Operators(dims, a, a.conj().T @ a, sp, sm, nn, sz)


def effective_coupling(cfg: DeviceConfig, j: int, k: int, delta: float) -> float:
    """Resonator-mediated exchange ``g_j g_k / delta`` net of the direct coupling."""
    if delta == 0:
        raise ValueError("resonant qubits: the dispersive coupling formula does not apply")
    gj, gk = cfg.qubit(j).g, cfg.qubit(k).g
    if abs(delta) < 5 * max(gj, gk):
        warnings.warn(
            f"|delta| = {abs(delta) / MHZ:.1f} MHz is not much larger than g (ratio < 5)",
            stacklevel=2,
        )
    return gj * gk / delta - cfg.direct_coupling(j, k)


def dressed_shift(g: float, delta: float) -> float:
    """Exact single-excitation Jaynes-Cummings frequency of a qubit relative to the
    resonator frame, for detuning ``delta = w_r - w_q`` (returns a value near ``-delta``)."""
    root = math.sqrt(delta * delta + 4 * g * g)
    if delta >= 0:
        return 0.5 * (-delta - root)
    return 0.5 * (-delta + root)


def qubit_frequency(
    cfg: DeviceConfig,
    j: int,
    fa: FrequencyAssignment,
    active: Sequence[int] = QUBITS,
    resonance_tol: float = 1.0 * MHZ,
) -> float:
    """Transition frequency of qubit ``j`` relative to the resonator frame.

    Exact single-excitation eigenvalue of the static Hamiltonian that
    follows ``|1_j>``, including the dispersive pull of the resonator and of
    every active qubit that is not tuned into resonance with ``j``. A
    resonant partner (within ``resonance_tol``) is left out: that exchange
    is the interaction being driven, not a frequency shift.
    """
    wj = fa.get(j, cfg.qubit(j).idle_frequency)
    keep = [j] + [
        k for k in active if k != j and abs(fa.get(k, cfg.qubit(k).idle_frequency) - wj) > resonance_tol
    ]
    n = len(keep) + 1
    h = np.zeros((n, n))
    for a, k in enumerate(keep, start=1):
        h[a, a] = -(cfg.resonator_frequency - fa.get(k, cfg.qubit(k).idle_frequency))
        h[0, a] = h[a, 0] = cfg.qubit(k).g
        for b, m in enumerate(keep[:a - 1], start=1):
            h[a, b] = h[b, a] = cfg.direct_coupling(k, m)
    w, v = np.linalg.eigh(h)
    return float(w[np.argmax(np.abs(v[1]))])


def static_hamiltonian(
    cfg: DeviceConfig,
    fa: FrequencyAssignment,
    active: Sequence[int] = QUBITS,
) -> np.ndarray:
    """Drive-free part of the Hamiltonian in the resonator frame.

    Qubits not listed in ``active`` (already read out) are removed from the
    dynamics entirely.
    """
    ops = operators(cfg.resonator_cutoff)
    h = np.zeros((ops.dim, ops.dim), dtype=complex)
    active = tuple(active)
    for j in active:
        w = fa.get(j, cfg.qubit(j).idle_frequency)
        h -= (cfg.resonator_frequency - w) * ops.n[j]
        g = cfg.qubit(j).g
        h += g * (ops.s_plus[j] @ ops.a + ops.s_minus[j] @ ops.a.conj().T)
    for (j, k), lam in cfg.direct_couplings.items():
        if j in active and k in active and lam != 0:
            x = ops.s_plus[j] @ ops.s_minus[k]
            h += lam * (x + x.conj().T)
    return h


def drive_hamiltonian(
    cfg: DeviceConfig,
    drives: Sequence[DrivePulse],
    t: float,
    frame_phases: Mapping[int, float] | None = None,
) -> np.ndarray:
    """Drive terms at time ``t`` in the resonator frame.

    ``frame_phases[j]`` is the accumulated phase of qubit ``j``'s rotating
    frame at each pulse's start time.
    """
    ops = operators(cfg.resonator_cutoff)
    h = np.zeros((ops.dim, ops.dim), dtype=complex)
    for p in drives:
        c = drive_coefficient(p, t, 0.0 if frame_phases is None else frame_phases.get(p.target, 0.0))
        if c != 0:
            x = c * ops.s_plus[p.target]
            h += x + x.conj().T
    return h


def drive_coefficient(p: DrivePulse, t: float, frame_phase: float) -> complex:
    env = float(p.envelope_at(t))
    if env == 0.0:
        return 0.0
    return p.rabi * env * np.exp(1j * (p.phase_at(t) - frame_phase - p.detuning * (t - p.start)))


def build_hamiltonian(
    cfg: DeviceConfig,
    fa: FrequencyAssignment,
    drives: Sequence[DrivePulse] = (),
    t: float = 0.0,
    frame_phases: Mapping[int, float] | None = None,
    active: Sequence[int] = QUBITS,
) -> np.ndarray:
    """Full Hamiltonian (rad/s) on ``[cutoff, 2, 2, 2, 2]`` at time ``t``."""
    h = static_hamiltonian(cfg, fa, active)
    live = [p for p in drives if p.target in active]
    if live:
        h = h + drive_hamiltonian(cfg, live, t, frame_phases)
    return h


def dephasing_time(cfg: DeviceConfig, j: int) -> float:
    q = cfg.qubit(j)
    return q.t_phi_dd if cfg.dephasing_protection else q.t_phi_ramsey


def collapse_operators(cfg: DeviceConfig, active: Sequence[int] = QUBITS) -> list[np.ndarray]:
    """Relaxation ``sqrt(1/T1) S-`` and dephasing ``sqrt(1/(2 T_phi)) sigma_z`` per qubit.

    With this normalisation a single-qubit coherence decays as ``exp(-t / T_phi)``.
    """
    ops = operators(cfg.resonator_cutoff)
    out = []
    for j in QUBITS:
        if j not in active:
            continue
        t1 = cfg.qubit(j).t1
        tphi = dephasing_time(cfg, j)
        out.append(math.sqrt(1.0 / t1) * ops.s_minus[j] if math.isfinite(t1) else 0 * ops.s_minus[j])
        out.append(math.sqrt(0.5 / tphi) * ops.sz[j] if math.isfinite(tphi) else 0 * ops.sz[j])
    if math.isfinite(cfg.resonator_t1):
        out.append(math.sqrt(1.0 / cfg.resonator_t1) * ops.a)
    return out


def dressed_basis(
    cfg: DeviceConfig,
    fa: FrequencyAssignment,
    active: Sequence[int] = QUBITS,
) -> np.ndarray:
    """Eigenvectors of the static Hamiltonian labelled by the bare states they follow.

    Column ``i`` of the returned unitary ``W`` is the dressed eigenstate with the
    largest overlap with bare basis state ``i`` (assignment solved per
    excitation-number block), phased so that ``<i|W|i>`` is real and positive.
    ``W^dag rho W`` expresses ``rho`` in dressed labels, which is what a
    dispersive readout at this operating point resolves.
    """
    ops = operators(cfg.resonator_cutoff)
    h = static_hamiltonian(cfg, fa, active)
    # bare energies of read-out qubits keep their (uncoupled) states from mixing
    for j in QUBITS:
        if j not in active:
            h = h - (cfg.resonator_frequency - fa.get(j, cfg.qubit(j).idle_frequency)) * ops.n[j]
    nexc = np.rint(np.real(np.diag(ops.total_excitation()))).astype(int)
    w = np.zeros_like(h)
    for n in np.unique(nexc):
        idx = np.flatnonzero(nexc == n)
        _, v = np.linalg.eigh(h[np.ix_(idx, idx)])
        rows, cols = linear_sum_assignment(-np.abs(v) ** 2)
        v = v[:, cols[np.argsort(rows)]]
        d = np.diag(v).copy()
        v = v * (np.abs(d) / np.where(d == 0, 1, d))[None, :]
        w[np.ix_(idx, idx)] = v
    return w
