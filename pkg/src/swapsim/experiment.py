"""End-to-end swapping experiments: schedule, evolution, readout, tomography.

Two evaluation paths share the same schedule and post-processing:

full
    Lindblad integration of the resonator + four-qubit model through the
    pulse timeline (see :mod:`swapsim.dynamics`).
effective
    Four bare qubits with closed-form effective Hamiltonians per interval
    (XY exchange, the ideal gate generator, echoed protection drives) and
    per-qubit relaxation/dephasing, integrated exactly with a superoperator
    exponential. Fast, and exact in the noiseless limit.

Either path yields, for each of the nine tomography settings, the joint
Q1..Q4 outcome distribution. Readout error is applied and corrected,
then each Q2Q3 anchor outcome is post-selected and the Q1Q4 state is
reconstructed.
"""

from __future__ import annotations

import json
import logging
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .device import QUBITS, DeviceConfig, dephasing_time, effective_coupling
from .dynamics import (
    IntegratorSettings,
    evolve_lindblad,
    frame_phases,
    ground_state,
    readout_map,
    to_qubit_frame,
    undress,
)
from .gates import (
    ANCHOR_BELL,
    ANCHOR_PRODUCT,
    ANCHORS,
    bell_vector,
    dressed_gate_ideal_unitary,
    product_vector,
    xy_hamiltonian,
)
from .measurement import (
    ConfusionModel,
    OutcomeDistribution,
    apply_confusion,
    counts_to_csv,
    counts_to_distribution,
    postselect,
    readout_correct,
    sample_shots,
)
from .quantum_core import IDENTITY_2, SIGMA_MINUS, SIGMA_X, SIGMA_Z, kron_all, partial_trace_array
from .schedule import (
    SEQUENCES,
    InstantRotation,
    PulseSchedule,
    ScheduleError,
    SequenceParams,
    dressed_gate_segment,
    rotation_pulse,
    sequence_bell_prep,
    validate,
)
from .tomography import (
    SETTINGS,
    chi_of_unitary,
    concurrence,
    density_matrix_to_json,
    process_fidelity,
    process_inputs,
    chi_from_choi,
    choi_from_outputs,
    project_physical,
    reconstruct_state,
    rotation_matrix,
    state_fidelity,
)

log = logging.getLogger(__name__)

MODES = tuple(SEQUENCES)


class ScheduleValidationError(ScheduleError):
    """The schedule failed validation (error-level diagnostics)."""


@dataclass(frozen=True)
class ExperimentMode:
    mode: str = "normal"
    fidelity_mode: str = "full"  # or "effective"
    sampling: str = "exact"  # or "shots"
    shots: int = 10000
    seed: int = 0
    tomography_rotations: str = "ideal"  # or "pulsed"
    readout_error: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.fidelity_mode not in ("full", "effective"):
            raise ValueError(f"unknown fidelity mode {self.fidelity_mode!r}")
        if self.sampling not in ("exact", "shots"):
            raise ValueError(f"unknown sampling {self.sampling!r}")
        if self.sampling == "shots" and self.shots <= 0:
            raise ValueError("shot count must be positive")
        if self.tomography_rotations not in ("ideal", "pulsed"):
            raise ValueError("tomography rotations must be 'ideal' or 'pulsed'")


@dataclass
class AnchorResult:
    anchor: str
    probability: float
    target: str
    rho: np.ndarray
    fidelity: float
    concurrence: float


@dataclass
class ExperimentReport:
    mode: ExperimentMode
    rows: list[AnchorResult]
    unconditional: np.ndarray
    distributions: dict[int, OutcomeDistribution]
    counts: dict[int, np.ndarray] | None = None
    trace_drift: float = 0.0
    min_eigenvalue: float = float("nan")
    bell_fidelities: tuple[float, float] | None = None
    gate_fidelity: float | None = None

    def row(self, anchor: str) -> AnchorResult:
        for r in self.rows:
            if r.anchor == anchor:
                return r
        raise KeyError(anchor)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([r.probability for r in self.rows])

    @property
    def fidelities(self) -> np.ndarray:
        return np.array([r.fidelity for r in self.rows])

    @property
    def concurrences(self) -> np.ndarray:
        return np.array([r.concurrence for r in self.rows])


def anchor_target(mode: str, anchor: str) -> tuple[str, np.ndarray]:
    """Label and Q1Q4 state vector expected for ``anchor`` in ``mode``."""
    if mode == "delayed-computational":
        bits = ANCHOR_PRODUCT[anchor]
        return f"|{bits}>", product_vector(bits)
    kind = ANCHOR_BELL[anchor]
    return f"{kind}_14", bell_vector(kind)


def build_schedule(cfg: DeviceConfig, mode: str, params: SequenceParams | None = None) -> PulseSchedule:
    try:
        s = SEQUENCES[mode](cfg, params or SequenceParams())
    except ScheduleError:
        raise
    except ValueError as exc:
        # e.g. an operating point outside the tuning range
        raise ScheduleValidationError(str(exc)) from exc
    errors = [d for d in validate(s, cfg) if d.level == "error"]
    if errors:
        raise ScheduleValidationError("; ".join(d.message for d in errors))
    return s


# ---------------------------------------------------------------------------
# full path


def _with_tomography(schedule, cfg, params, setting, how):
    """Schedule variant carrying the pre-rotations of one tomography setting."""
    w = schedule.tomography
    rots = [(j, a, p) for j, (a, p) in zip(w.targets, setting.rotations()) if a != 0.0]
    if not rots:
        return schedule
    if how == "ideal":
        mid = w.start + 0.5 * w.duration
        extra = tuple(InstantRotation(mid, j, a, p, "tomo") for j, a, p in rots)
        return replace(schedule, rotations=schedule.rotations + extra)
    active = schedule.active_at(w.start)
    pulses = [rotation_pulse(cfg, replace(params, rotation_duration=w.duration), j, w.start, a, p, active)
              for j, a, p in rots]
    return schedule.with_drives_added(pulses, "tomo")


def _qubit_populations(rho: np.ndarray, cfg: DeviceConfig) -> np.ndarray:
    red = partial_trace_array(rho, cfg.dims, [1, 2, 3, 4])
    return np.real(np.diagonal(red, axis1=-2, axis2=-1))


def full_distributions(
    cfg: DeviceConfig,
    schedule: PulseSchedule,
    params: SequenceParams,
    how: str = "ideal",
    settings: IntegratorSettings | None = None,
) -> tuple[dict[int, np.ndarray], float, float]:
    """Joint Q1..Q4 outcome probabilities per tomography setting (no readout error)."""
    w = schedule.tomography
    t_last = max(r.time for r in schedule.readouts)
    pre = evolve_lindblad(ground_state(cfg), schedule, cfg, (0.0, w.start), settings)
    rho = np.array(pre.final_state.matrix)
    drift, mineig = pre.trace_drift, pre.min_eigenvalue
    batch = []
    for s in SETTINGS:
        sched = _with_tomography(schedule, cfg, params, s, how)
        r = evolve_lindblad(rho, sched, cfg, (w.start, w.end), settings)
        batch.append(r.final_state)
        drift = max(drift, r.trace_drift)
        mineig = min(mineig, r.min_eigenvalue)
    batch = np.array(batch)
    if t_last > w.end:
        r = evolve_lindblad(batch, schedule, cfg, (w.end, t_last), settings)
        batch = r.final_state
        drift = max(drift, r.trace_drift)
        mineig = min(mineig, r.min_eigenvalue)
    m = readout_map(schedule, cfg, t_last)
    if m is not None:
        batch = m @ batch @ m.conj().T
    pops = _qubit_populations(batch, cfg)
    return {s.index: pops[s.index] for s in SETTINGS}, drift, mineig


# ---------------------------------------------------------------------------
# effective path


def _embed4(op: np.ndarray, sites: Sequence[int]) -> np.ndarray:
    """Operator on qubits ``sites`` (1-based) embedded in the Q1..Q4 space."""
    if len(sites) == 1:
        mats = [IDENTITY_2] * 4
        mats[sites[0] - 1] = op
        return kron_all(mats)
    j, k = sites
    # contract the pair operator onto axes j, k; identities elsewhere
    lo, up = "abcd", "ABCD"
    others = [q for q in QUBITS if q not in (j, k)]
    subs = up[j - 1] + up[k - 1] + lo[j - 1] + lo[k - 1]
    subs += "".join(f",{up[q - 1]}{lo[q - 1]}" for q in others)
    full = np.einsum(subs + "->" + up + lo, op.reshape(2, 2, 2, 2), *[np.eye(2)] * len(others))
    return full.reshape(16, 16)


def _effective_generator(cfg, schedule, params, t, frozen):
    """Lindblad superoperator (row-major vec) of the effective model at time ``t``."""
    h = np.zeros((16, 16), dtype=complex)
    for seg in schedule.segments:
        if not seg.covers(t):
            continue
        if seg.label.startswith("bell-"):
            j, k = int(seg.label[-2]), int(seg.label[-1])
            delta = cfg.resonator_frequency - seg.frequencies[j]
            h += _embed4(xy_hamiltonian(effective_coupling(cfg, j, k, delta)), (j, k))
        elif seg.label == "dressed-gate":
            # U = exp(i pi/4 X2 X3) spread uniformly over the segment
            h += -(math.pi / 4) / seg.duration * _embed4(np.kron(SIGMA_X, SIGMA_X), (2, 3))
        elif seg.label == "protect":
            for p in seg.drives:
                sign = math.cos(p.phase_at(t) - p.phase)
                h += sign * p.rabi * _embed4(SIGMA_X, (p.target,))
    cops = []
    for j in QUBITS:
        if j in frozen:
            continue
        q = cfg.qubit(j)
        if math.isfinite(q.t1):
            cops.append(math.sqrt(1 / q.t1) * _embed4(SIGMA_MINUS, (j,)))
        tp = dephasing_time(cfg, j)
        if math.isfinite(tp):
            cops.append(math.sqrt(1 / (2 * tp)) * _embed4(SIGMA_Z, (j,)))
    eye = np.eye(16)
    L = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for c in cops:
        cd = c.conj().T @ c
        L += np.kron(c, c.conj()) - 0.5 * (np.kron(cd, eye) + np.kron(eye, cd.T))
    return L


def _rot4(j: int, angle: float, phase: float) -> np.ndarray:
    return _embed4(rotation_matrix(angle, phase), (j,))


def effective_distributions(
    cfg: DeviceConfig, schedule: PulseSchedule, params: SequenceParams
) -> dict[int, np.ndarray]:
    """Effective-model counterpart of :func:`full_distributions`."""
    w = schedule.tomography
    pi_time = 0.5 * params.rotation_duration
    tomo_time = w.start + 0.5 * w.duration
    t_last = max(r.time for r in schedule.readouts)
    pts = {p for p in schedule.breakpoints() if p <= t_last} | {pi_time, tomo_time, t_last}
    pts = sorted(pts)
    rho = np.zeros((16, 16), dtype=complex)
    rho[0, 0] = 1.0
    batch = rho[None]
    for ta, tb in zip(pts, pts[1:]):
        if abs(ta - pi_time) < 1e-15:
            u = _rot4(1, math.pi, 0.0) @ _rot4(3, math.pi, 0.0)
            batch = u @ batch @ u.conj().T
        if abs(ta - tomo_time) < 1e-15:
            us = [_rot4(1, *s.rotations()[0]) @ _rot4(4, *s.rotations()[1]) for s in SETTINGS]
            batch = np.array([u @ batch[0] @ u.conj().T for u in us])
        if tb - ta <= 0:
            continue
        frozen = [j for j in QUBITS if schedule.readout_time(j) <= ta]
        prop = expm(_effective_generator(cfg, schedule, params, 0.5 * (ta + tb), frozen) * (tb - ta))
        batch = (prop @ batch.reshape(batch.shape[0], 256).T).T.reshape(-1, 16, 16)
    if batch.shape[0] == 1:
        batch = np.repeat(batch, 9, axis=0)
    pops = np.real(np.diagonal(batch, axis1=-2, axis2=-1))
    return {s.index: pops[s.index] for s in SETTINGS}


# ---------------------------------------------------------------------------
# driver


def _analyse(mode: ExperimentMode, joint: dict[int, np.ndarray], cfg: DeviceConfig):
    model = ConfusionModel.from_config(cfg) if mode.readout_error else ConfusionModel.perfect()
    rng = np.random.default_rng(mode.seed)
    dists: dict[int, OutcomeDistribution] = {}
    counts = {} if mode.sampling == "shots" else None
    for k in range(9):
        d = OutcomeDistribution(QUBITS, np.clip(joint[k], 0.0, None) / np.sum(np.clip(joint[k], 0.0, None)))
        reported = apply_confusion(d, model)
        if counts is not None:
            counts[k] = sample_shots(reported, mode.shots, rng)
            reported = counts_to_distribution(QUBITS, counts[k])
        dists[k] = readout_correct(reported, model)
    rows = []
    for a in ANCHORS:
        cond, probs = {}, []
        for k in range(9):
            c, p = postselect(dists[k], a, (2, 3))
            cond[k] = c
            probs.append(p)
        rho = reconstruct_state(cond).matrix
        label, vec = anchor_target(mode.mode, a)
        rows.append(AnchorResult(a, float(np.mean(probs)), label, rho, state_fidelity(rho, vec), concurrence(rho)))
    total = sum(r.probability for r in rows)
    for r in rows:
        r.probability /= total
    uncond = sum(r.probability * r.rho for r in rows)
    return rows, uncond, dists, counts


def run_experiment(
    cfg: DeviceConfig,
    mode: ExperimentMode | str = "normal",
    params: SequenceParams | None = None,
    settings: IntegratorSettings | None = None,
) -> ExperimentReport:
    """Run one swapping experiment and reconstruct the conditional Q1Q4 states."""
    mode = ExperimentMode(mode) if isinstance(mode, str) else mode
    params = params or SequenceParams()
    schedule = build_schedule(cfg, mode.mode, params)
    drift, mineig = 0.0, float("nan")
    if mode.fidelity_mode == "full":
        joint, drift, mineig = full_distributions(cfg, schedule, params, mode.tomography_rotations, settings)
    else:
        joint = effective_distributions(cfg, schedule, params)
    rows, uncond, dists, counts = _analyse(mode, joint, cfg)
    return ExperimentReport(mode, rows, uncond, dists, counts, drift, mineig)


# ---------------------------------------------------------------------------
# characterisation


@dataclass
class CharacterizationReport:
    f12: float
    f34: float
    joint: float
    populations: dict[str, float]
    gate_fidelity: float | None = None
    chi: np.ndarray | None = None


def bell_pair_fidelities(
    cfg: DeviceConfig, params: SequenceParams | None = None, settings: IntegratorSettings | None = None
) -> tuple[float, float, float, dict[str, float]]:
    """Full-model Bell preparation: (F12, F34, joint, four-qubit populations)."""
    s = sequence_bell_prep(cfg, params or SequenceParams())
    r = evolve_lindblad(ground_state(cfg), s, cfg, settings=settings)
    t = s.total_duration
    rho = to_qubit_frame(undress(np.array(r.final_state.matrix), cfg, s, t), cfg, frame_phases(s, cfg, t))
    b = bell_vector("Psi+")
    f12 = state_fidelity(partial_trace_array(rho, cfg.dims, [1, 2]), b)
    f34 = state_fidelity(partial_trace_array(rho, cfg.dims, [3, 4]), b)
    q = partial_trace_array(rho, cfg.dims, [1, 2, 3, 4])
    joint = state_fidelity(q, np.kron(b, b))
    pops = {k: float(np.real(q[int(k, 2), int(k, 2)])) for k in ("1010", "1001", "0110", "0101")}
    return f12, f34, joint, pops


def gate_channel(cfg: DeviceConfig, params: SequenceParams | None = None, settings: IntegratorSettings | None = None):
    """Q2Q3 channel of the simulated dressed gate (Q1, Q4 and resonator in their ground states).

    Inputs and outputs are expressed in the qubit frames and dressed labels
    of the idle point, so an ideal device returns the target unitary.
    """
    from .device import dressed_basis
    from .dynamics import qubit_frame_unitary

    params = params or SequenceParams()
    gate = dressed_gate_segment(cfg, params, 0.0)
    s = PulseSchedule((gate,), (), gate.end, (), None, "gate", ((0.0, 2, 3),))
    w = dressed_basis(cfg, cfg.idle_assignment)
    idx = [int(np.ravel_multi_index((0, 0, a, b, 0), cfg.dims)) for a in (0, 1) for b in (0, 1)]
    v0 = qubit_frame_unitary(cfg, frame_phases(s, cfg, 0.0))
    v1 = qubit_frame_unitary(cfg, frame_phases(s, cfg, s.total_duration))
    # columns: the four dressed computational states, moved into the resonator frame
    basis = w[:, idx] * np.conj(v0[idx])[None, :]

    def channel(rho2):
        rho2 = np.asarray(rho2)
        full = basis @ rho2 @ basis.conj().T
        out = evolve_lindblad(full, s, cfg, settings=settings).final_state
        out = w.conj().T @ out @ w
        out = v1[:, None] * out * v1.conj()[None, :]
        return partial_trace_array(out, cfg.dims, [2, 3])

    return channel


def gate_process(cfg: DeviceConfig, params: SequenceParams | None = None, settings: IntegratorSettings | None = None):
    """(chi, process fidelity to the ideal gate) of the full-model dressed gate."""
    ch = gate_channel(cfg, params, settings)
    inputs = process_inputs()
    outs = ch(np.array(inputs))
    chi = chi_from_choi(choi_from_outputs(inputs, outs))
    chi = project_physical(0.5 * (chi + chi.conj().T))
    return chi, process_fidelity(chi, chi_of_unitary(dressed_gate_ideal_unitary()))


def run_characterization(
    cfg: DeviceConfig,
    params: SequenceParams | None = None,
    settings: IntegratorSettings | None = None,
    gate: bool = True,
) -> CharacterizationReport:
    f12, f34, joint, pops = bell_pair_fidelities(cfg, params, settings)
    chi, fg = gate_process(cfg, params, settings) if gate else (None, None)
    return CharacterizationReport(f12, f34, joint, pops, fg, chi)


# ---------------------------------------------------------------------------
# output


def report_to_dict(r: ExperimentReport) -> dict:
    m = r.mode
    out = {
        "mode": m.mode,
        "fidelity_mode": m.fidelity_mode,
        "sampling": m.sampling,
        "shots": m.shots if m.sampling == "shots" else None,
        "seed": m.seed if m.sampling == "shots" else None,
        "anchors": [
            {
                "anchor": row.anchor,
                "probability": row.probability,
                "target": row.target,
                "fidelity": row.fidelity,
                "concurrence": row.concurrence,
                "rho": density_matrix_to_json(row.rho),
            }
            for row in r.rows
        ],
        "unconditional_rho": density_matrix_to_json(r.unconditional),
        "trace_drift": r.trace_drift,
    }
    if r.bell_fidelities is not None:
        out["bell_fidelities"] = {"F12": r.bell_fidelities[0], "F34": r.bell_fidelities[1]}
    if r.gate_fidelity is not None:
        out["gate_process_fidelity"] = r.gate_fidelity
    return out


def format_table(r: ExperimentReport) -> str:
    lines = [f"# {r.mode.mode} ({r.mode.fidelity_mode}, {r.mode.sampling})"]
    lines.append(f"{'anchor':<8}{'probability':>12}  {'target':<10}{'fidelity':>10}{'concurrence':>13}")
    for row in r.rows:
        lines.append(
            f"{row.anchor:<8}{row.probability:>12.4f}  {row.target:<10}{row.fidelity:>10.4f}{row.concurrence:>13.4f}"
        )
    if r.bell_fidelities is not None:
        lines.append(f"# F12 = {r.bell_fidelities[0]:.4f}, F34 = {r.bell_fidelities[1]:.4f}")
    if r.gate_fidelity is not None:
        lines.append(f"# gate process fidelity = {r.gate_fidelity:.4f}")
    return "\n".join(lines) + "\n"


def format_csv(r: ExperimentReport) -> str:
    lines = ["anchor,probability,target,fidelity,concurrence"]
    for row in r.rows:
        lines.append(f"{row.anchor},{row.probability:.10g},{row.target},{row.fidelity:.10g},{row.concurrence:.10g}")
    return "\n".join(lines) + "\n"


def emit_report(r: ExperimentReport, fmt: str = "table", destination: str | Path | None = None) -> str:
    """Render ``r`` and write it to ``destination`` (stdout when ``None``)."""
    if fmt == "table":
        text = format_table(r)
    elif fmt == "json":
        text = json.dumps(report_to_dict(r), indent=2) + "\n"
    elif fmt == "csv":
        text = format_csv(r)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if destination is None:
        sys.stdout.write(text)
    else:
        Path(destination).write_text(text)
    return text


def dump_density_matrices(r: ExperimentReport, directory: str | Path) -> list[Path]:
    """Write ``<mode>_<anchor>.json`` for each anchor."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for row in r.rows:
        p = d / f"{r.mode.mode}_{row.anchor}.json"
        p.write_text(json.dumps(density_matrix_to_json(row.rho, anchor=row.anchor, target=row.target,
                                                       probability=row.probability)))
        paths.append(p)
    return paths


def write_counts(r: ExperimentReport, path: str | Path) -> None:
    if r.counts is None:
        raise ValueError("report has no shot counts (exact sampling)")
    Path(path).write_text(counts_to_csv(r.counts))
