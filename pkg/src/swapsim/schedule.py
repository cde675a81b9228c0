"""Timed pulse schedules for the three swapping experiments.

A schedule is a list of rectangular frequency segments (each covering a
subset of qubits), drive pulses attached to segments, ideal instantaneous
rotations (fast mode), readout events and the window in which the Q1/Q4
tomography pre-rotations sit. Qubits not covered by any segment sit at
their idle frequency.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Sequence

from .device import (
    MHZ,
    NS,
    QUBITS,
    DeviceConfig,
    DrivePulse,
    FrequencyAssignment,
    qubit_frequency,
    effective_coupling,
)


class ScheduleError(ValueError):
    """A schedule violates a hard consistency rule (e.g. overlapping segments)."""


@dataclass(frozen=True)
class ScheduleSegment:
    start: float
    duration: float
    frequencies: FrequencyAssignment
    drives: tuple[DrivePulse, ...] = ()
    label: str = ""

    def __post_init__(self):
        if not self.duration > 0:
            raise ScheduleError(f"segment {self.label!r}: duration must be positive")
        object.__setattr__(self, "drives", tuple(self.drives))

    @property
    def end(self) -> float:
        return self.start + self.duration

    @property
    def qubits(self) -> frozenset[int]:
        return frozenset(self.frequencies.frequencies) | {p.target for p in self.drives}

    def covers(self, t: float) -> bool:
        return self.start <= t < self.end


@dataclass(frozen=True)
class ReadoutEvent:
    time: float
    targets: frozenset[int]
    duration: float = 800 * NS
    basis: str = "computational"

    def __post_init__(self):
        targets = frozenset(self.targets)
        if not targets:
            raise ScheduleError("readout needs at least one target")
        object.__setattr__(self, "targets", targets)

    @property
    def end(self) -> float:
        return self.time + self.duration


@dataclass(frozen=True)
class InstantRotation:
    """Ideal rotation by ``angle`` about the axis ``cos(phi) X + sin(phi) Y`` of
    the target's rotating frame, applied at ``time``."""

    time: float
    target: int
    angle: float
    phase: float = 0.0
    label: str = ""


@dataclass(frozen=True)
class TomographyWindow:
    start: float
    duration: float
    targets: tuple[int, ...]

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True)
class PulseSchedule:
    segments: tuple[ScheduleSegment, ...]
    readouts: tuple[ReadoutEvent, ...]
    total_duration: float
    rotations: tuple[InstantRotation, ...] = ()
    tomography: TomographyWindow | None = None
    name: str = ""
    # (time, j, k): qubit k's frame (and everything already entangled with it)
    # is offset so that its phase equals qubit j's at ``time``
    frame_alignments: tuple[tuple[float, int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(
            self, "frame_alignments", tuple(sorted((float(t), int(j), int(k)) for t, j, k in self.frame_alignments))
        )
        object.__setattr__(self, "segments", tuple(sorted(self.segments, key=lambda s: s.start)))
        object.__setattr__(self, "readouts", tuple(sorted(self.readouts, key=lambda r: r.time)))
        object.__setattr__(self, "rotations", tuple(sorted(self.rotations, key=lambda r: r.time)))

    def frequencies_at(self, cfg: DeviceConfig, t: float) -> FrequencyAssignment:
        freqs = {j: cfg.qubit(j).idle_frequency for j in QUBITS}
        for seg in self.segments:
            if seg.covers(t):
                freqs.update(seg.frequencies.frequencies)
        return FrequencyAssignment(freqs)

    def drives(self) -> list[DrivePulse]:
        return [p for seg in self.segments for p in seg.drives]

    def drives_at(self, t: float) -> list[DrivePulse]:
        return [p for p in self.drives() if p.start <= t < p.end]

    def readout_time(self, j: int) -> float:
        for r in self.readouts:
            if j in r.targets:
                return r.time
        return math.inf

    def active_at(self, t: float) -> tuple[int, ...]:
        """Qubits that have not been read out at time ``t``."""
        return tuple(j for j in QUBITS if t < self.readout_time(j))

    def breakpoints(self) -> list[float]:
        pts = {0.0, self.total_duration}
        for seg in self.segments:
            pts.update((seg.start, seg.end))
            for p in seg.drives:
                pts.update((p.start, p.end))
                if p.phase_inversion_at is not None:
                    pts.add(p.start + p.phase_inversion_at)
        for r in self.readouts:
            pts.add(r.time)
        for rot in self.rotations:
            pts.add(rot.time)
        if self.tomography is not None:
            pts.update((self.tomography.start, self.tomography.end))
        return sorted(p for p in pts if 0.0 <= p <= self.total_duration)

    def segment_labelled(self, label: str) -> ScheduleSegment | None:
        for seg in self.segments:
            if seg.label == label:
                return seg
        return None

    def with_drives_added(self, pulses: Sequence[DrivePulse], label: str = "extra") -> "PulseSchedule":
        """Copy of the schedule with extra drive pulses (at idle unless already covered)."""
        if not pulses:
            return self
        start = min(p.start for p in pulses)
        end = max(p.end for p in pulses)
        seg = ScheduleSegment(start, end - start, FrequencyAssignment({}), tuple(pulses), label)
        return replace(self, segments=self.segments + (seg,))


# ---------------------------------------------------------------------------
# sequence construction


@dataclass(frozen=True)
class SequenceParams:
    """Operating point of the swapping sequences (angular frequencies, seconds)."""

    bell_detuning_12: float = 308 * MHZ
    bell_detuning_34: float = 238 * MHZ
    gate_detuning: float = 308 * MHZ
    gate_rabi_2: float = 20 * MHZ
    gate_rabi_3: float = 8 * MHZ
    gate_phase: float = 0.0
    readout_duration: float = 800 * NS
    readout_gap: float = 40 * NS
    rotation_duration: float = 40 * NS
    rotation_fwhm: float = 20 * NS
    rotations: str = "pulsed"  # or "ideal"
    # continuous echoed drive on waiting qubits; 0 disables it
    protection_rabi: float = 1 * MHZ
    tau_12: float | None = None
    tau_34: float | None = None
    tau_23: float | None = None

    def __post_init__(self):
        if self.rotations not in ("pulsed", "ideal"):
            raise ValueError(f"rotations must be 'pulsed' or 'ideal', got {self.rotations!r}")

    def durations(self, cfg: DeviceConfig) -> tuple[float, float, float]:
        """Swap times ``pi / (4 lambda)`` for the Bell pairs and ``pi / (2 lambda)`` for the gate."""
        lam12 = effective_coupling(cfg, 1, 2, self.bell_detuning_12)
        lam34 = effective_coupling(cfg, 3, 4, self.bell_detuning_34)
        lam23 = effective_coupling(cfg, 2, 3, self.gate_detuning)
        t12 = self.tau_12 if self.tau_12 is not None else math.pi / (4 * lam12)
        t34 = self.tau_34 if self.tau_34 is not None else math.pi / (4 * lam34)
        t23 = self.tau_23 if self.tau_23 is not None else math.pi / (2 * lam23)
        return t12, t34, t23


def frame_frequency(
    cfg: DeviceConfig, j: int, fa: FrequencyAssignment | None = None, active: Sequence[int] = QUBITS
) -> float:
    """Dressed transition frequency of qubit ``j`` relative to the resonator frame
    (``fa`` defaults to the idle point)."""
    fa = cfg.idle_assignment if fa is None else cfg.idle_assignment.merged(fa)
    return qubit_frequency(cfg, j, fa, active)


def rotation_pulse(
    cfg: DeviceConfig,
    params: SequenceParams,
    target: int,
    start: float,
    angle: float,
    phase: float = 0.0,
    active: Sequence[int] = QUBITS,
) -> DrivePulse:
    """Gaussian pulse at the target's idle frequency whose area gives rotation ``angle``."""
    probe = DrivePulse(
        target, 1.0, phase, 0.0, start, params.rotation_duration, "gaussian", params.rotation_fwhm
    )
    rabi = angle / (2 * probe.area())
    detuning = frame_frequency(cfg, target, None, active)
    return replace(probe, rabi=rabi, detuning=detuning)


def _rotations(cfg, params, targets, start, angle, phases=None, label="", active=QUBITS):
    """Either Gaussian drive pulses (segment) or ideal rotations at the window centre."""
    phases = phases or {j: 0.0 for j in targets}
    if params.rotations == "pulsed":
        pulses = tuple(rotation_pulse(cfg, params, j, start, angle, phases[j], active) for j in targets)
        seg = ScheduleSegment(start, params.rotation_duration, FrequencyAssignment({}), pulses, label)
        return [seg], []
    mid = start + 0.5 * params.rotation_duration
    return [], [InstantRotation(mid, j, angle, phases[j], label) for j in targets]


def _bell_prep(cfg: DeviceConfig, params: SequenceParams):
    t12, t34, _ = params.durations(cfg)
    segs, rots = _rotations(cfg, params, (1, 3), 0.0, math.pi, label="pi")
    t0 = params.rotation_duration
    segs.append(
        ScheduleSegment(
            t0,
            t12,
            FrequencyAssignment.from_detunings(cfg, {1: params.bell_detuning_12, 2: params.bell_detuning_12}),
            label="bell-12",
        )
    )
    segs.append(
        ScheduleSegment(
            t0,
            t34,
            FrequencyAssignment.from_detunings(cfg, {3: params.bell_detuning_34, 4: params.bell_detuning_34}),
            label="bell-34",
        )
    )
    return segs, rots, t0 + max(t12, t34), ((t0, 1, 2), (t0, 3, 4))


def dressed_gate_segment(
    cfg: DeviceConfig, params: SequenceParams, start: float, active: Sequence[int] = QUBITS
) -> ScheduleSegment:
    _, _, t23 = params.durations(cfg)
    fa = FrequencyAssignment.from_detunings(cfg, {2: params.gate_detuning, 3: params.gate_detuning})
    drives = tuple(
        DrivePulse(
            target=j,
            rabi=rabi,
            phase=params.gate_phase,
            detuning=frame_frequency(cfg, j, fa, active),
            start=start,
            duration=t23,
            phase_inversion_at=0.5 * t23,
        )
        for j, rabi in ((2, params.gate_rabi_2), (3, params.gate_rabi_3))
    )
    return ScheduleSegment(start, t23, fa, drives, "dressed-gate")


def protection_segment(
    cfg: DeviceConfig, params: SequenceParams, targets: Sequence[int], start: float, end: float
) -> list[ScheduleSegment]:
    """Resonant drive on idle ``targets`` with its phase inverted half way, so the
    net rotation is the identity while the qubits wait."""
    if not cfg.dephasing_protection or params.protection_rabi <= 0 or end <= start:
        return []
    dur = end - start
    pulses = tuple(
        DrivePulse(j, params.protection_rabi, 0.0, frame_frequency(cfg, j, None, targets), start, dur,
                   phase_inversion_at=0.5 * dur)
        for j in targets
    )
    return [ScheduleSegment(start, dur, FrequencyAssignment({}), pulses, "protect")]


def sequence_normal(cfg: DeviceConfig, params: SequenceParams | None = None) -> PulseSchedule:
    """Prepare both Bell pairs, Bell-measure Q2-Q3, then tomograph Q1-Q4."""
    params = params or SequenceParams()
    segs, rots, t, align = _bell_prep(cfg, params)
    gate = dressed_gate_segment(cfg, params, t)
    segs.append(gate)
    r23 = ReadoutEvent(gate.end, frozenset({2, 3}), params.readout_duration)
    tomo = TomographyWindow(r23.end + params.readout_gap - params.rotation_duration, params.rotation_duration, (1, 4))
    r14 = ReadoutEvent(r23.end + params.readout_gap, frozenset({1, 4}), params.readout_duration)
    segs += protection_segment(cfg, params, (1, 4), gate.start, tomo.start)
    align = align + ((gate.start, 2, 3),)
    return PulseSchedule(tuple(segs), (r23, r14), r14.end, tuple(rots), tomo, "normal", align)


def sequence_delayed_bell(cfg: DeviceConfig, params: SequenceParams | None = None) -> PulseSchedule:
    """Tomograph and read out Q1-Q4 first; Bell-measure Q2-Q3 afterwards."""
    params = params or SequenceParams()
    segs, rots, t, align = _bell_prep(cfg, params)
    tomo = TomographyWindow(t, params.rotation_duration, (1, 4))
    r14 = ReadoutEvent(tomo.end, frozenset({1, 4}), params.readout_duration)
    gate = dressed_gate_segment(cfg, params, r14.end, active=(2, 3))
    segs.append(gate)
    segs += protection_segment(cfg, params, (2, 3), t, gate.start)
    r23 = ReadoutEvent(gate.end, frozenset({2, 3}), params.readout_duration)
    align = align + ((gate.start, 2, 3),)
    return PulseSchedule(tuple(segs), (r14, r23), r23.end, tuple(rots), tomo, "delayed-bell", align)


def sequence_delayed_computational(cfg: DeviceConfig, params: SequenceParams | None = None) -> PulseSchedule:
    """As the delayed Bell sequence but with the dressed gate omitted."""
    params = params or SequenceParams()
    segs, rots, t, align = _bell_prep(cfg, params)
    tomo = TomographyWindow(t, params.rotation_duration, (1, 4))
    r14 = ReadoutEvent(tomo.end, frozenset({1, 4}), params.readout_duration)
    r23 = ReadoutEvent(r14.end + params.readout_gap, frozenset({2, 3}), params.readout_duration)
    segs += protection_segment(cfg, params, (2, 3), t, r23.time)
    return PulseSchedule(tuple(segs), (r14, r23), r23.end, tuple(rots), tomo, "delayed-computational", align)


def sequence_bell_prep(cfg: DeviceConfig, params: SequenceParams | None = None) -> PulseSchedule:
    """Bell-pair preparation only (characterisation run)."""
    params = params or SequenceParams()
    segs, rots, t, align = _bell_prep(cfg, params)
    return PulseSchedule(tuple(segs), (), t, tuple(rots), None, "bell-prep", align)


SEQUENCES = {
    "normal": sequence_normal,
    "delayed-bell": sequence_delayed_bell,
    "delayed-computational": sequence_delayed_computational,
}


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "warning" or "error"
    message: str
    time: float | None = None


def validate(s: PulseSchedule, cfg: DeviceConfig, margin: float = 5.0) -> list[Diagnostic]:
    """Check segment disjointness and the dispersive/decoupling conditions.

    Raises :class:`ScheduleError` on overlapping segments for a qubit; other
    findings are returned as diagnostics.
    """
    diags: list[Diagnostic] = []
    for j in QUBITS:
        segs = sorted((seg for seg in s.segments if j in seg.frequencies.frequencies), key=lambda x: x.start)
        for a, b in zip(segs, segs[1:]):
            if b.start < a.end - 1e-15:
                raise ScheduleError(f"Q{j}: segments {a.label!r} and {b.label!r} overlap")
    for r in s.readouts:
        if r.time > s.total_duration + 1e-15:
            diags.append(Diagnostic("error", f"readout of {sorted(r.targets)} after schedule end", r.time))

    pts = s.breakpoints()
    seen = set()
    for ta, tb in zip(pts, pts[1:]):
        if tb - ta <= 0:
            continue
        tm = 0.5 * (ta + tb)
        fa = s.frequencies_at(cfg, tm)
        active = s.active_at(tm)
        deltas = {j: cfg.resonator_frequency - fa[j] for j in active}
        for j in active:
            g = cfg.qubit(j).g
            if abs(deltas[j]) < margin * g and ("disp", j, deltas[j]) not in seen:
                seen.add(("disp", j, deltas[j]))
                diags.append(
                    Diagnostic(
                        "warning",
                        f"Q{j}: |Delta| = {abs(deltas[j]) / MHZ:.1f} MHz < {margin:g} g "
                        f"({g / MHZ:.1f} MHz); not dispersive",
                        ta,
                    )
                )
        for j in active:
            for k in active:
                if k <= j:
                    continue
                dj, dk = deltas[j], deltas[k]
                sep = abs(dj - dk)
                if sep < 1e-3 * MHZ or dj == 0 or dk == 0:
                    continue  # intentionally resonant pair, or already flagged
                gj, gk = cfg.qubit(j).g, cfg.qubit(k).g
                bound = 0.5 * gj * gk * (1 / abs(dj) + 1 / abs(dk))
                key = ("sep", j, k, round(dj), round(dk))
                if sep < margin * bound and key not in seen:
                    seen.add(key)
                    diags.append(
                        Diagnostic(
                            "warning",
                            f"Q{j}-Q{k}: detuning difference {sep / MHZ:.2f} MHz is within "
                            f"{margin:g}x the induced coupling {bound / MHZ:.3f} MHz",
                            ta,
                        )
                    )
    return diags


# ---------------------------------------------------------------------------
# serialisation


def _drive_to_dict(p: DrivePulse) -> dict:
    return {
        "target": p.target,
        "rabi_mhz": p.rabi / MHZ,
        "phase_rad": p.phase,
        "detuning_mhz": p.detuning / MHZ,
        "start_ns": p.start / NS,
        "duration_ns": p.duration / NS,
        "envelope": p.envelope,
        "fwhm_ns": None if p.fwhm is None else p.fwhm / NS,
        "phase_inversion_at_ns": None if p.phase_inversion_at is None else p.phase_inversion_at / NS,
    }


def schedule_to_dict(s: PulseSchedule, cfg: DeviceConfig | None = None) -> dict:
    """JSON-ready timeline (times in ns, frequencies in GHz / MHz)."""
    out = {
        "name": s.name,
        "total_duration_ns": s.total_duration / NS,
        "segments": [
            {
                "label": seg.label,
                "start_ns": seg.start / NS,
                "duration_ns": seg.duration / NS,
                "frequencies_ghz": {f"Q{j}": w / (2 * math.pi * 1e9) for j, w in seg.frequencies.frequencies.items()},
                "drives": [_drive_to_dict(p) for p in seg.drives],
            }
            for seg in s.segments
        ],
        "readouts": [
            {"time_ns": r.time / NS, "duration_ns": r.duration / NS, "targets": sorted(r.targets), "basis": r.basis}
            for r in s.readouts
        ],
        "rotations": [
            {"time_ns": r.time / NS, "target": r.target, "angle_rad": r.angle, "phase_rad": r.phase, "label": r.label}
            for r in s.rotations
        ],
        "tomography": None
        if s.tomography is None
        else {"start_ns": s.tomography.start / NS, "duration_ns": s.tomography.duration / NS, "targets": list(s.tomography.targets)},
        "frame_alignments": [{"time_ns": t / NS, "reference": j, "follower": k} for t, j, k in s.frame_alignments],
    }
    if cfg is not None:
        out["idle_frequencies_ghz"] = {f"Q{j}": cfg.qubit(j).idle_frequency / (2 * math.pi * 1e9) for j in QUBITS}
    return out


def schedule_to_json(s: PulseSchedule, cfg: DeviceConfig | None = None, **kw) -> str:
    return json.dumps(schedule_to_dict(s, cfg), **kw)


def schedule_from_dict(d: dict) -> PulseSchedule:
    ghz = 2 * math.pi * 1e9
    segs = []
    for sd in d["segments"]:
        drives = tuple(
            DrivePulse(
                target=int(p["target"]),
                rabi=p["rabi_mhz"] * MHZ,
                phase=p["phase_rad"],
                detuning=p["detuning_mhz"] * MHZ,
                start=p["start_ns"] * NS,
                duration=p["duration_ns"] * NS,
                envelope=p["envelope"],
                fwhm=None if p["fwhm_ns"] is None else p["fwhm_ns"] * NS,
                phase_inversion_at=None if p["phase_inversion_at_ns"] is None else p["phase_inversion_at_ns"] * NS,
            )
            for p in sd["drives"]
        )
        fa = FrequencyAssignment({int(k[1:]): v * ghz for k, v in sd["frequencies_ghz"].items()})
        segs.append(ScheduleSegment(sd["start_ns"] * NS, sd["duration_ns"] * NS, fa, drives, sd["label"]))
    readouts = tuple(
        ReadoutEvent(r["time_ns"] * NS, frozenset(r["targets"]), r["duration_ns"] * NS, r["basis"]) for r in d["readouts"]
    )
    rots = tuple(
        InstantRotation(r["time_ns"] * NS, r["target"], r["angle_rad"], r["phase_rad"], r.get("label", ""))
        for r in d.get("rotations", [])
    )
    tomo = d.get("tomography")
    tw = None if tomo is None else TomographyWindow(tomo["start_ns"] * NS, tomo["duration_ns"] * NS, tuple(tomo["targets"]))
    align = tuple((a["time_ns"] * NS, a["reference"], a["follower"]) for a in d.get("frame_alignments", []))
    return PulseSchedule(tuple(segs), readouts, d["total_duration_ns"] * NS, rots, tw, d.get("name", ""), align)
