"""Pulse-level simulator of deterministic entanglement swapping on a four-qubit bus device."""

from .device import DeviceConfig, default_config, load_config
from .experiment import ExperimentMode, ExperimentReport, emit_report, run_characterization, run_experiment
from .schedule import SequenceParams, sequence_delayed_bell, sequence_delayed_computational, sequence_normal

__version__ = "0.1.0"

__all__ = [
    "DeviceConfig",
    "ExperimentMode",
    "ExperimentReport",
    "SequenceParams",
    "default_config",
    "emit_report",
    "load_config",
    "run_characterization",
    "run_experiment",
    "sequence_delayed_bell",
    "sequence_delayed_computational",
    "sequence_normal",
]
