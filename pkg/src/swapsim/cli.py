"""Command-line driver.

Exit codes: 0 success, 1 configuration error, 2 schedule validation
error, 3 integration failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .device import ConfigError, load_config
from .dynamics import IntegrationError
from .experiment import (
    MODES,
    ExperimentMode,
    dump_density_matrices,
    emit_report,
    run_characterization,
    run_experiment,
    write_counts,
)
from .schedule import ScheduleError

EXIT_OK, EXIT_CONFIG, EXIT_SCHEDULE, EXIT_INTEGRATION = 0, 1, 2, 3

log = logging.getLogger("swapsim")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swapsim", description="Simulate entanglement-swapping experiments.")
    p.add_argument("--config", help="device configuration JSON (default: bundled device)")
    p.add_argument("--mode", choices=MODES, default="normal")
    p.add_argument("--sampling", choices=("exact", "shots"), default="exact")
    p.add_argument("--shots", type=int, default=10000, help="shots per tomography setting")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("table", "json", "csv"), default="table")
    p.add_argument("--out", help="report destination (default: stdout); anchor dumps go next to it")
    p.add_argument("--fidelity-mode", choices=("full", "effective"), default="full")
    p.add_argument("--cutoff", type=int, help="resonator Fock-space cutoff")
    p.add_argument("--characterize", action="store_true",
                   help="also report Bell-pair and dressed-gate fidelities (full model)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.cutoff is not None:
            if args.cutoff < 2:
                raise ConfigError("resonator cutoff must be at least 2")
            cfg = cfg.with_cutoff(args.cutoff)
        mode = ExperimentMode(args.mode, args.fidelity_mode, args.sampling, args.shots, args.seed)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_experiment(cfg, mode)
        if args.characterize:
            ch = run_characterization(cfg)
            report.bell_fidelities = (ch.f12, ch.f34)
            report.gate_fidelity = ch.gate_fidelity
    except ScheduleError as exc:
        print(f"schedule error: {exc}", file=sys.stderr)
        return EXIT_SCHEDULE
    except (IntegrationError, FloatingPointError, ArithmeticError) as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    try:
        if args.out:
            Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        emit_report(report, args.format, args.out)
        if args.out:
            out_dir = Path(args.out).resolve().parent
            dump_density_matrices(report, out_dir)
            if report.counts is not None:
                write_counts(report, out_dir / f"{args.mode}_counts.csv")
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
