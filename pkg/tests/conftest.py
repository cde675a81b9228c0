import time

import numpy as np
import pytest

from swapsim.device import default_config
from swapsim.experiment import ExperimentMode, bell_pair_fidelities, gate_process, run_experiment

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def cfg():
    return default_config()


@pytest.fixture(scope="session")
def ideal_cfg(cfg):
    return cfg.ideal()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def full_reports(cfg):
    """Full-model exact runs of the three sequences (shared; ~2.5 min)."""
    return {m: run_experiment(cfg, ExperimentMode(m)) for m in ("normal", "delayed-bell", "delayed-computational")}


@pytest.fixture(scope="session")
def bell_prep(cfg, ideal_cfg):
    t = time.perf_counter()
    noisy = bell_pair_fidelities(cfg)
    elapsed = time.perf_counter() - t
    return {"noisy": noisy, "ideal": bell_pair_fidelities(ideal_cfg), "seconds": elapsed}


@pytest.fixture(scope="session")
def gate_fidelities(cfg, ideal_cfg):
    chi, f = gate_process(cfg)
    chi0, f0 = gate_process(ideal_cfg)
    return {"noisy": f, "ideal": f0, "chi": chi}
