import csv
import io
import json

import numpy as np
import pytest

from swapsim import cli
from swapsim.device import config_to_dict
from swapsim.dynamics import IntegrationError
from swapsim.experiment import (
    ExperimentMode,
    anchor_target,
    dump_density_matrices,
    emit_report,
    format_csv,
    format_table,
    report_to_dict,
    run_experiment,
    write_counts,
)
from swapsim.gates import ANCHORS, bell_vector
from swapsim.measurement import counts_from_csv
from swapsim.tomography import density_matrix_from_json

MODES = ("normal", "delayed-bell", "delayed-computational")


@pytest.fixture(scope="module")
def effective(cfg):
    return {m: run_experiment(cfg, ExperimentMode(m, "effective")) for m in MODES}


def test_mode_validation():
    with pytest.raises(ValueError):
        ExperimentMode("sideways")
    with pytest.raises(ValueError):
        ExperimentMode("normal", sampling="shots", shots=0)
    with pytest.raises(ValueError):
        ExperimentMode("normal", fidelity_mode="approximate")


def test_anchor_targets():
    assert anchor_target("normal", "00")[0].startswith("Phi+")
    assert anchor_target("delayed-bell", "01")[0].startswith("Psi-")
    label, vec = anchor_target("delayed-computational", "01")
    assert np.argmax(np.abs(vec)) == 0b10  # |1_1 0_4>


@pytest.mark.parametrize("mode", MODES)
def test_noiseless_effective_is_ideal(ideal_cfg, mode):
    r = run_experiment(ideal_cfg, ExperimentMode(mode, "effective", readout_error=False))
    assert np.max(np.abs(r.probabilities - 0.25)) < 1e-9
    assert np.min(r.fidelities) > 1 - 1e-9


@pytest.mark.parametrize("mode", MODES)
def test_report_invariants(effective, mode):
    r = effective[mode]
    assert [row.anchor for row in r.rows] == list(ANCHORS)
    assert r.probabilities.sum() == pytest.approx(1, abs=1e-6)
    mix = sum(row.probability * row.rho for row in r.rows)
    assert np.max(np.abs(mix - r.unconditional)) < 1e-8
    for row in r.rows:
        assert np.linalg.eigvalsh(row.rho).min() > -1e-8
        assert 0 <= row.concurrence <= 1


def test_effective_mode_ordering(effective):
    # waiting in the Bell basis is cheaper than waiting through the gate
    assert np.all(effective["delayed-bell"].fidelities > effective["normal"].fidelities)
    assert np.all(effective["delayed-computational"].concurrences < 0.09)


def test_normal_unconditional_is_classical_mixture(effective):
    basis = np.array([bell_vector(k) for k in ("Phi+", "Psi-", "Psi+", "Phi-")]).T
    m = basis.conj().T @ effective["normal"].unconditional @ basis
    off = m - np.diag(np.diag(m))
    assert np.max(np.abs(off)) < 0.02


def test_exact_reports_reproducible(cfg, effective):
    again = run_experiment(cfg, ExperimentMode("normal", "effective"))
    assert np.array_equal(again.fidelities, effective["normal"].fidelities)


def test_shot_mode_reproducible_per_seed(cfg):
    a = run_experiment(cfg, ExperimentMode("normal", "effective", "shots", 2000, seed=5))
    b = run_experiment(cfg, ExperimentMode("normal", "effective", "shots", 2000, seed=5))
    c = run_experiment(cfg, ExperimentMode("normal", "effective", "shots", 2000, seed=6))
    assert all(np.array_equal(a.counts[k], b.counts[k]) for k in range(9))
    assert np.array_equal(a.fidelities, b.fidelities)
    assert not all(np.array_equal(a.counts[k], c.counts[k]) for k in range(9))
    assert all(a.counts[k].sum() == 2000 for k in range(9))


def test_table_has_four_rows(effective):
    lines = format_table(effective["normal"]).splitlines()
    data = [ln for ln in lines if ln[:2] in ANCHORS]
    assert len(data) == 4


def test_json_roundtrip(effective):
    r = effective["delayed-bell"]
    d = json.loads(emit_report(r, "json"))
    for row, entry in zip(r.rows, d["anchors"]):
        assert density_matrix_from_json(entry["rho"]).matrix == pytest.approx(row.rho, abs=1e-12)
        assert entry["fidelity"] == pytest.approx(row.fidelity)
    assert report_to_dict(r)["mode"] == "delayed-bell"


def test_csv_numeric(effective):
    rows = list(csv.DictReader(io.StringIO(format_csv(effective["normal"]))))
    assert len(rows) == 4
    for row in rows:
        for key in ("probability", "fidelity", "concurrence"):
            float(row[key])


def test_dumps_and_counts(cfg, effective, tmp_path):
    paths = dump_density_matrices(effective["normal"], tmp_path)
    assert sorted(p.name for p in paths) == [f"normal_{a}.json" for a in ANCHORS]
    with pytest.raises(ValueError):
        write_counts(effective["normal"], tmp_path / "c.csv")
    r = run_experiment(cfg, ExperimentMode("normal", "effective", "shots", 100, seed=1))
    write_counts(r, tmp_path / "c.csv")
    text = (tmp_path / "c.csv").read_text()
    assert text.startswith("setting,outcome,count")
    assert counts_from_csv(text)[0].sum() == 100


def test_emit_to_unwritable_destination(effective, tmp_path):
    with pytest.raises(OSError):
        emit_report(effective["normal"], "table", tmp_path)  # a directory


# ----------------------------------------------------------------------------- CLI


def test_cli_ok(tmp_path, capsys):
    out = tmp_path / "res" / "report.csv"
    code = cli.main(["--mode", "normal", "--fidelity-mode", "effective", "--sampling", "shots",
                     "--shots", "500", "--seed", "2", "--format", "csv", "--out", str(out)])
    assert code == 0
    assert out.exists()
    assert (out.parent / "normal_counts.csv").exists()
    assert (out.parent / "normal_11.json").exists()


def test_cli_stdout_table(capsys):
    assert cli.main(["--mode", "delayed-computational", "--fidelity-mode", "effective", "--cutoff", "2"]) == 0
    assert "anchor" in capsys.readouterr().out


def test_cli_config_error(tmp_path):
    assert cli.main(["--config", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["--config", str(bad)]) == 1
    assert cli.main(["--cutoff", "1", "--fidelity-mode", "effective"]) == 1


def test_cli_schedule_error(cfg, tmp_path):
    d = config_to_dict(cfg)
    d["resonator_frequency_ghz"] = 6.4
    p = tmp_path / "far.json"
    p.write_text(json.dumps(d))
    assert cli.main(["--config", str(p), "--fidelity-mode", "effective"]) == 2


def test_cli_integration_error(monkeypatch):
    def boom(*a, **k):
        raise IntegrationError("trace drift")

    monkeypatch.setattr(cli, "run_experiment", boom)
    assert cli.main(["--fidelity-mode", "effective"]) == 3
