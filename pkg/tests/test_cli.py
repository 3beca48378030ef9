import json
from pathlib import Path

import pytest

from berkhyb.cli import main
from berkhyb.harness import ExperimentManifest, ManifestError, run, write_report


def manifest_path(data_dir: Path, name: str) -> Path:
    return data_dir / "manifests" / name


def test_cli_pass_exit_zero(data_dir, tmp_path, capsys):
    rc = main(["ma-model", "--manifest",
               str(manifest_path(data_dir, "ma_model.json")),
               "--out", str(tmp_path / "out")])
    assert rc == 0
    out = capsys.readouterr().out
    assert "[PASS]" in out and "[FAIL]" not in out
    assert (tmp_path / "out" / "report.json").exists()
    assert (tmp_path / "out" / "plot_data.csv").exists()


def test_cli_malformed_json_exit_two(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    rc = main(["ma-model", "--manifest", str(bad), "--out",
               str(tmp_path / "out")])
    assert rc == 2
    assert not (tmp_path / "out").exists()  # no partial outputs


def test_cli_missing_input_exit_two(tmp_path):
    man = tmp_path / "man.json"
    man.write_text(json.dumps({
        "schema": "berkhyb-manifest-v1", "kind": "ma-model", "seed": 1,
        "inputs": {"tables": ["missing.json"]}, "params": {},
    }))
    rc = main(["ma-model", "--manifest", str(man), "--out",
               str(tmp_path / "out")])
    assert rc == 2
    assert not (tmp_path / "out").exists()


def test_cli_kind_mismatch_exit_two(data_dir, tmp_path):
    rc = main(["retract", "--manifest",
               str(manifest_path(data_dir, "ma_model.json")),
               "--out", str(tmp_path / "out")])
    assert rc == 2


def test_unknown_kind_rejected(tmp_path):
    man = tmp_path / "man.json"
    man.write_text(json.dumps({"kind": "frobnicate", "seed": 1}))
    with pytest.raises(ManifestError):
        ExperimentManifest.load(man)


def test_check_failure_exit_one_with_report(data_dir, tmp_path):
    # doctor a lelong manifest with an unattainable tolerance
    src = json.loads(manifest_path(data_dir, "lelong.json").read_text())
    src["params"]["tol"] = 1e-15
    man = tmp_path / "strict.json"
    man.write_text(json.dumps(src))
    rc = main(["lelong", "--manifest", str(man), "--out",
               str(tmp_path / "out")])
    assert rc == 1
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["passed"] is False


def test_seed_override_recorded(data_dir, tmp_path):
    rc = main(["mz-check", "--manifest",
               str(manifest_path(data_dir, "mz_check.json")),
               "--out", str(tmp_path / "out"), "--seed", "777"])
    assert rc == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["seed"] == 777
    assert report["manifest"]["seed"] == 777


def test_emit_plot_data_shapes(data_dir, tmp_path):
    man = ExperimentManifest.load(manifest_path(data_dir, "lelong.json"))
    report = run(man)
    write_report(report, tmp_path)
    lines = (tmp_path / "plot_data.csv").read_text().strip().splitlines()
    assert lines[0] == "experiment,t,series,value"
    assert any(line.startswith("lelong/lelong_sweep") for line in lines[1:])
    # fitted line parameters emitted alongside the sweep
    assert any("lelong_fit" in line for line in lines[1:])


def test_timing_sidecar_separate(data_dir, tmp_path):
    man = ExperimentManifest.load(manifest_path(data_dir, "ma_model.json"))
    report = run(man)
    write_report(report, tmp_path)
    report_text = (tmp_path / "report.json").read_text()
    assert "wall_clock" not in report_text
    timing = json.loads((tmp_path / "timing.json").read_text())
    assert timing["wall_clock_seconds"] >= 0


def test_emit_plot_data_empty_report(tmp_path):
    from berkhyb.harness import RunReport, emit_plot_data

    report = RunReport(kind="ma-model", seed=0, version="0", manifest_echo={})
    emit_plot_data(report, tmp_path / "plot.csv")
    assert (tmp_path / "plot.csv").read_text() == "experiment,t,series,value\n"
