import csv
import json

import jsonschema
import pytest

from fastslow_epi.cli import ConfigError, main, resolve_config
from fastslow_epi.reports import fmt, load_schema

SIR_EXIT_R2_P025 = 0.68710873289935853953


def _run(tmp_path, *argv):
    return main(list(argv) + ["--out", str(tmp_path)])


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_simulate_equilibrium_single_row(tmp_path):
    # disease-free state: the field vanishes exactly
    assert _run(tmp_path, "simulate", "--beta", "2", "--gamma", "1", "--xi", "1", "--epsilon", "1e-3",
                "--initial", "1", "0") == 0
    rows = _rows(tmp_path / "simulate.csv")
    assert rows[0] == ["time[fast time]", "S[fraction]", "I[fraction]", "event"]
    assert len(rows) == 2


def test_entry_exit_row(tmp_path):
    assert _run(tmp_path, "entry-exit", "--beta", "2", "--gamma", "1", "--p0", "0.25") == 0
    header, row = _rows(tmp_path / "entry-exit.csv")
    assert header == ["p0[fraction]", "s1[fraction]", "residual[1]"]
    assert float(row[1]) == pytest.approx(SIR_EXIT_R2_P025, rel=1e-12)
    assert abs(float(row[2])) < 1e-12


def test_classify_j3_three_xi(tmp_path):
    assert _run(tmp_path, "classify-j3", "--model", "SIRWS", "--beta", "260", "--gamma", "17",
                "--kappa", "0.1", "--nu", "5", "--xi", "0.0125", "--xi-values", "0.01", "0.0125", "0.015") == 0
    rows = _rows(tmp_path / "classify-j3.csv")[1:]
    assert [r[1] for r in rows] == ["RIGHT", "CROSSING", "LEFT"]


def test_manifest_schema_and_rerun(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["peaks", "--beta", "2", "--gamma", "1", "--s0", "0.9", "--n", "20"]
    assert main(args + ["--out", str(a)]) == 0
    manifest = json.loads((a / "manifest.json").read_text())
    jsonschema.validate(manifest, load_schema())
    assert manifest["command"] == "peaks" and manifest["config"]["options"]["n"] == 20
    assert main(["peaks", "--config", str(a / "manifest.json"), "--out", str(b)]) == 0
    assert (a / "peaks.csv").read_bytes() == (b / "peaks.csv").read_bytes()


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": "SIR", "params": {"beta": 2, "gamma": 1}, "options": {"p0": [0.1]}}))
    assert main(["entry-exit", "--config", str(cfg), "--p0", "0.25", "--out", str(tmp_path)]) == 0
    assert float(_rows(tmp_path / "entry-exit.csv")[1][0]) == 0.25


def test_determinism_byte_identical(tmp_path):
    args = ["simulate", "--model", "SIRWS", "--beta", "260", "--gamma", "17", "--xi", "0.01", "--kappa", "0.1",
            "--nu", "5", "--initial", "0.9", "1e-3", "0.0495", "--integrator-horizon", "20"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "simulate.csv").read_bytes() == (tmp_path / "b" / "simulate.csv").read_bytes()


def test_unknown_key_reports_path(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"params": {"beta": 2, "gamma": 1, "betta": 3}}))
    assert main(["entry-exit", "--config", str(cfg), "--p0", "0.25", "--out", str(tmp_path)]) == 2
    assert "config.params.betta" in capsys.readouterr().err
    with pytest.raises(ConfigError, match=r"config\.options\.grid"):
        resolve_config("classify-j3", {"params": {"beta": 2, "gamma": 1}, "options": {"grid": 3}})
    with pytest.raises(ConfigError, match=r"config\.options\.n"):
        resolve_config("peaks", {"params": {"beta": 2, "gamma": 1}, "options": {"n": 2.5}})


def test_config_errors_exit_2(tmp_path):
    assert _run(tmp_path, "entry-exit", "--beta", "2", "--gamma", "1", "--p0", "0.7") == 2
    assert _run(tmp_path, "peaks", "--gamma", "1", "--s0", "0.9") == 2
    assert _run(tmp_path, "simulate", "--beta", "2", "--gamma", "1", "--initial", "0.9", "0.2", "0.1") == 2


def test_numerical_failure_exit_3(tmp_path, capsys):
    code = _run(tmp_path, "simulate", "--beta", "2", "--gamma", "1", "--xi", "1", "--epsilon", "1e-3",
                "--initial", "0.9", "1e-6", "--max-steps", "5")
    assert code == 3
    err = capsys.readouterr().err
    assert "simulate failed" in err and "beta" in err


def test_sweep_threads_keep_order(tmp_path):
    base = ["sweep", "--model", "SIRWS", "--beta", "260", "--gamma", "17", "--xi", "0.01", "--kappa", "0.1",
            "--param", "nu", "--values", "1", "1.5", "2", "5", "10", "30", "100"]
    assert main(base + ["--threads", "1", "--out", str(tmp_path / "a")]) == 0
    assert main(base + ["--threads", "4", "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "sweep.csv").read_bytes()
    assert a == (tmp_path / "b" / "sweep.csv").read_bytes()
    labels = [r[3] for r in _rows(tmp_path / "a" / "sweep.csv")[1:]]
    assert labels[0] == "stable" and "unstable" in labels


def test_fmt_round_trip():
    for x in (0.1, 1 / 3, 1e-300, -2.5e17):
        assert float(fmt(x)) == x
    assert fmt(None) == "" and fmt("CYCLE") == "CYCLE"
