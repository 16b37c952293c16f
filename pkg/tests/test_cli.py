import json

import pytest
import yaml

from analog_matching import __version__
from analog_matching.cli import EXIT_CONFIG_ERROR, EXIT_NUMERIC_ERROR, main
from analog_matching.services.records import read_provenance, table_lines
from analog_matching.services.robustness import read_curve_csv
from analog_matching.services.simulator import read_report_csv

SMALL_STREAM = {"N": 256, "L": 8, "prefilter_taps": 33, "margin": 2.0, "blocks": 2, "seed": 4}


def _config(tmp_path, **sections) -> str:
    data = {
        "system": {"snr_db": 10.0},
        "stream": dict(SMALL_STREAM),
        "output": {"dir": str(tmp_path / "results")},
        "logging": {"level": "WARNING"},
    }
    data.update(sections)
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(data))
    return str(path)


def _run(*argv) -> int:
    with pytest.raises(SystemExit) as excinfo:
        main(list(argv))
    return excinfo.value.code


def _table(path) -> list[str]:
    return list(table_lines(path.read_text().splitlines()))


def test_analyze_writes_json(tmp_path):
    config = _config(tmp_path)
    assert _run("analyze", "--config", config) == 0
    data = json.loads((tmp_path / "results" / "analyze.json").read_text())
    assert data["opta"]["sdr_opt"] == pytest.approx(11.0, rel=1e-6)
    assert data["version"]
    assert data["config"]["stream"]["L"] == 8


def test_analyze_is_repeatable(tmp_path):
    config = _config(tmp_path)
    out = tmp_path / "results" / "analyze.json"
    _run("analyze", "--config", config)
    first = out.read_text()
    _run("analyze", "--config", config)
    assert out.read_text() == first


def test_malformed_config_exits_with_field_path(tmp_path, capsys):
    config = _config(tmp_path, stream={"L": "eight"})
    assert _run("analyze", "--config", config) == EXIT_CONFIG_ERROR
    assert "stream.L" in capsys.readouterr().err


def test_missing_config_exits_with_config_error(tmp_path):
    assert _run("analyze", "--config", str(tmp_path / "none.yaml")) == EXIT_CONFIG_ERROR


def test_predictor_too_long_exits_with_numeric_error(tmp_path):
    config = _config(tmp_path, stream={**SMALL_STREAM, "L": 2048, "N": 16384})
    assert _run("design", "--config", config) == EXIT_NUMERIC_ERROR


def test_design_expansion_preset(tmp_path, capsys):
    config = _config(tmp_path, mode="bw_expansion", system={"rho": 2.0, "snr_db": 10.0})
    out = tmp_path / "designs"
    assert _run("design", "--config", config, "--out", str(out)) == 0
    assert "Channel predictor: absent" in capsys.readouterr().out
    data = json.loads((out / "filterset.json").read_text())
    assert data["mode"] == "matching"
    assert data["identities"]["boundary"]["error"] < 1e-4
    assert not any(data["filters"]["p_c"]["taps"])


def test_designed_filterset_feeds_simulation(tmp_path):
    config = _config(tmp_path)
    assert _run("design", "--config", config) == 0
    stored = tmp_path / "results" / "filterset.json"
    stream = {**SMALL_STREAM, "filterset": str(stored)}
    reuse = _config(tmp_path, stream=stream)
    assert _run("simulate", "--config", reuse, "--out", str(tmp_path / "reuse")) == 0
    fresh = _config(tmp_path)
    assert _run("simulate", "--config", fresh, "--out", str(tmp_path / "fresh")) == 0
    reused_csv = tmp_path / "reuse" / "simulate.csv"
    assert _table(reused_csv) == _table(tmp_path / "fresh" / "simulate.csv")
    assert read_provenance(reused_csv)["config"]["stream"]["filterset"] == str(stored)


def test_simulate_is_deterministic(tmp_path):
    config = _config(tmp_path)
    for name in ("a", "b"):
        assert _run("simulate", "--config", config, "--out", str(tmp_path / name)) == 0
    first = (tmp_path / "a" / "simulate.csv").read_text()
    assert first == (tmp_path / "b" / "simulate.csv").read_text()
    header = read_provenance(tmp_path / "a" / "simulate.csv")
    assert header["version"] == __version__
    assert header["config"]["stream"]["seed"] == 4
    summary = json.loads((tmp_path / "a" / "simulate.json").read_text())
    assert summary["config"]["stream"]["seed"] == 4


def test_simulate_seed_and_threads_flags(tmp_path):
    config = _config(tmp_path)
    out = tmp_path / "flags"
    argv = ["simulate", "--config", config, "--out", str(out), "--seed", "9", "--threads", "2"]
    assert _run(*argv) == 0
    summary = json.loads((out / "simulate.json").read_text())
    assert summary["config"]["stream"]["seed"] == 9
    assert summary["config"]["threads"] == 2
    assert summary["reports"][0]["seed"] == 9


def test_simulate_sweep_keeps_order(tmp_path):
    config = _config(tmp_path, sweep={"snr_db": [15.0, 5.0, 10.0]})
    assert _run("simulate", "--config", config) == 0
    reports = read_report_csv(tmp_path / "results" / "simulate.csv")
    assert [round(r.snr_db) for r in reports] == [15, 5, 10]


def test_robustness_compare_emits_four_families(tmp_path):
    config = _config(tmp_path, robustness={"snr0_db": 10.0, "rho": 2.0})
    assert _run("robustness", "--config", config, "--compare") == 0
    path = tmp_path / "results" / "robustness.csv"
    schemes = {curve.scheme.value for curve in read_curve_csv(path)}
    assert schemes == {"am", "reported", "outer", "high_snr"}
    assert read_provenance(path)["config"]["robustness"]["rho"] == 2.0
    data = json.loads((tmp_path / "results" / "robustness.json").read_text())
    assert data["slopes"]["am"] == pytest.approx(1.0, abs=0.01)


def test_robustness_without_compare(tmp_path):
    config = _config(tmp_path, robustness={"snr0_db": 10.0, "rho": 1.0})
    assert _run("robustness", "--config", config) == 0
    data = json.loads((tmp_path / "results" / "robustness.json").read_text())
    assert data["schemes"] == ["am"]


def test_robustness_mode_adds_mismatched_curve(tmp_path):
    config = _config(
        tmp_path,
        mode="robustness",
        system={
            "snr_db": 10.0,
            "source": {"kind": "ar1", "a": 0.9},
            "noise": {"kind": "two_level", "high": 1.0, "low": 3.0},
        },
        robustness={"snr0_db": 10.0, "snr_db": [10.0, 20.0, 30.0]},
    )
    assert _run("robustness", "--config", config) == 0
    data = json.loads((tmp_path / "results" / "robustness.json").read_text())
    assert data["schemes"] == ["am", "mismatched"]


def test_config_command(tmp_path, capsys):
    config = _config(tmp_path)
    assert _run("config", "--config", config) == 0
    output = capsys.readouterr().out
    assert "Mode: matching" in output
    assert "prefilter_taps: 33" in output


def test_verify_command(capsys):
    assert _run("verify") == 0
    assert "All checks passed" in capsys.readouterr().out
