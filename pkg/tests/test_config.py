from pathlib import Path

import numpy as np
import pytest
import yaml

from analog_matching.config import THREADS_ENV, ExperimentConfig, load_config
from analog_matching.core.lattice import LatticeKind
from analog_matching.exceptions import ConfigError
from analog_matching.services.codec import FailureMode
from analog_matching.services.design import DEFAULT_PREDICTOR_TAPS, DesignMode

EXAMPLE_CONFIG = Path(__file__).parent.parent / "config" / "config.yaml"


def _write(tmp_path, data: dict):
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(data))
    return path


def test_defaults_from_empty_mapping():
    config = ExperimentConfig.from_dict({})
    assert config.mode == "matching"
    assert config.design_mode is DesignMode.MATCHING
    assert config.grid_size == 4096
    assert config.lattice_kind is LatticeKind.SCALAR
    assert config.predictor_length == DEFAULT_PREDICTOR_TAPS
    assert config.init_repeats == "auto"
    spec = config.system_spec()
    assert spec.snr == pytest.approx(100.0)
    assert spec.rho == 1.0


def test_load_yaml_file(tmp_path):
    path = _write(
        tmp_path,
        {
            "mode": "zero_forcing",
            "system": {
                "source": {"kind": "ar1", "a": 0.5},
                "noise": {"kind": "two_level", "high": 1.0, "low": 3.0},
                "power": 20.0,
            },
            "lattice": {"kind": "e8"},
            "stream": {"K": 8, "N": 512, "L": 16, "seed": 3, "failure_mode": "reset"},
        },
    )
    config = load_config(str(path))
    assert config.design_mode is DesignMode.ZERO_FORCING
    spec = config.system_spec()
    assert spec.power == 20.0
    assert spec.noise.variance == pytest.approx(2.0)
    sim = config.simulation_config()
    assert sim.lattice is LatticeKind.E8
    assert sim.columns == 512 and sim.length == 16 and sim.seed == 3
    assert sim.failure_mode is FailureMode.RESET
    assert config.simulation_config(seed=9).seed == 9


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "absent.yaml"))
    broken = tmp_path / "broken.yaml"
    broken.write_text("system: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(str(broken))


@pytest.mark.parametrize(
    "data, path",
    [
        ({"stream": {"margin": "wide"}}, "stream.margin"),
        ({"stream": {"colour": 1}}, "stream.colour"),
        ({"mode": "fancy"}, "mode"),
        ({"system": {"grid_size": 1000}}, "system.grid_size"),
        ({"system": {"source": {"kind": "isi"}}}, "system.source.kind"),
        ({"system": {"power": 1.0, "snr_db": 10.0}}, "system"),
        ({"lattice": {"kind": "e8"}, "stream": {"K": 4}}, "stream.K"),
        ({"lattice": {"kind": "a2", "dimension": 2}}, "lattice.dimension"),
        ({"stream": {"init_repeats": "many"}}, "stream.init_repeats"),
        ({"stream": {"blocks": True}}, "stream.blocks"),
        ({"sweep": {"snr_db": [10, "x"]}}, "sweep.snr_db"),
    ],
)
def test_invalid_values_name_the_field(data, path):
    with pytest.raises(ConfigError) as excinfo:
        ExperimentConfig.from_dict(data)
    assert excinfo.value.path == path
    assert str(excinfo.value).startswith(path)


def test_spectrum_errors_become_config_errors():
    config = ExperimentConfig.from_dict({"system": {"source": {"kind": "ar1", "a": 1.5}}})
    with pytest.raises(ConfigError) as excinfo:
        config.system_spec()
    assert excinfo.value.path == "system.source"


def test_csv_spectrum_resolves_relative_to_config(tmp_path):
    (tmp_path / "noise.csv").write_text("0.0,1.0\n0.5,3.0\n")
    path = _write(tmp_path, {"system": {"noise": {"kind": "csv", "path": "noise.csv"}}})
    spec = load_config(str(path)).system_spec()
    assert spec.noise.values.min() >= 1.0
    assert spec.noise.values.max() == pytest.approx(3.0)


def test_isi_noise():
    config = ExperimentConfig.from_dict(
        {"system": {"noise": {"kind": "isi", "taps": [1.0, -0.5], "innovation_var": 2.0}}}
    )
    noise = config.system_spec().noise
    assert noise.values[0] == pytest.approx(2.0 / 0.25)


def test_bandwidth_presets():
    expansion = ExperimentConfig.from_dict({"mode": "bw_expansion", "system": {"rho": 2.0}})
    assert expansion.system_spec().rho == pytest.approx(2.0)
    compression = ExperimentConfig.from_dict({"mode": "bw_compression", "system": {"rho": 0.5}})
    assert compression.system_spec(snr_db=10.0).snr == pytest.approx(10.0)
    wrong = ExperimentConfig.from_dict({"mode": "bw_expansion", "system": {"rho": 0.5}})
    with pytest.raises(ConfigError):
        wrong.system_spec()


def test_cubic_dimension_from_k():
    config = ExperimentConfig.from_dict({"lattice": {"kind": "cubic"}, "stream": {"K": 3}})
    assert config.lattice_dimension == 3
    assert config.simulation_config().dimension == 3


def test_threads_precedence(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert ExperimentConfig.from_dict({}).threads() == 1
    monkeypatch.setenv(THREADS_ENV, "4")
    assert ExperimentConfig.from_dict({}).threads() == 4
    assert ExperimentConfig.from_dict({"threads": 2}).threads() == 2
    assert ExperimentConfig.from_dict({"threads": 2}).threads(override=6) == 6
    monkeypatch.setenv(THREADS_ENV, "four")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({}).threads()


def test_resolved_fills_defaults(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    resolved = ExperimentConfig.from_dict({"stream": {"L": 32}}).resolved(seed=5)
    assert resolved["stream"]["L"] == 32
    assert resolved["stream"]["seed"] == 5
    assert resolved["stream"]["N"] == 2048
    assert resolved["lattice"] == {"kind": "scalar"}
    assert resolved["threads"] == 1
    assert resolved["output"] == {"dir": "results"}
    yaml.safe_dump(resolved)


def test_sweep_and_robustness_sections():
    config = ExperimentConfig.from_dict(
        {
            "sweep": {"snr_db": [0, 10, 20]},
            "robustness": {"snr0_db": 15, "rho": 2, "points_per_decade": 5},
        }
    )
    assert config.sweep_snr_db == [0.0, 10.0, 20.0]
    assert config.robustness_snr0_db == 15.0
    assert config.robustness_rho == 2.0
    assert config.points_per_decade == 5
    assert config.robustness_snr_db == []


def test_example_config_loads():
    config = load_config(str(EXAMPLE_CONFIG))
    spec = config.system_spec()
    assert spec.snr == pytest.approx(100.0)
    assert np.isclose(spec.rho, 1.0)
    assert config.resolved()["stream"]["margin"] == 0.05
