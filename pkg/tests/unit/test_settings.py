import json
from pathlib import Path

import pytest

from fmkinetics.app.settings import DatasetGenerator, ExperimentName, load_experiment_config
from fmkinetics.config import SEED_OVERRIDE_ENV
from fmkinetics.core.errors import ConfigError

CONFIG_DIR = Path(__file__).resolve().parents[2] / "config"


def _write(path: Path, payload: dict) -> Path:
    path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    return path


@pytest.fixture(autouse=True)
def no_seed_override(monkeypatch):
    monkeypatch.delenv(SEED_OVERRIDE_ENV, raising=False)


@pytest.fixture
def energy_payload() -> dict:
    return {
        "experiment": "energy",
        "dataset": {"kind": "gaussian", "n": 5, "d": 2, "seed": 1},
        "integrator": {"method": "rk4", "steps": 10, "t_end": 0.5},
        "mc": {"seed": 3, "count": 20, "probe_times": [0.0, 0.25]},
        "output_dir": "out",
    }


def test_packaged_configs_load() -> None:
    names = set()
    for path in sorted(CONFIG_DIR.glob("*.json")) + sorted(CONFIG_DIR.glob("*.yaml")):
        if path.name == "three_points.json":
            continue
        names.add(load_experiment_config(path).experiment)
    assert names == set(ExperimentName)


def test_generator_alias_and_relative_dataset(tmp_path, energy_payload) -> None:
    config = load_experiment_config(_write(tmp_path / "energy.json", energy_payload))
    assert isinstance(config.dataset, DatasetGenerator)
    assert config.dataset.kind == "standard_gaussian"

    (tmp_path / "points.csv").write_text("0,1\n1,0\n", encoding="utf-8")
    energy_payload["dataset"] = "points.csv"
    config = load_experiment_config(_write(tmp_path / "energy.json", energy_payload))
    assert Path(config.dataset) == tmp_path / "points.csv"


def test_unknown_key_reports_line(tmp_path, energy_payload) -> None:
    energy_payload["integrator"]["order"] = 4
    path = _write(tmp_path / "bad.json", energy_payload)
    with pytest.raises(ConfigError) as excinfo:
        load_experiment_config(path)
    assert excinfo.value.line is not None
    assert '"order"' in path.read_text(encoding="utf-8").splitlines()[excinfo.value.line - 1]


def test_malformed_json_reports_line(tmp_path) -> None:
    path = tmp_path / "broken.json"
    path.write_text('{\n  "experiment": "energy",\n  "mc": {\n}\n', encoding="utf-8")
    with pytest.raises(ConfigError) as excinfo:
        load_experiment_config(path)
    assert excinfo.value.line is not None
    assert str(path) in str(excinfo.value)


def test_yaml_errors_report_line(tmp_path) -> None:
    path = tmp_path / "bad.yaml"
    path.write_text("experiment: energy\nschedule:\n  kind: rf_regularized\n  sigma_min: 1.5\n", encoding="utf-8")
    with pytest.raises(ConfigError) as excinfo:
        load_experiment_config(path)
    assert excinfo.value.line == 4


def test_missing_files_are_config_errors(tmp_path, energy_payload) -> None:
    with pytest.raises(ConfigError):
        load_experiment_config(tmp_path / "absent.json")
    energy_payload["dataset"] = "absent.csv"
    with pytest.raises(ConfigError, match="absent.csv"):
        load_experiment_config(_write(tmp_path / "energy.json", energy_payload))


def test_experiment_requirements(tmp_path, energy_payload) -> None:
    energy_payload["experiment"] = "ot-compare"
    with pytest.raises(ConfigError, match="target"):
        load_experiment_config(_write(tmp_path / "a.json", energy_payload))

    energy_payload["experiment"] = "tails"
    energy_payload["tails"] = {"quantity": "K_t@0.4"}
    with pytest.raises(ConfigError, match="probe_times"):
        load_experiment_config(_write(tmp_path / "b.json", energy_payload))

    energy_payload["tails"] = {"quantity": "speed"}
    with pytest.raises(ConfigError):
        load_experiment_config(_write(tmp_path / "c.json", energy_payload))


def test_t_end_beyond_t_max_is_rejected(tmp_path, energy_payload) -> None:
    energy_payload["t_max"] = 0.4
    with pytest.raises(ConfigError, match="t_max"):
        load_experiment_config(_write(tmp_path / "energy.json", energy_payload))


def test_experiment_argument_overrides_file(tmp_path, energy_payload) -> None:
    config = load_experiment_config(_write(tmp_path / "energy.json", energy_payload), "sample")
    assert config.experiment is ExperimentName.SAMPLE
    with pytest.raises(ConfigError):
        load_experiment_config(tmp_path / "energy.json", "plot")


def test_seed_override(tmp_path, energy_payload, monkeypatch) -> None:
    monkeypatch.setenv(SEED_OVERRIDE_ENV, "99")
    config = load_experiment_config(_write(tmp_path / "energy.json", energy_payload))
    assert config.mc.seed == 99
    assert config.dataset.seed == 99

    monkeypatch.setenv(SEED_OVERRIDE_ENV, "abc")
    with pytest.raises(ConfigError):
        load_experiment_config(tmp_path / "energy.json")


def test_config_hash_ignores_output_dir(tmp_path, energy_payload) -> None:
    first = load_experiment_config(_write(tmp_path / "a.json", energy_payload))
    energy_payload["output_dir"] = "elsewhere"
    second = load_experiment_config(_write(tmp_path / "b.json", energy_payload))
    energy_payload["mc"]["seed"] = 4
    third = load_experiment_config(_write(tmp_path / "c.json", energy_payload))
    assert first.config_hash() == second.config_hash()
    assert first.config_hash() != third.config_hash()
