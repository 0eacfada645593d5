import sys
from pathlib import Path

import pytest
import yaml

project_root = Path(__file__).resolve().parents[3]
sys.path.append(str(project_root))

from src.config import DEFAULT_CONFIG, OUTPUT_DIR_ENV, config_hash, config_to_dict, load_config
from src.utils.exceptions import ConfigError, StabilityError


# --- Fixtures ---

@pytest.fixture
def write_config(tmp_path: Path, monkeypatch):
    """Returns a helper that dumps a mapping to a YAML file in tmp_path."""
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)

    def _write(data: dict, name: str = "config.yaml") -> Path:
        path = tmp_path / name
        with open(path, "w") as f:
            yaml.safe_dump(data, f)
        return path

    return _write


@pytest.fixture
def minimal() -> dict:
    return {"grid": {"lower": -8.0, "upper": 8.0, "n": 257}, "problem": {"name": "zero-drift"}}


# --- Test Cases ---

class TestLoadConfig:
    """Tests loading, defaults and validation."""

    def test_defaults_fill_missing_sections(self, write_config, minimal):
        cfg = load_config(write_config(minimal))
        assert cfg.grid.n == 257
        assert cfg.problem.name == "zero-drift"
        assert cfg.problem.sigma == DEFAULT_CONFIG["problem"]["sigma"]
        assert cfg.dynamics.scheme == "exponential-fitting"
        assert cfg.doubling.thetas == [0.1, 0.01, 0.001]
        assert isinstance(cfg.output.dir, Path) and cfg.output.dir.is_absolute()

    def test_example_config_is_valid(self, monkeypatch):
        monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
        cfg = load_config(project_root / "configs" / "config_example.yaml")
        assert cfg.problem.name == "signed-drift"
        assert cfg.grid.n == 513

    def test_missing_file(self, tmp_path: Path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "absent.yaml")

    def test_missing_required_key(self, write_config, minimal):
        del minimal["grid"]["n"]
        with pytest.raises(ConfigError, match="grid.n"):
            load_config(write_config(minimal))

    def test_unknown_key(self, write_config, minimal):
        minimal["search"] = {"pieces": 2, "depth": 3}
        with pytest.raises(ConfigError, match="search.depth"):
            load_config(write_config(minimal))

    def test_unknown_problem(self, write_config, minimal):
        minimal["problem"]["name"] = "double-well"
        with pytest.raises(ConfigError, match="Unknown problem"):
            load_config(write_config(minimal))

    @pytest.mark.parametrize("section, key, bad", [
        ("problem", "sigma", 0.0),
        ("dynamics", "scheme", "central"),
        ("particles", "n_particles", 50),
        ("doubling", "eps", 1.5),
        ("probe", "n_probes", 2),
    ])
    def test_out_of_range(self, write_config, minimal, section, key, bad):
        minimal.setdefault(section, {})[key] = bad
        with pytest.raises(ConfigError):
            load_config(write_config(minimal))

    def test_step_above_stability_bound(self, write_config, minimal):
        """h = 1/16 allows at most dt = h^2 / 2 for sigma = 1."""
        minimal["dynamics"] = {"dt": 0.01}
        with pytest.raises(StabilityError, match="stability"):
            load_config(write_config(minimal))

    def test_env_substitution(self, write_config, minimal, monkeypatch):
        monkeypatch.setenv("MKV_TEST_PROBLEM", "ornstein-uhlenbeck")
        minimal["problem"]["name"] = "${MKV_TEST_PROBLEM}"
        assert load_config(write_config(minimal)).problem.name == "ornstein-uhlenbeck"

    def test_unset_env_var(self, write_config, minimal, monkeypatch):
        monkeypatch.delenv("MKV_UNSET_VARIABLE", raising=False)
        minimal["output"] = {"dir": "${MKV_UNSET_VARIABLE}"}
        with pytest.raises(ConfigError, match="MKV_UNSET_VARIABLE"):
            load_config(write_config(minimal))

    def test_output_dir_override(self, write_config, minimal, monkeypatch, tmp_path: Path):
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "runs"))
        cfg = load_config(write_config(minimal))
        assert cfg.output.dir == (tmp_path / "runs").resolve()


class TestConfigHash:
    """Tests the configuration fingerprint."""

    def test_hash_is_stable(self, write_config, minimal):
        first = load_config(write_config(minimal, "a.yaml"))
        second = load_config(write_config(minimal, "b.yaml"))
        assert config_hash(first) == config_hash(second)
        assert config_hash(first) == config_hash(config_to_dict(first))

    def test_hash_changes_with_values(self, write_config, minimal):
        first = load_config(write_config(minimal))
        minimal["search"] = {"pieces": 3}
        second = load_config(write_config(minimal))
        assert config_hash(first) != config_hash(second)
