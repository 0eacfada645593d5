import sys
import json
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pandas as pd
import pytest

project_root = Path(__file__).resolve().parents[3]
sys.path.append(str(project_root))

from src.evaluation.reporting import (
    RESULT_COLUMNS,
    TOOL_VERSION,
    ResultTable,
    json_serializable,
    make_run_dir,
    save_results,
    save_summary_figure,
    write_manifest,
    write_summary,
)

# --- Fixtures ---

@pytest.fixture
def table() -> ResultTable:
    """A small table with one failing row."""
    table = ResultTable("heat-oracle")
    table.add("zero-drift", "n=513,dt=0.0004", "w1_to_oracle", 2.5e-3)
    table.add("zero-drift", "n=1025,dt=0.0001", "w1_to_oracle", 6.0e-4, passed=True)
    table.add("zero-drift", "refinement", "error_reduction", np.float64(4.1), passed=np.bool_(True))
    table.add("zero-drift", "n=1025,dt=0.0001", "max_mass_drift", 1e-13, passed=False)
    return table


# --- Test Cases ---

class TestResultTable:
    """Tests the long-form result schema."""

    def test_columns_and_types(self, table):
        frame = table.to_frame()
        assert list(frame.columns) == RESULT_COLUMNS
        assert frame["experiment"].unique().tolist() == ["heat-oracle"]
        assert isinstance(table.rows[2]["value"], float)
        assert isinstance(table.rows[2]["pass"], bool)

    def test_failures(self, table):
        assert not table.all_passed
        assert [row["metric"] for row in table.failures()] == ["max_mass_drift"]

    def test_extend(self, table):
        other = ResultTable("heat-oracle")
        other.add("zero-drift", "n=65", "w1_to_oracle", 0.1)
        other.extend(table)
        assert len(other.rows) == 5

    def test_empty_table_passes(self):
        assert ResultTable("dpp").all_passed


class TestRunArtifacts:
    """Tests the files written for every run."""

    def test_run_dir_layout(self, tmp_path: Path):
        run_dir = make_run_dir(tmp_path, "dpp", "20250101_120000")
        assert run_dir == tmp_path / "dpp" / "20250101_120000"
        assert run_dir.is_dir()

    def test_results_csv(self, table, tmp_path: Path):
        path = save_results(table, tmp_path)
        df = pd.read_csv(path)
        assert list(df.columns) == RESULT_COLUMNS
        assert len(df) == 4
        assert df.loc[0, "value"] == pytest.approx(2.5e-3)
        assert df["pass"].tolist() == [True, True, True, False]

    def test_manifest(self, tmp_path: Path):
        path = write_manifest(tmp_path, "dpp", "20250101_120000", "abc123", 42)
        lines = path.read_text().splitlines()
        assert lines[0] == "experiment: dpp"
        assert "config_hash: abc123" in lines
        assert "seed: 42" in lines
        assert f"tool_version: {TOOL_VERSION}" in lines
        assert lines[-1].startswith("python_packages: numpy==")

    def test_summary(self, table, tmp_path: Path):
        with open(write_summary(table, tmp_path)) as f:
            summary = json.load(f)
        assert summary == {
            "experiment": "heat-oracle",
            "rows": 4,
            "failures": 1,
            "fixtures": ["zero-drift"],
            "passed": False,
        }

    def test_json_serializable(self):
        assert json_serializable(np.int64(3)) == 3
        assert json_serializable((1, 2)) == [1, 2]
        assert json_serializable(Path("a")) == "a"


class TestSummaryFigure:
    """Tests the optional summary figure."""

    def test_figure_is_written(self, table, tmp_path: Path):
        path = save_summary_figure(table, tmp_path)
        assert path == tmp_path / "summary.png"
        assert path.exists()

    def test_empty_table_skips_figure(self, tmp_path: Path):
        assert save_summary_figure(ResultTable("dpp"), tmp_path) is None
        assert not (tmp_path / "summary.png").exists()

    @patch("src.evaluation.reporting.plt.savefig")
    def test_figure_uses_matplotlib(self, mock_savefig, table, tmp_path: Path):
        save_summary_figure(table, tmp_path)
        mock_savefig.assert_called_once()
        assert mock_savefig.call_args[0][0] == tmp_path / "summary.png"
