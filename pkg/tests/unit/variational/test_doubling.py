import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

project_root = Path(__file__).resolve().parents[3]
sys.path.append(str(project_root))

from src.densities import gaussian_density
from src.variational import (
    DoublingParams,
    build_phi,
    comparison_gap,
    doubling_experiment,
    proof_alpha,
    uniqueness_gap,
)
from src.utils.exceptions import ConfigError
from src.weightspace import Grid, build_weight, integrate, weighted_energy

GRID = Grid(-8.0, 8.0, 129)


# --- Fixtures ---

@pytest.fixture
def weight():
    return build_weight(GRID)


@pytest.fixture
def dictionary():
    return [gaussian_density(m, 0.25, GRID) for m in (-0.5, 0.0, 0.5)]


@pytest.fixture
def params() -> DoublingParams:
    return DoublingParams(alpha_tilde=0.5, beta=0.1, lam=0.01, theta=0.5, eta=1.0, eps=1e-3, T=0.5)


def mean_value(t, rho):
    return integrate(GRID.nodes * rho.values, GRID)


# --- Test Cases ---

class TestDoublingParams:
    """Tests parameter validation."""

    @pytest.mark.parametrize("field", ["alpha_tilde", "beta", "lam", "eps"])
    def test_unit_interval(self, params, field):
        values = {**params.__dict__, field: 1.5}
        with pytest.raises(ConfigError, match=field):
            DoublingParams(**values)

    def test_proof_alpha(self):
        assert proof_alpha(1e-4) == pytest.approx(0.04 + 0.1)


class TestAuxiliaryFunction:
    """Tests the doubled auxiliary function."""

    def test_diagonal_value(self, params, weight, dictionary):
        """On the diagonal with W = V only the penalties remain."""
        rho = dictionary[1]
        phi = build_phi(0.5, 0.5, rho, rho, mean_value, mean_value, params, weight)
        expected = -0.5 * 2 * weighted_energy(rho.values, weight) - 0.0 - 0.02 - 0.02
        assert phi == pytest.approx(expected)

    def test_times_must_be_positive(self, params, weight, dictionary):
        with pytest.raises(ConfigError):
            build_phi(0.0, 0.5, dictionary[0], dictionary[0], mean_value, mean_value, params, weight)


class TestDoublingExperiment:
    """Tests the doubling harness on W = V."""

    def test_equal_functions_pass(self, params, weight, dictionary, tmp_path: Path):
        report = doubling_experiment(mean_value, mean_value, dictionary, [0.25, 0.5], params, weight)
        assert report.passed
        assert [r.theta for r in report.records] == [1e-1, 1e-2, 1e-3]
        final = report.records[-1]
        assert final.rho_index == final.chi_index
        assert final.h9_quantity <= 4 * params.eps
        assert all(r.h5_ok for r in report.records)

        report.save_csv(tmp_path / "doubling.csv")
        df = pd.read_csv(tmp_path / "doubling.csv")
        assert len(df) == 3
        assert "h8_quantity" in df.columns

    def test_horizon_is_appended(self, params, weight, dictionary):
        report = doubling_experiment(mean_value, mean_value, dictionary, [0.25], params, weight, thetas=(1e-2,))
        assert len(report.bp_results) == 1
        assert report.records[0].t_eps in (0.25, 0.5)

    def test_parallel_tabulation_matches(self, params, weight, dictionary):
        serial = doubling_experiment(mean_value, mean_value, dictionary, [0.25, 0.5], params, weight)
        threaded = doubling_experiment(mean_value, mean_value, dictionary, [0.25, 0.5], params, weight,
                                       max_workers=2)
        assert serial.to_frame().equals(threaded.to_frame())

    def test_alpha_must_dominate_eps(self, weight, dictionary):
        params = DoublingParams(alpha_tilde=0.1, beta=0.1, lam=0.01, theta=0.5, eta=1.0, eps=0.01, T=0.5)
        with pytest.raises(ConfigError, match="alpha_tilde"):
            doubling_experiment(mean_value, mean_value, dictionary, [0.5], params, weight)

    def test_time_grid_inside_horizon(self, params, weight, dictionary):
        with pytest.raises(ConfigError):
            doubling_experiment(mean_value, mean_value, dictionary, [0.0, 0.5], params, weight)


class TestGaps:
    """Tests the comparison and uniqueness gaps."""

    def test_shifted_function(self, dictionary):
        probes = [(0.25, rho) for rho in dictionary]

        def shifted(t, rho):
            return mean_value(t, rho) + 0.1

        assert comparison_gap(shifted, mean_value, probes) == pytest.approx(0.1)
        assert comparison_gap(mean_value, shifted, probes) == pytest.approx(-0.1)
        assert uniqueness_gap(shifted, mean_value, probes) == pytest.approx(0.1)

    def test_empty_probes(self):
        with pytest.raises(ConfigError):
            comparison_gap(mean_value, mean_value, [])
