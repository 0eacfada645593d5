import sys
from pathlib import Path

import numpy as np
import pytest

project_root = Path(__file__).resolve().parents[3]
sys.path.append(str(project_root))

from src.densities import (
    ParticleEnsemble,
    gaussian_density,
    kde,
    load_ensemble_csv,
    save_ensemble_csv,
    silverman_bandwidth,
)
from src.utils.exceptions import DensityError
from src.weightspace import Grid, wasserstein1

GRID = Grid(-8.0, 8.0, 257)


# --- Test Cases ---

class TestParticleEnsemble:
    """Tests ensemble construction and sampling."""

    def test_minimum_size(self):
        with pytest.raises(DensityError, match="at least 100"):
            ParticleEnsemble(np.zeros(99), seed=0)

    def test_one_dimensional_input_becomes_column(self):
        ensemble = ParticleEnsemble(np.linspace(-1, 1, 200), seed=1)
        assert ensemble.positions.shape == (200, 1)
        assert ensemble.dim == 1
        assert ensemble.weights.sum() == pytest.approx(1.0)

    def test_sampling_is_seeded(self):
        rho = gaussian_density(0.0, 0.25, GRID)
        first = ParticleEnsemble.from_density(rho, 1000, seed=7)
        second = ParticleEnsemble.from_density(rho, 1000, seed=7)
        assert np.array_equal(first.positions, second.positions)

    def test_sample_moments(self):
        rho = gaussian_density(0.5, 0.25, GRID)
        ensemble = ParticleEnsemble.from_density(rho, 20000, seed=0)
        assert ensemble.positions.mean() == pytest.approx(0.5, abs=0.02)
        assert ensemble.positions.var() == pytest.approx(0.25, rel=0.05)


class TestKDE:
    """Tests the kernel density estimate."""

    def test_kde_recovers_density(self):
        """A large sample of N(0, 1/4) gives a KDE within a small W1 of the truth."""
        rho = gaussian_density(0.0, 0.25, GRID)
        ensemble = ParticleEnsemble.from_density(rho, 20000, seed=0)
        estimate = kde(ensemble, silverman_bandwidth(ensemble.positions), GRID)
        assert estimate.mass == pytest.approx(1.0, abs=1e-12)
        assert estimate.values.min() >= 0.0
        assert wasserstein1(estimate, rho) < 0.02

    def test_coincident_particles_give_one_kernel(self):
        """Every particle at 0 with bandwidth 0.2 is the Gaussian N(0, 0.04)."""
        grid = Grid(-8.0, 8.0, 1025)
        estimate = kde(ParticleEnsemble(np.zeros(100), seed=0), 0.2, grid)
        assert wasserstein1(estimate, gaussian_density(0.0, 0.04, grid)) < 1e-10

    def test_unit_mass_on_random_ensemble(self):
        positions = np.random.default_rng(3).normal(0.5, 1.5, size=500)
        estimate = kde(ParticleEnsemble(positions, seed=3), 0.3, GRID)
        assert estimate.mass == pytest.approx(1.0, abs=1e-9)

    def test_bandwidth_must_be_positive(self):
        ensemble = ParticleEnsemble(np.linspace(-1, 1, 200), seed=0)
        with pytest.raises(DensityError):
            kde(ensemble, 0.0, GRID)

    def test_silverman_rule(self):
        samples = np.random.default_rng(0).normal(size=10000)
        expected = 1.06 * np.std(samples, ddof=1) * 10000 ** (-0.2)
        assert silverman_bandwidth(samples) == pytest.approx(expected)


class TestEnsembleFiles:
    """Tests the ensemble CSV format with its seed header."""

    def test_seed_survives(self, tmp_path: Path):
        ensemble = ParticleEnsemble(np.random.default_rng(1).normal(size=150), seed=123)
        path = tmp_path / "ensemble.csv"
        save_ensemble_csv(ensemble, path)
        assert path.read_text().startswith("# seed=123\n")
        loaded = load_ensemble_csv(path)
        assert loaded.seed == 123
        assert np.allclose(loaded.positions, ensemble.positions)

    def test_missing_header(self, tmp_path: Path):
        path = tmp_path / "bad.csv"
        path.write_text("x\n0.0\n")
        with pytest.raises(DensityError, match="seed"):
            load_ensemble_csv(path)
