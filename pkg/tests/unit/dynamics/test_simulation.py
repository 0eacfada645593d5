import sys
from pathlib import Path

import numpy as np
import pytest

project_root = Path(__file__).resolve().parents[3]
sys.path.append(str(project_root))

from src.densities import ParticleEnsemble, gaussian_density
from src.dynamics import (
    PolicySchedule,
    RelaxedControl,
    build_problem,
    gaussian_bound_check,
    particle_simulate,
)
from src.utils.exceptions import ConfigError
from src.weightspace import Grid

GRID = Grid(-8.0, 8.0, 257)


# --- Fixtures ---

@pytest.fixture
def rho0():
    return gaussian_density(0.0, 0.25, GRID)


def constant(spec, index):
    return PolicySchedule.constant(RelaxedControl.pure(index, spec.n_atoms), 0.0, spec.T)


# --- Test Cases ---

class TestParticleSimulate:
    """Tests the Euler-Maruyama particle solver."""

    def test_same_seed_same_ensemble(self, rho0):
        spec = build_problem("zero-drift", GRID)
        first = particle_simulate(rho0, 0.0, spec.T, constant(spec, 0), spec, 500, seed=5, dt=0.05)
        second = particle_simulate(rho0, 0.0, spec.T, constant(spec, 0), spec, 500, seed=5, dt=0.05)
        assert np.array_equal(first.positions, second.positions)
        assert first.seed == 5

    def test_result_does_not_depend_on_workers(self, rho0):
        """Each chunk owns its random stream, so threading changes nothing."""
        spec = build_problem("zero-drift", GRID)
        kwargs = dict(dt=0.05, chunk_size=100)
        serial = particle_simulate(rho0, 0.0, spec.T, constant(spec, 0), spec, 400, seed=1, max_workers=1, **kwargs)
        threaded = particle_simulate(rho0, 0.0, spec.T, constant(spec, 0), spec, 400, seed=1, max_workers=3, **kwargs)
        assert np.array_equal(serial.positions, threaded.positions)

    def test_diffusion_variance(self, rho0):
        """Zero drift adds sigma^2 t to the variance."""
        spec = build_problem("zero-drift", GRID)
        ensemble = particle_simulate(rho0, 0.0, 0.5, constant(spec, 0), spec, 20000, seed=0, dt=0.05)
        assert ensemble.positions.var() == pytest.approx(0.75, rel=0.05)

    def test_constant_drift_shifts_mean(self, rho0):
        spec = build_problem("signed-drift", GRID)
        ensemble = particle_simulate(rho0, 0.0, 0.5, constant(spec, 0), spec, 20000, seed=0, dt=0.01)
        assert ensemble.positions.mean() == pytest.approx(-0.5, abs=0.03)

    def test_ensemble_start(self):
        """An ensemble initial law is used as given."""
        spec = build_problem("zero-drift", GRID)
        start = ParticleEnsemble(np.zeros(200), seed=0)
        ensemble = particle_simulate(start, 0.0, 0.1, constant(spec, 0), spec, None, seed=2, dt=0.1)
        assert ensemble.n_particles == 200

    def test_density_start_needs_count(self, rho0):
        spec = build_problem("zero-drift", GRID)
        with pytest.raises(ConfigError):
            particle_simulate(rho0, 0.0, 0.1, constant(spec, 0), spec, None, seed=0)

    def test_mean_field_drift_uses_kde(self, rho0):
        """A density-dependent drift runs on the KDE of the cloud and stays finite."""
        spec = build_problem("mean-field-attraction", GRID)
        ensemble = particle_simulate(rho0, 0.0, 0.2, constant(spec, 1), spec, 1000, seed=0, dt=0.05)
        assert np.all(np.isfinite(ensemble.positions))
        assert ensemble.positions.mean() == pytest.approx(0.2, abs=0.1)


class TestGaussianBounds:
    """Tests the two-sided Gaussian envelope fit."""

    def test_heat_kernel_envelopes(self, rho0):
        """For pure diffusion the fit recovers the Gaussian constants."""
        spec = build_problem("zero-drift", GRID)
        report = gaussian_bound_check(rho0, constant(spec, 0), spec, 0.5, N=5000, seed=3, dt=0.01)
        assert not report.degenerate
        assert report.rate == pytest.approx(0.5, rel=0.2)
        assert report.intercept == pytest.approx(-0.5 * np.log(2 * np.pi), abs=0.15)
        assert report.passed
        assert report.kappa1 >= 1.0
        assert 0.0 < report.kappa2 <= 1.0
