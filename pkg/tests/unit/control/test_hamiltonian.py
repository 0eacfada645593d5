import sys
from pathlib import Path

import numpy as np
import pytest

project_root = Path(__file__).resolve().parents[3]
sys.path.append(str(project_root))

from src.calculus import MortensenDerivative
from src.control import (
    DerivativeProbeConfig,
    estimate_derivative,
    hamiltonian,
    hjb_residual,
    min_hamiltonian,
    probe_basis,
    time_derivative,
)
from src.densities import GridDensity, gaussian_density
from src.dynamics import RelaxedControl, build_problem
from src.utils.exceptions import ConfigError, GridMismatchError, NumericalError
from src.weightspace import Grid, build_weight, integrate

GRID = Grid(-8.0, 8.0, 129)


# --- Fixtures ---

@pytest.fixture
def spec():
    return build_problem("signed-drift", GRID)


@pytest.fixture
def weight():
    return build_weight(GRID)


@pytest.fixture
def rho0():
    return gaussian_density(0.0, 0.25, GRID)


@pytest.fixture
def exact_value(spec):
    """Value of the signed-drift problem: push left at full speed until T."""
    def V(t, rho):
        return integrate(GRID.nodes * rho.values, GRID) - (spec.T - t)
    return V


@pytest.fixture
def probe():
    return DerivativeProbeConfig(ridge=0.0)


# --- Test Cases ---

class TestHamiltonian:
    """Tests the Hamiltonian and its minimisation over atoms."""

    def test_linear_kernel(self, spec, weight, rho0):
        """For F = x the Hamiltonian is the drift u."""
        d = MortensenDerivative(GRID.nodes.copy(), np.zeros(GRID.n), GRID)
        assert hamiltonian(0.1, rho0, d, RelaxedControl.pure(1, 2), spec, weight) == pytest.approx(1.0, abs=1e-8)
        value, atom = min_hamiltonian(0.1, rho0, d, spec, weight)
        assert value == pytest.approx(-1.0, abs=1e-8)
        assert atom == -1.0

    def test_grid_mismatch(self, spec, weight, rho0):
        other = Grid(-8.0, 8.0, 65)
        d = MortensenDerivative(np.zeros(other.n), np.zeros(other.n), other)
        with pytest.raises(GridMismatchError):
            hamiltonian(0.1, rho0, d, RelaxedControl.pure(0, 2), spec, weight)


class TestDerivativeProbes:
    """Tests the regression estimate of the density derivative."""

    def test_probe_design_validation(self):
        with pytest.raises(ConfigError):
            DerivativeProbeConfig(n_probes=2, basis_degree=3)

    def test_probes_are_mass_neutral(self, rho0, probe):
        bumps = probe_basis(rho0, probe)
        assert len(bumps) == probe.n_probes
        for phi in bumps:
            assert integrate(phi, GRID) == pytest.approx(0.0, abs=1e-10)
            assert np.abs(phi).max() == pytest.approx(1.0)

    def test_linear_value_is_recovered(self, exact_value, rho0, probe):
        """F = x - mean is sd * z, so only the first coefficient survives."""
        estimate = estimate_derivative(exact_value, 0.2, rho0, probe)
        assert estimate.coefficients[0] == pytest.approx(0.5, abs=1e-6)
        assert np.allclose(estimate.coefficients[1:], 0.0, atol=1e-6)
        assert not estimate.ill_conditioned
        assert len(estimate.neighbours) == probe.n_probes

    def test_bump_over_empty_region_is_a_numerical_error(self, exact_value, probe):
        """A density that vanishes right of x = 1 leaves no room for the rightmost bump."""
        values = np.where(GRID.nodes <= 1.0 + 1e-9, np.exp(-0.5 * GRID.nodes ** 2), 0.0)
        truncated = GridDensity.from_values(values, GRID)
        with pytest.raises(NumericalError, match="vanishes"):
            estimate_derivative(exact_value, 0.2, truncated, probe)

    def test_time_derivative_one_sided_at_horizon(self, exact_value, spec, rho0):
        assert time_derivative(exact_value, spec.T, rho0, 0.01, spec.T) == pytest.approx(1.0)
        assert time_derivative(exact_value, 0.0, rho0, 0.01, spec.T) == pytest.approx(1.0)


class TestHJBResidual:
    """Tests the residual of the exact value function."""

    def test_exact_value_has_zero_residual(self, exact_value, spec, weight, rho0, probe):
        report = hjb_residual(exact_value, 0.25, rho0, spec, weight, probe)
        assert report.terminal_ok
        assert report.time_derivative == pytest.approx(1.0)
        assert report.min_hamiltonian == pytest.approx(-1.0, abs=1e-5)
        assert report.argmin_atom == -1.0
        assert abs(report.residual) < 1e-5

    def test_wrong_value_is_detected(self, spec, weight, rho0, probe):
        """Dropping the time term breaks the equation by one."""
        def stale(t, rho):
            return integrate(GRID.nodes * rho.values, GRID)
        report = hjb_residual(stale, 0.25, rho0, spec, weight, probe)
        assert report.residual == pytest.approx(1.0, abs=1e-5)
