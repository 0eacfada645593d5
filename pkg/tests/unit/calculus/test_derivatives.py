import sys
from pathlib import Path

import numpy as np
import pytest

project_root = Path(__file__).resolve().parents[3]
sys.path.append(str(project_root))

from src.calculus import (
    BUILTIN_INTEGRANDS,
    MortensenDerivative,
    check_energy_gradient_bound,
    derivative_integrand,
    derivative_linear,
    derivative_weighted_energy,
    difference_of_gaussians,
    integrand_functional,
    linear_functional,
    load_derivative_csv,
    mass_neutral_directions,
    pairing,
    save_derivative_csv,
    verify_derivative,
    weighted_energy_functional,
)
from src.densities import gaussian_density, random_mixture
from src.utils.exceptions import GridMismatchError
from src.weightspace import Grid, build_weight, integrate, weighted_energy, weighted_h12_norm

GRID = Grid(-8.0, 8.0, 257)


# --- Fixtures ---

@pytest.fixture
def weight():
    return build_weight(GRID)


@pytest.fixture
def rng():
    return np.random.default_rng(11)


@pytest.fixture
def rho(rng):
    return random_mixture(GRID, rng)


@pytest.fixture
def directions(weight, rng, rho):
    return mass_neutral_directions(GRID, weight, 3, rng, center=rho.mean)


# --- Test Cases ---

class TestDirections:
    """Tests the mass-neutral test directions."""

    def test_unit_norm_and_zero_mass(self, weight, directions):
        for phi in directions:
            assert weighted_h12_norm(phi, weight) == pytest.approx(1.0)
            assert integrate(phi, GRID) == pytest.approx(0.0, abs=1e-10)

    def test_difference_of_gaussians_is_antisymmetric(self):
        phi = difference_of_gaussians(GRID, center=0.0, shift=0.5, width=0.4)
        assert np.allclose(phi, -phi[::-1])


class TestBuiltinDerivatives:
    """Analytic derivatives of every built-in family pass the finite-difference check."""

    def test_linear(self, weight, rho, directions):
        kernel = np.cos(GRID.nodes)
        report = verify_derivative(linear_functional(kernel, GRID), derivative_linear(kernel, GRID),
                                   rho, directions, weight)
        assert report.passed
        assert report.worst_final_ratio < 1e-10

    @pytest.mark.parametrize("name", sorted(BUILTIN_INTEGRANDS))
    def test_integrands(self, name, weight, rho, directions):
        H = BUILTIN_INTEGRANDS[name]
        report = verify_derivative(integrand_functional(H, GRID), derivative_integrand(H, rho),
                                   rho, directions, weight)
        assert report.passed, f"{name}: {[d.ratios for d in report.directions]}"

    def test_weighted_energy(self, weight, rng, rho, directions):
        rho_hat = random_mixture(GRID, rng)
        report = verify_derivative(weighted_energy_functional(rho_hat, weight),
                                   derivative_weighted_energy(rho, rho_hat, weight),
                                   rho, directions, weight)
        assert report.passed

    def test_wrong_derivative_fails(self, weight, rho, directions):
        """Doubling the derivative leaves an order-one remainder."""
        H = BUILTIN_INTEGRANDS["rho^2"]
        report = verify_derivative(integrand_functional(H, GRID), derivative_integrand(H, rho).scaled(2.0),
                                   rho, directions, weight)
        assert not report.passed

    def test_remainder_identity(self, weight, rng, rho, directions):
        """The weighted energy expands exactly: S(rho + phi) - S(rho) - A(phi) = ||phi||^2."""
        rho_hat = random_mixture(GRID, rng)
        S = weighted_energy_functional(rho_hat, weight)
        d = derivative_weighted_energy(rho, rho_hat, weight)
        for phi in directions:
            lhs = S(rho.values + phi) - S(rho.values) - pairing(d, phi)
            assert lhs == pytest.approx(weighted_energy(phi, weight), rel=1e-10)

    def test_energy_gradient_bound(self, weight, rng, rho):
        assert check_energy_gradient_bound(rho, random_mixture(GRID, rng), weight).holds


class TestMortensenDerivative:
    """Tests the derivative container."""

    def test_sum_and_scaling(self):
        a = MortensenDerivative(np.ones(GRID.n), np.zeros(GRID.n), GRID)
        b = a.scaled(3.0) + a
        assert np.allclose(b.F, 4.0)

    def test_length_mismatch(self):
        with pytest.raises(GridMismatchError):
            MortensenDerivative(np.ones(3), np.ones(3), GRID)

    def test_file_format(self, tmp_path: Path):
        rho = gaussian_density(0.0, 0.25, GRID)
        d = derivative_integrand(BUILTIN_INTEGRANDS["rho*drho"], rho)
        path = tmp_path / "derivative.csv"
        save_derivative_csv(d, path)
        loaded = load_derivative_csv(path)
        assert np.allclose(loaded.F, d.F)
        assert np.allclose(loaded.G, d.G)
