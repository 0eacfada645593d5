import sys
from pathlib import Path

import numpy as np
import pytest

project_root = Path(__file__).resolve().parents[3]
sys.path.append(str(project_root))

from src.densities import gaussian_density, random_mixture
from src.utils.exceptions import ConfigError
from src.weightspace import (
    Grid,
    build_weight,
    check_w1_weighted_bound,
    check_weight_bounds,
    gamma_profile,
    total_variation,
    wasserstein1,
    weighted_energy,
    weighted_h12_norm,
    weighted_l2_norm,
)


# --- Fixtures ---

@pytest.fixture
def grid() -> Grid:
    return Grid(-8.0, 8.0, 257)


@pytest.fixture
def weight(grid):
    return build_weight(grid)


# --- Test Cases ---

class TestGammaProfile:
    """Tests the closed-form reference weight."""

    def test_flat_core(self):
        gamma, dgamma, d2gamma = gamma_profile(np.array([-1.0, -0.3, 0.0, 0.7, 1.0]))
        assert np.allclose(gamma, 1.0)
        assert np.allclose(dgamma, 0.0)
        assert np.allclose(d2gamma, 0.0)

    def test_exponential_tails(self):
        """gamma = exp|x| beyond |x| = 2, with matching derivatives."""
        x = np.array([-5.0, 2.5, 6.0])
        gamma, dgamma, d2gamma = gamma_profile(x)
        assert np.allclose(gamma, np.exp(np.abs(x)))
        assert np.allclose(dgamma, np.sign(x) * np.exp(np.abs(x)))
        assert np.allclose(d2gamma, np.exp(np.abs(x)))

    def test_blend_is_continuous(self):
        """The blend matches both regimes at |x| = 1 and |x| = 2."""
        for edge in (1.0, 2.0):
            inside, _, _ = gamma_profile(np.array([edge - 1e-9]))
            outside, _, _ = gamma_profile(np.array([edge + 1e-9]))
            assert inside[0] == pytest.approx(outside[0], rel=1e-6)


class TestBuildWeight:
    """Tests the tabulated weight and its constants."""

    def test_bounds_hold(self, weight):
        report = check_weight_bounds(weight)
        assert report.holds
        assert report.min_gamma == pytest.approx(1.0)
        assert report.max_first_ratio <= weight.kappa * (1 + 1e-12)
        assert weight.kappa >= 1.0

    def test_kappa4_is_resolution_independent(self, grid):
        """kappa4 is computed on a refined grid, so coarse and fine grids agree closely."""
        coarse = build_weight(grid)
        fine = build_weight(grid.refine(2))
        assert np.isfinite(coarse.kappa4)
        assert coarse.kappa4 == pytest.approx(fine.kappa4, rel=1e-4)

    def test_narrow_grid_rejected(self):
        """The weight needs [-2.5, 2.5] inside the grid."""
        with pytest.raises(ConfigError):
            build_weight(Grid(-2.2, 2.2, 65))

    def test_norm_relations(self, grid, weight):
        """The H norm squared is the energy, and dominates the L2(gamma) norm."""
        rho = gaussian_density(0.0, 0.25, grid)
        assert weighted_h12_norm(rho, weight) ** 2 == pytest.approx(weighted_energy(rho, weight))
        assert weighted_l2_norm(rho, weight) <= weighted_h12_norm(rho, weight)


class TestDistances:
    """Tests W1, total variation and the weighted W1 bound."""

    def test_w1_of_shifted_gaussians(self, grid):
        """W1 between N(0, s) and N(a, s) equals |a|."""
        rho = gaussian_density(0.0, 0.25, grid)
        chi = gaussian_density(0.5, 0.25, grid)
        assert wasserstein1(rho, chi) == pytest.approx(0.5, abs=1e-3)
        assert wasserstein1(chi, rho) == pytest.approx(wasserstein1(rho, chi))

    def test_identical_densities(self, grid):
        rho = gaussian_density(0.3, 0.2, grid)
        assert wasserstein1(rho, rho) == 0.0
        assert total_variation(rho, rho) == 0.0

    def test_total_variation_is_at_most_two(self, grid):
        """Two far-apart Gaussians are almost mutually singular."""
        rho = gaussian_density(-3.0, 0.1, grid)
        chi = gaussian_density(3.0, 0.1, grid)
        assert total_variation(rho, chi) == pytest.approx(2.0, abs=1e-6)

    def test_weighted_bound_on_random_pairs(self, grid, weight):
        rng = np.random.default_rng(0)
        for _ in range(20):
            report = check_w1_weighted_bound(random_mixture(grid, rng), random_mixture(grid, rng), weight)
            assert report.holds
            assert report.tolerance == pytest.approx(4.0 * grid.h)
