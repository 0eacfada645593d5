from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .grid import integrate, require_same_grid
from .weight import WeightField, weighted_l2_norm


@dataclass(frozen=True)
class W1BoundReport:
    w1: float
    bound: float
    tolerance: float
    holds: bool


def cumulative_distribution(rho) -> np.ndarray:
    """Cumulative trapezoid sums of a grid density, starting at 0 on the left node."""
    return cumulative_trapezoid(rho.values, dx=rho.grid.h, initial=0.0)


def wasserstein1(rho, chi) -> float:
    """
    1-Wasserstein distance between two densities on the same grid.

    Uses the one-dimensional identity W1 = integral of |F_rho - F_chi|,
    with both distribution functions built by cumulative trapezoid sums.
    """
    grid = require_same_grid(rho, chi)
    gap = np.abs(cumulative_distribution(rho) - cumulative_distribution(chi))
    return integrate(gap, grid)


def total_variation(rho, chi) -> float:
    """Integral of |rho - chi|, the total variation distance of the two laws."""
    grid = require_same_grid(rho, chi)
    return integrate(np.abs(rho.values - chi.values), grid)


def check_w1_weighted_bound(rho, chi, w: WeightField, tolerance: float | None = None) -> W1BoundReport:
    """
    Compares W1(rho, chi) with kappa4 * ||rho - chi||_{L2(gamma)}.

    Args:
        rho, chi: Densities on the weight's grid.
        w (WeightField): Weight providing kappa4.
        tolerance (float | None): Additive slack; defaults to 4h.

    Returns:
        W1BoundReport: Both sides of the inequality and whether it holds.
    """
    grid = require_same_grid(rho, chi)
    tol = 4.0 * grid.h if tolerance is None else tolerance
    w1 = wasserstein1(rho, chi)
    bound = w.kappa4 * weighted_l2_norm(rho.values - chi.values, w)
    return W1BoundReport(w1=w1, bound=bound, tolerance=tol, holds=w1 <= bound + tol)
