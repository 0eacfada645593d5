import logging
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from src.utils.exceptions import NumericalError
from src.utils.numerics import is_nonincreasing
from src.weightspace import Grid, WeightField, as_grid_values, central_derivative, integrate, weighted_h12_norm
from .mortensen import Functional, MortensenDerivative, pairing

logger = logging.getLogger(__name__)

EPS_LEVELS = (1e-2, 1e-3, 1e-4)
ROUNDING_FLOOR = 1e-10


@dataclass(frozen=True)
class DirectionCheck:
    eps: tuple
    ratios: tuple
    monotone: bool
    passed: bool


@dataclass(frozen=True)
class DerivativeCheckReport:
    """Per-direction remainder ratios r(eps) and the overall verdict."""
    family: str
    directions: tuple
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(d.passed for d in self.directions)

    @property
    def worst_final_ratio(self) -> float:
        return max(d.ratios[-1] for d in self.directions)


@dataclass(frozen=True)
class EnergyGradientReport:
    lhs: float
    rhs: float
    holds: bool


def verify_derivative(S: Functional, d: MortensenDerivative, rho, directions, w: WeightField,
                      eps_levels=EPS_LEVELS, tolerance: float = 1e-3,
                      floor: float = ROUNDING_FLOOR) -> DerivativeCheckReport:
    """
    Finite-difference check of a derivative over an eps sweep.

    For each direction phi and each eps the remainder ratio
    r(eps) = |S(rho + eps*phi) - S(rho) - eps*A(phi)| / (eps*||phi||_{H^1_2(gamma)})
    is computed. A direction passes when r decays monotonically (ratios below
    `floor` count as converged) and the ratio at the smallest eps is at most
    `tolerance`.

    Args:
        S (Functional): The functional.
        d (MortensenDerivative): Candidate derivative at rho.
        rho: Base point (density or node vector).
        directions: Iterable of direction vectors.
        w (WeightField): Weight defining the norm.
        eps_levels: Decreasing step sizes.
        tolerance (float): Bound on the final ratio.
        floor (float): Rounding level.

    Returns:
        DerivativeCheckReport: Ratios per direction and verdicts.
    """
    base = as_grid_values(rho, w.grid)
    s0 = S(base)
    if not np.isfinite(s0):
        raise NumericalError(f"Functional '{S.family}' is not finite at the base point.")

    checks = []
    for phi in directions:
        phi = as_grid_values(phi, w.grid)
        size = weighted_h12_norm(phi, w)
        if size == 0.0:
            raise ValueError("Directions must have a nonzero weighted Sobolev norm.")
        slope = pairing(d, phi)
        ratios = []
        for eps in eps_levels:
            value = S(base + eps * phi)
            if not np.isfinite(value):
                raise NumericalError(f"Functional '{S.family}' is not finite at eps={eps}.")
            ratios.append(abs(value - s0 - eps * slope) / (eps * size))
        monotone = is_nonincreasing(ratios, floor=floor)
        checks.append(DirectionCheck(
            eps=tuple(eps_levels),
            ratios=tuple(ratios),
            monotone=monotone,
            passed=monotone and ratios[-1] <= tolerance,
        ))
    report = DerivativeCheckReport(family=S.family, directions=tuple(checks), tolerance=tolerance)
    logger.debug(f"Derivative check for '{S.family}': worst r={report.worst_final_ratio:.3e}")
    return report


def difference_of_gaussians(grid: Grid, center: float, shift: float, width: float) -> np.ndarray:
    """Mass-neutral bump N(center - shift, width^2) - N(center + shift, width^2)."""
    x = grid.nodes
    return norm.pdf(x, center - shift, width) - norm.pdf(x, center + shift, width)


def mass_neutral_directions(grid: Grid, w: WeightField, count: int, rng: np.random.Generator,
                            center: float = 0.0, scale: float = 1.0) -> list[np.ndarray]:
    """
    Random difference-of-Gaussians directions with unit weighted Sobolev norm.

    Args:
        grid (Grid): The grid.
        w (WeightField): Weight defining the normalisation.
        count (int): Number of directions.
        rng (np.random.Generator): Random source.
        center (float): Location around which bumps are placed.
        scale (float): Length scale of bump placement, shift and width.

    Returns:
        list[np.ndarray]: The directions.
    """
    directions = []
    for _ in range(count):
        phi = difference_of_gaussians(
            grid,
            center=center + rng.uniform(-scale, scale),
            shift=rng.uniform(0.2, 0.6) * scale,
            width=rng.uniform(0.3, 0.6) * scale,
        )
        directions.append(phi / weighted_h12_norm(phi, w))
    return directions


def check_energy_gradient_bound(rho, rho_hat, w: WeightField) -> EnergyGradientReport:
    """
    Integrability estimate for the weighted-energy derivative F = 2(rho - rho_hat) gamma.

    Verifies  integral |D F|^2 / gamma  <=  8 integral |D(rho - rho_hat)|^2 gamma
    + 8 kappa^2 integral (rho - rho_hat)^2 gamma, with D F taken by the product
    rule against the analytic derivative of gamma.
    """
    diff = as_grid_values(rho, w.grid) - as_grid_values(rho_hat, w.grid)
    ddiff = central_derivative(diff, w.grid)
    dF = 2.0 * (ddiff * w.gamma + diff * w.dgamma)
    lhs = integrate(dF ** 2 / w.gamma, w.grid)
    rhs = 8.0 * integrate(ddiff ** 2 * w.gamma, w.grid) + 8.0 * w.kappa ** 2 * integrate(diff ** 2 * w.gamma, w.grid)
    return EnergyGradientReport(lhs=lhs, rhs=rhs, holds=lhs <= rhs * (1.0 + 1e-12))
