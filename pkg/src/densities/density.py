import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from src.utils.exceptions import DensityError
from src.weightspace import (
    Grid,
    WeightField,
    as_grid_values,
    central_derivative,
    integrate,
    weighted_energy,
)

logger = logging.getLogger(__name__)

MASS_TOLERANCE = 1e-6
BOUNDARY_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class GridDensity:
    """
    A probability density tabulated on a grid.

    Construction only checks shape and finiteness so that invalid candidates
    (negative entries, mass at the boundary) can still be represented and
    reported by `check_d1r_membership`. Use `from_values` or the Gaussian
    constructors to obtain validated densities.

    Attributes:
        values (np.ndarray): Density values at the grid nodes.
        grid (Grid): The grid.
        mass_drift (float): Mass change recorded by the step that produced it.
    """
    values: np.ndarray
    grid: Grid
    mass_drift: float = field(default=0.0)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n,):
            raise DensityError(f"Density needs {self.grid.n} values, got shape {values.shape}.")
        if not np.all(np.isfinite(values)):
            raise DensityError("Density values must be finite.")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def from_values(cls, values, grid: Grid, normalize: bool = True,
                    validate: bool = True) -> "GridDensity":
        """
        Builds a density from node values.

        Args:
            values: Node values.
            grid (Grid): The grid.
            normalize (bool): Rescale to unit trapezoid mass.
            validate (bool): Enforce nonnegativity, unit mass and boundary hygiene.

        Returns:
            GridDensity: The density.
        """
        values = np.asarray(values, dtype=float)
        if normalize:
            mass = integrate(values, grid)
            if not mass > 0.0:
                raise DensityError(f"Cannot normalise values with mass {mass}.")
            values = values / mass
        density = cls(values, grid)
        if validate:
            problems = _basic_flags(density)
            if problems:
                raise DensityError(f"Invalid density ({', '.join(problems)}).")
        return density

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def mass(self) -> float:
        return integrate(self.values, self.grid)

    @property
    def mean(self) -> float:
        return integrate(self.x * self.values, self.grid) / self.mass

    @property
    def variance(self) -> float:
        return integrate((self.x - self.mean) ** 2 * self.values, self.grid) / self.mass

    @property
    def derivative(self) -> np.ndarray:
        return central_derivative(self.values, self.grid)

    def renormalized(self) -> "GridDensity":
        return GridDensity(self.values / self.mass, self.grid)

    def perturbed(self, direction, eps: float) -> "GridDensity":
        """
        Returns rho + eps*direction with rounding-level negatives clipped to zero.

        The result is not renormalised, so mass-neutral directions keep the mass.
        """
        direction = as_grid_values(direction, self.grid)
        return GridDensity(np.maximum(self.values + eps * direction, 0.0), self.grid)


@dataclass(frozen=True)
class MembershipReport:
    mass_error: float
    min_value: float
    weighted_energy: float
    boundary_value: float
    flags: tuple
    passed: bool


def _basic_flags(rho: GridDensity, mass_tol: float = MASS_TOLERANCE,
                 boundary_tol: float = BOUNDARY_TOLERANCE) -> list[str]:
    flags = []
    if rho.values.min() < 0.0:
        flags.append("negativity")
    if abs(rho.mass - 1.0) > mass_tol:
        flags.append("mass")
    if max(rho.values[0], rho.values[-1]) > boundary_tol:
        flags.append("boundary mass")
    return flags


def check_d1r_membership(rho: GridDensity, w: WeightField,
                         mass_tol: float = MASS_TOLERANCE,
                         boundary_tol: float = BOUNDARY_TOLERANCE) -> MembershipReport:
    """
    Checks that a grid density is a valid member of the weighted density space.

    Flags raised: "negativity", "mass", "boundary mass" and "non-finite energy".

    Args:
        rho (GridDensity): The candidate density.
        w (WeightField): Weight on the same grid.
        mass_tol (float): Allowed deviation of the trapezoid mass from 1.
        boundary_tol (float): Largest value allowed at the two outermost nodes.

    Returns:
        MembershipReport: Diagnostics and the pass/fail verdict.
    """
    flags = _basic_flags(rho, mass_tol, boundary_tol)
    energy = weighted_energy(rho, w)
    if not np.isfinite(energy):
        flags.append("non-finite energy")
    return MembershipReport(
        mass_error=abs(rho.mass - 1.0),
        min_value=float(rho.values.min()),
        weighted_energy=float(energy),
        boundary_value=float(max(rho.values[0], rho.values[-1])),
        flags=tuple(flags),
        passed=not flags,
    )


def _check_coverage(mean: float, var: float, grid: Grid):
    if var <= 0:
        raise DensityError(f"Variance must be positive, got {var}.")
    spread = 6.0 * np.sqrt(var)
    if mean - spread < grid.lower + 1.0 or mean + spread > grid.upper - 1.0:
        raise DensityError(
            f"N({mean}, {var}) needs mean +- 6 sd inside [{grid.lower + 1.0}, {grid.upper - 1.0}]."
        )


def gaussian_density(mean: float, var: float, grid: Grid) -> GridDensity:
    """
    Normal density N(mean, var) on the grid, renormalised after truncation.

    Args:
        mean (float): Mean.
        var (float): Variance, must be positive.
        grid (Grid): The grid; mean +- 6 sd must lie one unit inside it.

    Returns:
        GridDensity: The normalised density.
    """
    _check_coverage(mean, var, grid)
    values = norm.pdf(grid.nodes, loc=mean, scale=np.sqrt(var))
    return GridDensity.from_values(values, grid)


def gaussian_mixture(means, variances, weights, grid: Grid) -> GridDensity:
    """Finite Gaussian mixture, each component subject to the same coverage rule."""
    means = np.atleast_1d(np.asarray(means, dtype=float))
    variances = np.atleast_1d(np.asarray(variances, dtype=float))
    weights = np.atleast_1d(np.asarray(weights, dtype=float))
    if not (means.shape == variances.shape == weights.shape):
        raise DensityError("Mixture means, variances and weights must have equal lengths.")
    if np.any(weights < 0) or weights.sum() <= 0:
        raise DensityError("Mixture weights must be nonnegative with positive sum.")
    values = np.zeros(grid.n)
    for m, v, p in zip(means, variances, weights / weights.sum()):
        _check_coverage(m, v, grid)
        values += p * norm.pdf(grid.nodes, loc=m, scale=np.sqrt(v))
    return GridDensity.from_values(values, grid)


def random_mixture(grid: Grid, rng: np.random.Generator, max_components: int = 3,
                   var_range: tuple = (0.05, 0.5)) -> GridDensity:
    """
    Draws a random Gaussian mixture that respects the grid coverage rule.

    Args:
        grid (Grid): The grid.
        rng (np.random.Generator): Random source.
        max_components (int): Upper bound on the number of components.
        var_range (tuple): Range of component variances.

    Returns:
        GridDensity: The mixture.
    """
    reach = min(-grid.lower, grid.upper) - 1.0 - 6.0 * np.sqrt(var_range[1])
    if reach <= 0:
        raise DensityError(f"Grid {grid} is too small for variances up to {var_range[1]}.")
    k = int(rng.integers(1, max_components + 1))
    means = rng.uniform(-reach, reach, size=k)
    variances = rng.uniform(*var_range, size=k)
    weights = rng.uniform(0.2, 1.0, size=k)
    return gaussian_mixture(means, variances, weights, grid)


def density_dictionary(grid: Grid, means, variances) -> list[GridDensity]:
    """All Gaussians N(m, v) for m in `means` and v in `variances`, means varying fastest."""
    return [gaussian_density(m, v, grid) for v in variances for m in means]
