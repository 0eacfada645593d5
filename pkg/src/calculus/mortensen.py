from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import pandas as pd

from src.utils.exceptions import GridMismatchError, NumericalError
from src.weightspace import (
    Grid,
    WeightField,
    as_grid_values,
    central_derivative,
    integrate,
    weighted_energy,
)


@dataclass(frozen=True, eq=False)
class MortensenDerivative:
    """
    Representation (F, G) of a functional derivative on the grid.

    The derivative acts on a direction phi through
    A(phi) = integral of F*phi + G*D(phi).

    Attributes:
        F (np.ndarray): Component paired with phi.
        G (np.ndarray): Component paired with the derivative of phi.
        grid (Grid): The grid.
    """
    F: np.ndarray
    G: np.ndarray
    grid: Grid

    def __post_init__(self):
        F = np.array(self.F, dtype=float)
        G = np.array(self.G, dtype=float)
        if F.shape != (self.grid.n,) or G.shape != (self.grid.n,):
            raise GridMismatchError(
                f"Derivative components must have length {self.grid.n}, got {F.shape} and {G.shape}."
            )
        if not (np.all(np.isfinite(F)) and np.all(np.isfinite(G))):
            raise NumericalError("Derivative components must be finite.")
        F.flags.writeable = False
        G.flags.writeable = False
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "G", G)

    def scaled(self, factor: float) -> "MortensenDerivative":
        return MortensenDerivative(factor * self.F, factor * self.G, self.grid)

    def __add__(self, other: "MortensenDerivative") -> "MortensenDerivative":
        if other.grid != self.grid:
            raise GridMismatchError(f"Grid mismatch: {self.grid} vs {other.grid}.")
        return MortensenDerivative(self.F + other.F, self.G + other.G, self.grid)


@dataclass(frozen=True, eq=False)
class Functional:
    """
    A real functional of node vectors, tagged with its family.

    Attributes:
        rule (Callable[[np.ndarray], float]): Evaluation rule.
        family (str): One of "linear", "integrand", "weighted-energy" or "custom".
        grid (Grid): The grid the functional is defined on.
    """
    rule: Callable[[np.ndarray], float]
    family: str
    grid: Grid

    def __call__(self, rho) -> float:
        return float(self.rule(as_grid_values(rho, self.grid)))


@dataclass(frozen=True)
class Integrand:
    """
    An integrand H(rho, rho') with its two partial derivatives.

    All three callables take node arrays (rho, drho) and return node arrays.
    """
    name: str
    value: Callable[[np.ndarray, np.ndarray], np.ndarray]
    d_rho: Callable[[np.ndarray, np.ndarray], np.ndarray]
    d_drho: Callable[[np.ndarray, np.ndarray], np.ndarray]


SQUARE = Integrand("rho^2", lambda r, dr: r ** 2, lambda r, dr: 2.0 * r, lambda r, dr: np.zeros_like(r))
GRADIENT_SQUARE = Integrand("drho^2", lambda r, dr: dr ** 2, lambda r, dr: np.zeros_like(r), lambda r, dr: 2.0 * dr)
PRODUCT = Integrand("rho*drho", lambda r, dr: r * dr, lambda r, dr: dr, lambda r, dr: r)
CUBE = Integrand("rho^3", lambda r, dr: r ** 3, lambda r, dr: 3.0 * r ** 2, lambda r, dr: np.zeros_like(r))

BUILTIN_INTEGRANDS = {h.name: h for h in (SQUARE, GRADIENT_SQUARE, PRODUCT, CUBE)}


def pairing(d: MortensenDerivative, phi) -> float:
    """Action of a derivative on a direction: integral of F*phi + G*D(phi)."""
    phi = as_grid_values(phi, d.grid)
    return integrate(d.F * phi + d.G * central_derivative(phi, d.grid), d.grid)


def linear_functional(k, grid: Grid) -> Functional:
    """S(rho) = integral of k*rho."""
    k = as_grid_values(k, grid).copy()
    return Functional(lambda rho: integrate(k * rho, grid), "linear", grid)


def integrand_functional(H: Integrand, grid: Grid) -> Functional:
    """S(rho) = integral of H(rho, rho')."""
    def rule(rho):
        return integrate(H.value(rho, central_derivative(rho, grid)), grid)
    return Functional(rule, "integrand", grid)


def weighted_energy_functional(rho_hat, w: WeightField) -> Functional:
    """S(rho) = squared weighted Sobolev norm of rho - rho_hat."""
    anchor = as_grid_values(rho_hat, w.grid).copy()
    return Functional(lambda rho: weighted_energy(rho - anchor, w), "weighted-energy", w.grid)


def derivative_linear(k, grid: Grid) -> MortensenDerivative:
    """Derivative (k, 0) of the linear functional with kernel k."""
    k = as_grid_values(k, grid)
    return MortensenDerivative(k, np.zeros(grid.n), grid)


def derivative_integrand(H: Integrand, rho) -> MortensenDerivative:
    """
    Derivative of the integrand functional at rho, evaluated nodewise.

    Args:
        H (Integrand): Integrand with analytic partials.
        rho (GridDensity): The base point.

    Returns:
        MortensenDerivative: (dH/drho, dH/drho') at (rho, rho').
    """
    values = rho.values
    drho = central_derivative(values, rho.grid)
    F = np.asarray(H.d_rho(values, drho), dtype=float)
    G = np.asarray(H.d_drho(values, drho), dtype=float)
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(G))):
        raise NumericalError(f"Partials of integrand '{H.name}' are not finite.")
    return MortensenDerivative(F, G, rho.grid)


def derivative_weighted_energy(rho, rho_hat, w: WeightField) -> MortensenDerivative:
    """Derivative (2(rho - rho_hat) gamma, 2 D(rho - rho_hat) gamma) of the weighted energy."""
    diff = as_grid_values(rho, w.grid) - as_grid_values(rho_hat, w.grid)
    return MortensenDerivative(
        2.0 * diff * w.gamma,
        2.0 * central_derivative(diff, w.grid) * w.gamma,
        w.grid,
    )


def save_derivative_csv(d: MortensenDerivative, file_path: str | Path):
    """Writes a derivative as three columns (x, F, G)."""
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({"x": d.grid.nodes, "F": d.F, "G": d.G}).to_csv(file_path, index=False)


def load_derivative_csv(file_path: str | Path) -> MortensenDerivative:
    df = pd.read_csv(file_path)
    x = df["x"].to_numpy(dtype=float)
    grid = Grid(float(x[0]), float(x[-1]), len(x))
    return MortensenDerivative(df["F"].to_numpy(dtype=float), df["G"].to_numpy(dtype=float), grid)
