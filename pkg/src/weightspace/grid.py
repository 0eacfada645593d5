from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import trapezoid

from src.utils.exceptions import ConfigError, GridMismatchError

MIN_NODES = 16


@dataclass(frozen=True)
class Grid:
    """
    A truncated uniform 1-D grid.

    Nodes are x_i = lower + i*h for i = 0..n-1. The grid must reach past
    |x| = 2 on both sides so that the flat and exponential regimes of the
    weight are both represented.

    Attributes:
        lower (float): Left endpoint.
        upper (float): Right endpoint.
        n (int): Number of nodes.
    """
    lower: float
    upper: float
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < MIN_NODES:
            raise ConfigError(f"Grid needs at least {MIN_NODES} nodes, got n={self.n}.")
        if not (self.lower < -2.0 and self.upper > 2.0):
            raise ConfigError(
                f"Grid [{self.lower}, {self.upper}] must satisfy lower < -2 and upper > 2."
            )

    @property
    def h(self) -> float:
        return (self.upper - self.lower) / (self.n - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        x = self.lower + np.arange(self.n) * self.h
        x.flags.writeable = False
        return x

    @cached_property
    def quadrature_weights(self) -> np.ndarray:
        weights = np.full(self.n, self.h)
        weights[0] = weights[-1] = 0.5 * self.h
        weights.flags.writeable = False
        return weights

    def refine(self, factor: int) -> "Grid":
        """Returns the grid with `factor` times as many cells on the same interval."""
        if factor < 1:
            raise ValueError(f"Refinement factor must be >= 1, got {factor}.")
        return Grid(self.lower, self.upper, factor * (self.n - 1) + 1)

    def contains(self, a: float, b: float) -> bool:
        return self.lower <= a and b <= self.upper

    def cell_index(self, x: np.ndarray) -> np.ndarray:
        """Index of the node whose cell [x_i - h/2, x_i + h/2) contains each point."""
        idx = np.floor((np.asarray(x) - self.lower) / self.h + 0.5).astype(int)
        return np.clip(idx, 0, self.n - 1)


def as_grid_values(values, grid: Grid) -> np.ndarray:
    """
    Extracts a node vector and checks that it lives on `grid`.

    Accepts plain arrays or any object exposing `.values` and `.grid`
    (densities, derivatives).
    """
    other_grid = getattr(values, "grid", None)
    if other_grid is not None and other_grid != grid:
        raise GridMismatchError(f"Operand lives on {other_grid}, expected {grid}.")
    arr = np.asarray(getattr(values, "values", values), dtype=float)
    if arr.shape != (grid.n,):
        raise GridMismatchError(f"Expected a vector of length {grid.n}, got shape {arr.shape}.")
    return arr


def require_same_grid(first, second) -> Grid:
    if first.grid != second.grid:
        raise GridMismatchError(f"Grid mismatch: {first.grid} vs {second.grid}.")
    return first.grid


def integrate(values: np.ndarray, grid: Grid) -> float:
    """Trapezoid rule on the grid nodes."""
    return float(trapezoid(values, dx=grid.h))


def central_derivative(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Second-order central differences, one-sided second order at both ends."""
    return np.gradient(np.asarray(values, dtype=float), grid.h, edge_order=2)
