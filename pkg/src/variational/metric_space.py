import logging
from typing import Callable, Sequence

import numpy as np

from src.utils.exceptions import ConfigError
from src.weightspace import WeightField, weighted_h12_norm

logger = logging.getLogger(__name__)

METRIC_TOLERANCE = 1e-12
EXHAUSTIVE_LIMIT = 200


def _check_triangle(distances_from: Callable[[int], np.ndarray], n: int, samples: int, seed: int,
                    full: np.ndarray | None = None):
    if full is not None and n <= EXHAUSTIVE_LIMIT:
        for k in range(n):
            if np.any(full > full[:, k, None] + full[None, k, :] + METRIC_TOLERANCE):
                raise ConfigError(f"Triangle inequality fails through point {k}.")
        return
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        i, j, k = rng.integers(n, size=3)
        di, dk = distances_from(int(i)), distances_from(int(k))
        if di[j] > di[k] + dk[j] + METRIC_TOLERANCE:
            raise ConfigError(f"Triangle inequality fails for points ({i}, {k}, {j}).")


class FiniteMetricSpace:
    """
    A finite set of labelled points with a validated distance matrix.

    The metric axioms are checked at construction to 1e-12: symmetry, zero
    diagonal, nonnegativity and the triangle inequality (exhaustive up to
    200 points, on seeded random triples above).
    """

    def __init__(self, points: Sequence, dist, samples: int = 20000, seed: int = 0):
        dist = np.array(dist, dtype=float)
        n = len(points)
        if n == 0:
            raise ConfigError("A metric space needs at least one point.")
        if dist.shape != (n, n):
            raise ConfigError(f"Distance matrix must be {n}x{n}, got {dist.shape}.")
        if not np.all(np.isfinite(dist)) or dist.min() < -METRIC_TOLERANCE:
            raise ConfigError("Distances must be finite and nonnegative.")
        if np.abs(dist - dist.T).max() > METRIC_TOLERANCE:
            raise ConfigError("Distance matrix is not symmetric.")
        if np.abs(np.diag(dist)).max() > METRIC_TOLERANCE:
            raise ConfigError("Distance matrix must have a zero diagonal.")
        _check_triangle(lambda i: dist[i], n, samples, seed, full=dist)
        dist.flags.writeable = False
        self.points = tuple(points)
        self.dist = dist

    @classmethod
    def from_points(cls, points: Sequence, metric: Callable) -> "FiniteMetricSpace":
        n = len(points)
        dist = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                dist[i, j] = dist[j, i] = metric(points[i], points[j])
        return cls(points, dist)

    def __len__(self) -> int:
        return len(self.points)

    def distances_from(self, i: int) -> np.ndarray:
        return self.dist[i]

    def distance(self, i: int, j: int) -> float:
        return float(self.dist[i, j])


class ProductMetricSpace:
    """
    The doubling space time_grid^2 x dictionary^2 with a lazily evaluated metric.

    d((t, s, rho, chi), (t', s', rho', chi'))
        = sqrt(|t - t'|^2 + |s - s'|^2 + ||rho - rho'|| + ||chi - chi'||),
    with unsquared weighted Sobolev norms. Point k is the tuple
    (time index, time index, dictionary index, dictionary index) in
    row-major order.
    """

    def __init__(self, times, dictionary_gaps: np.ndarray, samples: int = 2000, seed: int = 0):
        self.times = np.asarray(times, dtype=float)
        self.gaps = np.asarray(dictionary_gaps, dtype=float)
        self.shape = (len(self.times), len(self.times), len(self.gaps), len(self.gaps))
        self.points = tuple(np.ndindex(self.shape))
        _check_triangle(self.distances_from, len(self.points), samples, seed)

    def __len__(self) -> int:
        return len(self.points)

    def distances_from(self, k: int) -> np.ndarray:
        i, j, a, b = self.points[k]
        squared = (
            (self.times[:, None, None, None] - self.times[i]) ** 2
            + (self.times[None, :, None, None] - self.times[j]) ** 2
            + self.gaps[a][None, None, :, None]
            + self.gaps[b][None, None, None, :]
        )
        return np.sqrt(squared).ravel()

    def distance(self, k: int, m: int) -> float:
        return float(self.distances_from(k)[m])


def dictionary_gaps(dictionary, w: WeightField) -> np.ndarray:
    """Matrix of weighted Sobolev norms ||rho_a - rho_b|| over a density dictionary."""
    n = len(dictionary)
    gaps = np.zeros((n, n))
    for a in range(n):
        for b in range(a + 1, n):
            gaps[a, b] = gaps[b, a] = weighted_h12_norm(dictionary[a].values - dictionary[b].values, w)
    return gaps


def product_space(time_grid, dictionary, w: WeightField) -> ProductMetricSpace:
    """Builds the doubling product space over a time grid and a density dictionary."""
    return ProductMetricSpace(time_grid, dictionary_gaps(dictionary, w))
