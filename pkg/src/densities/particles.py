from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.signal import fftconvolve
from scipy.stats import norm

from src.utils.exceptions import DensityError
from src.weightspace import Grid
from .density import GridDensity

MIN_PARTICLES = 100


@dataclass(frozen=True, eq=False)
class ParticleEnsemble:
    """
    An equally weighted particle cloud (the empirical law of N particles).

    Attributes:
        positions (np.ndarray): Array of shape (N, d).
        seed (int): Seed the ensemble was generated from.
    """
    positions: np.ndarray
    seed: int

    def __post_init__(self):
        positions = np.array(self.positions, dtype=float)
        if positions.ndim == 1:
            positions = positions[:, None]
        if positions.ndim != 2:
            raise DensityError(f"Positions must be an (N, d) array, got shape {positions.shape}.")
        if positions.shape[0] < MIN_PARTICLES:
            raise DensityError(f"An ensemble needs at least {MIN_PARTICLES} particles, got {positions.shape[0]}.")
        if not np.all(np.isfinite(positions)):
            raise DensityError("Particle positions must be finite.")
        positions.flags.writeable = False
        object.__setattr__(self, "positions", positions)

    @property
    def n_particles(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.n_particles, 1.0 / self.n_particles)

    @classmethod
    def from_density(cls, rho: GridDensity, n_particles: int, seed: int) -> "ParticleEnsemble":
        """Samples `n_particles` iid points from a grid density by CDF inversion."""
        rng = np.random.default_rng(seed)
        return cls(sample_density(rho, n_particles, rng), seed)


def sample_density(rho: GridDensity, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF sampling with a piecewise linear distribution function."""
    cdf = cumulative_trapezoid(rho.values, dx=rho.grid.h, initial=0.0)
    cdf /= cdf[-1]
    # Flat stretches of the CDF would make the inverse ambiguous.
    keep = np.concatenate(([True], np.diff(cdf) > 0))
    return np.interp(rng.random(n_samples), cdf[keep], rho.grid.nodes[keep])


def silverman_bandwidth(samples: np.ndarray) -> float:
    """Rule-of-thumb bandwidth 1.06 * sd * N^(-1/5)."""
    samples = np.asarray(samples, dtype=float).ravel()
    return float(1.06 * np.std(samples, ddof=1) * samples.size ** (-0.2))


def _linear_binning(x: np.ndarray, grid: Grid) -> np.ndarray:
    """Splits each unit point mass between its two neighbouring nodes."""
    position = np.clip((x - grid.lower) / grid.h, 0.0, grid.n - 1.0)
    left = np.minimum(np.floor(position).astype(int), grid.n - 2)
    frac = position - left
    counts = np.bincount(left, weights=1.0 - frac, minlength=grid.n)
    counts += np.bincount(left + 1, weights=frac, minlength=grid.n)
    return counts


def kde(ensemble: ParticleEnsemble, bandwidth: float, grid: Grid) -> GridDensity:
    """
    Gaussian kernel density estimate of a one-dimensional ensemble.

    Particles are linearly binned onto the grid and the counts are convolved
    with the sampled Gaussian kernel by FFT; the result is clipped at zero and
    renormalised to unit mass on the grid. Particles outside the grid are
    binned into the end nodes.

    Args:
        ensemble (ParticleEnsemble): A d = 1 ensemble.
        bandwidth (float): Kernel standard deviation.
        grid (Grid): Target grid.

    Returns:
        GridDensity: The estimate.
    """
    if bandwidth <= 0:
        raise DensityError(f"Bandwidth must be positive, got {bandwidth}.")
    if ensemble.dim != 1:
        raise DensityError(f"kde needs a one-dimensional ensemble, got d={ensemble.dim}.")

    counts = _linear_binning(ensemble.positions[:, 0], grid)
    half_width = int(min(grid.n - 1, np.ceil(8.0 * bandwidth / grid.h)))
    offsets = np.arange(-half_width, half_width + 1) * grid.h
    kernel = norm.pdf(offsets, scale=bandwidth)
    smoothed = np.maximum(fftconvolve(counts, kernel, mode="same"), 0.0)
    return GridDensity.from_values(smoothed, grid, normalize=True, validate=False)
