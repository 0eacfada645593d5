import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from src.utils.exceptions import ConfigError
from .grid import Grid, as_grid_values, central_derivative, integrate

logger = logging.getLogger(__name__)

DEFAULT_KAPPA4_REFINEMENT = 16


@dataclass(frozen=True, eq=False)
class WeightField:
    """
    The reference weight gamma tabulated on a grid.

    gamma equals 1 on |x| <= 1 and exp(|x|) on |x| > 2, with a C^2 blend in
    between. `kappa` bounds |gamma'|/gamma and |gamma''|/gamma on the grid and
    `kappa4` is the integral of |x|/gamma.

    Attributes:
        grid (Grid): The grid the weight is tabulated on.
        gamma (np.ndarray): Weight values, all >= 1.
        dgamma (np.ndarray): First derivative of the weight.
        d2gamma (np.ndarray): Second derivative of the weight.
        kappa (float): Derivative-ratio constant (>= 1).
        kappa4 (float): Integral of |x|/gamma(x).
    """
    grid: Grid
    gamma: np.ndarray
    dgamma: np.ndarray
    d2gamma: np.ndarray
    kappa: float
    kappa4: float


@dataclass(frozen=True)
class WeightBoundsReport:
    min_gamma: float
    max_first_ratio: float
    max_second_ratio: float
    kappa: float
    holds: bool


def _smoothstep(u: np.ndarray):
    """Quintic smoothstep S with S(0)=0, S(1)=1 and vanishing first and second derivatives at both ends."""
    s = u ** 3 * (10.0 - 15.0 * u + 6.0 * u ** 2)
    ds = 30.0 * u ** 2 * (1.0 - u) ** 2
    d2s = 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u)
    return s, ds, d2s


def _exponent_profile(r: np.ndarray):
    """
    Exponent m(r) of gamma = exp(m(|x|)) and its first two derivatives.

    m vanishes on r <= 1, equals r on r >= 2 and is r*S(r-1) in between.
    """
    m = np.zeros_like(r)
    dm = np.zeros_like(r)
    d2m = np.zeros_like(r)

    outer = r >= 2.0
    m[outer] = r[outer]
    dm[outer] = 1.0

    blend = (r > 1.0) & (r < 2.0)
    rb = r[blend]
    s, ds, d2s = _smoothstep(rb - 1.0)
    m[blend] = rb * s
    dm[blend] = s + rb * ds
    d2m[blend] = 2.0 * ds + rb * d2s
    return m, dm, d2m


def gamma_profile(x: np.ndarray):
    """
    Evaluates gamma, gamma' and gamma'' at arbitrary points.

    Args:
        x (np.ndarray): Evaluation points.

    Returns:
        tuple: (gamma, dgamma, d2gamma) arrays shaped like `x`.
    """
    x = np.asarray(x, dtype=float)
    r = np.abs(x)
    m, dm, d2m = _exponent_profile(r)
    gamma = np.exp(m)
    dgamma = np.sign(x) * dm * gamma
    d2gamma = (d2m + dm ** 2) * gamma
    return gamma, dgamma, d2gamma


@lru_cache(maxsize=32)
def build_weight(grid: Grid, kappa4_refinement: int = DEFAULT_KAPPA4_REFINEMENT) -> WeightField:
    """
    Tabulates the reference weight on a grid.

    The function performs the following steps:
    1. Checks that the grid covers [-2.5, 2.5].
    2. Evaluates gamma and its derivatives in closed form.
    3. Computes kappa as the largest derivative ratio on the grid (at least 1).
    4. Computes kappa4 by trapezoid quadrature of |x|/gamma on a refined copy
       of the grid, so it does not depend on the working resolution.

    Args:
        grid (Grid): The working grid.
        kappa4_refinement (int): Refinement factor used for the kappa4 quadrature.

    Returns:
        WeightField: The tabulated weight and its constants.
    """
    if not grid.contains(-2.5, 2.5):
        raise ConfigError(f"Weight construction needs a grid containing [-2.5, 2.5], got {grid}.")

    gamma, dgamma, d2gamma = gamma_profile(grid.nodes)
    ratios = np.maximum(np.abs(dgamma), np.abs(d2gamma)) / gamma
    kappa = float(max(1.0, ratios.max()))

    fine = grid.refine(kappa4_refinement)
    fine_gamma, _, _ = gamma_profile(fine.nodes)
    kappa4 = integrate(np.abs(fine.nodes) / fine_gamma, fine)

    for arr in (gamma, dgamma, d2gamma):
        arr.flags.writeable = False

    logger.debug(f"Built weight on {grid}: kappa={kappa:.6f}, kappa4={kappa4:.6f}")
    return WeightField(grid=grid, gamma=gamma, dgamma=dgamma, d2gamma=d2gamma,
                       kappa=kappa, kappa4=kappa4)


def weighted_l2_inner(u, v, w: WeightField) -> float:
    """Discrete L2(gamma) inner product."""
    u = as_grid_values(u, w.grid)
    v = as_grid_values(v, w.grid)
    return integrate(u * v * w.gamma, w.grid)


def weighted_l2_norm(rho, w: WeightField) -> float:
    """Discrete L2(gamma) norm of a node vector."""
    values = as_grid_values(rho, w.grid)
    return float(np.sqrt(integrate(values ** 2 * w.gamma, w.grid)))


def weighted_energy(rho, w: WeightField) -> float:
    """Squared discrete H^1_2(gamma) norm: the integral of (rho^2 + (D rho)^2) gamma."""
    values = as_grid_values(rho, w.grid)
    drho = central_derivative(values, w.grid)
    return integrate((values ** 2 + drho ** 2) * w.gamma, w.grid)


def weighted_h12_norm(rho, w: WeightField) -> float:
    """Discrete H^1_2(gamma) norm of a node vector."""
    return float(np.sqrt(weighted_energy(rho, w)))


def check_weight_bounds(w: WeightField, rtol: float = 1e-12) -> WeightBoundsReport:
    """
    Verifies gamma >= 1, |gamma'| <= kappa*gamma and |gamma''| <= kappa*gamma nodewise.

    Args:
        w (WeightField): The weight to check.
        rtol (float): Relative slack for rounding.

    Returns:
        WeightBoundsReport: Extreme ratios and the overall verdict.
    """
    first = np.abs(w.dgamma) / w.gamma
    second = np.abs(w.d2gamma) / w.gamma
    min_gamma = float(w.gamma.min())
    holds = (
        min_gamma >= 1.0
        and w.kappa >= 1.0
        and bool(np.all(first <= w.kappa * (1.0 + rtol)))
        and bool(np.all(second <= w.kappa * (1.0 + rtol)))
    )
    return WeightBoundsReport(
        min_gamma=min_gamma,
        max_first_ratio=float(first.max()),
        max_second_ratio=float(second.max()),
        kappa=w.kappa,
        holds=holds,
    )
