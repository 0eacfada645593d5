"""
Built-in problem fixtures, selected by name from the `problem` config section.
"""
import logging
from types import SimpleNamespace

import numpy as np

from src.utils.exceptions import ConfigError
from src.weightspace import Grid, build_weight, integrate
from .problem import ProblemBounds, ProblemSpec

logger = logging.getLogger(__name__)


def _zero(t, x, rho, u):
    return 0.0


def _zero_terminal(x, rho):
    return 0.0


def _reach(grid: Grid) -> float:
    return max(abs(grid.lower), abs(grid.upper))


def zero_drift(grid: Grid, sigma: float = 1.0, T: float = 0.5, **_) -> ProblemSpec:
    """Pure diffusion with no cost; the heat-kernel reference problem."""
    return ProblemSpec("zero-drift", _zero, _zero, _zero_terminal, sigma, [0.0], T,
                       ProblemBounds(K1=0.0, K2=0.0, K3=0.0), uses_density=False)


def ornstein_uhlenbeck(grid: Grid, sigma: float = 1.0, T: float = 0.5, **_) -> ProblemSpec:
    """Control-free mean reversion b = -x."""
    return ProblemSpec("ornstein-uhlenbeck", lambda t, x, rho, u: -np.asarray(x, dtype=float),
                       _zero, _zero_terminal, sigma, [0.0], T,
                       ProblemBounds(K1=1.0, K2=_reach(grid), K3=0.0), uses_density=False)


def clipped_ou(grid: Grid, sigma: float = 1.0, T: float = 0.5, cost_rate: float = 1.0,
               clip: float = 3.0, **_) -> ProblemSpec:
    """Mean reversion clipped at +-clip plus a control push, with a quadratic cost."""
    atoms = np.array([-0.5, 0.0, 0.5])

    def b(t, x, rho, u):
        return -np.clip(x, -clip, clip) + u

    def f(t, x, rho, u):
        return 0.5 * cost_rate * (np.clip(x, -clip, clip) ** 2 + u ** 2)

    def g(x, rho):
        return 0.5 * np.clip(x, -clip, clip) ** 2

    bounds = ProblemBounds(
        K1=max(1.0, cost_rate * clip),
        K2=clip + np.abs(atoms).max(),
        K3=0.5 * cost_rate * (clip ** 2 + np.max(atoms ** 2)) + 0.5 * clip ** 2,
    )
    return ProblemSpec("clipped-ou", b, f, g, sigma, atoms, T, bounds, uses_density=False)


def signed_drift(grid: Grid, sigma: float = 1.0, T: float = 0.5, **_) -> ProblemSpec:
    """
    Drift equal to the control on atoms {-1, +1}, terminal cost the mean.

    The terminal mean under constant u is mean(rho0) + u (T - s), so the
    optimal policy is u = -1 throughout.
    """
    return ProblemSpec("signed-drift", lambda t, x, rho, u: u, _zero,
                       lambda x, rho: np.asarray(x, dtype=float), sigma, [-1.0, 1.0], T,
                       ProblemBounds(K1=1.0, K2=1.0, K3=_reach(grid)), uses_density=False)


def control_irrelevant(grid: Grid, sigma: float = 1.0, T: float = 0.5, cost_rate: float = 1.0,
                       **_) -> ProblemSpec:
    """Constant running cost and no drift; every policy has cost c (T - s)."""
    return ProblemSpec("control-irrelevant", _zero, lambda t, x, rho, u: cost_rate,
                       _zero_terminal, sigma, [-1.0, 1.0], T,
                       ProblemBounds(K1=0.0, K2=0.0, K3=abs(cost_rate)), uses_density=False)


def quadratic_running_cost(grid: Grid, sigma: float = 1.0, T: float = 0.5, **_) -> ProblemSpec:
    """Running cost u^2 on atoms {0, 1} with no drift."""
    return ProblemSpec("quadratic-running-cost", _zero, lambda t, x, rho, u: u ** 2,
                       _zero_terminal, sigma, [0.0, 1.0], T,
                       ProblemBounds(K1=0.0, K2=0.0, K3=1.0), uses_density=False)


def mean_field_attraction(grid: Grid, sigma: float = 1.0, T: float = 0.5, cost_rate: float = 1.0,
                          clip: float = 3.0, coupling: float = 1.0, **_) -> ProblemSpec:
    """
    Control push plus a clipped pull towards the current mean of the law.

    b = u + coupling * clip(mean(rho) - x), f = cost_rate * u^2 / 2 and
    g = min(x^2, clip^2) / 2. The Lipschitz constant in rho uses
    |mean(rho) - mean(chi)| <= ||x / sqrt(gamma)||_L2 ||rho - chi||_L2(gamma).
    """
    w = build_weight(grid)
    mean_lipschitz = float(np.sqrt(integrate(grid.nodes ** 2 / w.gamma, grid)))

    def b(t, x, rho, u):
        return u + coupling * np.clip(rho.mean - np.asarray(x, dtype=float), -clip, clip)

    def f(t, x, rho, u):
        return 0.5 * cost_rate * u ** 2

    def g(x, rho):
        return 0.5 * np.minimum(np.asarray(x, dtype=float) ** 2, clip ** 2)

    bounds = ProblemBounds(
        K1=max(1.0, coupling * max(1.0, mean_lipschitz)),
        K2=1.0 + abs(coupling) * clip,
        K3=0.5 * abs(cost_rate) + 0.5 * clip ** 2,
    )
    return ProblemSpec("mean-field-attraction", b, f, g, sigma, [-1.0, 1.0], T, bounds,
                       uses_density=True)


PROBLEMS = {
    "zero-drift": zero_drift,
    "ornstein-uhlenbeck": ornstein_uhlenbeck,
    "clipped-ou": clipped_ou,
    "signed-drift": signed_drift,
    "control-irrelevant": control_irrelevant,
    "quadratic-running-cost": quadratic_running_cost,
    "mean-field-attraction": mean_field_attraction,
}


def build_problem(name: str, grid: Grid, **params) -> ProblemSpec:
    """
    Builds a named fixture.

    Args:
        name (str): A key of PROBLEMS.
        grid (Grid): Working grid, used for grid-dependent bounds.
        **params: sigma, T, cost_rate, clip, coupling (unused ones are ignored).

    Returns:
        ProblemSpec: The problem.
    """
    if name not in PROBLEMS:
        raise ConfigError(f"Unknown problem '{name}'. Available: {', '.join(sorted(PROBLEMS))}.")
    return PROBLEMS[name](grid, **params)


def problem_from_config(problem_cfg: SimpleNamespace, grid: Grid, name: str | None = None) -> ProblemSpec:
    """Builds the configured problem, or the fixture `name` with the configured parameters."""
    spec = build_problem(
        name or problem_cfg.name,
        grid,
        sigma=problem_cfg.sigma,
        T=problem_cfg.horizon,
        cost_rate=problem_cfg.cost_rate,
        clip=problem_cfg.clip,
        coupling=problem_cfg.coupling,
    )
    logger.debug(f"Built problem '{spec.name}' (sigma={spec.sigma}, T={spec.T}).")
    return spec
