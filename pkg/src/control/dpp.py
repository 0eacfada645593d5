import logging
from dataclasses import dataclass

import numpy as np

from src.densities import GridDensity
from src.dynamics import ProblemSpec
from src.utils.exceptions import ConfigError
from src.weightspace import build_weight, wasserstein1
from .objective import SearchConfig, build_candidates, rollout, value

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DPPReport:
    lhs: float
    rhs: float
    gap: float
    tolerance: float
    best_first_index: int
    passed: bool


@dataclass(frozen=True)
class ContinuityReport:
    """
    Empirical modulus |V(s, mu) - V(s', mu')| / (sqrt|s - s'| + W1(mu, mu')).

    `ratios` holds one entry per non-degenerate pair; `skipped` counts
    identical pairs.
    """
    ratios: tuple
    max_ratio: float
    skipped: int


def default_dpp_tolerance(dt: float, h: float) -> float:
    return 5.0 * dt + 10.0 * h ** 2


def check_dpp(rho0: GridDensity, s: float, t: float, spec: ProblemSpec, search: SearchConfig,
              tolerance: float | None = None) -> DPPReport:
    """
    Compares both sides of the dynamic programming principle.

    LHS = V(s, rho0). RHS = min over first-segment candidates c of the
    running cost of c on [s, t] plus V(t, rho_t^c), where the tail value
    uses the same search configuration.

    Args:
        rho0 (GridDensity): Initial density.
        s (float): Start time.
        t (float): Intermediate time, s < t < T.
        spec (ProblemSpec): The problem.
        search (SearchConfig): Policy class and numerics for both sides.
        tolerance (float | None): Pass threshold, 5 dt + 10 h^2 by default.

    Returns:
        DPPReport: Both sides, their gap and the verdict.
    """
    if not s < t < spec.T:
        raise ConfigError(f"check_dpp needs s < t < T, got s={s}, t={t}, T={spec.T}.")
    if tolerance is None:
        tolerance = default_dpp_tolerance(search.dt, rho0.grid.h)
    w = build_weight(rho0.grid)

    lhs = value(rho0, s, spec, search).value
    options = []
    for index, control in enumerate(build_candidates(spec, search)):
        rho_t, running = rollout(rho0, s, t, control, spec, search.dt, search.scheme, w)
        options.append((running + value(rho_t, t, spec, search).value, index))
    rhs, best = min(options)
    gap = abs(lhs - rhs)
    logger.info(f"DPP for '{spec.name}' on [{s:g}, {t:g}]: lhs={lhs:.8g}, rhs={rhs:.8g}, gap={gap:.3e}")
    return DPPReport(lhs=lhs, rhs=rhs, gap=gap, tolerance=tolerance, best_first_index=best,
                     passed=gap <= tolerance)


def _same_pair(first, second) -> bool:
    (s, rho), (s2, rho2) = first, second
    return s == s2 and rho.grid == rho2.grid and np.array_equal(rho.values, rho2.values)


def check_value_continuity(spec: ProblemSpec, pairs, search: SearchConfig) -> ContinuityReport:
    """
    Empirical continuity constant of the value function over sampled pairs.

    Args:
        spec (ProblemSpec): The problem.
        pairs: Iterable of ((s, rho), (s2, rho2)).
        search (SearchConfig): Policy class and numerics.

    Returns:
        ContinuityReport: Ratios of the non-degenerate pairs and their maximum.
    """
    ratios, skipped = [], 0
    for first, second in pairs:
        if _same_pair(first, second):
            skipped += 1
            continue
        (s, rho), (s2, rho2) = first, second
        scale = np.sqrt(abs(s - s2)) + wasserstein1(rho, rho2)
        if scale == 0.0:
            skipped += 1
            continue
        gap = abs(value(rho, s, spec, search).value - value(rho2, s2, spec, search).value)
        ratios.append(gap / scale)
    return ContinuityReport(
        ratios=tuple(ratios),
        max_ratio=max(ratios) if ratios else 0.0,
        skipped=skipped,
    )
