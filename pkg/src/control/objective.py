import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable

import numpy as np

from src.densities import GridDensity
from src.dynamics import (
    DEFAULT_DT,
    DEFAULT_SCHEME,
    PolicySchedule,
    ProblemSpec,
    RelaxedControl,
    evolve,
    running_cost_rate,
    terminal_cost,
)
from src.utils.exceptions import ConfigError, SearchBudgetError
from src.weightspace import WeightField, build_weight

logger = logging.getLogger(__name__)

HORIZON_TOLERANCE = 1e-12


@dataclass(frozen=True)
class SearchConfig:
    """
    Policy class and numerics of the value search.

    Attributes:
        pieces (int): Number K of equal time pieces on [s, T].
        candidates (tuple | None): Controls tried on each piece; pure atoms
            (plus mixtures) when None.
        mixture_levels (int): Extra mixtures per atom pair, with shares
            k / (levels + 1) for k = 1..levels.
        dt (float): Largest Fokker-Planck time step.
        scheme (str): Flux discretisation.
        max_rollouts (int): Largest allowed |candidates|^K.
        parallel (bool): Search first-piece subtrees in a thread pool.
        max_workers (int | None): Pool size.
    """
    pieces: int = 2
    candidates: tuple | None = None
    mixture_levels: int = 0
    dt: float = DEFAULT_DT
    scheme: str = DEFAULT_SCHEME
    max_rollouts: int = 4096
    parallel: bool = False
    max_workers: int | None = None

    def __post_init__(self):
        if self.pieces < 1:
            raise ConfigError(f"A search needs at least one piece, got {self.pieces}.")
        if self.mixture_levels < 0:
            raise ConfigError(f"mixture_levels must be >= 0, got {self.mixture_levels}.")
        if not self.dt > 0:
            raise ConfigError(f"Search time step must be positive, got {self.dt}.")

    def with_pieces(self, pieces: int) -> "SearchConfig":
        return SearchConfig(pieces, self.candidates, self.mixture_levels, self.dt, self.scheme,
                            self.max_rollouts, self.parallel, self.max_workers)

    def with_dt(self, dt: float) -> "SearchConfig":
        return SearchConfig(self.pieces, self.candidates, self.mixture_levels, dt, self.scheme,
                            self.max_rollouts, self.parallel, self.max_workers)


@dataclass(frozen=True)
class ValueEstimate:
    """
    Minimum of the cost over the searched policy class.

    Attributes:
        value (float): The minimal cost.
        argmin_policy (PolicySchedule): A minimising schedule.
        evaluated (int): Number of complete rollouts.
        gap (float): Second-best minus best cost (inf with a single rollout).
        encoding (tuple): Candidate indices of the minimiser, one per piece.
    """
    value: float
    argmin_policy: PolicySchedule
    evaluated: int
    gap: float
    encoding: tuple = field(default=())


def build_candidates(spec: ProblemSpec, search: SearchConfig) -> tuple:
    """Pure atoms in atom order, then pairwise mixtures in lexicographic pair order."""
    if search.candidates is not None:
        return tuple(search.candidates)
    n = spec.n_atoms
    candidates = [RelaxedControl.pure(i, n) for i in range(n)]
    for i, j in combinations(range(n), 2):
        for k in range(1, search.mixture_levels + 1):
            candidates.append(RelaxedControl.mixture(i, j, k / (search.mixture_levels + 1), n))
    return tuple(candidates)


def rollout(rho: GridDensity, t0: float, t1: float, control, spec: ProblemSpec, dt: float = DEFAULT_DT,
            scheme: str = DEFAULT_SCHEME, w: WeightField | None = None) -> tuple[GridDensity, float]:
    """
    Evolves rho on [t0, t1] under one control and accumulates the running cost.

    The running cost is the left-point sum of dt * integral f rho.

    Returns:
        tuple: (density at t1, running cost on [t0, t1]).
    """
    running = [0.0]

    def accumulate(now, step, density, control_now):
        running[0] += step * running_cost_rate(spec, now, density, control_now)

    path = evolve(rho, t0, t1, PolicySchedule.constant(control, t0, t1), spec,
                  dt=dt, w=w, scheme=scheme, on_step=accumulate)
    return path.terminal, running[0]


def cost(rho0: GridDensity, s: float, policy: PolicySchedule, spec: ProblemSpec, dt: float = DEFAULT_DT,
         scheme: str = DEFAULT_SCHEME, w: WeightField | None = None) -> float:
    """
    Objective of a policy started from (s, rho0).

    J = sum over steps of dt * integral f(r, x, rho_r, alpha_r) rho_r(x) dx
    + integral g(x, rho_T) rho_T(x) dx. At s = T only the terminal cost remains.

    Args:
        rho0 (GridDensity): Initial density.
        s (float): Start time.
        policy (PolicySchedule): Schedule covering [s, T].
        spec (ProblemSpec): The problem.
        dt (float): Largest time step.
        scheme (str): Flux discretisation.
        w (WeightField | None): Weight for the membership checks.

    Returns:
        float: The cost.
    """
    if s >= spec.T - HORIZON_TOLERANCE:
        return terminal_cost(spec, rho0)
    if policy.start > s + HORIZON_TOLERANCE or abs(policy.end - spec.T) > HORIZON_TOLERANCE:
        raise ConfigError(f"Policy on [{policy.start}, {policy.end}] does not cover [{s}, {spec.T}].")
    w = w or build_weight(rho0.grid)
    total, rho = 0.0, rho0
    for t0, t1, control in policy.intervals(s, spec.T):
        rho, running = rollout(rho, t0, t1, control, spec, dt, scheme, w)
        total += running
    return total + terminal_cost(spec, rho)


def value(rho0: GridDensity, s: float, spec: ProblemSpec, search: SearchConfig) -> ValueEstimate:
    """
    Exhaustive minimisation of the cost over K-piece candidate schedules.

    The schedules form a tree; each prefix is evolved once and shared by all
    its completions. Ties are broken by the lexicographically smallest
    candidate encoding, so the result does not depend on `search.parallel`.

    Args:
        rho0 (GridDensity): Initial density.
        s (float): Start time.
        spec (ProblemSpec): The problem.
        search (SearchConfig): Policy class and numerics.

    Returns:
        ValueEstimate: Minimum, minimiser and search diagnostics.

    Raises:
        SearchBudgetError: If |candidates|^K exceeds search.max_rollouts.
    """
    if s >= spec.T - HORIZON_TOLERANCE:
        return ValueEstimate(terminal_cost(spec, rho0), PolicySchedule((spec.T,), ()), 0, float("inf"))

    candidates = build_candidates(spec, search)
    budget = len(candidates) ** search.pieces
    if budget > search.max_rollouts:
        raise SearchBudgetError(
            f"Search needs {len(candidates)}^{search.pieces} = {budget} rollouts, "
            f"above max_rollouts={search.max_rollouts}."
        )
    breakpoints = np.linspace(s, spec.T, search.pieces + 1)
    w = build_weight(rho0.grid)

    def explore(rho, piece, running, prefix, results):
        if piece == search.pieces:
            results.append((running + terminal_cost(spec, rho), prefix))
            return
        for index, control in enumerate(candidates):
            end, segment = rollout(rho, breakpoints[piece], breakpoints[piece + 1], control,
                                   spec, search.dt, search.scheme, w)
            explore(end, piece + 1, running + segment, prefix + (index,), results)

    def subtree(index):
        results = []
        end, segment = rollout(rho0, breakpoints[0], breakpoints[1], candidates[index],
                               spec, search.dt, search.scheme, w)
        explore(end, 1, segment, (index,), results)
        return results

    if search.parallel and len(candidates) > 1:
        with ThreadPoolExecutor(max_workers=search.max_workers) as executor:
            branches = list(executor.map(subtree, range(len(candidates))))
    else:
        branches = [subtree(i) for i in range(len(candidates))]
    results = sorted(r for branch in branches for r in branch)

    best_cost, best_code = results[0]
    gap = results[1][0] - best_cost if len(results) > 1 else float("inf")
    policy = PolicySchedule(tuple(breakpoints), tuple(candidates[i] for i in best_code))
    logger.debug(f"value(s={s:g}) for '{spec.name}': {best_cost:.6g} via {policy.label()} "
                 f"({len(results)} rollouts)")
    return ValueEstimate(best_cost, policy, len(results), gap, best_code)


def value_function(spec: ProblemSpec, search: SearchConfig) -> Callable[[float, GridDensity], float]:
    """Returns V_eval(t, rho) = value(rho, t, spec, search).value."""
    def V_eval(t: float, rho: GridDensity) -> float:
        return value(rho, t, spec, search).value
    return V_eval
