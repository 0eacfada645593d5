import logging
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from src.utils.exceptions import ConfigError, NumericalError
from src.weightspace import Grid, WeightField, integrate, weighted_l2_norm

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProblemBounds:
    """Claimed constants: K1 (Lipschitz), K2 (drift bound), K3 (cost Lipschitz and bound)."""
    K1: float
    K2: float
    K3: float


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """
    Coefficients of a controlled mean-field diffusion and its cost.

    The rules take node or particle arrays `x`:
        b(t, x, rho, u) -> drift, shaped like x
        f(t, x, rho, u) -> running cost rate, shaped like x
        g(x, rho)       -> terminal cost, shaped like x

    Attributes:
        name (str): Fixture name.
        b, f, g: The coefficient rules.
        sigma (float): Constant diffusion coefficient.
        atoms (np.ndarray): Control atoms, shape (n_atoms,) or (n_atoms, k).
        T (float): Horizon.
        bounds (ProblemBounds): Claimed assumption constants.
        uses_density (bool): Whether b reads its measure argument.
    """
    name: str
    b: Callable
    f: Callable
    g: Callable
    sigma: float
    atoms: np.ndarray
    T: float
    bounds: ProblemBounds
    uses_density: bool = True

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigError(f"Diffusion coefficient must be positive, got sigma={self.sigma}.")
        if not self.T > 0:
            raise ConfigError(f"Horizon must be positive, got T={self.T}.")
        atoms = np.array(self.atoms, dtype=float)
        if atoms.ndim == 0 or atoms.shape[0] == 0:
            raise ConfigError("A problem needs at least one control atom.")
        atoms.flags.writeable = False
        object.__setattr__(self, "atoms", atoms)

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[0]


@dataclass(frozen=True, eq=False)
class RelaxedControl:
    """A probability vector over the problem's control atoms."""
    weights: np.ndarray

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float)
        _validate_weights(weights)
        weights.flags.writeable = False
        object.__setattr__(self, "weights", weights)

    @classmethod
    def pure(cls, index: int, n_atoms: int) -> "RelaxedControl":
        weights = np.zeros(n_atoms)
        weights[index] = 1.0
        return cls(weights)

    @classmethod
    def mixture(cls, first: int, second: int, share: float, n_atoms: int) -> "RelaxedControl":
        """Puts `share` on atom `second` and the rest on atom `first`."""
        weights = np.zeros(n_atoms)
        weights[first] += 1.0 - share
        weights[second] += share
        return cls(weights)

    def label(self) -> str:
        return "(" + ",".join(f"{p:g}" for p in self.weights) + ")"


@dataclass(frozen=True, eq=False)
class FeedbackTable:
    """
    Markovian feedback control: one relaxed control per grid cell.

    Row i applies to the cell [x_i - h/2, x_i + h/2) around node i.
    """
    weights: np.ndarray
    grid: Grid

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float)
        if weights.ndim != 2 or weights.shape[0] != self.grid.n:
            raise ValueError(f"Feedback table needs {self.grid.n} rows, got shape {weights.shape}.")
        for row in weights:
            _validate_weights(row)
        weights.flags.writeable = False
        object.__setattr__(self, "weights", weights)

    def label(self) -> str:
        return f"feedback[{self.grid.n}x{self.weights.shape[1]}]"


Control = Union[RelaxedControl, FeedbackTable]


def _validate_weights(weights: np.ndarray):
    if weights.ndim != 1 or weights.size == 0:
        raise ValueError("Control weights must be a nonempty vector.")
    if not np.all(np.isfinite(weights)) or np.any(weights < 0):
        raise ValueError(f"Control weights must be finite and nonnegative, got {weights}.")
    if abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError(f"Control weights must sum to 1, got {weights.sum()}.")


@dataclass(frozen=True, eq=False)
class PolicySchedule:
    """
    Piecewise control schedule on [breakpoints[0], breakpoints[-1]].

    Interval k is [breakpoints[k], breakpoints[k+1]) with control controls[k].
    A schedule with a single breakpoint and no controls is the empty
    schedule at the horizon.
    """
    breakpoints: tuple
    controls: tuple

    def __post_init__(self):
        breakpoints = tuple(float(t) for t in self.breakpoints)
        controls = tuple(self.controls)
        if len(breakpoints) < 1 or len(controls) != len(breakpoints) - 1:
            raise ValueError("A schedule needs exactly one control per interval.")
        if any(b <= a for a, b in zip(breakpoints[:-1], breakpoints[1:])):
            raise ValueError(f"Breakpoints must be strictly increasing, got {breakpoints}.")
        object.__setattr__(self, "breakpoints", breakpoints)
        object.__setattr__(self, "controls", controls)

    @classmethod
    def constant(cls, control: Control, s: float, T: float) -> "PolicySchedule":
        return cls((s, T), (control,))

    @classmethod
    def piecewise(cls, controls, s: float, T: float) -> "PolicySchedule":
        """Equal-length pieces on [s, T], one per control."""
        controls = tuple(controls)
        return cls(tuple(np.linspace(s, T, len(controls) + 1)), controls)

    @property
    def start(self) -> float:
        return self.breakpoints[0]

    @property
    def end(self) -> float:
        return self.breakpoints[-1]

    def intervals(self, s: float | None = None, t: float | None = None):
        """Yields (t0, t1, control) for the pieces clipped to [s, t]."""
        s = self.start if s is None else s
        t = self.end if t is None else t
        if s < self.start - 1e-12 or t > self.end + 1e-12:
            raise ValueError(f"Schedule on [{self.start}, {self.end}] does not cover [{s}, {t}].")
        for a, b, control in zip(self.breakpoints[:-1], self.breakpoints[1:], self.controls):
            lo, hi = max(a, s), min(b, t)
            if hi > lo:
                yield lo, hi, control

    def control_at(self, t: float) -> Control:
        index = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        return self.controls[min(max(index, 0), len(self.controls) - 1)]

    def label(self) -> str:
        return "|".join(c.label() for c in self.controls)


def apply_relaxed(coef: Callable, alpha: RelaxedControl, atoms) -> np.ndarray | float:
    """
    Averages a coefficient over the atoms with the control's weights.

    Args:
        coef (Callable): Rule taking one atom.
        alpha (RelaxedControl): The relaxed control.
        atoms: The problem's control atoms.

    Returns:
        The weighted sum of coef(atom) over atoms with positive weight.
    """
    atoms = np.asarray(atoms, dtype=float)
    if alpha.weights.shape[0] != atoms.shape[0]:
        raise ValueError(f"Control has {alpha.weights.shape[0]} weights for {atoms.shape[0]} atoms.")
    total = 0.0
    for weight, atom in zip(alpha.weights, atoms):
        if weight > 0.0:
            total = total + weight * np.asarray(coef(atom), dtype=float)
    return total


def _nodal_field(rule: Callable, t: float, rho, control: Control, spec: ProblemSpec) -> np.ndarray:
    x = rho.grid.nodes
    if isinstance(control, FeedbackTable):
        if control.grid != rho.grid:
            raise ValueError("Feedback table and density live on different grids.")
        values = np.zeros(rho.grid.n)
        for j, atom in enumerate(spec.atoms):
            column = control.weights[:, j]
            if np.any(column > 0.0):
                values += column * np.broadcast_to(rule(t, x, rho, atom), x.shape)
    else:
        values = np.broadcast_to(
            apply_relaxed(lambda u: rule(t, x, rho, u), control, spec.atoms), x.shape
        ).astype(float)
    if not np.all(np.isfinite(values)):
        raise NumericalError(f"Non-finite coefficient values for problem '{spec.name}' at t={t}.")
    return values


def drift_field(spec: ProblemSpec, t: float, rho, control: Control) -> np.ndarray:
    """Relaxed drift b(t, x, rho, alpha) at the grid nodes."""
    return _nodal_field(spec.b, t, rho, control, spec)


def running_cost_field(spec: ProblemSpec, t: float, rho, control: Control) -> np.ndarray:
    """Relaxed running cost rate f(t, x, rho, alpha) at the grid nodes."""
    return _nodal_field(spec.f, t, rho, control, spec)


def running_cost_rate(spec: ProblemSpec, t: float, rho, control: Control) -> float:
    """Integral of f(t, x, rho, alpha) rho(x)."""
    return integrate(running_cost_field(spec, t, rho, control) * rho.values, rho.grid)


def terminal_cost(spec: ProblemSpec, rho) -> float:
    """Integral of g(x, rho) rho(x)."""
    g = np.broadcast_to(spec.g(rho.grid.nodes, rho), rho.grid.nodes.shape)
    if not np.all(np.isfinite(g)):
        raise NumericalError(f"Non-finite terminal cost for problem '{spec.name}'.")
    return integrate(g * rho.values, rho.grid)


@dataclass(frozen=True)
class BoundsCheckReport:
    max_abs_drift: float
    max_cost: float
    lipschitz_x: float
    lipschitz_rho: float
    holds: bool
    violations: tuple = field(default=())


def check_problem_bounds(spec: ProblemSpec, densities, w: WeightField, rng: np.random.Generator,
                         samples: int = 200, rtol: float = 1e-9) -> BoundsCheckReport:
    """
    Empirical check of the claimed drift and cost constants.

    Samples times, nodes, densities (from `densities`) and atoms, and
    estimates |b|, |f| + |g|, and the Lipschitz ratios of b and f in x and
    in rho (measured in L2(gamma)).

    Args:
        spec (ProblemSpec): The problem.
        densities: Sequence of at least two GridDensity on w's grid.
        w (WeightField): Weight for the rho-distance.
        rng (np.random.Generator): Random source.
        samples (int): Number of random draws.
        rtol (float): Relative slack.

    Returns:
        BoundsCheckReport: Observed maxima and whether they respect the claims.
    """
    densities = list(densities)
    if len(densities) < 2:
        raise ValueError("check_problem_bounds needs at least two densities.")
    grid = w.grid
    x = grid.nodes
    inner = np.abs(x) <= grid.upper - 1.0

    max_drift = max_cost = lip_x = lip_rho = 0.0
    for _ in range(samples):
        t = rng.uniform(0.0, spec.T)
        i, j = rng.choice(len(densities), size=2, replace=False)
        rho, chi = densities[i], densities[j]
        atom = spec.atoms[rng.integers(spec.n_atoms)]

        b_rho = np.broadcast_to(spec.b(t, x, rho, atom), x.shape)
        b_chi = np.broadcast_to(spec.b(t, x, chi, atom), x.shape)
        f_rho = np.broadcast_to(spec.f(t, x, rho, atom), x.shape)
        f_chi = np.broadcast_to(spec.f(t, x, chi, atom), x.shape)
        g_rho = np.broadcast_to(spec.g(x, rho), x.shape)

        max_drift = max(max_drift, float(np.abs(b_rho).max()))
        max_cost = max(max_cost, float(np.abs(f_rho[inner]).max() + np.abs(g_rho[inner]).max()))

        dx = np.diff(x[inner])
        lip_x = max(lip_x, float(np.max(np.abs(np.diff(b_rho[inner])) / dx)),
                    float(np.max(np.abs(np.diff(f_rho[inner])) / dx)))
        distance = weighted_l2_norm(rho.values - chi.values, w)
        if distance > 0:
            lip_rho = max(lip_rho, float(np.abs(b_rho - b_chi).max()) / distance,
                          float(np.abs(f_rho - f_chi).max()) / distance)

    bounds = spec.bounds
    violations = []
    if max_drift > bounds.K2 * (1 + rtol):
        violations.append("drift bound")
    if max_cost > bounds.K3 * (1 + rtol):
        violations.append("cost bound")
    if max(lip_x, lip_rho) > bounds.K1 * (1 + rtol):
        violations.append("lipschitz")
    return BoundsCheckReport(
        max_abs_drift=max_drift,
        max_cost=max_cost,
        lipschitz_x=lip_x,
        lipschitz_rho=lip_rho,
        holds=not violations,
        violations=tuple(violations),
    )
