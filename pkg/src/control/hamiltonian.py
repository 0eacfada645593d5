import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import norm

from src.calculus import MortensenDerivative
from src.densities import GridDensity
from src.dynamics import Control, ProblemSpec, RelaxedControl, drift_field, running_cost_field, terminal_cost
from src.utils.exceptions import ConfigError, GridMismatchError, NumericalError
from src.weightspace import WeightField, central_derivative, integrate

logger = logging.getLogger(__name__)

TERMINAL_TOLERANCE = 1e-10


def hamiltonian(t: float, rho: GridDensity, d: MortensenDerivative, alpha: Control,
                spec: ProblemSpec, w: WeightField) -> float:
    """
    Hamiltonian of the control problem at (t, rho) for one control.

    H = integral b D(F) rho - (sigma^2 / 2) integral D(F) D(rho) + integral f rho,
    where F is the first component of the derivative; G does not enter.
    """
    if d.grid != rho.grid or w.grid != rho.grid:
        raise GridMismatchError(f"Hamiltonian operands live on different grids ({d.grid}, {rho.grid}, {w.grid}).")
    dF = central_derivative(d.F, rho.grid)
    transport = integrate(drift_field(spec, t, rho, alpha) * dF * rho.values, rho.grid)
    diffusion = 0.5 * spec.sigma ** 2 * integrate(dF * rho.derivative, rho.grid)
    running = integrate(running_cost_field(spec, t, rho, alpha) * rho.values, rho.grid)
    return transport - diffusion + running


def min_hamiltonian(t: float, rho: GridDensity, d: MortensenDerivative, spec: ProblemSpec,
                    w: WeightField) -> tuple[float, float]:
    """Minimum of the Hamiltonian over pure atoms; the first minimising atom wins ties."""
    best_value, best_atom = np.inf, None
    for j in range(spec.n_atoms):
        h = hamiltonian(t, rho, d, RelaxedControl.pure(j, spec.n_atoms), spec, w)
        if h < best_value:
            best_value, best_atom = h, spec.atoms[j]
    return float(best_value), best_atom


@dataclass(frozen=True)
class DerivativeProbeConfig:
    """
    Probe design for estimating derivatives of an evaluable value function.

    Attributes:
        n_probes (int): Number of mass-neutral probe bumps.
        eps (float): Largest perturbation size.
        ridge (float): Ridge regulariser of the regression.
        time_step (float): Step of the central time difference.
        basis_degree (int): Highest power of the polynomial kernel basis.
        width_factor (float): Bump width and shift as a fraction of the standard deviation.
        condition_limit (float): Condition number above which the regression is flagged.
        tolerance (float): Residual and sign-condition tolerance.
    """
    n_probes: int = 6
    eps: float = 1e-3
    ridge: float = 1e-8
    time_step: float = 0.01
    basis_degree: int = 3
    width_factor: float = 0.5
    condition_limit: float = 1e8
    tolerance: float = 0.05

    def __post_init__(self):
        if self.n_probes < self.basis_degree:
            raise ConfigError(
                f"n_probes={self.n_probes} cannot identify a degree-{self.basis_degree} kernel."
            )
        if not (self.eps > 0 and self.time_step > 0 and self.ridge >= 0 and self.width_factor > 0):
            raise ConfigError("Probe eps, time_step and width_factor must be positive and ridge nonnegative.")


@dataclass(frozen=True, eq=False)
class DerivativeEstimate:
    """
    Regression estimate of a derivative from value-function evaluations.

    Attributes:
        derivative (MortensenDerivative): (F, 0) with F a polynomial in the standardised position.
        coefficients (np.ndarray): Coefficients of z, z^2, ... in F.
        condition (float): Condition number of the design matrix.
        ill_conditioned (bool): Whether `condition` exceeds the configured limit.
        base_value (float): V at the base point.
        neighbours (tuple): (perturbed density, value) for every probe.
    """
    derivative: MortensenDerivative
    coefficients: np.ndarray
    condition: float
    ill_conditioned: bool
    base_value: float
    neighbours: tuple


def probe_basis(rho: GridDensity, probe: DerivativeProbeConfig) -> list[np.ndarray]:
    """
    Mass-neutral difference-of-Gaussians bumps spread across rho.

    Bump m is N(c_m - a, a^2) - N(c_m + a, a^2) with a = width_factor * sd and
    centres c_m = mean + sd * linspace(-1, 1, n_probes), scaled to unit sup norm.
    """
    sd = np.sqrt(rho.variance)
    a = probe.width_factor * sd
    x = rho.grid.nodes
    bumps = []
    for c in rho.mean + sd * np.linspace(-1.0, 1.0, probe.n_probes):
        phi = norm.pdf(x, c - a, a) - norm.pdf(x, c + a, a)
        bumps.append(phi / np.abs(phi).max())
    return bumps


def _probe_size(rho: GridDensity, phi: np.ndarray, eps: float) -> float:
    """Largest step up to eps that keeps rho + step * phi above half of rho."""
    # Only nodes where the bump removes mass limit the step.
    active = phi <= -1e-8
    if not active.any():
        return float(eps)
    room = 0.5 * np.min(rho.values[active] / -phi[active])
    if not room > 0.0:
        raise NumericalError("Bump removes mass where the density vanishes; no admissible derivative step.")
    return float(min(eps, room))


def sample_value(V_eval: Callable, t: float, rho: GridDensity, probe: DerivativeProbeConfig):
    """
    Evaluates V at the probe neighbours of rho.

    Returns:
        tuple: (base value, list of (phi, eps, perturbed density, value)).
    """
    base = V_eval(t, rho)
    samples = []
    for phi in probe_basis(rho, probe):
        eps = _probe_size(rho, phi, probe.eps)
        neighbour = rho.perturbed(phi, eps)
        samples.append((phi, eps, neighbour, V_eval(t, neighbour)))
    return base, samples


def estimate_derivative(V_eval: Callable, t: float, rho: GridDensity,
                        probe: DerivativeProbeConfig) -> DerivativeEstimate:
    """
    Ridge regression of probe differences on a polynomial kernel basis.

    With z = (x - mean) / sd the kernel is F = sum_k c_k z^k for k = 1..degree;
    constants are invisible to mass-neutral probes. Each probe contributes
    V(t, rho + eps_m phi_m) - V(t, rho) ~ eps_m integral F phi_m.

    Args:
        V_eval (Callable): Rule (t, rho) -> value.
        t (float): Time.
        rho (GridDensity): Base density.
        probe (DerivativeProbeConfig): Probe design.

    Returns:
        DerivativeEstimate: The estimate and its diagnostics.
    """
    base, samples = sample_value(V_eval, t, rho, probe)
    grid = rho.grid
    z = (grid.nodes - rho.mean) / np.sqrt(rho.variance)
    basis = [z ** k for k in range(1, probe.basis_degree + 1)]

    # Rows scaled by 1/eps_m.
    A = np.array([[integrate(b * (neighbour.values - rho.values), grid) / eps for b in basis]
                  for _, eps, neighbour, _ in samples])
    y = np.array([(v - base) / eps for _, eps, _, v in samples])
    condition = float(np.linalg.cond(A))
    ill = not np.isfinite(condition) or condition > probe.condition_limit
    if ill:
        logger.warning(f"Ill-conditioned probe regression at t={t:g} (cond={condition:.3e}).")
    coefficients = np.linalg.solve(A.T @ A + probe.ridge * np.eye(len(basis)), A.T @ y)
    F = sum(c * b for c, b in zip(coefficients, basis))
    return DerivativeEstimate(
        derivative=MortensenDerivative(F, np.zeros(grid.n), grid),
        coefficients=coefficients,
        condition=condition,
        ill_conditioned=ill,
        base_value=base,
        neighbours=tuple((neighbour, v) for _, _, neighbour, v in samples),
    )


def time_derivative(V_eval: Callable, t: float, rho: GridDensity, step: float, T: float) -> float:
    """Central difference in time, one-sided next to 0 and T."""
    lo, hi = t - step, t + step
    if hi > T:
        hi = t
    if lo < 0.0:
        lo = t
    if hi == lo:
        raise ConfigError(f"Time step {step} is too large for t={t} on [0, {T}].")
    return (V_eval(hi, rho) - V_eval(lo, rho)) / (hi - lo)


@dataclass(frozen=True)
class HJBResidualReport:
    residual: float
    time_derivative: float
    min_hamiltonian: float
    argmin_atom: float
    terminal_gap: float
    condition: float
    ill_conditioned: bool

    @property
    def terminal_ok(self) -> bool:
        return self.terminal_gap <= TERMINAL_TOLERANCE


def hjb_residual(V_eval: Callable, t: float, rho: GridDensity, spec: ProblemSpec, w: WeightField,
                 probe: DerivativeProbeConfig) -> HJBResidualReport:
    """
    Residual -dV/dt - min_alpha H(t, rho, D_rho V, alpha) of an evaluable value function.

    The terminal condition V(T, rho) = integral g rho is checked first and
    reported as `terminal_gap`.

    Args:
        V_eval (Callable): Rule (t, rho) -> value.
        t (float): Interior time.
        rho (GridDensity): Density.
        spec (ProblemSpec): The problem.
        w (WeightField): Weight on the density's grid.
        probe (DerivativeProbeConfig): Probe design.

    Returns:
        HJBResidualReport: Residual and its ingredients.
    """
    terminal_gap = abs(V_eval(spec.T, rho) - terminal_cost(spec, rho))
    if terminal_gap > TERMINAL_TOLERANCE:
        logger.warning(f"Terminal condition off by {terminal_gap:.3e} for '{spec.name}'.")
    dV_dt = time_derivative(V_eval, t, rho, probe.time_step, spec.T)
    estimate = estimate_derivative(V_eval, t, rho, probe)
    h_min, atom = min_hamiltonian(t, rho, estimate.derivative, spec, w)
    residual = -dV_dt - h_min
    logger.debug(f"HJB residual at t={t:g}: {residual:.3e} (dV/dt={dV_dt:.6g}, minH={h_min:.6g})")
    return HJBResidualReport(
        residual=float(residual),
        time_derivative=float(dV_dt),
        min_hamiltonian=h_min,
        argmin_atom=float(np.asarray(atom).ravel()[0]),
        terminal_gap=float(terminal_gap),
        condition=estimate.condition,
        ill_conditioned=estimate.ill_conditioned,
    )
