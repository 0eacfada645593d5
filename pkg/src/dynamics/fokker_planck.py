import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.stats import norm

from src.densities import GridDensity, check_d1r_membership, save_density_path_csv
from src.utils.exceptions import ConfigError, ConservativityError, NumericalError, StabilityError
from src.utils.numerics import is_nonincreasing
from src.weightspace import Grid, WeightField, build_weight, central_derivative, integrate, weighted_l2_norm
from .problem import Control, PolicySchedule, ProblemSpec, RelaxedControl, drift_field

logger = logging.getLogger(__name__)

DEFAULT_DT = 1e-4
SCHEMES = ("exponential-fitting", "upwind")
DEFAULT_SCHEME = "exponential-fitting"
MASS_DRIFT_LIMIT = 1e-12
NEGATIVE_ROUNDING = 1e-14


def stability_bound(grid: Grid, sigma: float, max_drift: float) -> float:
    """Largest explicit time step: min(h^2 / (2 sigma^2), h / (2 max|b|))."""
    bound = grid.h ** 2 / (2.0 * sigma ** 2)
    if max_drift > 0.0:
        bound = min(bound, grid.h / (2.0 * max_drift))
    return bound


def _bernoulli(z: np.ndarray) -> np.ndarray:
    """B(z) = z / (exp(z) - 1) with B(0) = 1."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-8
    safe = np.where(small, 1.0, z)
    with np.errstate(over="ignore"):
        out = safe / np.expm1(safe)
    return np.where(small, 1.0 - 0.5 * z, out)


def face_fluxes(values: np.ndarray, drift: np.ndarray, grid: Grid, sigma: float,
                scheme: str = DEFAULT_SCHEME) -> np.ndarray:
    """
    Total probability flux through the n - 1 interior cell faces.

    The face drift is the average of the two nodal drifts. "upwind" adds the
    donor-cell advective flux to the central diffusive flux
    -0.5 sigma^2 (rho_{i+1} - rho_i) / h. "exponential-fitting" uses the
    Scharfetter-Gummel flux, which reduces to the central diffusive flux
    at zero drift and to donor-cell upwinding at large cell Peclet numbers.
    """
    b_face = 0.5 * (drift[:-1] + drift[1:])
    left, right = values[:-1], values[1:]
    diffusion = 0.5 * sigma ** 2
    if scheme == "upwind":
        advective = np.maximum(b_face, 0.0) * left + np.minimum(b_face, 0.0) * right
        return advective - diffusion * (right - left) / grid.h
    if scheme == "exponential-fitting":
        peclet = b_face * grid.h / diffusion
        return diffusion / grid.h * (_bernoulli(-peclet) * left - _bernoulli(peclet) * right)
    raise ConfigError(f"Unknown scheme '{scheme}'. Expected one of {SCHEMES}.")


def fokker_planck_step(rho: GridDensity, t: float, dt: float, alpha: Control, spec: ProblemSpec,
                       scheme: str = DEFAULT_SCHEME) -> GridDensity:
    """
    One explicit conservative step of the controlled Fokker-Planck equation.

    The drift is evaluated at the beginning-of-step density. Fluxes vanish
    at the two outer faces, so the discrete mass sum(rho) * h is conserved.
    If the trapezoid mass still moves by more than 1e-12 the result is
    rescaled to the pre-step mass, and the drift is recorded on it.

    Args:
        rho (GridDensity): Current density.
        t (float): Current time.
        dt (float): Time step; must satisfy `stability_bound`.
        alpha (RelaxedControl | FeedbackTable): Control for this step.
        spec (ProblemSpec): The problem.
        scheme (str): Flux discretisation, one of SCHEMES.

    Returns:
        GridDensity: Density at t + dt.

    Raises:
        StabilityError: If dt exceeds the explicit stability bound.
        NumericalError: If the drift is not finite or positivity is lost.
    """
    grid = rho.grid
    drift = drift_field(spec, t, rho, alpha)
    bound = stability_bound(grid, spec.sigma, float(np.abs(drift).max()))
    if dt > bound * (1.0 + 1e-12):
        raise StabilityError(
            f"Time step dt={dt:g} violates the stability bound {bound:.4g} "
            f"(h={grid.h:.4g}, sigma={spec.sigma}, max|b|={np.abs(drift).max():.4g})."
        )

    flux = np.zeros(grid.n + 1)
    flux[1:-1] = face_fluxes(rho.values, drift, grid, spec.sigma, scheme)
    values = rho.values - dt / grid.h * np.diff(flux)

    scale = max(float(rho.values.max()), 1e-300)
    if values.min() < -NEGATIVE_ROUNDING * scale:
        raise NumericalError(
            f"Positivity lost at t={t:g} (min value {values.min():.3e}); reduce dt or refine the grid."
        )
    values = np.maximum(values, 0.0)

    mass_before = rho.mass
    mass_after = integrate(values, grid)
    drift_amount = abs(mass_after - mass_before)
    if drift_amount > MASS_DRIFT_LIMIT:
        logger.debug(f"Mass drift {drift_amount:.3e} at t={t:g}; renormalising.")
        values = values * (mass_before / mass_after)
    return GridDensity(values, grid, mass_drift=drift_amount)


@dataclass(frozen=True)
class DensityPath:
    """Densities saved along an evolve run, in increasing time order."""
    times: tuple
    densities: tuple

    def __len__(self) -> int:
        return len(self.times)

    @property
    def terminal(self) -> GridDensity:
        return self.densities[-1]

    @property
    def max_mass_drift(self) -> float:
        return max(d.mass_drift for d in self.densities)

    def save_csv(self, file_path: str | Path):
        save_density_path_csv(self.times, self.densities, file_path)


def _steps_for(t0: float, t1: float, dt: float) -> tuple[int, float]:
    n_steps = max(1, math.ceil((t1 - t0) / dt - 1e-9))
    return n_steps, (t1 - t0) / n_steps


def evolve(rho0: GridDensity, s: float, t: float, policy: PolicySchedule, spec: ProblemSpec,
           dt: float = DEFAULT_DT, save_every: int | None = None, w: WeightField | None = None,
           scheme: str = DEFAULT_SCHEME, check_membership: bool = True,
           on_step: Callable | None = None) -> DensityPath:
    """
    Integrates the Fokker-Planck equation from s to t under a policy.

    Each policy interval inside [s, t] is split into equal steps of length
    at most dt. The initial and final densities are always saved; with
    `save_every` every k-th step is saved as well. Every saved density must
    pass the weighted-space membership check.

    Args:
        rho0 (GridDensity): Initial density.
        s (float): Start time.
        t (float): End time, at most the horizon.
        policy (PolicySchedule): Controls covering [s, t].
        spec (ProblemSpec): The problem.
        dt (float): Largest time step.
        save_every (int | None): Save stride in steps.
        w (WeightField | None): Weight for the membership check.
        scheme (str): Flux discretisation.
        check_membership (bool): Run the membership check on saved densities.
        on_step (Callable | None): Called as on_step(t, dt, rho, control) before each step.

    Returns:
        DensityPath: The saved densities.

    Raises:
        ConservativityError: If a saved density leaves the weighted density space.
    """
    if not s < t:
        raise ConfigError(f"evolve needs s < t, got s={s}, t={t}.")
    if t > spec.T + 1e-12:
        raise ConfigError(f"End time {t} is beyond the horizon T={spec.T}.")
    if check_membership and w is None:
        w = build_weight(rho0.grid)

    def save(time, density):
        if check_membership:
            report = check_d1r_membership(density, w)
            if not report.passed:
                raise ConservativityError(
                    f"Conservativity violation at t={time:g} ({', '.join(report.flags)}); "
                    f"the grid {density.grid} is too small for this run."
                )
        times.append(time)
        densities.append(density)

    times, densities = [], []
    save(s, rho0)
    rho, step = rho0, 0
    for t0, t1, control in policy.intervals(s, t):
        n_steps, dt_eff = _steps_for(t0, t1, dt)
        for k in range(n_steps):
            now = t0 + k * dt_eff
            if on_step is not None:
                on_step(now, dt_eff, rho, control)
            rho = fokker_planck_step(rho, now, dt_eff, control, spec, scheme)
            step += 1
            if save_every and step % save_every == 0 and not (t1 == t and k == n_steps - 1):
                save(t0 + (k + 1) * dt_eff, rho)
    save(t, rho)
    return DensityPath(tuple(times), tuple(densities))


def heat_kernel(x, y, tau: float, sigma: float) -> np.ndarray:
    """Gaussian transition density p(s, x; s + tau, y), broadcast over x and y."""
    if tau <= 0:
        raise ConfigError(f"Heat kernel needs tau > 0, got {tau}.")
    return norm.pdf(np.asarray(y, dtype=float) - np.asarray(x, dtype=float), scale=sigma * np.sqrt(tau))


def heat_oracle(rho0: GridDensity, s: float, t: float, sigma: float) -> GridDensity:
    """
    Exact zero-drift solution by quadrature against the Gaussian kernel.

    rho_t(y) = sum_x p(s, x; t, y) rho0(x) w_x, with trapezoid weights w_x,
    rescaled to the mass of rho0 to absorb truncation loss.
    """
    if not t > s:
        raise ConfigError(f"heat_oracle needs t > s, got s={s}, t={t}.")
    x = rho0.grid.nodes
    kernel = heat_kernel(x[:, None], x[None, :], t - s, sigma)
    values = (rho0.values * rho0.grid.quadrature_weights) @ kernel
    total = integrate(values, rho0.grid)
    if not total > 0:
        raise NumericalError("Heat oracle produced no mass; the kernel is unresolved on this grid.")
    return GridDensity(values * (rho0.mass / total), rho0.grid)


@dataclass(frozen=True)
class TimeContinuityReport:
    deltas: tuple
    moduli: tuple
    monotone: bool


def check_time_continuity(path: DensityPath, w: WeightField, strides=(4, 2, 1),
                          floor: float = 1e-12) -> TimeContinuityReport:
    """
    Modulus of continuity in time of a saved path, over a sweep of lags.

    For each stride k the lag is delta = k * (save spacing), and the modulus
    is the largest ||rho_{t+delta} - rho_t|| + ||D rho_{t+delta} - D rho_t||
    (both in L2(gamma)) over saved pairs. The saves must be equally spaced.

    Args:
        path (DensityPath): The path.
        w (WeightField): Weight defining the norms.
        strides: Lags in save steps, largest first.
        floor (float): Rounding level for the monotone check.

    Returns:
        TimeContinuityReport: Lags, moduli and whether they decay with the lag.
    """
    times = np.asarray(path.times)
    spacing = np.diff(times)
    if len(times) < max(strides) + 1 or not np.allclose(spacing, spacing[0], rtol=1e-9, atol=0.0):
        raise ValueError("check_time_continuity needs enough equally spaced saves for every stride.")

    derivatives = [central_derivative(d.values, w.grid) for d in path.densities]
    moduli = []
    for k in strides:
        modulus = 0.0
        for i in range(len(times) - k):
            gap = weighted_l2_norm(path.densities[i + k].values - path.densities[i].values, w)
            gap += weighted_l2_norm(derivatives[i + k] - derivatives[i], w)
            modulus = max(modulus, gap)
        moduli.append(modulus)
    return TimeContinuityReport(
        deltas=tuple(k * float(spacing[0]) for k in strides),
        moduli=tuple(moduli),
        monotone=is_nonincreasing(moduli, floor=floor),
    )


@dataclass(frozen=True)
class RelaxedLinearityReport:
    field_gap: float
    step_gap: float
    step_bound: float
    holds: bool


def check_relaxed_linearity(rho: GridDensity, t: float, dt: float, alpha: RelaxedControl,
                            spec: ProblemSpec, scheme: str = DEFAULT_SCHEME,
                            slack: float = 1e-12) -> RelaxedLinearityReport:
    """
    Checks that a mixture control acts as the mixture of its atoms.

    The drift field of the mixture must equal the weighted sum of the atom
    drift fields to 1e-12. One step under the mixture must match the weighted
    sum of the single-atom steps in L1 up to the flux nonlinearity of the
    scheme: 2 dt max|b| TV(rho) for upwinding, and
    dt h max|b|^2 TV(rho) / (3 sigma^2) for exponential fitting.
    """
    grid = rho.grid
    pure = [RelaxedControl.pure(j, spec.n_atoms) for j in range(spec.n_atoms)]
    mixed_field = drift_field(spec, t, rho, alpha)
    atom_fields = [drift_field(spec, t, rho, p) for p in pure]
    combined_field = sum(p * f for p, f in zip(alpha.weights, atom_fields))
    field_gap = float(np.abs(mixed_field - combined_field).max())

    mixed_step = fokker_planck_step(rho, t, dt, alpha, spec, scheme).values
    combined_step = sum(
        p * fokker_planck_step(rho, t, dt, control, spec, scheme).values
        for p, control in zip(alpha.weights, pure) if p > 0.0
    )
    step_gap = integrate(np.abs(mixed_step - combined_step), grid)

    max_drift = max(float(np.abs(f).max()) for f in atom_fields)
    total_variation = float(np.abs(np.diff(rho.values)).sum())
    if scheme == "upwind":
        step_bound = 2.0 * dt * max_drift * total_variation
    else:
        step_bound = dt * grid.h * max_drift ** 2 * total_variation / (3.0 * spec.sigma ** 2)
    step_bound += slack
    return RelaxedLinearityReport(
        field_gap=field_gap,
        step_gap=step_gap,
        step_bound=step_bound,
        holds=field_gap <= 1e-12 and step_gap <= step_bound,
    )
