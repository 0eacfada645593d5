import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from src.calculus import MortensenDerivative, derivative_weighted_energy
from src.densities import GridDensity
from src.dynamics import ProblemSpec
from src.utils.exceptions import ConfigError, GridMismatchError
from src.utils.numerics import is_nonincreasing
from src.weightspace import Grid, WeightField, as_grid_values, central_derivative, integrate, weighted_energy
from .hamiltonian import DerivativeProbeConfig, estimate_derivative, min_hamiltonian, time_derivative

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TestFunctional:
    """
    A smooth test functional psi(t, rho) with its time and density derivatives.

    Attributes:
        value (Callable): (t, rho) -> psi.
        time_derivative (Callable): (t, rho) -> d psi / dt.
        derivative (Callable): (t, rho) -> MortensenDerivative of psi in rho.
        family (str): Family tag, e.g. "linear" or "linear+energy".
        grid (Grid): The grid.
        smooth (bool): Whether the family is known to satisfy the regularity conditions.
    """
    __test__ = False

    value: Callable
    time_derivative: Callable
    derivative: Callable
    family: str
    grid: Grid
    smooth: bool = True

    def __call__(self, t: float, rho) -> float:
        return float(self.value(t, rho))


def linear_test_functional(kernel, grid: Grid, time_slope: float = 0.0, offset: float = 0.0) -> TestFunctional:
    """psi(t, rho) = offset + time_slope * t + integral kernel * rho."""
    k = as_grid_values(kernel, grid).copy()
    zeros = np.zeros(grid.n)
    return TestFunctional(
        value=lambda t, rho: offset + time_slope * t + integrate(k * as_grid_values(rho, grid), grid),
        time_derivative=lambda t, rho: time_slope,
        derivative=lambda t, rho: MortensenDerivative(k, zeros, grid),
        family="linear",
        grid=grid,
    )


def energy_test_functional(rho_hat, scale: float, w: WeightField) -> TestFunctional:
    """psi(t, rho) = scale * ||rho - rho_hat||^2 in the weighted Sobolev norm."""
    anchor = as_grid_values(rho_hat, w.grid).copy()
    return TestFunctional(
        value=lambda t, rho: scale * weighted_energy(as_grid_values(rho, w.grid) - anchor, w),
        time_derivative=lambda t, rho: 0.0,
        derivative=lambda t, rho: derivative_weighted_energy(rho, anchor, w).scaled(scale),
        family="energy",
        grid=w.grid,
    )


def time_quadratic_test_functional(t0: float, scale: float, grid: Grid) -> TestFunctional:
    """psi(t, rho) = scale * (t - t0)^2."""
    zeros = np.zeros(grid.n)
    return TestFunctional(
        value=lambda t, rho: scale * (t - t0) ** 2,
        time_derivative=lambda t, rho: 2.0 * scale * (t - t0),
        derivative=lambda t, rho: MortensenDerivative(zeros, zeros, grid),
        family="time-quadratic",
        grid=grid,
    )


def combine(*functionals: TestFunctional) -> TestFunctional:
    """Sum of test functionals on a common grid."""
    if not functionals:
        raise ValueError("combine needs at least one test functional.")
    grid = functionals[0].grid
    if any(psi.grid != grid for psi in functionals):
        raise GridMismatchError("Combined test functionals must share a grid.")

    def derivative(t, rho):
        total = functionals[0].derivative(t, rho)
        for psi in functionals[1:]:
            total = total + psi.derivative(t, rho)
        return total

    return TestFunctional(
        value=lambda t, rho: sum(psi.value(t, rho) for psi in functionals),
        time_derivative=lambda t, rho: sum(psi.time_derivative(t, rho) for psi in functionals),
        derivative=derivative,
        family="+".join(psi.family for psi in functionals),
        grid=grid,
        smooth=all(psi.smooth for psi in functionals),
    )


@dataclass(frozen=True)
class RegularityReport:
    integrability: float
    finite: bool
    continuity_gaps: tuple
    continuous: bool

    @property
    def passed(self) -> bool:
        return self.finite and self.continuous


def _gradient_energy(d: MortensenDerivative, w: WeightField) -> float:
    return integrate(central_derivative(d.F, w.grid) ** 2 / w.gamma, w.grid)


def check_test_functional_regularity(psi: TestFunctional, t: float, rho, w: WeightField, directions,
                                     eps_levels=(1e-2, 1e-3, 1e-4), floor: float = 1e-12) -> RegularityReport:
    """
    Integrability of D(F) against 1/gamma and its continuity in rho.

    Q(rho) = integral |D F(x)|^2 / gamma(x) must be finite, and for each
    direction the gaps |Q(rho + eps*phi) - Q(rho)| must decay over the eps sweep.
    """
    base = as_grid_values(rho, w.grid)
    q0 = _gradient_energy(psi.derivative(t, base), w)
    gaps = []
    continuous = True
    for phi in directions:
        phi = as_grid_values(phi, w.grid)
        sweep = [abs(_gradient_energy(psi.derivative(t, base + eps * phi), w) - q0) for eps in eps_levels]
        gaps.append(tuple(sweep))
        continuous = continuous and is_nonincreasing(sweep, floor=floor)
    return RegularityReport(
        integrability=float(q0),
        finite=bool(np.isfinite(q0)),
        continuity_gaps=tuple(gaps),
        continuous=continuous,
    )


@dataclass(frozen=True)
class ViscosityReport:
    kind: str
    sign_value: float
    touch_excess: float
    touch_tolerance: float
    touching: bool
    tolerance: float
    passed: bool


def touching_functional(estimate, dV_dt: float, t0: float, rho0: GridDensity, w: WeightField,
                        penalty: float, kind: str) -> TestFunctional:
    """
    Test functional matching V to first order at (t0, rho0), curved away from V.

    psi = V(t0, rho0) + dV/dt (t - t0) + <F_V, rho - rho0>
          +- penalty (||rho - rho0||^2 + (t - t0)^2),
    with + for "sub" (touching from above) and - for "super".
    """
    if kind not in ("sub", "super"):
        raise ConfigError(f"kind must be 'sub' or 'super', got '{kind}'.")
    sign = 1.0 if kind == "sub" else -1.0
    kernel = estimate.derivative.F
    offset = estimate.base_value - dV_dt * t0 - integrate(kernel * rho0.values, rho0.grid)
    return combine(
        linear_test_functional(kernel, rho0.grid, time_slope=dV_dt, offset=offset),
        energy_test_functional(rho0, sign * penalty, w),
        time_quadratic_test_functional(t0, sign * penalty, rho0.grid),
    )


def check_viscosity(V_eval: Callable, t0: float, rho0: GridDensity, spec: ProblemSpec, w: WeightField,
                    probe: DerivativeProbeConfig, kind: str = "sub", penalty: float = 1.0) -> ViscosityReport:
    """
    Sub- or supersolution sign condition at a probe point.

    A test functional psi touching V at (t0, rho0) is built from the probed
    derivatives of V. Touching is verified on the probe neighbours and on
    the two time neighbours: V - psi must not exceed its value at the
    point (sub) or fall below it (super) by more than `touch_tolerance`.
    The sign quantity is -d psi/dt - min H(t0, rho0, D psi); a subsolution
    needs it <= tol and a supersolution >= -tol.

    Args:
        V_eval (Callable): Rule (t, rho) -> value.
        t0 (float): Interior time.
        rho0 (GridDensity): Density.
        spec (ProblemSpec): The problem.
        w (WeightField): Weight on the density's grid.
        probe (DerivativeProbeConfig): Probe design and tolerance.
        kind (str): "sub" or "super".
        penalty (float): Curvature of psi away from the touching point.

    Returns:
        ViscosityReport: Touching diagnostics and the sign condition.
    """
    estimate = estimate_derivative(V_eval, t0, rho0, probe)
    dV_dt = time_derivative(V_eval, t0, rho0, probe.time_step, spec.T)
    psi = touching_functional(estimate, dV_dt, t0, rho0, w, penalty, kind)

    neighbours = [(t0, density, v) for density, v in estimate.neighbours]
    for t in (t0 - probe.time_step, t0 + probe.time_step):
        if 0.0 <= t <= spec.T:
            neighbours.append((t, rho0, V_eval(t, rho0)))
    sign = 1.0 if kind == "sub" else -1.0
    centre = estimate.base_value - psi(t0, rho0)
    excess = max(sign * ((v - psi(t, density)) - centre) for t, density, v in neighbours)
    spread = max(abs(v - estimate.base_value) for _, _, v in neighbours)
    touch_tolerance = probe.tolerance * spread + 1e-10

    h_min, _ = min_hamiltonian(t0, rho0, psi.derivative(t0, rho0), spec, w)
    sign_value = -psi.time_derivative(t0, rho0) - h_min
    holds = sign_value <= probe.tolerance if kind == "sub" else sign_value >= -probe.tolerance
    touching = excess <= touch_tolerance
    logger.debug(f"{kind}solution check at t={t0:g}: sign value {sign_value:.3e}, touch excess {excess:.3e}")
    return ViscosityReport(
        kind=kind,
        sign_value=float(sign_value),
        touch_excess=float(excess),
        touch_tolerance=float(touch_tolerance),
        touching=touching,
        tolerance=probe.tolerance,
        passed=touching and holds,
    )
