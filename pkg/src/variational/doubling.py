import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import pandas as pd

from src.densities import GridDensity
from src.utils.exceptions import ConfigError
from src.utils.numerics import is_nonincreasing
from src.weightspace import WeightField, require_same_grid, weighted_energy
from .borwein_preiss import BPResult, borwein_preiss
from .metric_space import dictionary_gaps, ProductMetricSpace

logger = logging.getLogger(__name__)

MAXIMIZER_TOLERANCE = 1e-12


def proof_alpha(eps: float) -> float:
    """The penalty weight 4 sqrt(eps) + eps^(1/4) used when sending eps to zero."""
    return 4.0 * np.sqrt(eps) + eps ** 0.25


@dataclass(frozen=True)
class DoublingParams:
    """
    Parameters of the doubled auxiliary function.

    alpha_tilde, beta, lam, theta and eps lie in (0, 1); eta > 0; T is the horizon.
    """
    alpha_tilde: float
    beta: float
    lam: float
    theta: float
    eta: float
    eps: float
    T: float

    def __post_init__(self):
        for name in ("alpha_tilde", "beta", "lam", "theta", "eps"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ConfigError(f"Doubling parameter '{name}' must lie in (0, 1), got {v}.")
        if not self.eta > 0:
            raise ConfigError(f"Doubling parameter 'eta' must be positive, got {self.eta}.")
        if not self.T > 0:
            raise ConfigError(f"Horizon must be positive, got {self.T}.")

    def with_theta(self, theta: float) -> "DoublingParams":
        return replace(self, theta=theta)


def build_phi(t: float, s: float, rho: GridDensity, chi: GridDensity, W_eval: Callable, V_eval: Callable,
              params: DoublingParams, w: WeightField) -> float:
    """
    The doubled auxiliary function at (t, s, rho, chi).

    Phi = W(t, rho) - V(s, chi)
          - alpha_tilde e^{eta (2T - t - s)} (||rho||^2 + ||chi||^2)
          - beta (2T - s - t) - lam / t - lam / s
          - (||rho - chi||^2 + |t - s|^2) / (2 theta),
    with ||.||^2 the weighted energy.

    Raises:
        ConfigError: If t or s is not positive.
    """
    if t <= 0 or s <= 0:
        raise ConfigError(f"Doubled times must be positive, got t={t}, s={s}.")
    require_same_grid(rho, chi)
    p = params
    growth = p.alpha_tilde * np.exp(p.eta * (2 * p.T - t - s)) * (weighted_energy(rho.values, w)
                                                                 + weighted_energy(chi.values, w))
    coupling = (weighted_energy(rho.values - chi.values, w) + (t - s) ** 2) / (2 * p.theta)
    return float(W_eval(t, rho) - V_eval(s, chi) - growth - p.beta * (2 * p.T - s - t)
                 - p.lam / t - p.lam / s - coupling)


def _tabulate(rule: Callable, times, dictionary, max_workers: int | None) -> np.ndarray:
    jobs = [(i, a) for i in range(len(times)) for a in range(len(dictionary))]
    table = np.empty((len(times), len(dictionary)))

    def evaluate(job):
        i, a = job
        return rule(float(times[i]), dictionary[a])

    if max_workers:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            results = list(executor.map(evaluate, jobs))
    else:
        results = [evaluate(job) for job in jobs]
    for (i, a), v in zip(jobs, results):
        table[i, a] = v
    if not np.all(np.isfinite(table)):
        raise ConfigError("Rules must be finite on the probe set.")
    return table


def _phi_table(W_table, V_table, times, energies, couplings, params: DoublingParams) -> np.ndarray:
    t = times[:, None, None, None]
    s = times[None, :, None, None]
    p = params
    phi = (
        W_table[:, None, :, None]
        - V_table[None, :, None, :]
        - p.alpha_tilde * np.exp(p.eta * (2 * p.T - t - s)) * (energies[None, None, :, None] + energies[None, None, None, :])
        - p.beta * (2 * p.T - s - t)
        - p.lam / t - p.lam / s
        - (couplings[None, None, :, :] + (t - s) ** 2) / (2 * p.theta)
    )
    return phi.ravel()


@dataclass(frozen=True)
class DoublingRecord:
    theta: float
    t_eps: float
    s_eps: float
    rho_index: int
    chi_index: int
    h5_lhs: float
    h5_rhs: float
    h8_quantity: float
    h9_quantity: float
    case: int
    h5_ok: bool
    h9_ok: bool
    maximizer_ok: bool
    certificate_ok: bool


@dataclass(frozen=True, eq=False)
class DoublingReport:
    records: tuple
    M: float
    M1: float
    slack: float
    h8_monotone: bool
    h9_ok: bool
    bp_results: tuple

    @property
    def passed(self) -> bool:
        return (self.h8_monotone and self.h9_ok
                and all(r.h5_ok and r.maximizer_ok and r.certificate_ok for r in self.records))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.records])

    def save_csv(self, path: str | Path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False)
        logger.info(f"Doubling records saved to {path}")


def doubling_experiment(W_eval: Callable, V_eval: Callable, dictionary: Sequence[GridDensity], time_grid,
                        params: DoublingParams, w: WeightField, thetas=(1e-1, 1e-2, 1e-3),
                        slack_factor: float = 1.0, max_workers: int | None = None) -> DoublingReport:
    """
    Doubling-of-variables harness on time_grid^2 x dictionary^2.

    W and V are tabulated once on the probe set. For each theta (largest
    first) the auxiliary function is maximised exhaustively, a perturbed
    maximum is built around that maximiser, and the maximiser of
    Phi - sqrt(eps) Delta is recorded together with the growth bound

        (alpha_tilde - 4 sqrt(eps)) (||rho||^2 + ||chi||^2) <= M1
        M1 = 2M + 10 ||rho_0||^2 + 2 + 8 T^2,

    the coupling |t - s|^2 + ||rho - chi||^2 (expected nonincreasing along
    the sweep) and that coupling divided by theta, which at the smallest
    theta must stay below 4 eps plus a slack proportional to the smallest
    gap between dictionary elements. rho_0 is the dictionary element of
    smallest norm and M the largest |W| or |V| on the probe set.

    Args:
        W_eval, V_eval (Callable): Rules (t, rho) -> value.
        dictionary (Sequence[GridDensity]): Densities on a common grid.
        time_grid: Times in (0, T]; T is appended when missing.
        params (DoublingParams): Parameters; `theta` is overridden by the sweep.
        w (WeightField): Weight on the dictionary's grid.
        thetas: Penalty sweep.
        slack_factor (float): Multiplier of the dictionary spacing in the final check.
        max_workers (int, optional): Threads for tabulating W and V.

    Returns:
        DoublingReport: Per-theta records and the trend verdicts.

    Raises:
        ConfigError: If alpha_tilde <= 4 sqrt(eps) or the probe set is invalid.
    """
    eps = params.eps
    if params.alpha_tilde <= 4.0 * np.sqrt(eps):
        raise ConfigError(f"alpha_tilde must exceed 4 sqrt(eps) = {4 * np.sqrt(eps):.4g}, got {params.alpha_tilde}.")
    if not dictionary:
        raise ConfigError("The density dictionary is empty.")
    for density in dictionary[1:]:
        require_same_grid(dictionary[0], density)
    require_same_grid(dictionary[0], w)
    times = np.unique(np.asarray(time_grid, dtype=float))
    if times.size == 0 or times[0] <= 0 or times[-1] > params.T + 1e-12:
        raise ConfigError(f"Time grid must lie in (0, {params.T}], got {time_grid}.")
    if not np.isclose(times[-1], params.T, rtol=0.0, atol=1e-12):
        times = np.append(times, params.T)

    W_table = _tabulate(W_eval, times, dictionary, max_workers)
    V_table = _tabulate(V_eval, times, dictionary, max_workers)
    M = float(max(np.abs(W_table).max(), np.abs(V_table).max()))

    energies = np.array([weighted_energy(d.values, w) for d in dictionary])
    gaps = dictionary_gaps(dictionary, w)
    couplings = np.array([[weighted_energy(a.values - b.values, w) for b in dictionary] for a in dictionary])
    M1 = 2 * M + 10 * energies.min() + 2 + 8 * params.T ** 2
    off_diagonal = gaps[~np.eye(len(dictionary), dtype=bool)]
    slack = slack_factor * float(off_diagonal.min()) if off_diagonal.size else 0.0
    space = ProductMetricSpace(times, gaps)
    logger.info(f"Doubling on {len(space)} points: M={M:.4g}, M1={M1:.4g}, slack={slack:.3g}")

    records, bp_results = [], []
    for theta in sorted(thetas, reverse=True):
        p = params.with_theta(theta)
        phi = _phi_table(W_table, V_table, times, energies, couplings, p)
        y0 = int(np.argmax(phi))
        bp: BPResult = borwein_preiss(space, phi, eps, y0)
        perturbed = phi - np.sqrt(eps) * bp.delta
        k = int(np.argmax(perturbed))
        i, j, a, b = space.points[k]
        t_eps, s_eps = float(times[i]), float(times[j])
        h5_lhs = (p.alpha_tilde - 4 * np.sqrt(eps)) * (energies[a] + energies[b])
        h8 = (t_eps - s_eps) ** 2 + couplings[a, b]
        h9 = h8 / theta
        records.append(DoublingRecord(
            theta=theta, t_eps=t_eps, s_eps=s_eps, rho_index=a, chi_index=b,
            h5_lhs=float(h5_lhs), h5_rhs=float(M1), h8_quantity=float(h8), h9_quantity=float(h9),
            case=1 if max(t_eps, s_eps) >= params.T - 1e-12 else 2,
            h5_ok=bool(h5_lhs <= M1),
            h9_ok=bool(h9 <= 4 * eps + slack),
            maximizer_ok=bool(perturbed[bp.y_eps] >= perturbed[k] - MAXIMIZER_TOLERANCE),
            certificate_ok=bp.certificate.passed,
        ))
        bp_results.append(bp)
        logger.debug(f"theta={theta:g}: maximiser (t={t_eps:g}, s={s_eps:g}, rho={a}, chi={b}), h8={h8:.3e}")

    h8_values = [r.h8_quantity for r in records]
    report = DoublingReport(
        records=tuple(records),
        M=M,
        M1=float(M1),
        slack=slack,
        h8_monotone=is_nonincreasing(h8_values, floor=1e-12),
        h9_ok=records[-1].h9_ok,
        bp_results=tuple(bp_results),
    )
    if not report.passed:
        logger.warning(f"Doubling harness failed: h8 trend {h8_values}, final h9 {records[-1].h9_quantity:.3e}")
    return report


def comparison_gap(W_eval: Callable, V_eval: Callable, probes) -> float:
    """max over probes (t, rho) of W(t, rho) - V(t, rho)."""
    probes = list(probes)
    if not probes:
        raise ConfigError("comparison_gap needs at least one probe.")
    return float(max(W_eval(t, rho) - V_eval(t, rho) for t, rho in probes))


def uniqueness_gap(W_eval: Callable, V_eval: Callable, probes) -> float:
    """Largest one-sided gap in either direction; zero when W and V agree on the probes."""
    probes = list(probes)
    return max(comparison_gap(W_eval, V_eval, probes), comparison_gap(V_eval, W_eval, probes))
