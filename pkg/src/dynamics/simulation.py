import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from src.densities import GridDensity, ParticleEnsemble, kde, sample_density, silverman_bandwidth
from src.utils.exceptions import ConfigError, NumericalError
from src.weightspace import Grid
from .fokker_planck import DEFAULT_DT, DensityPath, evolve
from .problem import Control, FeedbackTable, PolicySchedule, ProblemSpec

logger = logging.getLogger(__name__)

DEFAULT_PARTICLE_DT = 1e-3
DEFAULT_CHUNK_SIZE = 16384
ENVELOPE_MARGIN = 0.25
VIOLATION_LIMIT = 0.05


def _sample_atoms(control: Control, positions: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draws one atom index per particle from the control's weights."""
    if isinstance(control, FeedbackTable):
        cells = control.grid.cell_index(positions[:, 0])
        cumulative = np.cumsum(control.weights, axis=1)[cells]
    else:
        if np.count_nonzero(control.weights) == 1:
            return np.full(positions.shape[0], int(np.argmax(control.weights)))
        cumulative = np.broadcast_to(np.cumsum(control.weights), (positions.shape[0], control.weights.size))
    u = rng.random(positions.shape[0])
    idx = (u[:, None] >= cumulative).sum(axis=1)
    return np.minimum(idx, cumulative.shape[1] - 1)


def _drift(spec: ProblemSpec, t: float, positions: np.ndarray, measure, atom_idx: np.ndarray) -> np.ndarray:
    drift = np.zeros_like(positions)
    one_dim = positions.shape[1] == 1
    for j in np.unique(atom_idx):
        mask = atom_idx == j
        x = positions[mask, 0] if one_dim else positions[mask]
        values = np.asarray(spec.b(t, x, measure, spec.atoms[j]), dtype=float)
        drift[mask] = np.broadcast_to(values, x.shape).reshape(-1, positions.shape[1])
    return drift


def _measure_at(path: DensityPath, t: float) -> GridDensity:
    index = int(np.searchsorted(path.times, t + 1e-12, side="right")) - 1
    return path.densities[max(index, 0)]


def particle_simulate(rho0, s: float, t: float, policy: PolicySchedule, spec: ProblemSpec,
                      N: int | None, seed: int, dt: float = DEFAULT_PARTICLE_DT,
                      grid: Grid | None = None, bandwidth: float | None = None,
                      chunk_size: int = DEFAULT_CHUNK_SIZE, max_workers: int = 1,
                      measure_path: DensityPath | None = None) -> ParticleEnsemble:
    """
    Euler-Maruyama simulation of the controlled mean-field SDE.

    At every step the drift's measure argument is the KDE of the current
    ensemble on `grid` (d = 1), the ensemble itself (d >= 2), or the saved
    density of `measure_path` at or before the current time when one is
    given. Each particle draws its atom from the relaxed control in force.

    Particles are processed in fixed chunks. Chunk k owns the k-th child of
    SeedSequence(seed) for the whole run, so results do not depend on
    `max_workers`.

    Args:
        rho0 (GridDensity | ParticleEnsemble): Initial law. A grid density is
            sampled with N particles; an ensemble is used as given.
        s (float): Start time.
        t (float): End time.
        policy (PolicySchedule): Controls covering [s, t].
        spec (ProblemSpec): The problem.
        N (int | None): Number of particles when sampling from a density.
        seed (int): Seed of all random draws.
        dt (float): Largest time step.
        grid (Grid | None): KDE grid, defaults to the density's grid.
        bandwidth (float | None): KDE bandwidth, Silverman's rule by default.
        chunk_size (int): Particles per random stream.
        max_workers (int): Threads used to advance the chunks.
        measure_path (DensityPath | None): Fixed measure flow replacing the KDE.

    Returns:
        ParticleEnsemble: The ensemble at time t.
    """
    if not s < t:
        raise ConfigError(f"particle_simulate needs s < t, got s={s}, t={t}.")
    root = np.random.SeedSequence(seed)
    init_seq, step_seq = root.spawn(2)
    if isinstance(rho0, ParticleEnsemble):
        positions = np.array(rho0.positions)
    else:
        if N is None:
            raise ConfigError("Sampling from a grid density needs a particle count N.")
        grid = grid or rho0.grid
        positions = sample_density(rho0, N, np.random.default_rng(init_seq))[:, None]
    positions = ParticleEnsemble(positions, seed).positions.copy()
    n_particles, dim = positions.shape
    if dim == 1 and grid is None and spec.uses_density and measure_path is None:
        raise ConfigError("A one-dimensional ensemble with a density-dependent drift needs a KDE grid.")

    bounds = list(range(0, n_particles, chunk_size)) + [n_particles]
    chunks = list(zip(bounds[:-1], bounds[1:]))
    rngs = [np.random.default_rng(seq) for seq in step_seq.spawn(len(chunks))]
    logger.debug(f"Simulating {n_particles} particles in {len(chunks)} chunks from t={s} to t={t}.")

    def advance(k, now, step, control, measure):
        lo, hi = chunks[k]
        block = positions[lo:hi]
        atoms = _sample_atoms(control, block, rngs[k])
        noise = rngs[k].standard_normal(block.shape)
        block += _drift(spec, now, block, measure, atoms) * step + spec.sigma * math.sqrt(step) * noise

    executor = ThreadPoolExecutor(max_workers=max_workers) if max_workers > 1 else None
    try:
        for t0, t1, control in policy.intervals(s, t):
            n_steps = max(1, math.ceil((t1 - t0) / dt - 1e-9))
            step = (t1 - t0) / n_steps
            for i in range(n_steps):
                now = t0 + i * step
                measure = None
                if measure_path is not None:
                    measure = _measure_at(measure_path, now)
                elif spec.uses_density:
                    current = ParticleEnsemble(positions, seed)
                    if dim == 1:
                        bw = bandwidth or silverman_bandwidth(positions[:, 0])
                        measure = kde(current, bw, grid)
                    else:
                        measure = current
                if executor is None:
                    for k in range(len(chunks)):
                        advance(k, now, step, control, measure)
                else:
                    list(executor.map(lambda k: advance(k, now, step, control, measure), range(len(chunks))))
                if not np.all(np.isfinite(positions)):
                    bad = int(np.count_nonzero(~np.isfinite(positions).all(axis=1)))
                    raise NumericalError(
                        f"{bad} particle positions became non-finite at t={now + step:g} "
                        f"(problem '{spec.name}', dt={step:g})."
                    )
    finally:
        if executor is not None:
            executor.shutdown()
    return ParticleEnsemble(positions, seed)


@dataclass(frozen=True)
class GaussianBoundReport:
    """
    Fitted two-sided Gaussian envelopes for the transition density.

    Envelopes are kappa1 * tau^(-1/2) * exp(-kappa2 r^2 / tau) from above and
    tau^(-1/2) * exp(-r^2 / (kappa2 tau)) / kappa1 from below.
    """
    intercept: float
    rate: float
    kappa1: float
    kappa2: float
    max_violation: float
    n_samples: int
    degenerate: bool
    passed: bool


def _degenerate_report(n_samples: int) -> GaussianBoundReport:
    logger.warning(f"Degenerate Gaussian envelope fit ({n_samples} usable samples).")
    return GaussianBoundReport(
        intercept=float("nan"), rate=float("nan"), kappa1=float("nan"), kappa2=float("nan"),
        max_violation=float("inf"), n_samples=n_samples, degenerate=True, passed=False,
    )


def gaussian_bound_check(rho0: GridDensity, policy: PolicySchedule, spec: ProblemSpec, t: float,
                         N: int = 20000, seed: int = 0, dt: float = DEFAULT_PARTICLE_DT,
                         offsets=(-0.5, 0.0, 0.5), margin: float = ENVELOPE_MARGIN,
                         violation_limit: float = VIOLATION_LIMIT) -> GaussianBoundReport:
    """
    Two-sided Gaussian envelope check for the controlled transition density.

    Point-like bumps of N particles start at mean(rho0) + offsets and are
    simulated to the horizons t/4, t/2 and t. At each horizon tau the KDE of
    the cloud is sampled at distances r <= 2 sigma sqrt(tau) from the start,
    and log p + log(tau)/2 = a - c r^2 / tau is fitted by least squares.
    Then kappa1 = max(e^a, e^-a)(1 + margin) and kappa2 = min(c, 1/c) / (1 + margin).
    For a density-dependent drift the measure flow is the one started from rho0.

    Args:
        rho0 (GridDensity): Initial law; fixes the starts and the measure flow.
        policy (PolicySchedule): Controls from policy.start.
        spec (ProblemSpec): The problem.
        t (float): Elapsed time of the longest horizon.
        N (int): Particles per bump.
        seed (int): Seed; every bump and segment draws its own derived seed.
        dt (float): Particle time step.
        offsets: Start offsets from the mean of rho0.
        margin (float): Relative widening of the fitted constants.
        violation_limit (float): Largest relative envelope violation that passes.

    Returns:
        GaussianBoundReport: Fitted constants, worst violation and verdict.
    """
    grid = rho0.grid
    s = policy.start
    horizons = [s + t / 4.0, s + t / 2.0, s + t]
    measure_path = None
    if spec.uses_density:
        pde_dt = min(dt, DEFAULT_DT)
        measure_path = evolve(rho0, s, s + t, policy, spec, dt=pde_dt,
                              save_every=max(1, int(round(dt / pde_dt))))
    seeds = np.random.SeedSequence(seed).generate_state(len(offsets) * len(horizons))

    clouds = []
    for index, offset in enumerate(offsets):
        x0 = rho0.mean + offset
        ensemble = ParticleEnsemble(np.full(N, x0), seed)
        start = s
        for segment, horizon in enumerate(horizons):
            segment_seed = int(seeds[index * len(horizons) + segment])
            ensemble = particle_simulate(ensemble, start, horizon, policy, spec, None, segment_seed,
                                         dt=dt, grid=grid, measure_path=measure_path)
            clouds.append((x0, horizon - s, ensemble))
            start = horizon

    rows, targets, samples = [], [], []
    for x0, tau, ensemble in clouds:
        estimate = kde(ensemble, silverman_bandwidth(ensemble.positions[:, 0]), grid)
        r = np.abs(grid.nodes - x0)
        keep = (r <= 2.0 * spec.sigma * np.sqrt(tau)) & (estimate.values > 1e-12)
        for ri, pi in zip(r[keep], estimate.values[keep]):
            rows.append([1.0, -ri ** 2 / tau])
            targets.append(np.log(pi) + 0.5 * np.log(tau))
            samples.append((ri, tau, pi))

    if len(rows) < 3:
        return _degenerate_report(len(rows))
    (a, c), *_ = np.linalg.lstsq(np.array(rows), np.array(targets), rcond=None)
    if not (np.isfinite(a) and np.isfinite(c) and c > 0):
        return _degenerate_report(len(rows))

    kappa1 = max(np.exp(a), np.exp(-a)) * (1.0 + margin)
    kappa2 = min(c, 1.0 / c) / (1.0 + margin)
    worst = 0.0
    for r, tau, p in samples:
        upper = kappa1 / np.sqrt(tau) * np.exp(-kappa2 * r ** 2 / tau)
        lower = np.exp(-r ** 2 / (kappa2 * tau)) / (kappa1 * np.sqrt(tau))
        if p > upper:
            worst = max(worst, (p - upper) / upper)
        if p < lower:
            worst = max(worst, (lower - p) / lower)
    report = GaussianBoundReport(
        intercept=float(a), rate=float(c), kappa1=float(kappa1), kappa2=float(kappa2),
        max_violation=float(worst), n_samples=len(samples), degenerate=False,
        passed=worst <= violation_limit,
    )
    logger.info(f"Gaussian envelopes for '{spec.name}': kappa1={kappa1:.4g}, kappa2={kappa2:.4g}, "
                f"violation={worst:.3e}")
    return report
