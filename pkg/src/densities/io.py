import logging
import re
from pathlib import Path

import numpy as np
import pandas as pd

from src.utils.exceptions import DensityError
from src.weightspace import Grid
from .density import GridDensity
from .particles import ParticleEnsemble

logger = logging.getLogger(__name__)

_SEED_HEADER = re.compile(r"#\s*seed=(-?\d+)")


def save_density_csv(rho: GridDensity, file_path: str | Path):
    """Writes a density as two columns (x, value)."""
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({"x": rho.grid.nodes, "value": rho.values}).to_csv(file_path, index=False)
    logger.debug(f"Density saved to {file_path}")


def load_density_csv(file_path: str | Path) -> GridDensity:
    """
    Reads a two-column (x, value) density file and rebuilds its grid.

    Raises:
        DensityError: If the x column is not a uniform grid.
    """
    df = pd.read_csv(file_path)
    x = df["x"].to_numpy(dtype=float)
    grid = Grid(float(x[0]), float(x[-1]), len(x))
    if not np.allclose(x, grid.nodes, rtol=0.0, atol=1e-9 * max(1.0, grid.upper - grid.lower)):
        raise DensityError(f"{file_path} does not hold a uniform grid.")
    return GridDensity(df["value"].to_numpy(dtype=float), grid)


def save_ensemble_csv(ensemble: ParticleEnsemble, file_path: str | Path):
    """Writes one column per dimension after a '# seed=<int>' header line."""
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    columns = ["x"] if ensemble.dim == 1 else [f"x{k}" for k in range(ensemble.dim)]
    with open(file_path, "w", newline="") as f:
        f.write(f"# seed={ensemble.seed}\n")
        pd.DataFrame(ensemble.positions, columns=columns).to_csv(f, index=False)


def load_ensemble_csv(file_path: str | Path) -> ParticleEnsemble:
    with open(file_path, "r") as f:
        header = f.readline()
        match = _SEED_HEADER.match(header.strip())
        if match is None:
            raise DensityError(f"{file_path} is missing the '# seed=' header line.")
        df = pd.read_csv(f)
    return ParticleEnsemble(df.to_numpy(dtype=float), int(match.group(1)))


def save_density_path_csv(times, densities, file_path: str | Path):
    """Writes a sequence of densities in long form (t, x, value)."""
    frames = [
        pd.DataFrame({"t": np.full(rho.grid.n, t), "x": rho.grid.nodes, "value": rho.values})
        for t, rho in zip(times, densities)
    ]
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    pd.concat(frames, ignore_index=True).to_csv(file_path, index=False)
