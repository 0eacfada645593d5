import copy
import hashlib
import json
import logging
import os
import re
import yaml
from pathlib import Path
from types import SimpleNamespace
from dotenv import load_dotenv

from src.utils.exceptions import ConfigError, StabilityError

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "MKV_OUTPUT_DIR"
REQUIRED_KEYS = (("grid", "lower"), ("grid", "upper"), ("grid", "n"), ("problem", "name"))

DEFAULT_CONFIG = {
    "grid": {"lower": -8.0, "upper": 8.0, "n": 513},
    "weight": {"kappa4_refinement": 16},
    "problem": {"name": "signed-drift", "sigma": 1.0, "horizon": 0.5, "cost_rate": 1.0, "clip": 3.0, "coupling": 1.0},
    "dynamics": {"dt": 1e-4, "save_every": 500, "scheme": "exponential-fitting"},
    "search": {"pieces": 2, "mixture_levels": 0, "max_rollouts": 4096},
    "probe": {
        "n_probes": 6, "eps": 1e-3, "ridge": 1e-8, "time_step": 0.01, "basis_degree": 3,
        "width_factor": 0.5, "condition_limit": 1e8, "tolerance": 0.05, "points": 5,
    },
    "particles": {"n_particles": 10000, "dt": 1e-3, "seed": 42, "bandwidth": None, "chunk_size": 16384},
    "doubling": {
        "eps": 0.01, "beta": 0.01, "lam": 0.001, "eta": 1.0, "thetas": [0.1, 0.01, 0.001],
        "time_grid": [0.125, 0.25, 0.375, 0.5], "dictionary_means": [-0.5, 0.0, 0.5],
        "dictionary_variances": [0.15, 0.3], "slack_factor": 1.0, "alpha_tilde": None,
    },
    "experiments": {
        "seed": 42, "random_pairs": 20, "random_rollouts": 10, "refine": True,
        "heat_horizon": 0.5, "heat_n": 1025, "heat_dt": 1e-4,
    },
    "output": {"dir": "output", "save_figure": False, "progress": False},
}


def _substitute_env_vars(data):
    """
    Recursively substitutes '${VAR_NAME}' placeholders with environment values.
    """
    env_var_pattern = re.compile(r"\$\{(\w+)\}")

    if isinstance(data, dict):
        return {k: _substitute_env_vars(v) for k, v in data.items()}
    elif isinstance(data, list):
        return [_substitute_env_vars(i) for i in data]
    elif isinstance(data, str):
        for var_name in env_var_pattern.findall(data):
            env_value = os.getenv(var_name)
            if env_value is None:
                raise ConfigError(
                    f"Configuration Error: Environment variable '{var_name}' "
                    f"is not set but is required by the config."
                )
            data = data.replace(f"${{{var_name}}}", env_value)
        return data
    return data


def _merge(defaults: dict, overrides: dict, prefix: str = "") -> dict:
    """Deep-merges `overrides` onto `defaults`, rejecting keys the defaults do not know."""
    merged = copy.deepcopy(defaults)
    for key, value in overrides.items():
        path = f"{prefix}{key}"
        if key not in defaults:
            raise ConfigError(f"Unknown configuration key '{path}'.")
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"Configuration key '{path}' must be a section.")
            merged[key] = _merge(defaults[key], value, prefix=f"{path}.")
        else:
            merged[key] = value
    return merged


def _dict_to_namespace(data):
    """
    Recursively converts a dictionary to a nested SimpleNamespace object.
    """
    if isinstance(data, dict):
        return SimpleNamespace(**{k: _dict_to_namespace(v) for k, v in data.items()})
    elif isinstance(data, list):
        return [_dict_to_namespace(item) for item in data]
    return data


def _namespace_to_dict(data):
    if isinstance(data, SimpleNamespace):
        return {k: _namespace_to_dict(v) for k, v in vars(data).items()}
    elif isinstance(data, list):
        return [_namespace_to_dict(item) for item in data]
    elif isinstance(data, Path):
        return str(data)
    return data


def _require(condition: bool, message: str):
    if not condition:
        raise ConfigError(message)


def _check_stability(dt: float, grid, spec, label: str):
    from src.dynamics import stability_bound

    bound = stability_bound(grid, spec.sigma, spec.bounds.K2)
    if dt > bound * (1.0 + 1e-12):
        raise StabilityError(
            f"{label}={dt:g} violates the explicit-scheme stability bound {bound:.4g} "
            f"(h={grid.h:.4g}, sigma={spec.sigma:g}, max drift={spec.bounds.K2:g})."
        )


def validate_config(cfg: dict):
    """
    Checks every value against the preconditions of the modules that consume it.

    Raises:
        ConfigError: On missing keys or out-of-range values.
        StabilityError: If a configured time step exceeds the explicit-scheme bound.
    """
    from src.dynamics import SCHEMES, build_problem
    from src.weightspace import Grid
    from src.weightspace.grid import MIN_NODES

    g = cfg["grid"]
    _require(isinstance(g["n"], int) and g["n"] >= MIN_NODES, f"grid.n must be an integer >= {MIN_NODES}, got {g['n']}.")
    _require(g["lower"] < g["upper"], f"grid.lower must be below grid.upper, got [{g['lower']}, {g['upper']}].")
    grid = Grid(float(g["lower"]), float(g["upper"]), int(g["n"]))
    _require(cfg["weight"]["kappa4_refinement"] >= 1, "weight.kappa4_refinement must be >= 1.")

    p = cfg["problem"]
    _require(p["sigma"] > 0, f"problem.sigma must be positive, got {p['sigma']}.")
    _require(p["horizon"] > 0, f"problem.horizon must be positive, got {p['horizon']}.")
    _require(p["clip"] > 0, f"problem.clip must be positive, got {p['clip']}.")
    spec = build_problem(p["name"], grid, sigma=p["sigma"], T=p["horizon"], cost_rate=p["cost_rate"],
                         clip=p["clip"], coupling=p["coupling"])

    d = cfg["dynamics"]
    _require(d["dt"] > 0, f"dynamics.dt must be positive, got {d['dt']}.")
    _require(isinstance(d["save_every"], int) and d["save_every"] >= 1, "dynamics.save_every must be a positive integer.")
    _require(d["scheme"] in SCHEMES, f"dynamics.scheme must be one of {SCHEMES}, got '{d['scheme']}'.")
    _check_stability(d["dt"], grid, spec, "dynamics.dt")

    s = cfg["search"]
    _require(isinstance(s["pieces"], int) and s["pieces"] >= 1, "search.pieces must be a positive integer.")
    _require(isinstance(s["mixture_levels"], int) and s["mixture_levels"] >= 0, "search.mixture_levels must be >= 0.")
    _require(s["max_rollouts"] >= 1, "search.max_rollouts must be >= 1.")

    pr = cfg["probe"]
    _require(pr["n_probes"] >= pr["basis_degree"], "probe.n_probes must be at least probe.basis_degree.")
    for key in ("eps", "time_step", "width_factor", "tolerance"):
        _require(pr[key] > 0, f"probe.{key} must be positive, got {pr[key]}.")
    _require(pr["ridge"] >= 0, "probe.ridge must be nonnegative.")
    _require(pr["points"] >= 1, "probe.points must be >= 1.")

    pa = cfg["particles"]
    _require(pa["n_particles"] >= 100, f"particles.n_particles must be >= 100, got {pa['n_particles']}.")
    _require(pa["dt"] > 0, "particles.dt must be positive.")
    _require(pa["bandwidth"] is None or pa["bandwidth"] > 0, "particles.bandwidth must be positive or null.")
    _require(pa["chunk_size"] >= 1, "particles.chunk_size must be >= 1.")

    db = cfg["doubling"]
    for key in ("eps", "beta", "lam"):
        _require(0 < db[key] < 1, f"doubling.{key} must lie in (0, 1), got {db[key]}.")
    _require(db["eta"] > 0, "doubling.eta must be positive.")
    _require(len(db["thetas"]) >= 1 and all(0 < th < 1 for th in db["thetas"]), "doubling.thetas must lie in (0, 1).")
    _require(all(0 < t <= p["horizon"] for t in db["time_grid"]), "doubling.time_grid must lie in (0, horizon].")
    _require(all(v > 0 for v in db["dictionary_variances"]), "doubling.dictionary_variances must be positive.")
    _require(len(db["dictionary_means"]) >= 1, "doubling.dictionary_means must be nonempty.")
    _require(db["slack_factor"] >= 0, "doubling.slack_factor must be nonnegative.")
    if db["alpha_tilde"] is not None:
        _require(0 < db["alpha_tilde"] < 1, "doubling.alpha_tilde must lie in (0, 1).")

    e = cfg["experiments"]
    _require(e["heat_horizon"] > 0, "experiments.heat_horizon must be positive.")
    _require(isinstance(e["heat_n"], int) and e["heat_n"] >= MIN_NODES, f"experiments.heat_n must be an integer >= {MIN_NODES}.")
    _require(e["heat_dt"] > 0, "experiments.heat_dt must be positive.")
    heat_grid = Grid(float(g["lower"]), float(g["upper"]), int(e["heat_n"]))
    _check_stability(e["heat_dt"], heat_grid, build_problem("zero-drift", heat_grid, sigma=p["sigma"]),
                     "experiments.heat_dt")


def load_config(config_path: str | Path) -> SimpleNamespace:
    """
    Loads, validates and resolves a YAML configuration file.

    Steps:
    1. Loads the project's .env file.
    2. Parses the YAML file and substitutes ${VAR} placeholders.
    3. Merges it over DEFAULT_CONFIG, rejecting unknown keys.
    4. Validates values, including the explicit-scheme stability bound.
    5. Applies the MKV_OUTPUT_DIR override and resolves output.dir.
    6. Converts to a nested SimpleNamespace.

    Args:
        config_path (str | Path): The path to the YAML configuration file.

    Returns:
        SimpleNamespace: The processed configuration.

    Raises:
        ConfigError: If the file is missing or malformed, or a value is invalid.
    """
    project_root = Path(__file__).resolve().parents[2]
    load_dotenv(dotenv_path=project_root / ".env")

    config_path = Path(config_path)
    if not config_path.is_file():
        raise ConfigError(f"Configuration file not found: {config_path}")
    try:
        with open(config_path, "r", encoding="utf-8") as f:
            raw_config = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"Could not parse {config_path}: {e}") from e
    if not isinstance(raw_config, dict):
        raise ConfigError(f"{config_path} must contain a mapping at the top level.")

    for section, key in REQUIRED_KEYS:
        if key not in (raw_config.get(section) or {}):
            raise ConfigError(f"Missing required configuration key '{section}.{key}'.")

    merged = _merge(DEFAULT_CONFIG, _substitute_env_vars(raw_config))
    validate_config(merged)

    output_dir = os.getenv(OUTPUT_DIR_ENV) or merged["output"]["dir"]
    merged["output"]["dir"] = Path(output_dir).resolve()

    logger.debug(f"Loaded configuration from {config_path}")
    return _dict_to_namespace(merged)


def config_hash(config: SimpleNamespace | dict) -> str:
    """MD5 over the JSON-serialised configuration with sorted keys."""
    data = _namespace_to_dict(config) if isinstance(config, SimpleNamespace) else config
    payload = json.dumps(data, sort_keys=True, default=str)
    return hashlib.md5(payload.encode()).hexdigest()


def config_to_dict(config: SimpleNamespace) -> dict:
    return _namespace_to_dict(config)
