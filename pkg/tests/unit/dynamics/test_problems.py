import sys
from pathlib import Path
from types import SimpleNamespace

import numpy as np
import pytest

project_root = Path(__file__).resolve().parents[3]
sys.path.append(str(project_root))

from src.densities import gaussian_density, random_mixture
from src.dynamics import (
    PROBLEMS,
    FeedbackTable,
    PolicySchedule,
    RelaxedControl,
    build_problem,
    check_problem_bounds,
    drift_field,
    problem_from_config,
    running_cost_rate,
    terminal_cost,
)
from src.utils.exceptions import ConfigError
from src.weightspace import Grid, build_weight

GRID = Grid(-8.0, 8.0, 129)


# --- Fixtures ---

@pytest.fixture
def problem_cfg() -> SimpleNamespace:
    return SimpleNamespace(name="clipped-ou", sigma=1.0, horizon=0.5, cost_rate=1.0, clip=3.0, coupling=1.0)


# --- Test Cases ---

class TestControls:
    """Tests relaxed controls, feedback tables and schedules."""

    def test_pure_and_mixture(self):
        assert RelaxedControl.pure(1, 3).weights.tolist() == [0.0, 1.0, 0.0]
        mixture = RelaxedControl.mixture(0, 2, 0.25, 3)
        assert mixture.weights.tolist() == [0.75, 0.0, 0.25]
        assert mixture.label() == "(0.75,0,0.25)"

    @pytest.mark.parametrize("weights", [[0.5, 0.6], [-0.1, 1.1], []])
    def test_invalid_weights(self, weights):
        with pytest.raises(ValueError):
            RelaxedControl(weights)

    def test_feedback_table_shape(self):
        with pytest.raises(ValueError):
            FeedbackTable(np.ones((3, 2)) / 2, GRID)

    def test_piecewise_schedule(self):
        """Equal pieces, clipped intervals and the control in force at a time."""
        a, b = RelaxedControl.pure(0, 2), RelaxedControl.pure(1, 2)
        policy = PolicySchedule.piecewise([a, b], 0.0, 1.0)
        assert policy.breakpoints == (0.0, 0.5, 1.0)
        assert list(policy.intervals(0.25, 0.75)) == [(0.25, 0.5, a), (0.5, 0.75, b)]
        assert policy.control_at(0.5) is b
        assert policy.control_at(1.0) is b

    def test_schedule_must_cover_window(self):
        policy = PolicySchedule.constant(RelaxedControl.pure(0, 1), 0.2, 1.0)
        with pytest.raises(ValueError):
            list(policy.intervals(0.0, 1.0))


class TestFixtures:
    """Tests the built-in problem fixtures."""

    def test_unknown_name(self):
        with pytest.raises(ConfigError, match="Unknown problem"):
            build_problem("no-such-problem", GRID)

    @pytest.mark.parametrize("name", sorted(PROBLEMS))
    def test_every_fixture_respects_its_bounds(self, name):
        spec = build_problem(name, GRID)
        w = build_weight(GRID)
        rng = np.random.default_rng(0)
        densities = [random_mixture(GRID, rng) for _ in range(3)]
        report = check_problem_bounds(spec, densities, w, rng, samples=50)
        assert report.holds, report.violations

    def test_relaxed_drift_is_weighted_average(self):
        spec = build_problem("signed-drift", GRID)
        rho = gaussian_density(0.0, 0.25, GRID)
        field = drift_field(spec, 0.0, rho, RelaxedControl.mixture(0, 1, 0.75, 2))
        assert np.allclose(field, 0.5)

    def test_signed_drift_terminal_cost_is_mean(self):
        spec = build_problem("signed-drift", GRID)
        rho = gaussian_density(0.7, 0.25, GRID)
        assert terminal_cost(spec, rho) == pytest.approx(0.7, abs=1e-6)

    def test_control_irrelevant_rate(self):
        spec = build_problem("control-irrelevant", GRID, cost_rate=2.0)
        rho = gaussian_density(0.0, 0.25, GRID)
        assert running_cost_rate(spec, 0.1, rho, RelaxedControl.pure(1, 2)) == pytest.approx(2.0)

    def test_problem_from_config(self, problem_cfg):
        spec = problem_from_config(problem_cfg, GRID)
        assert spec.name == "clipped-ou"
        assert spec.T == 0.5
        assert problem_from_config(problem_cfg, GRID, name="zero-drift").name == "zero-drift"

    def test_nonpositive_sigma(self):
        with pytest.raises(ConfigError):
            build_problem("zero-drift", GRID, sigma=0.0)
