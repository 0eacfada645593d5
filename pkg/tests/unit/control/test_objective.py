import sys
from pathlib import Path

import pytest

project_root = Path(__file__).resolve().parents[3]
sys.path.append(str(project_root))

from src.control import (
    SearchConfig,
    build_candidates,
    check_dpp,
    check_value_continuity,
    cost,
    default_dpp_tolerance,
    rollout,
    value,
    value_function,
)
from src.densities import gaussian_density
from src.dynamics import PolicySchedule, RelaxedControl, build_problem
from src.utils.exceptions import ConfigError, SearchBudgetError
from src.weightspace import Grid

GRID = Grid(-8.0, 8.0, 129)
DT = 2e-3


# --- Fixtures ---

@pytest.fixture
def rho0():
    return gaussian_density(0.0, 0.25, GRID)


@pytest.fixture
def signed():
    return build_problem("signed-drift", GRID)


@pytest.fixture
def flat():
    return build_problem("control-irrelevant", GRID)


# --- Test Cases ---

class TestCandidates:
    """Tests the candidate set of the value search."""

    def test_pure_atoms_then_mixtures(self, signed):
        candidates = build_candidates(signed, SearchConfig(mixture_levels=1))
        assert [c.label() for c in candidates] == ["(1,0)", "(0,1)", "(0.5,0.5)"]

    def test_explicit_candidates(self, signed):
        only = (RelaxedControl.pure(1, 2),)
        assert build_candidates(signed, SearchConfig(candidates=only)) == only

    def test_invalid_search(self):
        with pytest.raises(ConfigError):
            SearchConfig(pieces=0)


class TestCost:
    """Tests rollouts and the objective."""

    def test_running_cost_accumulates(self, rho0, flat):
        """A unit cost rate on [0.1, 0.3] costs 0.2."""
        end, running = rollout(rho0, 0.1, 0.3, RelaxedControl.pure(0, 2), flat, dt=DT)
        assert running == pytest.approx(0.2, rel=1e-10)
        assert end.mass == pytest.approx(1.0, abs=1e-10)

    def test_signed_drift_cost(self, rho0, signed):
        """Terminal cost is the terminal mean."""
        policy = PolicySchedule.constant(RelaxedControl.pure(1, 2), 0.0, signed.T)
        assert cost(rho0, 0.0, policy, signed, dt=DT) == pytest.approx(0.5, abs=1e-6)

    def test_cost_at_horizon_is_terminal(self, rho0, signed):
        policy = PolicySchedule((signed.T,), ())
        assert cost(gaussian_density(0.3, 0.25, GRID), signed.T, policy, signed) == pytest.approx(0.3, abs=1e-6)

    def test_policy_must_cover_window(self, rho0, signed):
        policy = PolicySchedule.constant(RelaxedControl.pure(1, 2), 0.2, signed.T)
        with pytest.raises(ConfigError):
            cost(rho0, 0.0, policy, signed, dt=DT)


class TestValue:
    """Tests the exhaustive value search."""

    def test_signed_drift_optimum(self, rho0, signed):
        """Pushing left the whole time is optimal: V = mean - (T - s)."""
        estimate = value(rho0, 0.0, signed, SearchConfig(pieces=2, dt=DT))
        assert estimate.value == pytest.approx(-0.5, abs=1e-6)
        assert estimate.encoding == (0, 0)
        assert estimate.evaluated == 4
        assert estimate.gap == pytest.approx(0.5, abs=1e-6)

    def test_ties_pick_smallest_encoding(self, rho0, flat):
        estimate = value(rho0, 0.0, flat, SearchConfig(pieces=2, dt=DT))
        assert estimate.value == pytest.approx(0.5, rel=1e-10)
        assert estimate.encoding == (0, 0)
        assert estimate.gap == pytest.approx(0.0, abs=1e-12)

    def test_parallel_matches_serial(self, rho0, signed):
        serial = value(rho0, 0.1, signed, SearchConfig(pieces=2, dt=DT))
        parallel = value(rho0, 0.1, signed, SearchConfig(pieces=2, dt=DT, parallel=True, max_workers=2))
        assert parallel.value == serial.value
        assert parallel.encoding == serial.encoding

    def test_value_at_horizon(self, rho0, signed):
        estimate = value(gaussian_density(0.2, 0.25, GRID), signed.T, signed, SearchConfig(dt=DT))
        assert estimate.value == pytest.approx(0.2, abs=1e-6)
        assert estimate.evaluated == 0

    def test_budget(self, rho0, signed):
        with pytest.raises(SearchBudgetError, match="max_rollouts"):
            value(rho0, 0.0, signed, SearchConfig(pieces=3, dt=DT, max_rollouts=4))

    def test_value_function_closure(self, rho0, signed):
        V = value_function(signed, SearchConfig(pieces=1, dt=DT))
        assert V(0.25, rho0) == pytest.approx(-0.25, abs=1e-6)


class TestDynamicProgramming:
    """Tests the DPP and continuity diagnostics."""

    def test_dpp_holds_for_signed_drift(self, rho0, signed):
        report = check_dpp(rho0, 0.0, 0.25, signed, SearchConfig(pieces=1, dt=DT), tolerance=2 * DT)
        assert report.lhs == pytest.approx(-0.5, abs=1e-6)
        assert report.gap <= 1e-8
        assert report.best_first_index == 0
        assert report.passed

    def test_dpp_default_tolerance(self, rho0, flat):
        report = check_dpp(rho0, 0.0, 0.25, flat, SearchConfig(pieces=1, dt=DT))
        assert report.tolerance == pytest.approx(default_dpp_tolerance(DT, GRID.h))
        assert report.passed

    def test_dpp_window(self, rho0, signed):
        with pytest.raises(ConfigError):
            check_dpp(rho0, 0.3, 0.2, signed, SearchConfig(pieces=1, dt=DT))

    def test_continuity_ratio(self, rho0, flat):
        """For a constant cost rate the ratio is sqrt|s - s'| and identical pairs are skipped."""
        pairs = [((0.0, rho0), (0.0, rho0)), ((0.1, rho0), (0.35, rho0))]
        report = check_value_continuity(flat, pairs, SearchConfig(pieces=1, dt=DT))
        assert report.skipped == 1
        assert report.ratios == pytest.approx((0.5,), rel=1e-8)
        assert report.max_ratio == pytest.approx(0.5, rel=1e-8)
