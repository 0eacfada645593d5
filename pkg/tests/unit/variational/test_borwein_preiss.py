import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

project_root = Path(__file__).resolve().parents[3]
sys.path.append(str(project_root))

from src.variational import FiniteMetricSpace, ProductMetricSpace, borwein_preiss
from src.utils.exceptions import ConfigError


def euclidean(a, b):
    return float(np.hypot(a[0] - b[0], a[1] - b[1]))


def random_space(seed: int, n: int) -> FiniteMetricSpace:
    rng = np.random.default_rng(seed)
    return FiniteMetricSpace.from_points([tuple(p) for p in rng.uniform(-1, 1, size=(n, 2))], euclidean)


# --- Test Cases ---

class TestMetricSpaces:
    """Tests construction-time validation of the metric."""

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000), n=st.integers(1, 40))
    def test_euclidean_points_are_accepted(self, seed, n):
        space = random_space(seed, n)
        assert len(space) == n
        assert np.allclose(space.dist, space.dist.T)

    def test_asymmetric_matrix(self):
        with pytest.raises(ConfigError, match="symmetric"):
            FiniteMetricSpace([0, 1], [[0.0, 1.0], [2.0, 0.0]])

    def test_triangle_violation(self):
        dist = [[0.0, 1.0, 5.0], [1.0, 0.0, 1.0], [5.0, 1.0, 0.0]]
        with pytest.raises(ConfigError, match="Triangle"):
            FiniteMetricSpace([0, 1, 2], dist)

    def test_product_metric(self):
        """Time gaps enter squared, dictionary gaps unsquared."""
        gaps = np.array([[0.0, 0.5], [0.5, 0.0]])
        space = ProductMetricSpace([0.25, 0.5], gaps)
        assert len(space) == 16
        k = space.points.index((0, 0, 0, 0))
        m = space.points.index((1, 0, 1, 1))
        assert space.distance(k, m) == pytest.approx(np.sqrt(0.25 ** 2 + 0.5 + 0.5))


class TestBorweinPreiss:
    """Tests the perturbed-maximum iteration."""

    def test_start_at_maximum_stops_immediately(self):
        space = FiniteMetricSpace([0, 1], [[0.0, 1.0], [1.0, 0.0]])
        result = borwein_preiss(space, [0.0, 0.05], eps=0.1, y0=0)
        assert result.y_eps == 0
        assert result.centers == (0,)
        assert result.weights == pytest.approx((0.5, 0.5))
        assert result.delta == pytest.approx([0.0, 1.0])
        assert result.certificate.passed

    def test_nearby_better_point_becomes_centre(self):
        """A close point with a larger value is taken as the next centre."""
        space = FiniteMetricSpace([0, 1], [[0.0, 0.5], [0.5, 0.0]])
        result = borwein_preiss(space, [0.0, 0.09], eps=0.1, y0=0)
        assert result.y_eps == 1
        assert result.centers == (0, 1)
        assert result.weights == pytest.approx((0.5, 0.25, 0.25))
        assert result.Delta(0) == pytest.approx(0.125)
        assert result.certificate.passed

    def test_start_must_be_eps_maximal(self):
        space = FiniteMetricSpace([0, 1], [[0.0, 1.0], [1.0, 0.0]])
        with pytest.raises(ConfigError):
            borwein_preiss(space, [0.0, 1.0], eps=0.1, y0=0)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000), eps=st.sampled_from([0.5, 0.1, 0.01]))
    def test_certificate_on_random_spaces(self, seed, eps):
        space = random_space(seed, 30)
        F = np.random.default_rng(seed + 1).normal(size=30)
        y0 = int(np.flatnonzero(F >= F.max() - eps)[0])
        result = borwein_preiss(space, F, eps, y0)
        assert result.certificate.passed
        assert space.distance(result.y_eps, y0) <= eps ** 0.25
        assert sum(result.weights) == pytest.approx(1.0)
