# ============================================================================
# weightspace/__init__.py
# ============================================================================
"""
Grids, the reference weight and the weighted norms and probability
distances used by every other package.
"""

from .grid import (
    Grid,
    as_grid_values,
    require_same_grid,
    integrate,
    central_derivative,
)
from .weight import (
    WeightField,
    WeightBoundsReport,
    build_weight,
    gamma_profile,
    weighted_l2_inner,
    weighted_l2_norm,
    weighted_energy,
    weighted_h12_norm,
    check_weight_bounds,
)
from .distances import (
    W1BoundReport,
    cumulative_distribution,
    wasserstein1,
    total_variation,
    check_w1_weighted_bound,
)

__all__ = [
    'Grid',
    'as_grid_values',
    'require_same_grid',
    'integrate',
    'central_derivative',
    'WeightField',
    'WeightBoundsReport',
    'build_weight',
    'gamma_profile',
    'weighted_l2_inner',
    'weighted_l2_norm',
    'weighted_energy',
    'weighted_h12_norm',
    'check_weight_bounds',
    'W1BoundReport',
    'cumulative_distribution',
    'wasserstein1',
    'total_variation',
    'check_w1_weighted_bound',
]
