# ============================================================================
# densities/__init__.py
# ============================================================================
"""
Grid densities, particle ensembles, kernel density estimation and
membership checks for the weighted density space.
"""

from .density import (
    GridDensity,
    MembershipReport,
    check_d1r_membership,
    gaussian_density,
    gaussian_mixture,
    random_mixture,
    density_dictionary,
)
from .particles import (
    ParticleEnsemble,
    sample_density,
    silverman_bandwidth,
    kde,
)
from .io import (
    save_density_csv,
    load_density_csv,
    save_ensemble_csv,
    load_ensemble_csv,
    save_density_path_csv,
)

__all__ = [
    'GridDensity',
    'MembershipReport',
    'check_d1r_membership',
    'gaussian_density',
    'gaussian_mixture',
    'random_mixture',
    'density_dictionary',
    'ParticleEnsemble',
    'sample_density',
    'silverman_bandwidth',
    'kde',
    'save_density_csv',
    'load_density_csv',
    'save_ensemble_csv',
    'load_ensemble_csv',
    'save_density_path_csv',
]
