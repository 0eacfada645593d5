# ============================================================================
# calculus/__init__.py
# ============================================================================
"""
Functional derivatives on grid densities: analytic derivatives of the
built-in functional families and a finite-difference verifier.
"""

from .mortensen import (
    MortensenDerivative,
    Functional,
    Integrand,
    SQUARE,
    GRADIENT_SQUARE,
    PRODUCT,
    CUBE,
    BUILTIN_INTEGRANDS,
    pairing,
    linear_functional,
    integrand_functional,
    weighted_energy_functional,
    derivative_linear,
    derivative_integrand,
    derivative_weighted_energy,
    save_derivative_csv,
    load_derivative_csv,
)
from .verification import (
    DirectionCheck,
    DerivativeCheckReport,
    EnergyGradientReport,
    verify_derivative,
    difference_of_gaussians,
    mass_neutral_directions,
    check_energy_gradient_bound,
)

__all__ = [
    'MortensenDerivative',
    'Functional',
    'Integrand',
    'SQUARE',
    'GRADIENT_SQUARE',
    'PRODUCT',
    'CUBE',
    'BUILTIN_INTEGRANDS',
    'pairing',
    'linear_functional',
    'integrand_functional',
    'weighted_energy_functional',
    'derivative_linear',
    'derivative_integrand',
    'derivative_weighted_energy',
    'save_derivative_csv',
    'load_derivative_csv',
    'DirectionCheck',
    'DerivativeCheckReport',
    'EnergyGradientReport',
    'verify_derivative',
    'difference_of_gaussians',
    'mass_neutral_directions',
    'check_energy_gradient_bound',
]
