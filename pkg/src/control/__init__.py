# ============================================================================
# control/__init__.py
# ============================================================================
"""
Objective, value search, dynamic programming and continuity checks, the
Hamiltonian with its probe-based HJB residual, and viscosity test functionals.
"""

from .objective import (
    SearchConfig,
    ValueEstimate,
    build_candidates,
    rollout,
    cost,
    value,
    value_function,
)
from .dpp import (
    DPPReport,
    ContinuityReport,
    default_dpp_tolerance,
    check_dpp,
    check_value_continuity,
)
from .hamiltonian import (
    DerivativeProbeConfig,
    DerivativeEstimate,
    HJBResidualReport,
    hamiltonian,
    min_hamiltonian,
    probe_basis,
    sample_value,
    estimate_derivative,
    time_derivative,
    hjb_residual,
)
from .viscosity import (
    TestFunctional,
    RegularityReport,
    ViscosityReport,
    linear_test_functional,
    energy_test_functional,
    time_quadratic_test_functional,
    combine,
    check_test_functional_regularity,
    touching_functional,
    check_viscosity,
)

__all__ = [
    'SearchConfig',
    'ValueEstimate',
    'build_candidates',
    'rollout',
    'cost',
    'value',
    'value_function',
    'DPPReport',
    'ContinuityReport',
    'default_dpp_tolerance',
    'check_dpp',
    'check_value_continuity',
    'DerivativeProbeConfig',
    'DerivativeEstimate',
    'HJBResidualReport',
    'hamiltonian',
    'min_hamiltonian',
    'probe_basis',
    'sample_value',
    'estimate_derivative',
    'time_derivative',
    'hjb_residual',
    'TestFunctional',
    'RegularityReport',
    'ViscosityReport',
    'linear_test_functional',
    'energy_test_functional',
    'time_quadratic_test_functional',
    'combine',
    'check_test_functional_regularity',
    'touching_functional',
    'check_viscosity',
]
