# ============================================================================
# dynamics/__init__.py
# ============================================================================
"""
Controlled mean-field dynamics: problem definitions, the conservative
Fokker-Planck solver, the heat-kernel oracle and particle simulation.
"""

from .problem import (
    ProblemBounds,
    ProblemSpec,
    RelaxedControl,
    FeedbackTable,
    Control,
    PolicySchedule,
    BoundsCheckReport,
    apply_relaxed,
    drift_field,
    running_cost_field,
    running_cost_rate,
    terminal_cost,
    check_problem_bounds,
)
from .fokker_planck import (
    DEFAULT_DT,
    SCHEMES,
    DEFAULT_SCHEME,
    DensityPath,
    TimeContinuityReport,
    RelaxedLinearityReport,
    stability_bound,
    face_fluxes,
    fokker_planck_step,
    evolve,
    heat_kernel,
    heat_oracle,
    check_time_continuity,
    check_relaxed_linearity,
)
from .simulation import (
    DEFAULT_PARTICLE_DT,
    GaussianBoundReport,
    particle_simulate,
    gaussian_bound_check,
)
from .problems import PROBLEMS, build_problem, problem_from_config

__all__ = [
    'ProblemBounds',
    'ProblemSpec',
    'RelaxedControl',
    'FeedbackTable',
    'Control',
    'PolicySchedule',
    'BoundsCheckReport',
    'apply_relaxed',
    'drift_field',
    'running_cost_field',
    'running_cost_rate',
    'terminal_cost',
    'check_problem_bounds',
    'DEFAULT_DT',
    'SCHEMES',
    'DEFAULT_SCHEME',
    'DensityPath',
    'TimeContinuityReport',
    'RelaxedLinearityReport',
    'stability_bound',
    'face_fluxes',
    'fokker_planck_step',
    'evolve',
    'heat_kernel',
    'heat_oracle',
    'check_time_continuity',
    'check_relaxed_linearity',
    'DEFAULT_PARTICLE_DT',
    'GaussianBoundReport',
    'particle_simulate',
    'gaussian_bound_check',
    'PROBLEMS',
    'build_problem',
    'problem_from_config',
]
