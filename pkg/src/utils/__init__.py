# ============================================================================
# utils/__init__.py
# ============================================================================
"""
General utilities for the McKean-Vlasov control toolkit
"""

from .logging_config import setup_logging
from .exceptions import (
    ToolkitError,
    ConfigError,
    StabilityError,
    SearchBudgetError,
    GridMismatchError,
    DensityError,
    NumericalError,
    ConservativityError,
    ConvergenceError,
)
from .numerics import is_nonincreasing, reduction_factor, relative_spread

__all__ = [
    'setup_logging',
    'ToolkitError',
    'ConfigError',
    'StabilityError',
    'SearchBudgetError',
    'GridMismatchError',
    'DensityError',
    'NumericalError',
    'ConservativityError',
    'ConvergenceError',
    'is_nonincreasing',
    'reduction_factor',
    'relative_spread',
]
