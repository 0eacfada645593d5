"""
Error hierarchy shared by every package of the toolkit.

Configuration problems derive from `ConfigError` and make the experiment
runner exit with code 2; numerical failures derive from `NumericalError`
and map to exit code 3.
"""


class ToolkitError(Exception):
    """Root of all errors raised by the toolkit."""


class ConfigError(ToolkitError, ValueError):
    """Invalid, unknown or out-of-range configuration values."""


class StabilityError(ConfigError):
    """Time step above the explicit-scheme stability bound."""


class SearchBudgetError(ConfigError):
    """A value search would need more rollouts than the configured budget."""


class GridMismatchError(ToolkitError, ValueError):
    """Operands tabulated on different grids, or with mismatched lengths."""


class DensityError(ToolkitError, ValueError):
    """A density could not be constructed on the requested grid."""


class NumericalError(ToolkitError, RuntimeError):
    """Non-finite values or a failed numerical precondition."""


class ConservativityError(NumericalError):
    """A density along an evolution left the weighted density space."""


class ConvergenceError(NumericalError):
    """An iterative construction did not terminate within its stage cap."""
