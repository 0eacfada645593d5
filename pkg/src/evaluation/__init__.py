# ============================================================================
# evaluation/__init__.py
# ============================================================================
"""
Experiment suites and the result files they produce
"""

from .reporting import (
    RESULT_COLUMNS,
    TOOL_VERSION,
    ResultTable,
    make_run_dir,
    run_timestamp,
    save_results,
    save_summary_figure,
    write_manifest,
    write_summary,
)
from .experiments import (
    EXPERIMENTS,
    ExperimentContext,
    describe_experiments,
    run_suite,
)

__all__ = [
    'RESULT_COLUMNS',
    'TOOL_VERSION',
    'ResultTable',
    'make_run_dir',
    'run_timestamp',
    'save_results',
    'save_summary_figure',
    'write_manifest',
    'write_summary',
    'EXPERIMENTS',
    'ExperimentContext',
    'describe_experiments',
    'run_suite',
]
