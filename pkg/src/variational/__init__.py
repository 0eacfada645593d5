# ============================================================================
# variational/__init__.py
# ============================================================================
"""
Perturbed maxima on finite metric spaces and the doubling-of-variables
harness used to probe the comparison principle.
"""

from .metric_space import FiniteMetricSpace, ProductMetricSpace, dictionary_gaps, product_space
from .borwein_preiss import BPCertificate, BPResult, borwein_preiss
from .doubling import (
    DoublingParams,
    DoublingRecord,
    DoublingReport,
    proof_alpha,
    build_phi,
    doubling_experiment,
    comparison_gap,
    uniqueness_gap,
)

__all__ = [
    'FiniteMetricSpace',
    'ProductMetricSpace',
    'dictionary_gaps',
    'product_space',
    'BPCertificate',
    'BPResult',
    'borwein_preiss',
    'DoublingParams',
    'DoublingRecord',
    'DoublingReport',
    'proof_alpha',
    'build_phi',
    'doubling_experiment',
    'comparison_gap',
    'uniqueness_gap',
]
