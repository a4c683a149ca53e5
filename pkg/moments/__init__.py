"""
Exact moment computation.
K integrals, run-structure polynomials and full moment tables.
"""

from .k_integrals import k_table, k_value, k_numeric_oracle, k_bracket, l_factor, u_factor
from .run_combinatorics import (
    run_polynomial, brute_force_run_census, run_lengths, evaluate_run_polynomial,
    connected_moments_by_flow, connected_moment,
)
from .moment_engine import (
    species_connected_moments, base_connected_moments, build_moment_table,
    growth_diagnostics, dominant_graph_bounds, j_asymptotic_constants,
    dimensionful_moments, dominance_ratios, MomentEngine,
)

__all__ = [
    'k_table',
    'k_value',
    'k_numeric_oracle',
    'k_bracket',
    'l_factor',
    'u_factor',
    'run_polynomial',
    'brute_force_run_census',
    'run_lengths',
    'evaluate_run_polynomial',
    'connected_moments_by_flow',
    'connected_moment',
    'species_connected_moments',
    'base_connected_moments',
    'build_moment_table',
    'growth_diagnostics',
    'dominant_graph_bounds',
    'j_asymptotic_constants',
    'dimensionful_moments',
    'dominance_ratios',
    'MomentEngine',
]
