"""
Analysis of moment tables.
Stieltjes lower bounds, distribution models, tail bounds and physical estimates.
"""

from .moment_analysis import (
    stieltjes_determinant, leading_minors, leading_minors_positive, stieltjes_lower_bound,
    lower_bound_sequence, accelerate, accelerate_chain, extrapolate_fit, bound_additivity,
)
from .distributions import (
    shifted_gamma_moments, shifted_gamma_pdf, shifted_gamma_numeric_moment, cft2d_params,
    tail_fit, tail_predicted_moment, tail_validity_range, predicted_tail,
    fit_pdf, fit_pdf_grid, model_fit_moments, model_fit_fractional_errors,
    cdf_upper_bound, cdf_asymptotic_bound, fitted_tail_survival, cdf_comparison_tail,
    krein_integral,
)
from .applications import (
    nucleation_probability, nucleation_exponent_prefactor, planck_four_volume,
    black_hole_count, black_hole_mass_for_count, boltzmann_brain_exponent,
)
from .incomplete_gamma import upper_incomplete_gamma

__all__ = [
    'stieltjes_determinant',
    'leading_minors',
    'leading_minors_positive',
    'stieltjes_lower_bound',
    'lower_bound_sequence',
    'accelerate',
    'accelerate_chain',
    'extrapolate_fit',
    'bound_additivity',
    'shifted_gamma_moments',
    'shifted_gamma_pdf',
    'shifted_gamma_numeric_moment',
    'cft2d_params',
    'tail_fit',
    'tail_predicted_moment',
    'tail_validity_range',
    'predicted_tail',
    'fit_pdf',
    'fit_pdf_grid',
    'model_fit_moments',
    'model_fit_fractional_errors',
    'cdf_upper_bound',
    'cdf_asymptotic_bound',
    'fitted_tail_survival',
    'cdf_comparison_tail',
    'krein_integral',
    'nucleation_probability',
    'nucleation_exponent_prefactor',
    'planck_four_volume',
    'black_hole_count',
    'black_hole_mass_for_count',
    'boltzmann_brain_exponent',
    'upper_incomplete_gamma',
]
