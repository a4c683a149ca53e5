"""
Core module for the moment computation system.
Contains data models, exact arithmetic, conversions and the base calculator.
"""

from .data_models import (
    CODE_VERSION, BUILTIN_OPERATORS, FormalSeries, KTable, MomentTable,
    OperatorSpec, RunPolynomial, TailParams, FitParams, ShiftedGammaParams,
)
from .exceptions import (
    MomentsError, InvalidConfigError, InsufficientDepthError, ConvergenceError,
)
from .kernel_arith import (
    factorial, binomial, partitions_even_parts, series_exp, series_log,
)
from .conversions import to_bigfloat, format_rational, parse_rational
from .base_calculator import BaseCalculator

__version__ = CODE_VERSION

__all__ = [
    'CODE_VERSION',
    'BUILTIN_OPERATORS',
    'FormalSeries',
    'KTable',
    'MomentTable',
    'OperatorSpec',
    'RunPolynomial',
    'TailParams',
    'FitParams',
    'ShiftedGammaParams',
    'MomentsError',
    'InvalidConfigError',
    'InsufficientDepthError',
    'ConvergenceError',
    'factorial',
    'binomial',
    'partitions_even_parts',
    'series_exp',
    'series_log',
    'to_bigfloat',
    'format_rational',
    'parse_rational',
    'BaseCalculator',
]
