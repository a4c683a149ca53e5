"""
Exact combinatorial primitives and formal power series.

All results are Fractions; nothing here rounds.
"""

import math
from fractions import Fraction
from functools import lru_cache
from typing import List, Sequence

from sympy.utilities.iterables import partitions

from .data_models import FormalSeries, Partition


def factorial(n: int) -> Fraction:
    """n! as an exact rational."""
    if n < 0:
        raise ValueError(f"factorial of negative integer {n}")
    return Fraction(math.factorial(n))


def binomial(n: int, k: int) -> Fraction:
    """C(n, k), zero when k > n."""
    if k < 0 or n < 0:
        raise ValueError(f"binomial needs n, k >= 0 (got {n}, {k})")
    return Fraction(math.comb(n, k))


def all_partitions(n: int) -> List[Partition]:
    """Every partition of n, descending parts, in descending lexicographic order."""
    result = []
    for multiplicities in partitions(n):
        # sympy reuses the yielded dict
        parts = []
        for part, count in multiplicities.items():
            parts.extend([part] * count)
        result.append(tuple(sorted(parts, reverse=True)))
    return sorted(result, reverse=True)


@lru_cache(maxsize=None)
def _even_part_partitions(n: int) -> tuple:
    return tuple(p for p in all_partitions(n) if len(p) % 2 == 0)


def partitions_even_parts(n: int) -> List[Partition]:
    """
    Partitions of n with an even number of parts.

    Args:
        n: Weight, at least 2

    Returns:
        Partitions as descending tuples, e.g. n=4 gives (3,1), (2,2), (1,1,1,1)
    """
    if n < 2:
        raise ValueError(f"partitions_even_parts needs n >= 2 (got {n})")
    return list(_even_part_partitions(n))


def series_exp(w: FormalSeries) -> FormalSeries:
    """
    Exponential of a series with zero constant term.

    Uses the cumulant-to-moment recursion
    a_n = sum_{k=1}^{n} C(n-1, k-1) c_k a_{n-k}.
    """
    c = w.coefficients
    if c[0] != 0:
        raise ValueError(f"series_exp needs a zero constant term (got {c[0]})")
    order = w.truncation_order
    a = [Fraction(1)] + [Fraction(0)] * order
    for n in range(1, order + 1):
        total = Fraction(0)
        for k in range(1, n + 1):
            if c[k]:
                total += math.comb(n - 1, k - 1) * c[k] * a[n - k]
        a[n] = total
    return FormalSeries(tuple(a))


def series_log(m: FormalSeries) -> FormalSeries:
    """Inverse of series_exp for series with constant term 1."""
    a = m.coefficients
    if a[0] != 1:
        raise ValueError(f"series_log needs constant term 1 (got {a[0]})")
    order = m.truncation_order
    c = [Fraction(0)] * (order + 1)
    for n in range(1, order + 1):
        total = a[n]
        for k in range(1, n):
            if c[k]:
                total -= math.comb(n - 1, k - 1) * c[k] * a[n - k]
        c[n] = total
    return FormalSeries(tuple(c))


def series_from(values: Sequence) -> FormalSeries:
    """Build a FormalSeries from any sequence of rationals."""
    return FormalSeries(tuple(Fraction(v) for v in values))
