"""
Run-factor integrals K_n^(r) for Lorentzian time smearing.

K_n^(r) = (2^r / r!) * integral over (R+)^n of
    k1^(p+r) (k2...kn)^p exp(-k1) exp(-sum |k_{i+1} - k_i|) exp(-kn)

computed exactly through the recurrence
K_n^(r) = (p!/2^(p+1)) C(p+r, p) sum_{r'=0}^{p+r+1} K_{n-1}^(r')
with K_1^(r) = (p!/2^(p+1)) C(p+r, p).
"""

import math
from fractions import Fraction
from functools import lru_cache
from typing import List, Tuple

from mpmath import mp, mpf, quad, exp, factorial as mp_factorial, workdps

from core.data_models import KTable
from core.exceptions import InvalidConfigError


def _check_p(p: int):
    if not isinstance(p, int) or p < 1 or p % 2 == 0:
        raise InvalidConfigError(f"p must be an odd positive integer (got {p})")


def _base_factor(p: int) -> Fraction:
    return Fraction(math.factorial(p), 2 ** (p + 1))


def _build_rows(p: int, n_top: int, r_top: int) -> Tuple[List[List[Fraction]], List[List[Fraction]]]:
    """
    Rows 1..n_top of K values and prefix sums.

    Level m stores r up to r_top + (n_top - m)(p + 1), exactly what the
    recurrence consumes on the way up to K_{n_top}^(r_top).
    """
    factor = _base_factor(p)
    values: List[List[Fraction]] = []
    prefix: List[List[Fraction]] = []
    for m in range(1, n_top + 1):
        r_max = r_top + (n_top - m) * (p + 1)
        row = []
        for r in range(r_max + 1):
            weight = factor * math.comb(p + r, p)
            if m == 1:
                row.append(weight)
            else:
                row.append(weight * prefix[-1][p + r + 1])
        sums = []
        running = Fraction(0)
        for v in row:
            running += v
            sums.append(running)
        values.append(row)
        prefix.append(sums)
    return values, prefix


def k_table(p: int, max_n: int) -> KTable:
    """
    Exact K_n^(r) for all n <= max_n.

    Args:
        p: Odd derivative class (1 for phi^2, 3 for phidot^2)
        max_n: Deepest run length needed

    Returns:
        KTable with r up to (max_n - n + 1)(p + 1) at level n
    """
    _check_p(p)
    if max_n < 1:
        raise InvalidConfigError(f"max_n must be >= 1 (got {max_n})")
    values, prefix = _build_rows(p, max_n, p + 1)
    return KTable(
        p=p,
        max_n=max_n,
        values=tuple(tuple(row) for row in values),
        prefix_sums=tuple(tuple(row) for row in prefix),
    )


@lru_cache(maxsize=256)
def k_value(p: int, n: int, r: int = 0) -> Fraction:
    """K_n^(r) exactly."""
    _check_p(p)
    if n < 1 or r < 0:
        raise InvalidConfigError(f"k_value needs n >= 1 and r >= 0 (got n={n}, r={r})")
    values, _ = _build_rows(p, n, r)
    return values[-1][r]


def _edge_integral(kappa: mpf, power: int) -> mpf:
    """Integral over k >= 0 of k^power exp(-k) exp(-|k - kappa|), split at the kink."""
    return quad(lambda k: k ** power * exp(-k - abs(k - kappa)), [0, kappa, mp.inf])


def k_numeric_oracle(p: int, n: int, r: int = 0, digits: int = 20) -> mpf:
    """
    Direct quadrature of the defining integral, for n <= 3.

    The chain is integrated from its middle variable outward so the inner
    integrals factorize; every inner integral is split where the absolute
    value changes branch.
    """
    _check_p(p)
    if n < 1 or n > 3:
        raise InvalidConfigError(f"quadrature oracle only supports 1 <= n <= 3 (got {n})")
    with workdps(digits + 10):
        prefactor = mpf(2) ** r / mp_factorial(r)
        if n == 1:
            value = quad(lambda k: k ** (p + r) * exp(-2 * k), [0, mp.inf])
        elif n == 2:
            value = quad(lambda k1: k1 ** (p + r) * exp(-k1) * _edge_integral(k1, p), [0, mp.inf])
        else:
            value = quad(
                lambda k2: k2 ** p * _edge_integral(k2, p + r) * _edge_integral(k2, p),
                [0, mp.inf],
            )
        result = prefactor * value
    return +result


def l_factor(p: int, n: int, r: int = 0) -> Fraction:
    """Lower-bound constant L_n^(r)."""
    _check_p(p)
    head = Fraction(math.factorial(n * (p + 1)), math.factorial(n) * (2 ** (p + 1) * (p + 1)) ** n)
    product = Fraction(1)
    for k in range(1, n):
        product *= Fraction(r + n * (p + 1), r + k * (p + 1))
    return head * product


def u_factor(p: int, n: int, r: int = 0) -> Fraction:
    """Upper-bound constant U_n^(r)."""
    _check_p(p)
    head = Fraction(math.factorial(n * (p + 1)), math.factorial(n) * (2 ** (p + 1) * (p + 1)) ** n)
    product = Fraction(1)
    for k in range(0, n - 1):
        for q in range(1, p + 1):
            product *= Fraction(k * (p + 1) + r + q, k * p + r + n + q - 1)
    return head * product


def k_bracket(p: int, n: int, r: int = 0) -> Tuple[Fraction, Fraction]:
    """Exact (lower, upper) bracket on K_n^(r)."""
    lower = math.comb(n * (p + 1) - 1 + r, n * (p + 1) - 1) * l_factor(p, n, r)
    upper = math.comb(n * (p + 2) - 2 + r, n * (p + 1) - 1) * u_factor(p, n, r)
    return lower, upper
