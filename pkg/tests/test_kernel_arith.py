from fractions import Fraction

import pytest
from mpmath import mpf, workdps

from core.conversions import (
    format_bigfloat, format_rational, parse_quantity, parse_rational, safe_fraction_conversion,
    to_bigfloat,
)
from core.exceptions import InvalidConfigError
from core.kernel_arith import (
    all_partitions, binomial, factorial, partitions_even_parts, series_exp, series_from, series_log,
)


def test_factorial_and_binomial():
    assert factorial(0) == 1
    assert factorial(10) == 3628800
    assert binomial(6, 2) == 15
    assert binomial(3, 5) == 0
    assert isinstance(binomial(6, 2), Fraction)
    with pytest.raises(ValueError):
        factorial(-1)


@pytest.mark.parametrize("n", range(0, 13))
def test_factorial_matches_product(n):
    product = 1
    for k in range(2, n + 1):
        product *= k
    assert factorial(n) == product


@pytest.mark.parametrize("n", range(0, 13))
def test_binomial_matches_product(n):
    for k in range(0, n + 1):
        numerator = 1
        for j in range(n - k + 1, n + 1):
            numerator *= j
        denominator = 1
        for j in range(2, k + 1):
            denominator *= j
        assert binomial(n, k) == Fraction(numerator, denominator)


def test_partitions_are_descending_and_complete():
    assert all_partitions(4) == [(4,), (3, 1), (2, 2), (2, 1, 1), (1, 1, 1, 1)]
    assert len(all_partitions(10)) == 42


def test_even_part_partitions():
    assert partitions_even_parts(2) == [(1, 1)]
    assert partitions_even_parts(4) == [(3, 1), (2, 2), (1, 1, 1, 1)]
    assert len(partitions_even_parts(30)) == 2811
    with pytest.raises(ValueError):
        partitions_even_parts(1)


def _partitions_by_recursion(n, largest=None):
    largest = n if largest is None else largest
    if n == 0:
        return [()]
    result = []
    for first in range(min(n, largest), 0, -1):
        result.extend((first,) + rest for rest in _partitions_by_recursion(n - first, first))
    return result


@pytest.mark.parametrize("n", range(2, 21))
def test_even_part_partitions_match_recursion(n):
    expected = [p for p in _partitions_by_recursion(n) if len(p) % 2 == 0]
    assert partitions_even_parts(n) == expected
    assert all_partitions(n) == _partitions_by_recursion(n)


def test_series_exp_builds_full_moments():
    cumulants = series_from([0, 0, 2, 48, 1728])
    assert list(series_exp(cumulants).coefficients) == [1, 0, 2, 48, 1740]


def test_series_log_inverts_exp():
    cumulants = series_from([0, 0, Fraction(9, 2), 1890, Fraction(7, 3)])
    assert series_log(series_exp(cumulants)) == cumulants


def test_series_round_trip_at_order_65():
    cumulants = series_from([0] + [Fraction((-1) ** k * (k + 2), 3 * k + 1) for k in range(1, 66)])
    moments = series_exp(cumulants)
    assert len(moments.coefficients) == 66
    assert series_log(moments) == cumulants
    assert series_exp(series_log(moments)) == moments


def test_series_constant_terms_are_checked():
    with pytest.raises(ValueError):
        series_exp(series_from([1, 2]))
    with pytest.raises(ValueError):
        series_log(series_from([2, 0]))


def test_to_bigfloat_rounds_once():
    with workdps(50):
        assert to_bigfloat(Fraction(1, 3)) == mpf(1) / 3
        huge = Fraction(10 ** 400 + 1, 3 * 10 ** 400)
        assert abs(to_bigfloat(huge) - mpf(1) / 3) < mpf(10) ** -49


def test_rational_text_round_trip():
    value = Fraction(-12345678901234567890, 97)
    assert parse_rational(format_rational(value)) == value
    assert format_rational(Fraction(5)) == "5/1"
    assert parse_rational("7") == 7
    with pytest.raises(InvalidConfigError):
        parse_rational("3/0")
    with pytest.raises(InvalidConfigError):
        parse_rational("abc")


def test_safe_fraction_conversion():
    assert safe_fraction_conversion("1/72") == Fraction(1, 72)
    assert safe_fraction_conversion("0.25") == Fraction(1, 4)
    assert safe_fraction_conversion(3) == 3
    with pytest.raises(InvalidConfigError):
        safe_fraction_conversion("", "alpha")


@pytest.mark.parametrize("text, unit, expected", [
    ("1cm3", "cm3", 1),
    ("0.3s", "s", mpf("0.3")),
    ("10cm", "cm", 10),
    ("2.5e3", "kg", 2500),
])
def test_parse_quantity(text, unit, expected):
    assert parse_quantity(text, unit) == expected


def test_parse_quantity_rejects_wrong_unit():
    with pytest.raises(InvalidConfigError):
        parse_quantity("1kg", "cm")
    with pytest.raises(InvalidConfigError):
        parse_quantity("one", "s")


def test_format_bigfloat():
    with workdps(30):
        assert format_bigfloat(mpf(1) / 3, 5) == "0.33333"
