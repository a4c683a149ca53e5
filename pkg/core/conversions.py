"""
Conversions between exact rationals, working-precision floats and text.
"""

import re
from fractions import Fraction
from typing import Union

from mpmath import mp, mpf, workprec

from .exceptions import InvalidConfigError


GUARD_BITS = 24

_QUANTITY_PATTERN = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z0-9]*)\s*$")


def to_bigfloat(value: Union[int, Fraction, mpf]) -> mpf:
    """
    Convert an exact value to an mpf at the current working precision.

    The quotient is formed with guard bits and rounded once more on return,
    so huge numerators and denominators lose nothing beyond the final rounding.
    """
    if isinstance(value, mpf):
        return +value
    value = Fraction(value)
    with workprec(mp.prec + GUARD_BITS):
        quotient = mpf(value.numerator) / mpf(value.denominator)
    return +quotient


def format_rational(value: Fraction) -> str:
    """Serialize as 'num/den' (integers as 'num/1')."""
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def parse_rational(text: str) -> Fraction:
    """Inverse of format_rational; also accepts a bare integer."""
    try:
        if "/" in text:
            num, den = text.split("/", 1)
            if int(den) == 0:
                raise InvalidConfigError(f"zero denominator in '{text}'")
            return Fraction(int(num), int(den))
        return Fraction(int(text))
    except (ValueError, TypeError) as e:
        raise InvalidConfigError(f"cannot read rational from '{text}': {e}")


def safe_fraction_conversion(value, field_name: str = "") -> Fraction:
    """
    Lenient rational conversion for user-supplied numbers.
    Accepts ints, Fractions, 'num/den' strings and decimal strings.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    cleaned = str(value).strip()
    if not cleaned:
        raise InvalidConfigError(f"empty value for '{field_name}'")
    if "/" in cleaned:
        return parse_rational(cleaned)
    try:
        return Fraction(cleaned)
    except (ValueError, ZeroDivisionError) as e:
        raise InvalidConfigError(f"cannot convert '{value}' for '{field_name}': {e}")


def parse_quantity(text: str, unit: str) -> mpf:
    """
    Read a unit-suffixed quantity such as '1cm3', '0.3s' or '10cm'.

    Args:
        text: Number with an optional unit suffix
        unit: Required unit; a bare number is taken to be in this unit

    Returns:
        The numeric value as an mpf
    """
    match = _QUANTITY_PATTERN.match(str(text))
    if not match:
        raise InvalidConfigError(f"cannot read quantity '{text}' (expected e.g. 1{unit})")
    number, suffix = match.groups()
    if suffix and suffix != unit:
        raise InvalidConfigError(f"quantity '{text}' has unit '{suffix}', expected '{unit}'")
    return mpf(number)


def format_bigfloat(value: mpf, digits: int) -> str:
    """Decimal string with an explicit number of significant digits."""
    return mp.nstr(value, digits, min_fixed=-5, max_fixed=5)
