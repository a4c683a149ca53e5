"""
Upper incomplete Gamma function at working precision.

For x >= 1 the modified Lentz continued fraction is used; it converges for
any real s, including the negative integer orders the nucleation estimate
needs. Below that, mpmath's gammainc is reliable.
"""

from mpmath import mp, mpf, exp, log, gammainc, workdps

from core.exceptions import ConvergenceError


CF_THRESHOLD = 1
MAX_ITERATIONS = 10000


def _continued_fraction(s: mpf, x: mpf) -> mpf:
    tiny = mpf(2) ** (-mp.prec * 2)
    accuracy = mpf(2) ** (-mp.prec + 4)

    b = x + 1 - s
    c = 1 / tiny
    d = 1 / b
    h = d
    for i in range(1, MAX_ITERATIONS + 1):
        an = -i * (i - s)
        b += 2
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1 / d
        delta = d * c
        h *= delta
        if abs(delta - 1) < accuracy:
            return exp(-x + s * log(x)) * h
    raise ConvergenceError(f"incomplete gamma continued fraction did not converge (s={s}, x={x})")


def upper_incomplete_gamma(s, x, digits: int = None) -> mpf:
    """
    Gamma(s, x) = integral from x to infinity of t^(s-1) exp(-t) dt.

    Args:
        s: Order, any real
        x: Lower limit, positive
        digits: Working precision; the caller's context when omitted
    """
    if digits is None:
        digits = mp.dps
    with workdps(digits + 5):
        s = mpf(s)
        x = mpf(x)
        if not x > 0:
            raise ValueError(f"upper_incomplete_gamma needs x > 0 (got {x})")
        if x >= CF_THRESHOLD:
            result = _continued_fraction(s, x)
        else:
            result = gammainc(s, x)
    return +result
