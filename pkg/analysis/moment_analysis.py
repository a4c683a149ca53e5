"""
Lower bounds from Stieltjes positivity, sequence acceleration and
extrapolation of the bound sequence.

M(N, y) is the N x N matrix with entries a_{i+j+1} + y a_{i+j}. For every
y at or above the support infimum it is positive semidefinite, so the
smallest y where it stays positive definite, y_N, is a lower bound on the
operator. The leading N x N block of M(N', y) is M(N, y) itself, so one
elimination at the largest N yields every det M(N, y) at once.
"""

import math
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

from mpmath import mpf, matrix, lu_solve, workdps
from sympy import Poly, ZZ, symbols

from core.conversions import to_bigfloat
from core.data_models import BoundSequence, ExtrapolationFit, MomentTable
from core.exceptions import ConvergenceError, InvalidConfigError


Y = symbols("y")

# y_inf relations between operators: (numerator, denominator, predicted ratio)
ADDITIVITY_RELATIONS = (
    ("rhoEM", "phidot2", 2),
    ("E2", "rhoEM", 1),
    ("rhoEM", "rhoS", 2),
)


def _check_depth(table: MomentTable, N: int):
    if N < 2:
        raise InvalidConfigError(f"Stieltjes matrix needs N >= 2 (got {N})")
    table.require(2 * N - 1)


def _integer_moments(table: MomentTable, count: int) -> List[int]:
    """a_0..a_{count-1} times the lcm of their denominators."""
    moments = table.full[:count]
    scale = 1
    for a in moments:
        scale = scale * a.denominator // math.gcd(scale, a.denominator)
    return [int(a * scale) for a in moments]


def leading_minors(table: MomentTable, N: int) -> List[Poly]:
    """
    det M(k, y) for k = 1..N, up to one common positive factor per k.

    Fraction-free elimination over Z[y]: every division is exact, and the
    k-th pivot is the k-th leading principal minor.
    """
    _check_depth(table, N)
    a = _integer_moments(table, 2 * N)
    m = [[Poly(a[i + j + 1] + a[i + j] * Y, Y, domain=ZZ) for j in range(N)] for i in range(N)]

    minors = [m[0][0]]
    previous = Poly(1, Y, domain=ZZ)
    for k in range(N - 1):
        pivot = m[k][k]
        if pivot.is_zero:
            raise ConvergenceError(f"vanishing leading minor at k={k + 1}")
        for i in range(k + 1, N):
            for j in range(k + 1, N):
                m[i][j] = (pivot * m[i][j] - m[i][k] * m[k][j]).exquo(previous)
        previous = pivot
        minors.append(m[k + 1][k + 1])
    return minors


def stieltjes_determinant(table: MomentTable, N: int) -> Poly:
    """det M(N, y) as an integer polynomial (positive multiple of the rational one)."""
    return leading_minors(table, N)[-1]


def _sign_at(poly: Poly, num: int, den: int) -> int:
    """Sign of poly(num/den) for den > 0, by homogeneous integer Horner."""
    coefficients = [int(c) for c in poly.all_coeffs()]
    value = coefficients[0]
    power = 1
    for c in coefficients[1:]:
        power *= den
        value = value * num + c * power
    # value = den^deg * poly(num/den)
    return (value > 0) - (value < 0)


def _positive_definite(minors: Sequence[Poly], num: int, den: int) -> bool:
    return all(_sign_at(d, num, den) > 0 for d in minors)


def leading_minors_positive(table: MomentTable, N: int, y) -> bool:
    """Sylvester test: every leading principal minor of M(N, y) positive at rational y."""
    y = Fraction(y)
    return _positive_definite(leading_minors(table, N), y.numerator, y.denominator)


def _root_bound_exponent(poly: Poly) -> int:
    """e with 2^e above every root modulus (Cauchy bound)."""
    coefficients = [abs(int(c)) for c in poly.all_coeffs()]
    lead = coefficients[0]
    bound = 1 + Fraction(max(coefficients[1:], default=0), lead)
    exponent = 0
    while 2 ** exponent < bound:
        exponent += 1
    return exponent


def _bisect_threshold(minors: Sequence[Poly], digits: int) -> Fraction:
    """
    Smallest y with every minor positive, to within 10^-(digits+2).

    Works on dyadic rationals m / 2^k so every sign is decided exactly.
    """
    exponent = _root_bound_exponent(minors[-1])
    lo_num, hi_num, shift = -(2 ** exponent), 2 ** exponent, 0
    if not _positive_definite(minors, hi_num, 1):
        raise ConvergenceError("matrix not positive definite above the root bound")
    if _positive_definite(minors, lo_num, 1):
        raise ConvergenceError("matrix positive definite below the root bound")

    tolerance = Fraction(1, 10 ** (digits + 2))
    while Fraction(hi_num - lo_num, 2 ** shift) >= tolerance:
        lo_num, hi_num, shift = 2 * lo_num, 2 * hi_num, shift + 1
        mid = (lo_num + hi_num) // 2
        if _positive_definite(minors, mid, 2 ** shift):
            hi_num = mid
        else:
            lo_num = mid
    return Fraction(lo_num + hi_num, 2 ** (shift + 1))


def stieltjes_lower_bound(table: MomentTable, N: int, digits: int = 40) -> mpf:
    """
    y_N: the largest root of det M(N, y) = 0.

    Args:
        table: Moments a_0..a_{2N-1} at least
        N: Matrix size, at least 2
        digits: Decimal digits of the result

    Returns:
        y_N at the requested precision
    """
    minors = leading_minors(table, N)
    threshold = _bisect_threshold(minors, digits)
    with workdps(digits):
        result = to_bigfloat(threshold)
    return result


def lower_bound_sequence(table: MomentTable, Ns: Sequence[int], digits: int = 40) -> BoundSequence:
    """y_N for every N in Ns, sharing a single elimination."""
    Ns = sorted(set(Ns))
    if not Ns:
        raise InvalidConfigError("empty N range")
    minors = leading_minors(table, Ns[-1])
    sequence = BoundSequence(field=table.spec.name, digits=digits)
    for N in Ns:
        if N < 2:
            raise InvalidConfigError(f"Stieltjes matrix needs N >= 2 (got {N})")
        threshold = _bisect_threshold(minors[:N], digits)
        with workdps(digits):
            sequence.values[N] = to_bigfloat(threshold)
    return sequence


def accelerate(seq: Sequence[Tuple[int, mpf]], k) -> List[Tuple[int, mpf]]:
    """
    (L^(k) y)_N = (N + 1)/k (y_{N+1} - y_N) + y_N.

    Exact for y_N = y_inf - c/N^k at every N; constants are preserved.
    """
    seq = sorted(seq)
    if len(seq) < 2:
        raise InvalidConfigError("acceleration needs at least two consecutive entries")
    k = Fraction(k)
    if k <= 0:
        raise InvalidConfigError(f"acceleration order must be positive (got {k})")
    k_mp = to_bigfloat(k)
    result = []
    for (n, y_n), (n_next, y_next) in zip(seq, seq[1:]):
        if n_next != n + 1:
            raise InvalidConfigError(f"gap in sequence between N={n} and N={n_next}")
        result.append((n, (n + 1) / k_mp * (y_next - y_n) + y_n))
    return result


def accelerate_chain(seq: Sequence[Tuple[int, mpf]], ks: Sequence) -> List[Tuple[int, mpf]]:
    """Apply L^(k) for each k in order; the first k acts first."""
    result = list(seq)
    for k in ks:
        result = accelerate(result, k)
    return result


def extrapolate_fit(
    seq: Sequence[Tuple[int, mpf]],
    exponents: Sequence,
    window: Tuple[int, int],
    digits: int = 40,
) -> ExtrapolationFit:
    """
    Least-squares fit y_N = sum_e c_e N^-e over the window.

    Args:
        seq: (N, y_N) pairs
        exponents: Basis exponents; must include 0 (the y_inf term)
        window: Inclusive (N_lo, N_hi)
        digits: Output precision; the solve runs with at least 60 digits

    Returns:
        ExtrapolationFit with the constant term as y_infinity
    """
    exponents = tuple(Fraction(e) for e in exponents)
    if Fraction(0) not in exponents:
        raise InvalidConfigError("extrapolation basis needs the constant exponent 0")
    if len(set(exponents)) != len(exponents):
        raise InvalidConfigError("rank-deficient basis: repeated exponent")
    lo, hi = window
    points = [(n, y) for n, y in sorted(seq) if lo <= n <= hi]
    if len(points) < len(exponents):
        raise InvalidConfigError(
            f"rank-deficient fit: {len(points)} points for {len(exponents)} basis functions"
        )

    with workdps(max(60, digits + 20)):
        design = [[mpf(n) ** (-to_bigfloat(e)) for e in exponents] for n, _ in points]
        values = [mpf(y) for _, y in points]
        size = len(exponents)
        normal = matrix(size, size)
        rhs = matrix(size, 1)
        for row, value in zip(design, values):
            for i in range(size):
                rhs[i] += row[i] * value
                for j in range(size):
                    normal[i, j] += row[i] * row[j]
        try:
            solution = lu_solve(normal, rhs)
        except ZeroDivisionError:
            raise InvalidConfigError("rank-deficient design matrix")
        coefficients = [solution[i] for i in range(size)]
        residuals = [
            abs(value - sum(c * b for c, b in zip(coefficients, row)))
            for row, value in zip(design, values)
        ]
        max_residual = max(residuals)
        y_infinity = coefficients[exponents.index(Fraction(0))]

    with workdps(digits):
        return ExtrapolationFit(
            exponents=exponents,
            window=(lo, hi),
            coefficients=[+c for c in coefficients],
            y_infinity=+y_infinity,
            max_residual=+max_residual,
        )


def bound_additivity(estimates: Dict[str, mpf], uncertainty) -> Dict[str, Dict]:
    """
    Compare extrapolated bounds with the species-counting relations
    y(rhoEM) = y(E2) = 2 y(rhoS) = 2 y(phidot2).

    A relation is consistent when |y_num - ratio * y_den| stays within twice
    the uncertainty scaled by the ratio.
    """
    uncertainty = mpf(uncertainty)
    report = {}
    for numerator, denominator, ratio in ADDITIVITY_RELATIONS:
        if numerator not in estimates or denominator not in estimates:
            continue
        y_num, y_den = mpf(estimates[numerator]), mpf(estimates[denominator])
        deviation = abs(y_num - ratio * y_den)
        report[f"{numerator}/{denominator}"] = {
            "ratio": y_num / y_den,
            "predicted": ratio,
            "deviation": deviation,
            "consistent": bool(deviation <= 2 * uncertainty * max(1, ratio)),
        }
    return report
