"""
Distribution-level tools: the shifted Gamma model, the stretched-exponential
tail, the two-component model density, Chebyshev-type tail bounds and the
log-integrability diagnostic.
"""

import math
from fractions import Fraction
from typing import Callable, Dict, List, Sequence, Tuple

from mpmath import (
    mp, mpf, quad, exp, log, sqrt, gamma, gammainc, pi as mp_pi, workdps,
)

from core.conversions import to_bigfloat
from core.data_models import (
    FitParams, KreinResult, MomentTable, OperatorSpec, ShiftedGammaParams, TailParams,
)
from core.exceptions import ConvergenceError, InvalidConfigError


# Relative resolution of double precision; the default spike cut of the model density
DOUBLE_RESOLUTION = mpf(2) ** -52

KREIN_DIVERGENCE_STREAK = 5


def shifted_gamma_moments(params: ShiftedGammaParams, n_max: int) -> list:
    """
    Moments of the Gamma density shifted to [-x0, inf).

    a_n = sum_k C(n, k) (-x0)^(n-k) alpha (alpha+1)...(alpha+k-1) / beta^k,
    exact when all three parameters are rational.
    """
    if n_max < 0:
        raise InvalidConfigError(f"n_max must be >= 0 (got {n_max})")
    if params.is_exact:
        x0, alpha, beta = (Fraction(v) for v in (params.x0, params.alpha, params.beta))
        one = Fraction(1)
    else:
        x0, alpha, beta = (mpf(v) if not isinstance(v, Fraction) else to_bigfloat(v)
                           for v in (params.x0, params.alpha, params.beta))
        one = mpf(1)

    # raw moments of the unshifted Gamma
    raw = [one]
    for k in range(1, n_max + 1):
        raw.append(raw[-1] * (alpha + k - 1) / beta)

    moments = []
    for n in range(n_max + 1):
        total = 0 * one
        for k in range(n + 1):
            total += math.comb(n, k) * (-x0) ** (n - k) * raw[k]
        moments.append(total)
    return moments


def shifted_gamma_pdf(params: ShiftedGammaParams, x) -> mpf:
    """beta^alpha t^(alpha-1) exp(-beta t) / Gamma(alpha) with t = x + x0; zero off the support."""
    x0, alpha, beta = (to_bigfloat(v) if isinstance(v, Fraction) else mpf(v)
                       for v in (params.x0, params.alpha, params.beta))
    t = mpf(x) + x0
    if t <= 0:
        return mpf(0)
    return beta ** alpha * t ** (alpha - 1) * exp(-beta * t) / gamma(alpha)


def cft2d_params(c) -> ShiftedGammaParams:
    """Parameters for a two-dimensional CFT of central charge c."""
    c = mpf(c)
    return ShiftedGammaParams(x0=c / (12 * mp_pi), alpha=c / 12, beta=+mp_pi)


def shifted_gamma_numeric_moment(params: ShiftedGammaParams, n: int, digits: int = 20) -> mpf:
    """
    n-th moment by quadrature, as an independent check of the closed form.

    With u = (x + x0)^alpha the density's endpoint singularity disappears:
    integral = beta^alpha / Gamma(alpha + 1) * int_0^inf (u^(1/alpha) - x0)^n exp(-beta u^(1/alpha)) du.
    """
    with workdps(digits + 10):
        x0, alpha, beta = (to_bigfloat(v) if isinstance(v, Fraction) else mpf(v)
                           for v in (params.x0, params.alpha, params.beta))
        inverse = 1 / alpha
        # t = 2^j / beta covers the bulk from far below the mode to past the n-th moment peak
        top = int(math.log2(n + 60)) + 2
        points = sorted({mpf(0)} | {(mpf(2) ** j / beta) ** alpha for j in range(-12, top)})
        points.append(mp.inf)
        value = quad(lambda u: (u ** inverse - x0) ** n * exp(-beta * u ** inverse), points)
        result = beta ** alpha / gamma(alpha + 1) * value
    return +result


def tail_fit(table: MomentTable, n_pair: Tuple[int, int] = (64, 65), digits: int = 30) -> TailParams:
    """
    Tail constants from two high moments.

    a^3 = 3(n-1)(3n-2)(3n-1) a_n / a_{n+1} at n = n_pair[0];
    c0 = a_m a^(3(m-1)) / (3 Gamma(3m-3)) at m = n_pair[1].
    """
    n, m = n_pair
    if n < 2 or m < 2:
        raise InvalidConfigError(f"tail calibration needs indices >= 2 (got {n_pair})")
    table.require(max(n + 1, m))
    with workdps(digits):
        ratio = to_bigfloat(table.full[n]) / to_bigfloat(table.full[n + 1])
        a = (3 * (n - 1) * (3 * n - 2) * (3 * n - 1) * ratio) ** (mpf(1) / 3)
        c0 = to_bigfloat(table.full[m]) * a ** (3 * (m - 1)) / (3 * gamma(3 * m - 3))
        return TailParams(c0=c0, a=a)


def tail_predicted_moment(tail: TailParams, n: int) -> mpf:
    """3 c0 a^(-3(n-1)) Gamma(3(n-1)), the n-th moment of the tail ansatz."""
    if n < 2:
        raise InvalidConfigError(f"tail moments need n >= 2 (got {n})")
    return 3 * tail.c0 * tail.a ** (-3 * (n - 1)) * gamma(3 * (n - 1))


def tail_validity_range(tail: TailParams, n_lo: int, n_hi: int) -> Tuple[mpf, mpf]:
    """x where the n-th moment integrand of the tail peaks, for n_lo and n_hi."""
    if n_lo < 3 or n_hi < n_lo:
        raise InvalidConfigError(f"validity range needs 3 <= n_lo <= n_hi (got {n_lo}, {n_hi})")
    return (3 * (n_lo - 2) / tail.a) ** 3, (3 * (n_hi - 2) / tail.a) ** 3


def predicted_tail(base_tail: TailParams, spec: OperatorSpec) -> TailParams:
    """Tail of a multi-species operator from the base tail and its dominant weight."""
    weight, multiplicity = spec.dominant_weight
    w = to_bigfloat(weight)
    return TailParams(c0=multiplicity * w * base_tail.c0, a=w ** (-mpf(1) / 3) * base_tail.a)


def fit_pdf(fit: FitParams, x) -> mpf:
    """Two-component model density; zero at and below -x0."""
    t = mpf(x) + fit.x0
    if t <= 0:
        return mpf(0)
    spike = fit.c1 * t ** (-fit.alpha) * exp(-fit.beta * t ** fit.gamma)
    tail = fit.c0 / (fit.alpha0 + t ** 2) * exp(-fit.a * t ** (mpf(1) / 3))
    return spike + tail


def fit_pdf_grid(fit: FitParams, xs: Sequence) -> List[Tuple[mpf, mpf]]:
    """(x, P(x)) samples for plotting."""
    return [(mpf(x), fit_pdf(fit, x)) for x in xs]


def model_fit_moments(
    fit: FitParams,
    n_max: int,
    tol=mpf("1e-10"),
    spike_cutoff=None,
    digits: int = 30,
) -> List[mpf]:
    """
    Moments 0..n_max of the model density.

    The spike term is integrated in closed form: with t = x + x0 and the
    binomial expansion of (t - x0)^n each piece is
    Gamma(s_k, beta cut^gamma) / (gamma beta^s_k), s_k = (k - alpha + 1)/gamma.
    The spike is cut at t = spike_cutoff (x0 * 2^-52 when None, 0 for the
    exact integral). The tail term is integrated numerically in s = t^(1/3).

    Raises:
        ConvergenceError: quadrature error estimate above tol (relative)
    """
    tol = mpf(tol)
    if not tol > 0:
        raise InvalidConfigError("tol must be positive")
    with workdps(digits):
        cut = fit.x0 * DOUBLE_RESOLUTION if spike_cutoff is None else mpf(spike_cutoff)
        if cut < 0:
            raise InvalidConfigError("spike_cutoff must be >= 0")
        lower = fit.beta * cut ** fit.gamma

        spike_pieces = []
        for k in range(n_max + 1):
            s_k = (k - fit.alpha + 1) / fit.gamma
            spike_pieces.append(gammainc(s_k, lower) / (fit.gamma * fit.beta ** s_k))

        root_x0 = fit.x0 ** (mpf(1) / 3)
        moments = []
        for n in range(n_max + 1):
            spike = fit.c1 * sum(
                math.comb(n, k) * (-fit.x0) ** (n - k) * spike_pieces[k] for k in range(n + 1)
            )

            peak = mpf(3 * n + 2) / fit.a
            points = sorted({mpf(0), root_x0, mpf(1), peak / 2, peak, 2 * peak})
            points.append(mp.inf)

            def integrand(s, n=n):
                return 3 * s ** 2 * (s ** 3 - fit.x0) ** n * exp(-fit.a * s) / (fit.alpha0 + s ** 6)

            value, error = quad(integrand, points, error=True, maxdegree=10)
            if error > tol * abs(value):
                raise ConvergenceError(
                    f"model density moment n={n}: quadrature error {mp.nstr(error, 3)} above tolerance"
                )
            moments.append(+(spike + fit.c0 * value))
    return moments


def model_fit_fractional_errors(
    fit: FitParams, table: MomentTable, n_max: int, tol=mpf("1e-10"), spike_cutoff=None,
) -> Dict[int, mpf]:
    """(a_n(fit) - a_n)/a_n for n <= n_max; n = 1 is skipped because a_1 = 0."""
    table.require(n_max)
    fitted = model_fit_moments(fit, n_max, tol=tol, spike_cutoff=spike_cutoff)
    errors = {}
    for n, value in enumerate(fitted):
        if n == 1:
            continue
        exact = to_bigfloat(table.full[n])
        errors[n] = (value - exact) / exact
    return errors


def cdf_upper_bound(table: MomentTable, lam) -> mpf:
    """
    Prob(X >= lambda) <= min_n (a_n + 1)/lambda^n, clamped to 1.

    Valid because the support starts above -1.
    """
    lam = mpf(lam)
    if not lam > 0:
        raise InvalidConfigError(f"lambda must be positive (got {lam})")
    best = mpf(1)
    for n, a in enumerate(table.full):
        bound = (to_bigfloat(a) + 1) / lam ** n
        if bound < best:
            best = bound
    return best


def cdf_asymptotic_bound(tail: TailParams, lam) -> mpf:
    """sqrt(2 pi) C (D/lambda)^(7/6) exp(-(lambda/D)^(1/3)), the large-lambda form of the bound."""
    lam = mpf(lam)
    ratio = tail.D / lam
    return sqrt(2 * mp_pi) * tail.C * ratio ** (mpf(7) / 6) * exp(-(1 / ratio) ** (mpf(1) / 3))


def fitted_tail_survival(tail: TailParams, lam) -> mpf:
    """Leading behaviour of Prob(X >= lambda) for the tail ansatz: C (D/lambda)^(4/3) exp(-(lambda/D)^(1/3))."""
    lam = mpf(lam)
    ratio = tail.D / lam
    return tail.C * ratio ** (mpf(4) / 3) * exp(-(1 / ratio) ** (mpf(1) / 3))


def cdf_comparison_tail(tail: TailParams, x) -> mpf:
    """Half the fitted survival function; the comparison curve below the true tail."""
    return fitted_tail_survival(tail, x) / 2


class _VanishingDensity(Exception):
    pass


def krein_integral(
    pdf: Callable,
    x0,
    tol=mpf("1e-8"),
    max_segments: int = 200,
    digits: int = 20,
) -> KreinResult:
    """
    int_{-x0}^inf log p(x) / (sqrt(x + x0) (1 + x)) dx, or a divergence flag.

    Substituting x = u^2 - x0 gives int_0^inf 2 log p / (1 - x0 + u^2) du,
    integrated over [0,1], [1,2], [2,4], ... until a segment drops below
    tol relative to the running total. Segments that stop shrinking, or a
    density that vanishes somewhere, mean divergence to -infinity.

    Raises:
        ValueError: the density is negative at a sample point
    """
    with workdps(digits):
        x0 = mpf(x0)
        tol = mpf(tol)
        if not 0 <= x0 < 1:
            raise InvalidConfigError(f"Krein diagnostic needs 0 <= x0 < 1 (got {x0})")

        edge = max(x0, mpf(1)) * mpf(2) ** (-mp.prec + 4)

        def integrand(u):
            p = pdf(u * u - x0)
            if p < 0:
                raise ValueError(f"density negative at x={mp.nstr(u * u - x0, 8)}")
            if p == 0:
                # nodes that round onto the support edge carry no weight
                if u * u <= edge:
                    return mpf(0)
                raise _VanishingDensity()
            return 2 * log(p) / (1 - x0 + u * u)

        total = mpf(0)
        previous = None
        streak = 0
        edges = [mpf(0), mpf(1)]
        for segment in range(1, max_segments + 1):
            lo, hi = edges[-2], edges[-1]
            try:
                piece = quad(integrand, [lo, hi])
            except _VanishingDensity:
                return KreinResult(value=None, divergent=True, segments=segment,
                                   reason="density vanishes on part of the support")
            total += piece
            if abs(piece) < tol * max(1, abs(total)):
                return KreinResult(value=+total, divergent=False, segments=segment)
            if previous is not None and previous != 0 and abs(piece / previous) >= 1:
                streak += 1
                if streak >= KREIN_DIVERGENCE_STREAK:
                    return KreinResult(value=None, divergent=True, segments=segment,
                                       reason="segment contributions do not decrease")
            else:
                streak = 0
            previous = piece
            edges.append(2 * hi)
        return KreinResult(value=None, divergent=True, segments=max_segments,
                           reason=f"no convergence within {max_segments} segments")
