"""
Physical estimates built on the stretched-exponential tail:
black-hole nucleation by large energy-density fluctuations and the
Boltzmann-brain suppression exponent.
"""

from mpmath import mp, mpf, exp, log, pi as mp_pi

from core.data_models import NucleationQuery, PhysicalConstants, ProbabilityMode, TailParams
from core.exceptions import ConvergenceError, InvalidConfigError
from .incomplete_gamma import upper_incomplete_gamma


MASS_BRACKET = (mpf(1), mpf(10) ** 6)
MASS_SOLVER_ITERATIONS = 200


def nucleation_probability(
    tail: TailParams,
    x,
    mode: ProbabilityMode = ProbabilityMode.EXACT,
    upper_factor=2,
) -> mpf:
    """
    Probability of a fluctuation with x' in [x, upper_factor * x].

    EXACT: 3 c0 a^3 [Gamma(-3, u1) - Gamma(-3, u2)], u1 = a x^(1/3), u2 = upper_factor^(1/3) u1
    ASYMPTOTIC: (3 c0 / a) x^(-4/3) exp(-a x^(1/3)), the lower-limit contribution
    """
    x = mpf(x)
    if not x > 0:
        raise InvalidConfigError(f"nucleation_probability needs x > 0 (got {x})")
    third = mpf(1) / 3
    u1 = tail.a * x ** third
    if mode == ProbabilityMode.ASYMPTOTIC:
        return 3 * tail.c0 / tail.a * x ** (-4 * third) * exp(-u1)
    u2 = mpf(upper_factor) ** third * u1
    return 3 * tail.c0 * tail.a ** 3 * (upper_incomplete_gamma(-3, u1) - upper_incomplete_gamma(-3, u2))


def nucleation_exponent_prefactor(tail: TailParams) -> mpf:
    """a0 = (16 pi^2)^(1/3) a, the coefficient of (M/m_p)^(2/3) in the exponent."""
    return (16 * mp_pi ** 2) ** (mpf(1) / 3) * tail.a


def planck_four_volume(query: NucleationQuery, constants: PhysicalConstants = PhysicalConstants()) -> mpf:
    """VT / l_p^4 with T converted to centimetres, unless the query overrides it."""
    if query.four_volume_override is not None:
        return mpf(query.four_volume_override)
    volume = mpf(query.volume_cm3)
    time_cm = mpf(query.time_s) * constants.cm_per_second
    if not volume > 0 or not time_cm > 0:
        raise InvalidConfigError("volume and time must be positive")
    return volume * time_cm / constants.planck_length_cm ** 4


def _log_count(mass, four_volume, tail: TailParams) -> mpf:
    a0 = nucleation_exponent_prefactor(tail)
    return (
        log(3 * tail.c0 / tail.a)
        - mpf(4) / 3 * log(16 * mp_pi ** 2)
        + log(four_volume)
        - mpf(20) / 3 * log(mass)
        - a0 * mass ** (mpf(2) / 3)
    )


def black_hole_count(
    query: NucleationQuery,
    tail: TailParams,
    constants: PhysicalConstants = PhysicalConstants(),
) -> mpf:
    """
    Expected number of black holes of mass M nucleated in the four-volume VT.

    n = (3c0/a) (16 pi^2)^(-4/3) (VT/l_p^4) (m_p/M)^(20/3) exp(-a0 (M/m_p)^(2/3))
    """
    if query.mass_in_planck_units is None:
        raise InvalidConfigError("black_hole_count needs a mass")
    mass = mpf(query.mass_in_planck_units)
    if not mass > 0:
        raise InvalidConfigError(f"mass must be positive (got {mass})")
    return exp(_log_count(mass, planck_four_volume(query, constants), tail))


def black_hole_mass_for_count(
    query: NucleationQuery,
    tail: TailParams,
    constants: PhysicalConstants = PhysicalConstants(),
) -> mpf:
    """
    Mass (Planck units) at which the expected count equals query.expected_count.

    Bisection in log M over [1, 10^6]; the count is strictly decreasing in M.
    """
    if query.expected_count is None:
        raise InvalidConfigError("black_hole_mass_for_count needs an expected count")
    target = mpf(query.expected_count)
    if not target > 0:
        raise InvalidConfigError(f"expected count must be positive (got {target})")
    four_volume = planck_four_volume(query, constants)
    log_target = log(target)

    def excess(log_mass):
        return _log_count(exp(log_mass), four_volume, tail) - log_target

    lo, hi = log(MASS_BRACKET[0]), log(MASS_BRACKET[1])
    if excess(lo) < 0 or excess(hi) > 0:
        raise ConvergenceError(
            f"no mass in [{MASS_BRACKET[0]}, {mp.nstr(MASS_BRACKET[1], 3)}] m_p gives count {mp.nstr(target, 6)}"
        )
    tolerance = mpf(2) ** (-mp.prec + 8)
    for _ in range(MASS_SOLVER_ITERATIONS):
        mid = (lo + hi) / 2
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tolerance:
            break
    return exp((lo + hi) / 2)


def boltzmann_brain_exponent(
    mass_kg,
    size_cm,
    time_s,
    constants: PhysicalConstants = PhysicalConstants(),
) -> mpf:
    """
    E in P ~ exp(-E) for assembling mass M in a region of size l within time tau.

    E = tau^(4/3) M^(1/3) / l in natural units (prefactor dropped, a taken as 1).
    """
    mass, size, time = mpf(mass_kg), mpf(size_cm), mpf(time_s)
    if not (mass > 0 and size > 0 and time > 0):
        raise InvalidConfigError("mass, size and time must be positive")
    tau = time * constants.cm_per_second
    mass_inverse_cm = mass * constants.inverse_cm_per_kg
    return tau ** (mpf(4) / 3) * mass_inverse_cm ** (mpf(1) / 3) / size
