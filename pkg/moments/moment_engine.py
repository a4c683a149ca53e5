"""
Exact moment tables for the built-in and user-defined operators,
plus growth diagnostics and the dominant-graph bounds.
"""

import math
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from mpmath import mp, mpf, e as mp_e, pi as mp_pi, log, loggamma, workdps

from core.base_calculator import BaseCalculator
from core.conversions import to_bigfloat
from core.data_models import (
    CODE_VERSION, DEFAULT_DIGITS, DominantGraphBounds, GrowthDiagnostics, KTable,
    MomentTable, OperatorSpec,
)
from core.exceptions import InsufficientDepthError, InvalidConfigError
from core.kernel_arith import series_exp, series_from
from .k_integrals import k_table, l_factor
from .run_combinatorics import connected_moments_by_flow


def species_connected_moments(base: Sequence[Fraction], weights) -> List[Fraction]:
    """
    C_n(A) = sum_I mult_I * w_I^n * C_n(base).

    base is indexed by n with the C_0 = 1, C_1 = 0 convention, which is kept.
    """
    result = [Fraction(1), Fraction(0)]
    for n in range(2, len(base)):
        factor = sum((Fraction(m) * Fraction(w) ** n for w, m in weights), Fraction(0))
        result.append(factor * base[n])
    return result[:len(base)]


def base_connected_moments(p: int, n_max: int, ktable: Optional[KTable] = None) -> List[Fraction]:
    """[1, 0, C_2, ..., C_{n_max}] for the single-species operator of class p."""
    if n_max < 2:
        raise InvalidConfigError(f"n_max must be >= 2 (got {n_max})")
    if ktable is None:
        ktable = k_table(p, n_max - 1)
    by_n = connected_moments_by_flow(ktable, n_max)
    return [Fraction(1), Fraction(0)] + [by_n[n] for n in range(2, n_max + 1)]


def build_moment_table(
    spec: OperatorSpec,
    n_max: int,
    base_connected: Optional[Sequence[Fraction]] = None,
) -> MomentTable:
    """
    Connected and full moments of spec up to n_max, all exact.

    Args:
        spec: Operator as weighted species of the base field
        n_max: Highest moment index
        base_connected: Precomputed base connected moments (e.g. from the cache)

    Returns:
        MomentTable with a_0 = 1, a_1 = 0
    """
    if n_max < 2:
        raise InvalidConfigError(f"n_max must be >= 2 (got {n_max})")
    if base_connected is None:
        base_connected = base_connected_moments(spec.p, n_max)
    elif len(base_connected) < n_max + 1:
        raise InsufficientDepthError(
            f"base moments stop at n={len(base_connected) - 1}, table needs n_max={n_max}"
        )
    connected = species_connected_moments(list(base_connected[:n_max + 1]), spec.weights)

    cumulants = series_from([Fraction(0)] + connected[1:])
    full = series_exp(cumulants).coefficients

    return MomentTable(
        spec=spec,
        n_max=n_max,
        connected=tuple(connected),
        full=tuple(full),
        provenance={"p": spec.p, "n_max": n_max, "code_version": CODE_VERSION},
    )


def _least_squares_residuals(design: np.ndarray, target: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    coefficients, *_ = np.linalg.lstsq(design, target, rcond=None)
    return coefficients, target - design @ coefficients


def growth_diagnostics(table: MomentTable) -> GrowthDiagnostics:
    """
    Margins against the Hamburger and Stieltjes determinacy criteria.

    The margin at n is ln a_n - ln (kn)! - n ln D - ln C for the least-squares
    (C, D); k = 1 for Hamburger, k = 2 for Stieltjes. A bounded margin means
    the criterion is met with those constants. The factorial order is the
    coefficient of ln n! in a fit of ln a_n on {ln n!, n, ln n, 1} over the top
    third of the available n.
    """
    if table.n_max < 10:
        raise InsufficientDepthError(f"growth diagnostics need n_max >= 10 (got {table.n_max})")

    indices = [n for n in range(2, table.n_max + 1) if table.full[n] > 0]
    with workdps(30):
        ln_a = np.array([float(log(to_bigfloat(table.full[n]))) for n in indices])
    ns = np.array(indices, dtype=float)
    ln_fact = np.array([math.lgamma(n + 1) for n in indices])
    ln_fact2 = np.array([math.lgamma(2 * n + 1) for n in indices])
    linear = np.column_stack([np.ones_like(ns), ns])

    ham_coef, ham_res = _least_squares_residuals(linear, ln_a - ln_fact)
    sti_coef, sti_res = _least_squares_residuals(linear, ln_a - ln_fact2)

    top = [i for i, n in enumerate(indices) if n >= table.n_max - table.n_max // 3]
    basis = np.column_stack([ln_fact[top], ns[top], np.log(ns[top]), np.ones(len(top))])
    order_coef, _ = _least_squares_residuals(basis, ln_a[top])

    return GrowthDiagnostics(
        hamburger_margin={n: mpf(float(r)) for n, r in zip(indices, ham_res)},
        stieltjes_margin={n: mpf(float(r)) for n, r in zip(indices, sti_res)},
        factorial_order_estimate=mpf(float(order_coef[0])),
        hamburger_constants=(mp.exp(ham_coef[0]), mp.exp(ham_coef[1])),
        stieltjes_constants=(mp.exp(sti_coef[0]), mp.exp(sti_coef[1])),
    )


def dominant_graph_bounds(p: int, n: int, ktable: Optional[KTable] = None) -> DominantGraphBounds:
    """
    Bracket on the dominant graph J_n = K_1 K_{n-1}.

    lower = (p!/2^(p+1)) L_{n-1}^(0)
    upper = (p+1)! (p+1)^3 ((n-1)(p+2)-2)! / ((2^(p+1)(p+1)^2)^n ((n-2)!)^2)
    Both are exact and coincide with J_3 at p = 1.
    """
    if n < 3:
        raise InvalidConfigError(f"dominant_graph_bounds needs n >= 3 (got {n})")
    if ktable is None or ktable.max_n < n - 1:
        ktable = k_table(p, n - 1)
    j_n = ktable.value(1) * ktable.value(n - 1)

    lower_exact = Fraction(math.factorial(p), 2 ** (p + 1)) * l_factor(p, n - 1, 0)
    upper_exact = Fraction(
        math.factorial(p + 1) * (p + 1) ** 3 * math.factorial((n - 1) * (p + 2) - 2),
        (2 ** (p + 1) * (p + 1) ** 2) ** n * math.factorial(n - 2) ** 2,
    )

    ratio = mpf(p + 1) / (p + 2)
    return DominantGraphBounds(
        p=p,
        n=n,
        J_n=j_n,
        lower_exact=lower_exact,
        upper_exact=upper_exact,
        lower=to_bigfloat(lower_exact),
        upper=to_bigfloat(upper_exact),
        alpha_growth=mp_e * ratio ** (p + mpf(7) / 2),
        beta_growth=(1 / ratio) ** (p + 2) / mp_e,
    )


def j_asymptotic_constants(p: int) -> Dict[str, mpf]:
    """
    Stirling forms of the J_n bracket, scaled by 8^n and measured in units
    of (pn - p - 1)!: prefactor * rate^n on each side.
    """
    p_mp = mpf(p)
    fact = mp.factorial(p + 1)
    return {
        "lower_prefactor": fact / (2 * mp_pi * mp_e) * (p_mp / (p + 1)) ** (p_mp + mpf(1) / 2),
        "lower_rate": 8 * mpf(p + 1) ** p * mp_e / (p_mp ** p * 2 ** (p + 1)),
        "upper_prefactor": fact * mpf(p + 1) ** 3 / (2 * mp_pi * mpf(p + 2) ** 3)
                           * (p_mp / (p + 2)) ** (p_mp + mpf(1) / 2),
        "upper_rate": 8 * mpf(p + 2) ** (p + 2) / (2 ** (p + 1) * mpf(p + 1) ** 2 * p_mp ** p),
    }


def dimensionful_moments(table: MomentTable, tau) -> List[mpf]:
    """mu_n = a_n / (4 pi tau^((p+1)/2))^(2n) for sampling time tau."""
    tau = mpf(tau)
    if not tau > 0:
        raise InvalidConfigError("tau must be positive")
    scale = 4 * mp_pi * tau ** (mpf(table.spec.p + 1) / 2)
    return [to_bigfloat(a) / scale ** (2 * n) for n, a in enumerate(table.full)]


def dominance_ratios(table: MomentTable, ktable: KTable) -> Dict[int, mpf]:
    """a_n / (8^n J_n) for single-species tables, n >= 3."""
    ratios = {}
    top = min(table.n_max, ktable.max_n + 1)
    k1 = ktable.value(1)
    for n in range(3, top + 1):
        j_n = k1 * ktable.value(n - 1)
        ratios[n] = to_bigfloat(table.full[n] / (8 ** n * j_n))
    return ratios


def log_factorial_scale(p: int, n: int) -> mpf:
    """ln((pn - p - 1)!), the factorial the asymptotic constants are quoted against."""
    return loggamma(p * n - p)


class MomentEngine(BaseCalculator):
    """
    Builds moment tables step by step and keeps the base connected
    moments of each class p so that operators sharing a base reuse them.
    """

    def __init__(self, digits: int = DEFAULT_DIGITS, debug: bool = False):
        super().__init__(digits=digits, debug=debug)
        self._base: Dict[int, List[Fraction]] = {}
        self._ktables: Dict[int, KTable] = {}

    def ktable(self, p: int, max_n: int) -> KTable:
        cached = self._ktables.get(p)
        if cached is None or cached.max_n < max_n:
            self._debug_print(f"Building K table p={p} up to n={max_n}")
            cached = k_table(p, max_n)
            self._ktables[p] = cached
        return cached

    def seed_ktable(self, table: KTable):
        """Install a K table loaded from elsewhere (a zero-row table is enough here)."""
        current = self._ktables.get(table.p)
        if current is None or current.max_n < table.max_n:
            self._ktables[table.p] = table

    def base_moments(self, p: int, n_max: int) -> List[Fraction]:
        cached = self._base.get(p)
        if cached is None or len(cached) < n_max + 1:
            cached = base_connected_moments(p, n_max, self.ktable(p, n_max - 1))
            self._base[p] = cached
        return cached[:n_max + 1]

    def seed_base(self, p: int, moments: Sequence[Fraction]):
        """Install base connected moments loaded from elsewhere."""
        current = self._base.get(p)
        if current is None or len(current) < len(moments):
            self._base[p] = list(moments)

    def build(self, spec: OperatorSpec, n_max: int) -> MomentTable:
        """
        Full pipeline for one operator.

        Args:
            spec: Operator definition
            n_max: Highest moment index

        Returns:
            MomentTable
        """
        self._banner(f"MOMENT TABLE - {spec.name} (p={spec.p}, n_max={n_max})")

        self._step_print(1, f"K integrals up to n={n_max - 1}")
        self.ktable(spec.p, max(n_max - 1, 1))

        self._step_print(2, "Base connected moments")
        base = self.base_moments(spec.p, n_max)
        self._debug_print(f"C_2 = {base[2]}")

        self._step_print(3, f"Species rescaling over {len(spec.weights)} weight(s)")
        self._step_print(4, "Exponentiating the cumulant series")
        table = build_moment_table(spec, n_max, base_connected=base)

        with workdps(self.digits):
            self._print_report(f"{spec.name} moments", {
                f"a_{n}": self._format(to_bigfloat(table.full[n]), 10)
                for n in range(2, min(n_max, 6) + 1)
            })
        self._success_print(f"{spec.name}: {n_max + 1} moments")
        return table
