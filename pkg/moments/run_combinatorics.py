"""
Run-structure polynomials and connected moments.

The connected moment of weight n is C_n = 8^n * Kn(K_1, ..., K_{n-1}), where the
polynomial Kn counts ring graphs on n vertices by the lengths of their monotone
runs. Kn is built from K2 = K_1^2 / 2 by

    Kn = sum_i K_{i+1} dK_{n-1}/dK_i + sum_{i,j} K_1 K_i K_j dK_{n-1}/dK_{i+j}
"""

import itertools
import math
from collections import Counter
from fractions import Fraction
from typing import Dict, List, Sequence

from sympy import factorint

from core.data_models import KTable, Partition, RunPolynomial
from core.exceptions import InsufficientDepthError, InvalidConfigError


# Largest n evaluated through the explicit polynomial in connected_moment
SPARSE_EVALUATION_LIMIT = 16

MAX_CENSUS_N = 10

# Doubled polynomials 2*Kn with integer coefficients, index n - 2
_doubled_terms: List[Dict[Partition, int]] = [{(1, 1): 1}]


def _canonical(parts: Sequence[int]) -> Partition:
    return tuple(sorted(parts, reverse=True))


def _apply_recurrence(terms: Dict[Partition, int]) -> Dict[Partition, int]:
    """One sweep of the two derivative operators over a sparse term map."""
    result: Dict[Partition, int] = {}
    for partition, coefficient in terms.items():
        counts = Counter(partition)
        for part, multiplicity in counts.items():
            weight = coefficient * multiplicity
            rest = list(partition)
            rest.remove(part)

            # K_{i+1} d/dK_i
            key = _canonical(rest + [part + 1])
            result[key] = result.get(key, 0) + weight

            # K_1 K_i K_j d/dK_{i+j}, ordered splits
            for i in range(1, part):
                key = _canonical(rest + [1, i, part - i])
                result[key] = result.get(key, 0) + weight
    return result


def run_polynomial(n: int) -> RunPolynomial:
    """
    Kn as a map from partitions of n to rational coefficients.

    Args:
        n: Weight, at least 2

    Returns:
        RunPolynomial; n = 2 gives {(1, 1): 1/2}, n = 4 gives
        {(3, 1): 1, (2, 2): 1, (1, 1, 1, 1): 1}
    """
    if n < 2:
        raise InvalidConfigError(f"run_polynomial needs n >= 2 (got {n})")
    while len(_doubled_terms) < n - 1:
        _doubled_terms.append(_apply_recurrence(_doubled_terms[-1]))
    doubled = _doubled_terms[n - 2]
    terms = {partition: Fraction(c, 2) for partition, c in doubled.items()}
    return RunPolynomial(n=n, terms=terms)


def seed_run_polynomials(polynomials: Dict[int, RunPolynomial]):
    """Preload consecutive polynomials (e.g. from the cache) so later calls skip the sweep."""
    n = len(_doubled_terms) + 2
    while n in polynomials:
        poly = polynomials[n]
        _doubled_terms.append({k: int(2 * v) for k, v in poly.terms.items()})
        n += 1


def run_lengths(sigma: Sequence[int]) -> List[int]:
    """
    Lengths of the maximal monotone runs of a permutation read as a ring.

    sigma must start at 1; the walk closes by returning to 1, so 14536782
    splits into 145 | 53 | 3678 | 821, i.e. lengths 2, 1, 3, 2.
    """
    if not sigma or sigma[0] != 1:
        raise InvalidConfigError("permutation must start with 1")
    closed = list(sigma) + [1]
    directions = [closed[k + 1] > closed[k] for k in range(len(sigma))]
    lengths = []
    current = 1
    for k in range(1, len(directions)):
        if directions[k] == directions[k - 1]:
            current += 1
        else:
            lengths.append(current)
            current = 1
    lengths.append(current)
    return lengths


def brute_force_run_census(n: int) -> RunPolynomial:
    """
    Count ring graphs by run lengths by enumerating permutations.

    Each graph is represented once by sigma with sigma(1) = 1 and
    sigma(2) < sigma(n); at n = 2 the single permutation counts one half.
    """
    if n < 2 or n > MAX_CENSUS_N:
        raise InvalidConfigError(f"census supports 2 <= n <= {MAX_CENSUS_N} (got {n})")
    tally: Counter = Counter()
    for tail in itertools.permutations(range(2, n + 1)):
        sigma = (1,) + tail
        if n > 2 and not sigma[1] < sigma[-1]:
            continue
        tally[_canonical(run_lengths(sigma))] += 1
    scale = Fraction(1, 2) if n == 2 else Fraction(1)
    return RunPolynomial(n=n, terms={k: scale * v for k, v in tally.items()})


def evaluate_run_polynomial(poly: RunPolynomial, ktable: KTable) -> Fraction:
    """Kn evaluated at K_j = K_j^(0) from the table."""
    if poly.n - 1 > ktable.max_n:
        raise InsufficientDepthError(
            f"K table stops at n={ktable.max_n}, weight {poly.n} needs K_{poly.n - 1}"
        )
    k = [Fraction(0)] + ktable.k_zero
    total = Fraction(0)
    for partition, coefficient in poly.terms.items():
        term = coefficient
        for part, multiplicity in Counter(partition).items():
            term *= k[part] ** multiplicity
        total += term
    return total


def _integer_scale(values: Sequence[Fraction]) -> int:
    """Smallest L with L^s * values[s-1] integral for every s."""
    exponents: Dict[int, int] = {}
    for s, value in enumerate(values, start=1):
        for prime, power in factorint(value.denominator).items():
            exponents[prime] = max(exponents.get(prime, 0), -(-power // s))
    scale = 1
    for prime, power in exponents.items():
        scale *= prime ** power
    return scale


def connected_moments_by_flow(ktable: KTable, n_max: int) -> Dict[int, Fraction]:
    """
    C_n = 8^n Kn(K) for every 2 <= n <= n_max in a single pass.

    The recurrence is the derivation D(K_s) = K_{s+1} + K_1 sum_{i+j=s} K_i K_j,
    so Kn(K) = D^{n-2}(K_1^2 / 2) is (n-2)! times the Taylor coefficient of
    X_1(t)^2 / 2 along dX/dt = D(X), X(0) = K. The Taylor coefficients are
    tracked as y[s][k] = k! [t^k] X_s(t); after the substitution
    K_s -> L^s K_s everything stays in the integers.
    """
    if n_max < 2:
        raise InvalidConfigError(f"n_max must be >= 2 (got {n_max})")
    if n_max - 1 > ktable.max_n:
        raise InsufficientDepthError(
            f"K table stops at n={ktable.max_n}, C_{n_max} needs K_{n_max - 1}"
        )

    top = n_max - 1
    k_zero = ktable.k_zero[:top]
    scale = _integer_scale(k_zero)
    binom = [[math.comb(k, j) for j in range(k + 1)] for k in range(top + 1)]

    # y[s][k] is defined for s + k <= top
    y: List[List[int]] = [[]] + [[int(scale ** s * k_zero[s - 1])] for s in range(1, top + 1)]
    q: List[List[int]] = [[] for _ in range(top + 1)]

    for k in range(0, top - 1):
        # quadratic part of D(X_s), Taylor order k
        for s in range(2, top - k):
            acc = 0
            for i in range(1, s):
                yi, yj = y[i], y[s - i]
                row = binom[k]
                acc += sum(row[k1] * yi[k1] * yj[k - k1] for k1 in range(k + 1))
            q[s].append(acc)
        row = binom[k]
        y1 = y[1]
        for s in range(1, top - k):
            value = y[s + 1][k]
            if s >= 2:
                qs = q[s]
                value += sum(row[kp] * y1[k - kp] * qs[kp] for kp in range(k + 1))
            y[s].append(value)

    moments: Dict[int, Fraction] = {}
    y1 = y[1]
    for n in range(2, n_max + 1):
        m = n - 2
        doubled = sum(binom[m][k1] * y1[k1] * y1[m - k1] for k1 in range(m + 1))
        moments[n] = Fraction(8 ** n * doubled, 2 * scale ** n)
    return moments


def connected_moment(p: int, n: int, ktable: KTable) -> Fraction:
    """
    Connected moment C_n of the single-species operator of class p.

    Small n go through the explicit polynomial; larger n use the flow
    evaluation, which never materializes Kn.
    """
    if ktable.p != p:
        raise InvalidConfigError(f"K table built for p={ktable.p}, requested p={p}")
    if n < 2:
        raise InvalidConfigError(f"connected_moment needs n >= 2 (got {n})")
    if n - 1 > ktable.max_n:
        raise InsufficientDepthError(f"K table stops at n={ktable.max_n}, C_{n} needs K_{n - 1}")
    if n <= SPARSE_EVALUATION_LIMIT:
        return 8 ** n * evaluate_run_polynomial(run_polynomial(n), ktable)
    return connected_moments_by_flow(ktable, n)[n]
