"""
Data models and enums for the moment computation and analysis system.
Holds the shared types, the built-in operator registry and default settings.
"""

import os
from enum import Enum
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, Any, List, Optional, Tuple, Union

from mpmath import mpf


CODE_VERSION = "1.0.0"

# A partition is stored as a tuple of parts in descending order
Partition = Tuple[int, ...]

# Either an exact rational or a working-precision float
Number = Union[Fraction, mpf]


class OutputFormat(Enum):
    """Output formats for command artifacts."""
    JSON = "json"
    CSV = "csv"
    XLSX = "xlsx"


class ProbabilityMode(Enum):
    """Evaluation modes for the nucleation probability."""
    EXACT = "exact"
    ASYMPTOTIC = "asymptotic"


@dataclass(frozen=True)
class FormalSeries:
    """
    Truncated formal power series in exponential-generating convention.
    Index n holds the coefficient of lambda^n / n!.
    """
    coefficients: Tuple[Fraction, ...]

    def __post_init__(self):
        if not self.coefficients:
            raise ValueError("series needs at least the constant coefficient")
        object.__setattr__(self, "coefficients", tuple(Fraction(c) for c in self.coefficients))

    @property
    def truncation_order(self) -> int:
        return len(self.coefficients) - 1

    def __getitem__(self, n: int) -> Fraction:
        return self.coefficients[n]

    def __len__(self) -> int:
        return len(self.coefficients)


@dataclass(frozen=True)
class KTable:
    """
    Exact run-factor integrals K_n^(r) for one derivative class p.

    values[n - 1][r] holds K_n^(r); prefix_sums[n - 1][R] holds the sum over r' <= R.
    """
    p: int
    max_n: int
    values: Tuple[Tuple[Fraction, ...], ...]
    prefix_sums: Tuple[Tuple[Fraction, ...], ...]

    def value(self, n: int, r: int = 0) -> Fraction:
        """K_n^(r), raising when the table was not built deep enough."""
        from .exceptions import InsufficientDepthError

        if n < 1 or n > self.max_n:
            raise InsufficientDepthError(f"K_{n} not in table (max_n={self.max_n})")
        row = self.values[n - 1]
        if r < 0 or r >= len(row):
            raise InsufficientDepthError(f"K_{n}^({r}) not stored (r_max={len(row) - 1})")
        return row[r]

    def r_max(self, n: int) -> int:
        return len(self.values[n - 1]) - 1

    @classmethod
    def from_k_zero(cls, p: int, k_zero: List[Fraction]) -> "KTable":
        """Table holding only r = 0, enough for evaluating connected moments."""
        rows = tuple((Fraction(k),) for k in k_zero)
        return cls(p=p, max_n=len(rows), values=rows, prefix_sums=rows)

    @property
    def k_zero(self) -> List[Fraction]:
        """K_j = K_j^(0) for j = 1..max_n."""
        return [row[0] for row in self.values]


@dataclass(frozen=True)
class RunPolynomial:
    """
    Run-structure polynomial in K_1..K_{n-1}.
    Monomials are keyed by partitions of n (each part i stands for one factor K_i).
    """
    n: int
    terms: Dict[Partition, Fraction]

    @property
    def coefficient_sum(self) -> Fraction:
        return sum(self.terms.values(), Fraction(0))

    def coefficient(self, partition: Partition) -> Fraction:
        key = tuple(sorted(partition, reverse=True))
        return self.terms.get(key, Fraction(0))

    def __len__(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class OperatorSpec:
    """
    Quadratic operator as a weighted sum of species of the base field.
    Each weight entry is (alpha_I * c_I, multiplicity).
    """
    name: str
    p: int
    weights: Tuple[Tuple[Fraction, int], ...]

    def __post_init__(self):
        if not self.weights:
            raise ValueError(f"operator {self.name} has no species weights")
        if self.p < 1 or self.p % 2 == 0:
            raise ValueError(f"operator {self.name}: p must be an odd positive integer")
        for weight, multiplicity in self.weights:
            if multiplicity < 1:
                raise ValueError(f"operator {self.name}: multiplicity must be positive")

    @property
    def dominant_weight(self) -> Tuple[Fraction, int]:
        """Largest |weight| with its total multiplicity."""
        top = max(abs(w) for w, _ in self.weights)
        multiplicity = sum(m for w, m in self.weights if abs(w) == top)
        return top, multiplicity


@dataclass(frozen=True)
class MomentTable:
    """Exact connected and full moment sequences of one operator."""
    spec: OperatorSpec
    n_max: int
    connected: Tuple[Fraction, ...]
    full: Tuple[Fraction, ...]
    provenance: Dict[str, Any] = field(default_factory=dict)

    def require(self, n: int):
        """Raise when moments up to index n are not available."""
        from .exceptions import InsufficientDepthError

        if n > self.n_max:
            raise InsufficientDepthError(
                f"{self.spec.name}: moment a_{n} needed but table stops at n_max={self.n_max}"
            )


@dataclass
class BoundSequence:
    """Stieltjes lower bounds y_N for one operator."""
    field: str
    digits: int
    values: Dict[int, mpf] = None

    def __post_init__(self):
        if self.values is None:
            self.values = {}

    def as_pairs(self) -> List[Tuple[int, mpf]]:
        return sorted(self.values.items())


@dataclass
class ExtrapolationFit:
    """Least-squares fit of y_N over a window of N."""
    exponents: Tuple[Fraction, ...]
    window: Tuple[int, int]
    coefficients: List[mpf]
    y_infinity: mpf
    max_residual: mpf


@dataclass
class GrowthDiagnostics:
    """Determinacy-criterion margins and the factorial order of growth."""
    hamburger_margin: Dict[int, mpf]
    stieltjes_margin: Dict[int, mpf]
    factorial_order_estimate: mpf
    hamburger_constants: Tuple[mpf, mpf] = None
    stieltjes_constants: Tuple[mpf, mpf] = None


@dataclass
class DominantGraphBounds:
    """Bracket on the dominant graph J_n = K_1 K_{n-1}."""
    p: int
    n: int
    J_n: Fraction
    lower_exact: Fraction
    upper_exact: Fraction
    lower: mpf
    upper: mpf
    alpha_growth: mpf
    beta_growth: mpf

    @property
    def holds(self) -> bool:
        return self.lower_exact <= self.J_n <= self.upper_exact


@dataclass(frozen=True)
class ShiftedGammaParams:
    """Gamma density shifted to the support [-x0, inf)."""
    x0: Number
    alpha: Number
    beta: Number

    def __post_init__(self):
        if not self.alpha > 0 or not self.beta > 0:
            raise ValueError("shifted Gamma needs alpha > 0 and beta > 0")
        if self.x0 < 0:
            raise ValueError("shifted Gamma needs x0 >= 0")

    @property
    def is_exact(self) -> bool:
        return all(isinstance(v, (int, Fraction)) for v in (self.x0, self.alpha, self.beta))


@dataclass(frozen=True)
class TailParams:
    """Tail ansatz P(x) ~ c0 x^b exp(-a x^c) with b = -2, c = 1/3."""
    c0: mpf
    a: mpf
    b: int = -2
    c: Fraction = Fraction(1, 3)

    def __post_init__(self):
        if not self.c0 > 0 or not self.a > 0:
            raise ValueError("tail parameters need c0 > 0 and a > 0")
        if self.b != -2 or self.c != Fraction(1, 3):
            raise ValueError("tail exponents are fixed at b = -2, c = 1/3")

    @property
    def D(self) -> mpf:
        """Growth rate D = a^-3 of a_n ~ C D^n (3n-4)!."""
        return self.a ** -3

    @property
    def C(self) -> mpf:
        """Prefactor C = 3 c0 / D."""
        return 3 * self.c0 / self.D


@dataclass(frozen=True)
class FitParams:
    """Constants of the two-component model density."""
    c1: mpf
    alpha: mpf
    beta: mpf
    gamma: mpf
    alpha0: mpf
    x0: mpf
    c0: mpf
    a: mpf

    def __post_init__(self):
        for name in ("c1", "alpha", "beta", "gamma", "alpha0", "x0", "c0", "a"):
            if not getattr(self, name) > 0:
                raise ValueError(f"fit constant {name} must be positive")

    @property
    def tail(self) -> TailParams:
        return TailParams(c0=self.c0, a=self.a)


@dataclass
class KreinResult:
    """Outcome of the log-integrability diagnostic."""
    value: Optional[mpf]
    divergent: bool
    segments: int
    reason: str = ""


@dataclass(frozen=True)
class PhysicalConstants:
    """Natural-unit conversions (hbar = c = 1), in the source's rough roundings."""
    planck_length_cm: mpf = mpf("1e-33")
    planck_mass_g: mpf = mpf("2.18e-5")
    cm_per_second: mpf = mpf("3e10")
    inverse_cm_per_kg: mpf = mpf("1e41")


@dataclass
class NucleationQuery:
    """
    Black-hole nucleation scenario.
    Exactly one of mass_in_planck_units / expected_count is left unset.
    """
    volume_cm3: mpf
    time_s: mpf
    mass_in_planck_units: Optional[mpf] = None
    expected_count: Optional[mpf] = None
    four_volume_override: Optional[mpf] = None

    def __post_init__(self):
        unset = [self.mass_in_planck_units is None, self.expected_count is None]
        if sum(unset) != 1:
            raise ValueError("exactly one of mass and expected count must be unset")


# Default run settings
DEFAULT_N_MAX = 65
FAST_N_MAX = 23
DEFAULT_DIGITS = 40
MIN_DIGITS = 20
CACHE_DIR_ENV = "QI_MOMENTS_CACHE_DIR"
DEFAULT_CACHE_DIR = Path.home() / ".cache" / "qi-moments"

# Built-in operators: phi^2 uses p = 1, everything else is built on phidot^2 (p = 3)
BUILTIN_OPERATORS: Dict[str, OperatorSpec] = {
    "phi2": OperatorSpec("phi2", 1, ((Fraction(1), 1),)),
    "phidot2": OperatorSpec("phidot2", 3, ((Fraction(1), 1),)),
    "rhoS": OperatorSpec("rhoS", 3, ((Fraction(1, 2), 1), (Fraction(1, 6), 3))),
    "E2": OperatorSpec("E2", 3, ((Fraction(2, 3), 3),)),
    "B2": OperatorSpec("B2", 3, ((Fraction(2, 3), 3),)),
    "rhoEM": OperatorSpec("rhoEM", 3, ((Fraction(1, 3), 6),)),
}

# Shifted Gamma parameters reproducing the phi^2 moments
PHI2_GAMMA_PARAMS = ShiftedGammaParams(
    x0=Fraction(1, 6), alpha=Fraction(1, 72), beta=Fraction(1, 12)
)

# Model density constants for rhoEM
RHO_EM_FIT = FitParams(
    c1=mpf("0.028"),
    alpha=mpf("0.9999"),
    beta=mpf("19.65"),
    gamma=mpf("1.05"),
    alpha0=mpf("610"),
    x0=mpf("0.0472"),
    c0=mpf("0.95539211"),
    a=mpf("0.9630614156"),
)

# Tail constants fitted from 65 moments, used when a table is too short to calibrate
TAIL_REFERENCE: Dict[str, TailParams] = {
    "phidot2": TailParams(c0=mpf("0.47769605"), a=mpf("0.6677494904")),
    "E2": TailParams(c0=mpf("0.95539211"), a=mpf("0.7643823521")),
    "B2": TailParams(c0=mpf("0.95539211"), a=mpf("0.7643823521")),
    "rhoS": TailParams(c0=mpf("0.23884802"), a=mpf("0.8413116390")),
    "rhoEM": TailParams(c0=mpf("0.95539211"), a=mpf("0.9630614156")),
}

# Default extrapolation bases and window
DEFAULT_EXTRAPOLATION_WINDOW = (21, 33)
DEFAULT_EXTRAPOLATION_EXPONENTS = {
    1: (Fraction(0), Fraction(1), Fraction(2)),
    3: (Fraction(0), Fraction(1, 2), Fraction(1), Fraction(3, 2)),
}
DEFAULT_ACCELERATION_CHAINS = {
    1: (Fraction(1), Fraction(2)),
    3: (Fraction(1, 2), Fraction(1), Fraction(3, 2)),
}

# Known Lorentzian quantum-inequality bound for phidot^2, used as a comparator
QUANTUM_INEQUALITY_PHIDOT2 = Fraction(27, 128)


@dataclass
class RunConfig:
    """Validated settings for one CLI command."""
    command: str
    operator: str = "phi2"
    n_max: int = DEFAULT_N_MAX
    digits: int = DEFAULT_DIGITS
    cache_dir: Optional[Path] = None
    output_format: OutputFormat = OutputFormat.JSON
    output: Optional[Path] = None
    weights_file: Optional[Path] = None
    options: Dict[str, Any] = None

    def __post_init__(self):
        from .exceptions import InvalidConfigError

        if self.options is None:
            self.options = {}
        if self.n_max < 2:
            raise InvalidConfigError(f"n_max must be >= 2 (got {self.n_max})")
        if self.digits < MIN_DIGITS:
            raise InvalidConfigError(f"digits must be >= {MIN_DIGITS} (got {self.digits})")
        if self.weights_file is None and self.operator not in BUILTIN_OPERATORS:
            raise InvalidConfigError(
                f"unknown operator '{self.operator}' (choose from {', '.join(BUILTIN_OPERATORS)})"
            )
        if self.cache_dir is None:
            env_dir = os.environ.get(CACHE_DIR_ENV)
            self.cache_dir = Path(env_dir) if env_dir else DEFAULT_CACHE_DIR
