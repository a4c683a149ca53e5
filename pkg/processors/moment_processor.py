"""
Command orchestration for the moment tools.
Each command builds (or loads) what it needs, runs the analysis and
returns a report dict; failures come back as {"error", "exit_code"}.
"""

import json
import sys
import traceback
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from mpmath import mp, mpf, workdps

# Core imports
sys.path.append(str(Path(__file__).parent.parent))
from core.base_calculator import BaseCalculator
from core.conversions import format_bigfloat, format_rational, to_bigfloat
from core.data_models import (
    BUILTIN_OPERATORS, DEFAULT_ACCELERATION_CHAINS, DEFAULT_EXTRAPOLATION_EXPONENTS,
    DEFAULT_EXTRAPOLATION_WINDOW, QUANTUM_INEQUALITY_PHIDOT2, PHI2_GAMMA_PARAMS, RHO_EM_FIT,
    KTable, MomentTable, NucleationQuery, OperatorSpec, PhysicalConstants,
    ProbabilityMode, RunConfig, ShiftedGammaParams, TailParams,
)
from core.exceptions import InsufficientDepthError, InvalidConfigError, MomentsError

# Moment construction
from moments.k_integrals import k_table
from moments.moment_engine import (
    MomentEngine, dominant_graph_bounds, dominance_ratios, growth_diagnostics,
    j_asymptotic_constants, log_factorial_scale,
)
from moments.run_combinatorics import run_polynomial, seed_run_polynomials

# Analysis
from analysis.moment_analysis import (
    accelerate_chain, bound_additivity, extrapolate_fit, lower_bound_sequence,
)
from analysis.distributions import (
    cdf_asymptotic_bound, cdf_upper_bound, cft2d_params, fit_pdf_grid, fitted_tail_survival,
    fit_pdf, krein_integral, model_fit_moments, shifted_gamma_moments, tail_fit,
    tail_predicted_moment, tail_validity_range,
)
from analysis.applications import (
    black_hole_count, black_hole_mass_for_count, boltzmann_brain_exponent,
    nucleation_exponent_prefactor, nucleation_probability, planck_four_volume,
)

from .table_cache import TableCache, operator_from_json, run_polynomial_to_json, table_to_json


# Default option values per command
DEFAULT_N_RANGE = (2, 12)
DEFAULT_N_PAIR = (64, 65)
DEFAULT_FIT_N_MAX = 21
DEFAULT_FIT_TOL = "1e-10"
DEFAULT_FIT_GRID = (-0.04, 2.0, 64)
DEFAULT_CDF_GRID = (1e2, 1e7, 11)
DEFAULT_ADDITIVITY_UNCERTAINTY = "1e-4"
ADDITIVITY_OPERATORS = ("phidot2", "rhoS", "rhoEM", "E2")


class MomentProcessor(BaseCalculator):
    """
    Runs one CLI command from a validated RunConfig.

    Tables are shared through the on-disk cache, so a command that needs the
    phidot^2 base moments reuses them for E^2, B^2, rho_S and rho_EM.
    """

    COMMANDS = (
        "moments", "lower-bound", "accelerate", "extrapolate", "tail", "fit", "cdf-bound",
        "nucleation", "brain", "gamma-moments", "diagnostics", "run-polynomial", "additivity",
    )

    def __init__(self, config: RunConfig, debug: bool = False):
        super().__init__(digits=config.digits, debug=debug)
        self.config = config
        self.options = config.options
        self.engine = MomentEngine(digits=config.digits, debug=debug)
        self.cache = TableCache(
            config.cache_dir,
            warn=self._warning_print,
            enabled=not self.options.get("no_cache", False),
        )

    def run(self) -> Dict[str, Any]:
        """
        Dispatch the configured command.

        Returns:
            Report dict, or {"error": message, "exit_code": code}
        """
        command = self.config.command
        try:
            if command not in self.COMMANDS:
                raise InvalidConfigError(f"unknown command '{command}'")
            handler = getattr(self, "cmd_" + command.replace("-", "_"))
            with workdps(self.digits):
                result = handler()
            self._success_print(f"{command} finished")
            return result
        except MomentsError as e:
            self._error_print(str(e))
            return {"error": str(e), "exit_code": e.exit_code}
        except ValueError as e:
            self._error_print(str(e))
            return {"error": str(e), "exit_code": InvalidConfigError.exit_code}
        except Exception as e:
            error_msg = f"unexpected failure in {command}: {e}"
            self._error_print(error_msg)
            if self.debug:
                traceback.print_exc()
            return {"error": error_msg, "exit_code": MomentsError.exit_code}

    # ------------------------------------------------------------------
    # Shared building blocks
    # ------------------------------------------------------------------

    def _operator(self) -> OperatorSpec:
        """Built-in operator, or the one described by --weights."""
        if self.config.weights_file is None:
            return BUILTIN_OPERATORS[self.config.operator]
        try:
            data = json.loads(Path(self.config.weights_file).read_text(encoding="utf-8"))
            data.setdefault("operator", self.config.operator)
            return operator_from_json(data)
        except (OSError, KeyError, TypeError, json.JSONDecodeError) as e:
            raise InvalidConfigError(f"cannot read weights file {self.config.weights_file}: {e}")

    def _base_moments(self, p: int, n_max: int) -> List[Fraction]:
        cached = self.cache.load_base_moments(p, n_max)
        if cached is not None:
            self._debug_print(f"Base moments p={p} n_max={n_max} from cache")
            return cached
        k_zero = self.cache.load_k_zero(p, n_max - 1)
        if k_zero is not None:
            self.engine.seed_ktable(KTable.from_k_zero(p, k_zero))
        else:
            self.cache.store_k_zero(p, self.engine.ktable(p, n_max - 1).k_zero[:n_max - 1])
        moments = self.engine.base_moments(p, n_max)
        self.cache.store_base_moments(p, moments)
        return moments

    def _table(self, n_max: Optional[int] = None, spec: Optional[OperatorSpec] = None) -> MomentTable:
        spec = spec or self._operator()
        n_max = n_max or self.config.n_max
        table = self.cache.load_table(spec, n_max)
        if table is not None:
            self._info_print(f"{spec.name} table (n_max={n_max}) from cache")
            return table
        self.engine.seed_base(spec.p, self._base_moments(spec.p, n_max))
        table = self.engine.build(spec, n_max)
        self.cache.store_table(table)
        return table

    def _num(self, value, digits: Optional[int] = None) -> str:
        return format_bigfloat(mpf(value), digits or self.digits)

    def _n_range(self) -> Tuple[int, int]:
        lo, hi = self.options.get("N_range") or DEFAULT_N_RANGE
        if lo < 2 or hi < lo:
            raise InvalidConfigError(f"N range must satisfy 2 <= lo <= hi (got {lo}..{hi})")
        return lo, hi

    def _bounds(self, table: MomentTable, lo: int, hi: int):
        if table.n_max < 2 * hi - 1:
            raise InsufficientDepthError(
                f"N={hi} needs moments up to a_{2 * hi - 1}, table stops at n_max={table.n_max}"
            )
        return lower_bound_sequence(table, range(lo, hi + 1), self.digits)

    def _tail_options(self) -> Optional[TailParams]:
        if "c0" in self.options and "a" in self.options:
            return TailParams(c0=mpf(self.options["c0"]), a=mpf(self.options["a"]))
        return None

    def _tail(self, table: MomentTable) -> Tuple[TailParams, str]:
        """Tail constants: explicit --c0/--a, else a fit to the table."""
        given = self._tail_options()
        if given is not None:
            return given, "options"
        n_pair = self.options.get("n_pair") or DEFAULT_N_PAIR
        needed = max(n_pair[0] + 1, n_pair[1])
        if table.n_max < needed:
            raise InsufficientDepthError(
                f"insufficient moments: tail fit at {n_pair} needs a_{needed}, table stops at n_max={table.n_max}"
            )
        return tail_fit(table, n_pair, self.digits), f"fit to moments {n_pair}"

    # ------------------------------------------------------------------
    # Commands
    # ------------------------------------------------------------------

    def cmd_moments(self) -> Dict[str, Any]:
        """Exact connected and full moments."""
        table = self._table()
        report = table_to_json(table)
        report["rows"] = [
            {
                "n": n,
                "connected": format_rational(table.connected[n]),
                "full": format_rational(table.full[n]),
                "full_decimal": self._num(to_bigfloat(table.full[n]), 10),
            }
            for n in range(table.n_max + 1)
        ]
        return report

    def cmd_lower_bound(self) -> Dict[str, Any]:
        """Stieltjes bounds, with optional acceleration and extrapolation."""
        self._banner(f"LOWER BOUNDS - {self.config.operator}")
        lo, hi = self._n_range()
        if self.options.get("exponents"):
            window = self.options.get("window") or DEFAULT_EXTRAPOLATION_WINDOW
            if "N_range" not in self.options:
                lo, hi = min(lo, max(2, window[0])), max(hi, window[1])
            elif window[0] < lo or window[1] > hi:
                raise InvalidConfigError(
                    f"extrapolation window {window[0]}:{window[1]} lies outside --N {lo}..{hi}"
                )

        self._step_print(1, "Moment table")
        table = self._table()

        self._step_print(2, f"y_N for N = {lo}..{hi}")
        sequence = self._bounds(table, lo, hi)
        report = {
            "operator": table.spec.name,
            "digits": self.digits,
            "bounds": {str(N): self._num(y) for N, y in sequence.as_pairs()},
            "rows": [{"N": N, "y_N": self._num(y)} for N, y in sequence.as_pairs()],
            "note": "y_N are lower bounds; y_inf estimates the support infimum only if the moment problem is determinate",
        }

        if self.options.get("accelerate"):
            self._step_print(3, "Accelerated sequence")
            chain = self.options.get("chain") or DEFAULT_ACCELERATION_CHAINS.get(table.spec.p, (1,))
            accelerated = accelerate_chain(sequence.as_pairs(), chain)
            report["accelerated"] = {str(N): self._num(y) for N, y in accelerated}
            report["chain"] = [format_rational(k) for k in chain]

        if self.options.get("exponents"):
            self._step_print(4, "Extrapolation fit")
            report["extrapolation"] = self._fit_report(sequence.as_pairs(), table.spec.p)
        return report

    def _fit_report(self, pairs, p: int) -> Dict[str, Any]:
        exponents = self.options.get("exponents") or DEFAULT_EXTRAPOLATION_EXPONENTS[p]
        window = self.options.get("window") or DEFAULT_EXTRAPOLATION_WINDOW
        fit = extrapolate_fit(pairs, exponents, window, self.digits)
        report = {
            "exponents": [format_rational(e) for e in fit.exponents],
            "window": list(fit.window),
            "coefficients": [self._num(c) for c in fit.coefficients],
            "y_infinity": self._num(fit.y_infinity),
            "max_residual": self._num(fit.max_residual, 5),
        }
        if self._operator().name == "phidot2":
            report["below_phidot2_comparator"] = bool(fit.y_infinity < to_bigfloat(QUANTUM_INEQUALITY_PHIDOT2))
        return report

    def cmd_accelerate(self) -> Dict[str, Any]:
        """Accelerated bound sequence only."""
        lo, hi = self._n_range()
        table = self._table()
        sequence = self._bounds(table, lo, hi)
        chain = self.options.get("chain") or DEFAULT_ACCELERATION_CHAINS.get(table.spec.p, (1,))
        accelerated = accelerate_chain(sequence.as_pairs(), chain)
        return {
            "operator": table.spec.name,
            "chain": [format_rational(k) for k in chain],
            "accelerated": {str(N): self._num(y) for N, y in accelerated},
            "rows": [{"N": N, "accelerated": self._num(y)} for N, y in accelerated],
        }

    def cmd_extrapolate(self) -> Dict[str, Any]:
        """Least-squares y_inf over the window."""
        table = self._table()
        window = self.options.get("window") or DEFAULT_EXTRAPOLATION_WINDOW
        sequence = self._bounds(table, max(2, window[0]), window[1])
        report = self._fit_report(sequence.as_pairs(), table.spec.p)
        report["operator"] = table.spec.name
        report["rows"] = [{"N": N, "y_N": self._num(y)} for N, y in sequence.as_pairs()]
        return report

    def cmd_tail(self) -> Dict[str, Any]:
        """Tail constants and how well the ansatz reproduces the moments."""
        self._banner(f"TAIL FIT - {self.config.operator}")
        self._step_print(1, "Moment table")
        table = self._table()

        self._step_print(2, "Calibration from two high moments")
        tail, source = self._tail(table)

        self._step_print(3, "Predicted moments")
        rows = []
        for n in range(4, table.n_max + 1):
            exact = to_bigfloat(table.full[n])
            predicted = tail_predicted_moment(tail, n)
            rows.append({
                "n": n,
                "exact": self._num(exact, 10),
                "predicted": self._num(predicted, 10),
                "relative_error": self._num((predicted - exact) / exact, 6),
            })
        x_lo, x_hi = tail_validity_range(tail, 4, table.n_max)
        report = {
            "operator": table.spec.name,
            "source": source,
            "c0": self._num(tail.c0, 10),
            "a": self._num(tail.a, 10),
            "C": self._num(tail.C, 10),
            "D": self._num(tail.D, 10),
            "validity_range": [self._num(x_lo, 8), self._num(x_hi, 8)],
            "rows": rows,
        }
        self._print_report("Tail constants", {k: report[k] for k in ("c0", "a", "C", "D")})
        return report

    def cmd_fit(self) -> Dict[str, Any]:
        """Model density for rho_EM: moment errors, plot grid and the Krein diagnostic."""
        if self._operator().name != "rhoEM":
            raise InvalidConfigError("the model density constants are only available for rhoEM")
        self._banner("MODEL DENSITY - rhoEM")
        fit = RHO_EM_FIT
        fit_n_max = self.options.get("fit_n_max", DEFAULT_FIT_N_MAX)
        tol = mpf(self.options.get("tol", DEFAULT_FIT_TOL))

        self._step_print(1, "Moment table")
        table = self._table(max(self.config.n_max, fit_n_max))

        self._step_print(2, f"Model moments up to n={fit_n_max}")
        fitted = model_fit_moments(fit, fit_n_max, tol=tol, spike_cutoff=self.options.get("spike_cutoff"))
        errors = {}
        for n, value in enumerate(fitted):
            if n != 1:
                exact = to_bigfloat(table.full[n])
                errors[str(n)] = self._num((value - exact) / exact, 6)

        self._step_print(3, "Plot grid")
        x_min, x_max, points = self.options.get("grid") or DEFAULT_FIT_GRID
        xs = np.linspace(x_min, x_max, int(points))
        grid = fit_pdf_grid(fit, [mpf(float(x)) for x in xs])

        self._step_print(4, "Krein integral")
        krein = krein_integral(lambda x: fit_pdf(fit, x), fit.x0)

        return {
            "operator": "rhoEM",
            "first_moment": self._num(fitted[1], 8),
            "fractional_errors": errors,
            "krein": {
                "divergent": krein.divergent,
                "value": None if krein.value is None else self._num(krein.value, 10),
                "segments": krein.segments,
                "reason": krein.reason,
            },
            "rows": [{"x": self._num(x, 8), "P": self._num(p, 10)} for x, p in grid],
        }

    def cmd_cdf_bound(self) -> Dict[str, Any]:
        """(lambda, bound) grid from the moments and from the tail asymptotics."""
        table = self._table()
        tail, source = self._tail(table)
        lam_min, lam_max, points = self.options.get("lambda_grid") or DEFAULT_CDF_GRID
        lams = np.logspace(np.log10(lam_min), np.log10(lam_max), int(points))
        rows = []
        for lam in lams:
            lam = mpf(float(lam))
            rows.append({
                "lambda": self._num(lam, 8),
                "moment_bound": self._num(cdf_upper_bound(table, lam), 10),
                "asymptotic_bound": self._num(cdf_asymptotic_bound(tail, lam), 10),
                "fitted_tail": self._num(fitted_tail_survival(tail, lam), 10),
            })
        return {"operator": table.spec.name, "tail_source": source, "rows": rows}

    def cmd_nucleation(self) -> Dict[str, Any]:
        """Black-hole count for a mass, or the mass for a count."""
        tail = self._tail_options()
        if tail is not None:
            source = "options"
        else:
            tail, source = self._tail(self._table())
        constants = PhysicalConstants()
        query = NucleationQuery(
            volume_cm3=self.options.get("volume", mpf(1)),
            time_s=self.options.get("time", mpf(1)),
            mass_in_planck_units=self.options.get("mass"),
            expected_count=self.options.get("count"),
            four_volume_override=self.options.get("four_volume"),
        )
        report = {
            "operator": self._operator().name,
            "tail_source": source,
            "a0": self._num(nucleation_exponent_prefactor(tail), 8),
            "four_volume": self._num(planck_four_volume(query, constants), 8),
        }
        if query.mass_in_planck_units is None:
            mass = black_hole_mass_for_count(query, tail, constants)
            report["mass_planck"] = self._num(mass, 8)
            report["expected_count"] = self._num(query.expected_count, 8)
        else:
            mass = mpf(query.mass_in_planck_units)
            report["mass_planck"] = self._num(mass, 8)
            report["expected_count"] = self._num(black_hole_count(query, tail, constants), 8)
        report["mass_g"] = self._num(mass * constants.planck_mass_g, 8)

        x = 16 * mp.pi ** 2 * mass ** 2
        report["probability"] = {
            "x": self._num(x, 8),
            "exact": self._num(nucleation_probability(tail, x, ProbabilityMode.EXACT), 8),
            "asymptotic": self._num(nucleation_probability(tail, x, ProbabilityMode.ASYMPTOTIC), 8),
        }
        return report

    def cmd_additivity(self) -> Dict[str, Any]:
        """Extrapolated y_inf of the p = 3 operators against the species-counting relations."""
        self._banner("BOUND ADDITIVITY")
        window = self.options.get("window") or DEFAULT_EXTRAPOLATION_WINDOW
        exponents = self.options.get("exponents") or DEFAULT_EXTRAPOLATION_EXPONENTS[3]
        uncertainty = mpf(self.options.get("uncertainty", DEFAULT_ADDITIVITY_UNCERTAINTY))

        estimates = {}
        for step, name in enumerate(ADDITIVITY_OPERATORS, start=1):
            self._step_print(step, f"y_inf for {name}")
            table = self._table(spec=BUILTIN_OPERATORS[name])
            sequence = self._bounds(table, max(2, window[0]), window[1])
            fit = extrapolate_fit(sequence.as_pairs(), exponents, window, self.digits)
            estimates[name] = fit.y_infinity

        relations = bound_additivity(estimates, uncertainty)
        return {
            "window": list(window),
            "exponents": [format_rational(e) for e in exponents],
            "uncertainty": self._num(uncertainty, 6),
            "y_infinity": {name: self._num(y, 12) for name, y in estimates.items()},
            "relations": {
                key: {
                    "ratio": self._num(rel["ratio"], 10),
                    "predicted": rel["predicted"],
                    "deviation": self._num(rel["deviation"], 6),
                    "consistent": rel["consistent"],
                }
                for key, rel in relations.items()
            },
            "rows": [
                {"relation": key, "ratio": self._num(rel["ratio"], 10), "predicted": rel["predicted"]}
                for key, rel in relations.items()
            ],
        }

    def cmd_brain(self) -> Dict[str, Any]:
        """Boltzmann-brain suppression exponent."""
        exponent = boltzmann_brain_exponent(
            self.options.get("mass", mpf(1)),
            self.options.get("size", mpf(10)),
            self.options.get("time", mpf("0.3")),
        )
        return {"exponent": self._num(exponent, 8), "log10_exponent": self._num(mp.log10(exponent), 6)}

    def cmd_gamma_moments(self) -> Dict[str, Any]:
        """Exact shifted-Gamma moments, optionally checked against the phi^2 table."""
        if "central_charge" in self.options:
            params = cft2d_params(self.options["central_charge"])
        elif all(k in self.options for k in ("x0", "alpha", "beta")):
            params = ShiftedGammaParams(
                x0=self.options["x0"], alpha=self.options["alpha"], beta=self.options["beta"]
            )
        else:
            params = PHI2_GAMMA_PARAMS
        moments = shifted_gamma_moments(params, self.config.n_max)

        def render(v):
            return format_rational(v) if isinstance(v, Fraction) else self._num(v)

        report = {
            "exact": params.is_exact,
            "moments": [render(m) for m in moments],
            "rows": [{"n": n, "moment": render(m)} for n, m in enumerate(moments)],
        }
        if self.options.get("compare") and params.is_exact:
            table = self._table()
            mismatches = [n for n in range(table.n_max + 1) if table.full[n] != moments[n]]
            report["matches_table"] = not mismatches
            report["mismatches"] = mismatches
        return report

    def cmd_diagnostics(self) -> Dict[str, Any]:
        """Determinacy margins, factorial order and the dominant-graph bracket."""
        self._banner(f"DIAGNOSTICS - {self.config.operator}")
        self._step_print(1, "Moment table")
        table = self._table()
        spec = table.spec

        self._step_print(2, "Growth diagnostics")
        growth = growth_diagnostics(table)

        self._step_print(3, "Dominant-graph bracket")
        n = table.n_max
        ktable = k_table(spec.p, n - 1)
        bracket = dominant_graph_bounds(spec.p, n, ktable)
        constants = j_asymptotic_constants(spec.p)
        scaled_j = to_bigfloat(8 ** n * bracket.J_n) / mp.exp(log_factorial_scale(spec.p, n))

        report = {
            "operator": spec.name,
            "factorial_order_estimate": self._num(growth.factorial_order_estimate, 6),
            "hamburger_constants": [self._num(c, 8) for c in growth.hamburger_constants],
            "stieltjes_constants": [self._num(c, 8) for c in growth.stieltjes_constants],
            "dominant_graph": {
                "n": n,
                "J_n": self._num(to_bigfloat(bracket.J_n), 12),
                "lower": self._num(bracket.lower, 12),
                "upper": self._num(bracket.upper, 12),
                "holds": bracket.holds,
                "alpha_growth": self._num(bracket.alpha_growth, 10),
                "beta_growth": self._num(bracket.beta_growth, 10),
                "scaled_J_n": self._num(scaled_j, 10),
                "asymptotic_constants": {k: self._num(v, 7) for k, v in constants.items()},
            },
            "rows": [
                {
                    "n": k,
                    "hamburger_margin": self._num(growth.hamburger_margin[k], 8),
                    "stieltjes_margin": self._num(growth.stieltjes_margin[k], 8),
                }
                for k in sorted(growth.hamburger_margin)
            ],
        }
        if len(spec.weights) == 1 and spec.weights[0] == (Fraction(1), 1):
            ratios = dominance_ratios(table, ktable)
            report["dominance_ratios"] = {str(k): self._num(v, 8) for k, v in ratios.items()}
        return report

    def cmd_run_polynomial(self) -> Dict[str, Any]:
        """Term map of the run-structure polynomial of weight n."""
        n = int(self.options.get("n", 4))
        if n < 2:
            raise InvalidConfigError(f"run polynomial needs n >= 2 (got {n})")
        loaded = {}
        for m in range(2, n + 1):
            poly = self.cache.load_run_polynomial(m)
            if poly is None:
                break
            loaded[m] = poly
        seed_run_polynomials(loaded)

        poly = loaded.get(n) or run_polynomial(n)
        for m in range(len(loaded) + 2, n + 1):
            self.cache.store_run_polynomial(run_polynomial(m))
        terms = run_polynomial_to_json(poly)
        return {
            "n": n,
            "terms": terms,
            "term_count": len(poly),
            "coefficient_sum": format_rational(poly.coefficient_sum),
            "rows": [{"partition": k, "coefficient": v} for k, v in terms.items()],
        }
