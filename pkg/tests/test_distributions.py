from fractions import Fraction

import pytest
from mpmath import mpf, exp, sqrt, pi, workdps

from core.data_models import (
    BUILTIN_OPERATORS, PHI2_GAMMA_PARAMS, RHO_EM_FIT, TAIL_REFERENCE, ShiftedGammaParams, TailParams,
)
from core.conversions import to_bigfloat
from core.exceptions import InvalidConfigError
from analysis.distributions import (
    cdf_asymptotic_bound, cdf_comparison_tail, cdf_upper_bound, cft2d_params, fit_pdf, fit_pdf_grid,
    fitted_tail_survival, krein_integral, model_fit_fractional_errors, model_fit_moments,
    predicted_tail, shifted_gamma_moments, shifted_gamma_numeric_moment, shifted_gamma_pdf,
    tail_fit, tail_predicted_moment, tail_validity_range,
)


# Fractional errors of the rhoEM model density moments, n = 0 and 2..21
FIT_ERRORS = {
    0: 0.00450644, 2: -0.00661559, 3: -0.0770297, 4: -0.152164, 5: -0.150279, 6: -0.117773,
    7: -0.0843077, 8: -0.0590582, 9: -0.0420107, 10: -0.0308225, 11: -0.0233756,
    12: -0.0182526, 13: -0.0145945, 14: -0.0118911, 15: -0.00983456, 16: -0.0082327,
    17: -0.00696063, 18: -0.00593416, 19: -0.00509465, 20: -0.00440012, 21: -0.00381978,
}


def _close(value, expected, rel):
    return abs(mpf(value) / mpf(expected) - 1) <= rel


class TestShiftedGamma:
    def test_phi2_first_moments(self):
        assert shifted_gamma_moments(PHI2_GAMMA_PARAMS, 3) == [1, 0, 2, 48]

    def test_matches_phi2_table(self, fast_tables):
        assert shifted_gamma_moments(PHI2_GAMMA_PARAMS, 23) == list(fast_tables["phi2"].full)

    @pytest.mark.slow
    def test_matches_phi2_table_to_sixty_five(self, full_tables):
        moments = shifted_gamma_moments(PHI2_GAMMA_PARAMS, 65)
        assert all(isinstance(m, Fraction) for m in moments)
        assert moments == list(full_tables["phi2"].full)

    def test_normalization_for_any_parameters(self):
        params = ShiftedGammaParams(x0=Fraction(3, 7), alpha=Fraction(5, 2), beta=Fraction(2))
        assert shifted_gamma_moments(params, 0) == [1]

    def test_cft_mean_vanishes(self):
        with workdps(40):
            moments = shifted_gamma_moments(cft2d_params(1), 2)
            assert abs(moments[1]) < mpf(10) ** -35
            assert moments[0] == 1

    def test_pdf_support(self):
        assert shifted_gamma_pdf(PHI2_GAMMA_PARAMS, -0.2) == 0
        assert shifted_gamma_pdf(PHI2_GAMMA_PARAMS, 0) > 0

    @pytest.mark.parametrize("n, expected", [(0, 1), (1, 0), (2, 2)])
    def test_quadrature_agrees(self, n, expected):
        assert abs(shifted_gamma_numeric_moment(PHI2_GAMMA_PARAMS, n) - expected) < mpf("1e-8")

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            ShiftedGammaParams(x0=Fraction(1), alpha=Fraction(0), beta=Fraction(1))


class TestTail:
    def test_fitted_scaling_relations(self, fast_tables):
        base = tail_fit(fast_tables["phidot2"], n_pair=(21, 22))
        for name in ("rhoEM", "E2", "rhoS"):
            predicted = predicted_tail(base, BUILTIN_OPERATORS[name])
            fitted = tail_fit(fast_tables[name], n_pair=(21, 22))
            assert _close(predicted.c0, fitted.c0, mpf("1e-2"))
            assert _close(predicted.a, fitted.a, mpf("1e-3"))

    @pytest.mark.slow
    def test_fitted_scaling_relations_at_full_depth(self, full_tables):
        base = tail_fit(full_tables["phidot2"])
        for name in ("rhoEM", "E2", "rhoS"):
            predicted = predicted_tail(base, BUILTIN_OPERATORS[name])
            fitted = tail_fit(full_tables[name])
            assert _close(predicted.c0, fitted.c0, mpf("1e-4"))
            assert _close(predicted.a, fitted.a, mpf("1e-4"))

    def test_growth_constants(self):
        tail = TailParams(c0=mpf("0.5"), a=mpf(2))
        assert tail.D == mpf(1) / 8
        assert tail.C == 12

    def test_predicted_moments_against_table(self, fast_tables):
        tail = TAIL_REFERENCE["rhoEM"]
        table = fast_tables["rhoEM"]
        with workdps(30):
            assert _close(tail_predicted_moment(tail, 20), to_bigfloat(table.full[20]), mpf("0.01"))
            for n in range(9, 24):
                assert _close(tail_predicted_moment(tail, n), to_bigfloat(table.full[n]), mpf("0.01"))
            for n in range(4, 9):
                assert _close(tail_predicted_moment(tail, n), to_bigfloat(table.full[n]), mpf("0.16"))

    def test_validity_range(self):
        lo, hi = tail_validity_range(TailParams(c0=mpf(1), a=mpf(1)), 4, 65)
        assert lo == 216
        assert hi == 6751269
        assert tail_validity_range(TailParams(c0=mpf(1), a=mpf(3)), 4, 4)[0] == 8

    def test_validity_range_rejects_low_n(self):
        with pytest.raises(InvalidConfigError):
            tail_validity_range(TAIL_REFERENCE["rhoEM"], 2, 10)

    def test_fit_needs_deep_table(self, fast_tables):
        from core.exceptions import InsufficientDepthError
        with pytest.raises(InsufficientDepthError):
            tail_fit(fast_tables["rhoEM"])

    def test_fit_on_shorter_pair(self, fast_tables):
        tail = tail_fit(fast_tables["rhoEM"], n_pair=(21, 22))
        assert _close(tail.a, TAIL_REFERENCE["rhoEM"].a, mpf("0.02"))
        assert _close(tail_predicted_moment(tail, 22), to_bigfloat(fast_tables["rhoEM"].full[22]), mpf("1e-20"))

    @pytest.mark.slow
    @pytest.mark.parametrize("name", ["phidot2", "E2", "rhoS", "rhoEM"])
    def test_fitted_constants(self, full_tables, name):
        tail = tail_fit(full_tables[name])
        assert _close(tail.c0, TAIL_REFERENCE[name].c0, mpf("5e-5"))
        assert _close(tail.a, TAIL_REFERENCE[name].a, mpf("5e-5"))

    @pytest.mark.slow
    def test_calibration_moment_is_exact(self, full_tables):
        table = full_tables["rhoEM"]
        with workdps(30):
            tail = tail_fit(table)
            assert _close(tail_predicted_moment(tail, 65), to_bigfloat(table.full[65]), mpf("1e-25"))


class TestModelDensity:
    def test_density_support(self):
        assert fit_pdf(RHO_EM_FIT, -1) == 0
        assert fit_pdf(RHO_EM_FIT, 0) > 0
        grid = fit_pdf_grid(RHO_EM_FIT, ["-0.04", 0, 1])
        assert [x for x, _ in grid] == [mpf("-0.04"), 0, 1]

    def test_normalization_and_mean(self):
        moments = model_fit_moments(RHO_EM_FIT, 1)
        assert abs(moments[0] - mpf("1.00450644")) < mpf("5e-6")
        assert abs(moments[1] - mpf("0.0247")) < mpf("2e-4")

    def test_fractional_errors(self, fast_tables):
        errors = model_fit_fractional_errors(RHO_EM_FIT, fast_tables["rhoEM"], 21)
        assert 1 not in errors
        for n, expected in FIT_ERRORS.items():
            assert float(errors[n]) == pytest.approx(expected, rel=5e-3, abs=1e-6), f"n={n}"

    def test_tolerance_must_be_positive(self):
        with pytest.raises(InvalidConfigError):
            model_fit_moments(RHO_EM_FIT, 2, tol=0)


class TestTailBounds:
    def test_small_lambda_is_clamped(self, fast_tables):
        assert cdf_upper_bound(fast_tables["rhoEM"], 1) == 1
        assert cdf_upper_bound(fast_tables["rhoEM"], "0.5") == 1

    def test_large_lambda(self, fast_tables):
        with workdps(30):
            bound = cdf_upper_bound(fast_tables["rhoEM"], mpf(10) ** 6)
            assert 0 < bound < mpf(10) ** -25

    def test_nonincreasing(self, fast_tables):
        table = fast_tables["phidot2"]
        previous = mpf(1)
        for k in range(0, 16):
            bound = cdf_upper_bound(table, mpf(2) ** k)
            assert bound <= previous
            previous = bound

    def test_lambda_must_be_positive(self, fast_tables):
        with pytest.raises(InvalidConfigError):
            cdf_upper_bound(fast_tables["rhoEM"], 0)

    def test_asymptotic_over_fitted_tail(self):
        tail = TAIL_REFERENCE["rhoEM"]
        with workdps(30):
            for lam in (mpf(10) ** 4, mpf(10) ** 5, mpf(10) ** 6, mpf(10) ** 7):
                ratio = cdf_asymptotic_bound(tail, lam) / fitted_tail_survival(tail, lam)
                assert _close(ratio, sqrt(2 * pi) * (lam / tail.D) ** (mpf(1) / 6), mpf("1e-25"))

    def test_comparison_curve_is_half_the_tail(self):
        tail = TAIL_REFERENCE["rhoEM"]
        assert cdf_comparison_tail(tail, 1000) == fitted_tail_survival(tail, 1000) / 2

    def test_asymptotic_vanishes(self):
        assert cdf_asymptotic_bound(TAIL_REFERENCE["rhoEM"], mpf(10) ** 30) < mpf(10) ** -1000

    @pytest.mark.slow
    def test_asymptotic_tracks_discrete_minimum(self, full_tables):
        with workdps(30):
            lam = mpf(10) ** 6
            discrete = cdf_upper_bound(full_tables["rhoEM"], lam)
            asymptotic = cdf_asymptotic_bound(TAIL_REFERENCE["rhoEM"], lam)
            assert discrete / 3 <= asymptotic <= 3 * discrete


class TestKrein:
    def test_model_density_is_finite(self):
        result = krein_integral(lambda x: fit_pdf(RHO_EM_FIT, x), RHO_EM_FIT.x0)
        assert not result.divergent
        assert result.value < 0

    def test_shifted_gamma_diverges(self):
        x0 = to_bigfloat(PHI2_GAMMA_PARAMS.x0)
        result = krein_integral(lambda x: shifted_gamma_pdf(PHI2_GAMMA_PARAMS, x), x0)
        assert result.divergent
        assert result.value is None

    def test_hard_zero_diverges(self):
        result = krein_integral(lambda x: mpf(0) if 1 <= x <= 2 else exp(-x), mpf("0.5"))
        assert result.divergent
        assert "vanishes" in result.reason

    def test_negative_density(self):
        with pytest.raises(ValueError):
            krein_integral(lambda x: mpf(-1), mpf("0.5"))

    def test_shift_range(self):
        with pytest.raises(InvalidConfigError):
            krein_integral(lambda x: exp(-x), 2)
