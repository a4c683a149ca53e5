import json

import pandas as pd
import pytest

from qi_moments import main


def _run(capsys, tmp_path, *args):
    code = main([*args, "--cache-dir", str(tmp_path / "cache")])
    out = capsys.readouterr().out
    return code, out


def _run_json(capsys, tmp_path, *args):
    code, out = _run(capsys, tmp_path, *args)
    assert code == 0
    return json.loads(out)


class TestMoments:
    def test_phi2_first_moments(self, capsys, tmp_path):
        report = _run_json(capsys, tmp_path, "moments", "--operator", "phi2", "--n-max", "4")
        assert report["full"] == ["1/1", "0/1", "2/1", "48/1", "1740/1"]
        assert report["connected"][2:] == ["2/1", "48/1", "1728/1"]
        assert report["p"] == 1

    def test_rho_em(self, capsys, tmp_path):
        report = _run_json(capsys, tmp_path, "moments", "--operator", "rhoEM", "--n-max", "3")
        assert report["full"] == ["1/1", "0/1", "3/1", "420/1"]

    def test_output_is_reproducible(self, capsys, tmp_path):
        first, second = tmp_path / "first.json", tmp_path / "second.json"
        assert main(["moments", "--operator", "E2", "--n-max", "8", "--no-cache", "--output", str(first)]) == 0
        assert main(["moments", "--operator", "E2", "--n-max", "8",
                     "--cache-dir", str(tmp_path / "cache"), "--output", str(second)]) == 0
        assert first.read_bytes() == second.read_bytes()

    def test_cached_rerun_matches(self, capsys, tmp_path):
        args = ("moments", "--operator", "phidot2", "--n-max", "6")
        _, fresh = _run(capsys, tmp_path, *args)
        _, cached = _run(capsys, tmp_path, *args)
        assert fresh == cached

    def test_corrupted_cache_is_recomputed(self, capsys, tmp_path):
        args = ("moments", "--operator", "rhoS", "--n-max", "6")
        _, fresh = _run(capsys, tmp_path, *args)
        cache_files = list((tmp_path / "cache").glob("*.json"))
        assert cache_files
        for path in cache_files:
            path.write_text("garbage", encoding="utf-8")
        code, again = _run(capsys, tmp_path, *args)
        assert code == 0
        assert again == fresh

    def test_weights_file(self, capsys, tmp_path):
        weights = tmp_path / "weights.json"
        weights.write_text(json.dumps({"operator": "custom", "p": 1, "weights": [["1/2", 2]]}), encoding="utf-8")
        report = _run_json(capsys, tmp_path, "moments", "--weights", str(weights), "--n-max", "3")
        assert report["operator"] == "custom"
        assert report["full"][:3] == ["1/1", "0/1", "1/1"]


class TestLowerBound:
    def test_phi2_bounds(self, capsys, tmp_path):
        report = _run_json(capsys, tmp_path, "lower-bound", "--operator", "phi2", "--N", "2..4", "--n-max", "7")
        assert sorted(report["bounds"]) == ["2", "3", "4"]
        assert report["bounds"]["2"].startswith("0.08304597359")
        assert [row["N"] for row in report["rows"]] == [2, 3, 4]

    def test_table_too_short(self, capsys, tmp_path):
        code, out = _run(capsys, tmp_path, "lower-bound", "--operator", "phi2", "--N", "2..12", "--n-max", "10")
        assert code == 3
        assert "[ERROR]" in out
        assert "a_23" in out

    def test_phidot2_first_bound(self, capsys, tmp_path):
        report = _run_json(capsys, tmp_path, "lower-bound", "--operator", "phidot2", "--N", "2",
                           "--digits", "40", "--n-max", "3")
        assert report["bounds"]["2"].startswith("0.0107140124")
        assert report["digits"] == 40

    def test_extrapolation_widens_default_range(self, capsys, tmp_path):
        report = _run_json(capsys, tmp_path, "lower-bound", "--operator", "phi2", "--n-max", "25",
                           "--extrapolate", "0,1,2", "--window", "8:13")
        assert sorted(int(N) for N in report["bounds"]) == list(range(2, 14))
        assert report["extrapolation"]["window"] == [8, 13]
        assert 0.155 < float(report["extrapolation"]["y_infinity"]) < 0.175

    def test_window_outside_explicit_range(self, capsys, tmp_path):
        code, out = _run(capsys, tmp_path, "lower-bound", "--operator", "phi2", "--N", "2..10", "--n-max", "25",
                         "--extrapolate", "0,1,2", "--window", "8:13")
        assert code == 2
        assert "outside" in out

    @pytest.mark.slow
    def test_extrapolated_phi2_limit(self, capsys, tmp_path):
        report = _run_json(capsys, tmp_path, "lower-bound", "--operator", "phi2",
                           "--extrapolate", "0,1,2", "--window", "21:33")
        assert sorted(int(N) for N in report["bounds"]) == list(range(2, 34))
        assert abs(float(report["extrapolation"]["y_infinity"]) - 1 / 6) < 1e-8

    def test_bad_range(self, capsys, tmp_path):
        code, _ = _run(capsys, tmp_path, "lower-bound", "--N", "two..four")
        assert code == 2


class TestConfigErrors:
    def test_too_few_digits(self, capsys, tmp_path):
        code = main(["moments", "--digits", "5", "--n-max", "4", "--cache-dir", str(tmp_path)])
        assert code == 2
        assert "digits" in capsys.readouterr().err

    def test_unknown_operator(self, capsys, tmp_path):
        code = main(["moments", "--operator", "phi3", "--n-max", "4", "--cache-dir", str(tmp_path)])
        assert code == 2
        assert "unknown operator" in capsys.readouterr().err

    def test_wrong_unit(self, capsys, tmp_path):
        code, _ = _run(capsys, tmp_path, "brain", "--mass", "1cm")
        assert code == 2


class TestApplicationsCommands:
    def test_brain(self, capsys, tmp_path):
        report = _run_json(capsys, tmp_path, "brain", "--mass", "1kg", "--size", "10cm", "--time", "0.3s")
        assert 1e25 <= float(report["exponent"]) <= 1e27

    def test_nucleation_mass_with_given_constants(self, capsys, tmp_path):
        report = _run_json(capsys, tmp_path, "nucleation", "--four-volume", "1e142", "--count", "1",
                           "--c0", "0.95539211", "--a", "0.9630614156", "--n-max", "4")
        assert report["tail_source"] == "options"
        assert float(report["mass_planck"]) == pytest.approx(400, rel=0.1)
        assert float(report["mass_g"]) == pytest.approx(float(report["mass_planck"]) * 2.18e-5, rel=1e-6)
        assert float(report["expected_count"]) == pytest.approx(1)

    def test_nucleation_count(self, capsys, tmp_path):
        report = _run_json(capsys, tmp_path, "nucleation", "--four-volume", "1e142", "--mass", "400",
                           "--c0", "0.95539211", "--a", "0.9630614156")
        assert 0.1 <= float(report["expected_count"]) <= 10

    def test_nucleation_without_constants_needs_deep_table(self, capsys, tmp_path):
        code, out = _run(capsys, tmp_path, "nucleation", "--four-volume", "1e142", "--n-max", "10")
        assert code == 3
        assert "insufficient moments" in out

    def test_nucleation_on_shorter_pair(self, capsys, tmp_path):
        report = _run_json(capsys, tmp_path, "nucleation", "--four-volume", "1e142", "--count", "1",
                           "--n-max", "23", "--n-pair", "21:22")
        assert report["tail_source"] == "fit to moments (21, 22)"
        assert float(report["mass_planck"]) == pytest.approx(400, rel=0.2)

    @pytest.mark.slow
    def test_nucleation_from_fitted_tail(self, capsys, tmp_path):
        report = _run_json(capsys, tmp_path, "nucleation", "--four-volume", "1e142", "--count", "1")
        assert report["tail_source"] == "fit to moments (64, 65)"
        assert float(report["mass_planck"]) == pytest.approx(400, rel=0.1)

    def test_gamma_moments(self, capsys, tmp_path):
        report = _run_json(capsys, tmp_path, "gamma-moments", "--n-max", "3")
        assert report["exact"] is True
        assert report["moments"] == ["1/1", "0/1", "2/1", "48/1"]

    def test_gamma_moments_compare(self, capsys, tmp_path):
        report = _run_json(capsys, tmp_path, "gamma-moments", "--n-max", "10", "--operator", "phi2", "--compare")
        assert report["matches_table"] is True
        assert report["mismatches"] == []

    def test_tail_on_shorter_pair(self, capsys, tmp_path):
        report = _run_json(capsys, tmp_path, "tail", "--operator", "rhoEM", "--n-max", "23", "--n-pair", "21:22")
        assert report["source"] == "fit to moments (21, 22)"
        assert report["rows"][0]["n"] == 4
        assert report["rows"][-1]["n"] == 23
        assert abs(float(report["rows"][-1]["relative_error"])) < 0.01

    def test_tail_on_short_table(self, capsys, tmp_path):
        code, out = _run(capsys, tmp_path, "tail", "--operator", "rhoEM", "--n-max", "23")
        assert code == 3
        assert "insufficient moments" in out
        assert "a_65" in out

    def test_run_polynomial(self, capsys, tmp_path):
        report = _run_json(capsys, tmp_path, "run-polynomial", "--n", "4")
        assert report["terms"] == {"1,1,1,1": "1/1", "2,2": "1/1", "3,1": "1/1"}
        assert report["coefficient_sum"] == "3/1"


class TestAnalysisCommands:
    def test_accelerate(self, capsys, tmp_path):
        report = _run_json(capsys, tmp_path, "accelerate", "--operator", "phi2", "--N", "2..8", "--n-max", "15")
        assert report["chain"] == ["1/1", "2/1"]
        assert [row["N"] for row in report["rows"]] == [2, 3, 4, 5, 6]
        assert all(float(y) > 0.08 for y in report["accelerated"].values())

    def test_accelerate_needs_depth(self, capsys, tmp_path):
        code, out = _run(capsys, tmp_path, "accelerate", "--operator", "phi2", "--N", "2..12", "--n-max", "10")
        assert code == 3
        assert "a_23" in out

    def test_extrapolate(self, capsys, tmp_path):
        report = _run_json(capsys, tmp_path, "extrapolate", "--operator", "phi2", "--n-max", "25",
                           "--exponents", "0,1,2", "--window", "8:13")
        assert report["exponents"] == ["0/1", "1/1", "2/1"]
        assert [row["N"] for row in report["rows"]] == list(range(8, 14))
        assert 0.155 < float(report["y_infinity"]) < 0.175

    def test_extrapolate_needs_depth(self, capsys, tmp_path):
        code, _ = _run(capsys, tmp_path, "extrapolate", "--operator", "phidot2", "--n-max", "23")
        assert code == 3

    def test_phidot2_extrapolation_reports_comparator(self, capsys, tmp_path):
        report = _run_json(capsys, tmp_path, "extrapolate", "--operator", "phidot2", "--n-max", "23",
                           "--window", "5:12")
        assert report["exponents"] == ["0/1", "1/2", "1/1", "3/2"]
        assert report["below_phidot2_comparator"] is True

    def test_fit(self, capsys, tmp_path):
        report = _run_json(capsys, tmp_path, "fit", "--n-max", "6", "--fit-n-max", "4", "--grid=-0.04,1,5")
        assert report["operator"] == "rhoEM"
        assert len(report["rows"]) == 5
        assert sorted(report["fractional_errors"]) == ["0", "2", "3", "4"]
        assert report["krein"]["divergent"] is False

    def test_fit_only_for_rho_em(self, capsys, tmp_path):
        code, _ = _run(capsys, tmp_path, "fit", "--operator", "phi2", "--n-max", "6")
        assert code == 2

    def test_cdf_bound_with_given_constants(self, capsys, tmp_path):
        report = _run_json(capsys, tmp_path, "cdf-bound", "--n-max", "12", "--lambda-grid", "100,1e4,3",
                           "--c0", "0.95539211", "--a", "0.9630614156")
        assert report["tail_source"] == "options"
        assert [float(row["lambda"]) for row in report["rows"]] == pytest.approx([100, 1000, 10000])
        bounds = [float(row["moment_bound"]) for row in report["rows"]]
        assert bounds == sorted(bounds, reverse=True)
        assert all(0 <= b <= 1 for b in bounds)

    def test_cdf_bound_needs_depth(self, capsys, tmp_path):
        code, out = _run(capsys, tmp_path, "cdf-bound", "--n-max", "12", "--lambda-grid", "100,1e4,3")
        assert code == 3
        assert "insufficient moments" in out

    def test_diagnostics(self, capsys, tmp_path):
        report = _run_json(capsys, tmp_path, "diagnostics", "--operator", "phidot2", "--n-max", "12")
        assert [row["n"] for row in report["rows"]] == list(range(2, 13))
        assert report["dominant_graph"]["n"] == 12
        assert report["dominant_graph"]["holds"] is True
        assert sorted(int(k) for k in report["dominance_ratios"]) == list(range(3, 13))

    def test_diagnostics_needs_depth(self, capsys, tmp_path):
        code, _ = _run(capsys, tmp_path, "diagnostics", "--operator", "phidot2", "--n-max", "8")
        assert code == 3

    def test_additivity_report(self, capsys, tmp_path):
        report = _run_json(capsys, tmp_path, "additivity", "--n-max", "23", "--window", "5:12")
        assert sorted(report["y_infinity"]) == ["E2", "phidot2", "rhoEM", "rhoS"]
        assert sorted(report["relations"]) == ["E2/rhoEM", "rhoEM/phidot2", "rhoEM/rhoS"]
        assert report["relations"]["rhoEM/phidot2"]["predicted"] == 2
        assert all(float(rel["ratio"]) > 0 for rel in report["relations"].values())

    def test_additivity_needs_depth(self, capsys, tmp_path):
        code, _ = _run(capsys, tmp_path, "additivity", "--n-max", "23")
        assert code == 3

    @pytest.mark.slow
    def test_additivity_at_full_depth(self, capsys, tmp_path):
        report = _run_json(capsys, tmp_path, "additivity")
        assert abs(float(report["relations"]["rhoEM/phidot2"]["ratio"]) - 2) < 0.02
        assert abs(float(report["relations"]["E2/rhoEM"]["ratio"]) - 1) < 0.01


class TestTabularOutput:
    def test_csv_to_stdout(self, capsys, tmp_path):
        code, out = _run(capsys, tmp_path, "moments", "--operator", "phi2", "--n-max", "4", "--format", "csv")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "n,connected,full,full_decimal"
        assert lines[-1].startswith("4,1728/1,1740/1,")

    def test_xlsx_needs_output(self, capsys, tmp_path):
        code, _ = _run(capsys, tmp_path, "moments", "--n-max", "4", "--format", "xlsx")
        assert code == 2

    def test_xlsx_export(self, capsys, tmp_path):
        path = tmp_path / "bounds.xlsx"
        code, _ = _run(capsys, tmp_path, "lower-bound", "--operator", "phi2", "--N", "2..4", "--n-max", "7",
                       "--format", "xlsx", "--output", str(path))
        assert code == 0
        df = pd.read_excel(path, sheet_name="Data")
        assert list(df.columns) == ["N", "y_N"]
        assert list(df["N"]) == [2, 3, 4]
        assert str(df["y_N"][0]).startswith("0.0830459")
