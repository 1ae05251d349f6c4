import numpy as np
import pytest

import netmed.simharness as sh
from netmed.errors import InputError, RankError
from netmed.simharness import (
    CellStats,
    SimReport,
    SimScenario,
    misspecification_sweep,
    mse_slope,
    parse_scenario,
    run_scenario,
)


def small_scenario(**overrides):
    base = dict(model="informative", d=2, n_grid=(64,), reps=4, alpha=0.05,
                master_seed=99, null_mode="none")
    base.update(overrides)
    return SimScenario(**base)


class TestScenarioValidation:
    def test_n_grid_must_increase(self):
        with pytest.raises(InputError):
            small_scenario(n_grid=(100, 100))
        with pytest.raises(InputError):
            small_scenario(n_grid=(200, 100))

    def test_reps_positive(self):
        with pytest.raises(InputError):
            small_scenario(reps=0)

    def test_alpha_range(self):
        with pytest.raises(InputError):
            small_scenario(alpha=0.0)

    def test_d_fit_normalization(self):
        assert small_scenario(d_fit=3).d_fits == (3,)
        assert small_scenario(d_fit=(1, 2, 3)).d_fits == (1, 2, 3)
        assert small_scenario().d_fits == (2,)


class TestRunScenario:
    def test_deterministic_rerun_bit_identical(self):
        import json

        scenario = small_scenario(reps=1)
        first = run_scenario(scenario, threads=1)
        second = run_scenario(scenario, threads=1)
        assert json.dumps(first.summary_dict()) == json.dumps(second.summary_dict())

    def test_thread_schedule_does_not_change_results(self):
        scenario = small_scenario(reps=8)
        sequential = run_scenario(scenario, threads=1)
        threaded = run_scenario(scenario, threads=3)
        assert sequential.summary_dict() == threaded.summary_dict()

    def test_coverage_is_mean_of_indicators(self):
        scenario = small_scenario(reps=6, n_grid=(80,))
        report = run_scenario(scenario, threads=1)
        cell = report.cell(80, 2)
        assert 0.0 <= cell.coverage_nde <= 1.0
        assert 0.0 <= cell.coverage_nie <= 1.0
        assert (cell.coverage_nde * cell.rep_count) == pytest.approx(
            round(cell.coverage_nde * cell.rep_count), abs=1e-12
        )

    def test_alignment_metrics_only_at_true_d(self):
        scenario = small_scenario(reps=2, d_fit=(1, 2, 3))
        report = run_scenario(scenario, threads=1)
        assert np.isnan(report.cell(64, 1).theta_err)
        assert np.isfinite(report.cell(64, 2).theta_err)
        assert report.cell(64, 2).beta_x_bias is not None
        assert report.cell(64, 3).beta_x_bias is None

    def test_failed_reps_recorded_and_excluded(self, monkeypatch):
        real = sh.simulate_scenario

        def flaky(model, n, d, seed, **kwargs):
            if seed[-1] == 2:
                raise RankError("forced failure")
            return real(model, n, d, seed, **kwargs)

        monkeypatch.setattr(sh, "simulate_scenario", flaky)
        report = run_scenario(small_scenario(reps=5), threads=1)
        cell = report.cells[0]
        assert cell.excluded == 1
        assert cell.rep_count == 4

    def test_theta_error_shrinks_with_n(self):
        scenario = small_scenario(n_grid=(80, 320), reps=10)
        report = run_scenario(scenario, threads=1)
        assert report.cell(320, 2).theta_err < report.cell(80, 2).theta_err

    def test_d_fit_larger_than_n_rejected(self):
        with pytest.raises(InputError):
            run_scenario(small_scenario(n_grid=(16,), d_fit=20), threads=1)


class TestMisspecificationSweep:
    def test_matching_cell_identical_to_plain_run(self):
        plain = run_scenario(small_scenario(reps=3), threads=1)
        sweep = misspecification_sweep(small_scenario(reps=3, d_fit=(1, 2, 3)), threads=1)
        a = plain.cell(64, 2)
        b = sweep.cell(64, 2)
        assert a.mse_nde == b.mse_nde
        assert a.mse_nie == b.mse_nie
        assert a.coverage_nde == b.coverage_nde
        assert a.bias_nie == b.bias_nie

    def test_grid_must_span_true_d(self):
        with pytest.raises(InputError):
            misspecification_sweep(small_scenario(d_fit=(2, 3, 4)))
        with pytest.raises(InputError):
            misspecification_sweep(small_scenario(d_fit=(1, 2)))


def _synthetic_report(mses, d=2):
    scenario = SimScenario(model="informative", d=d,
                           n_grid=tuple(n for n, _ in mses), reps=10, master_seed=0)
    cells = tuple(
        CellStats(n=n, d_fit=d, rep_count=10, excluded=0,
                  mse_nde=mse, mse_nie=mse,
                  bias_nde=0.0, bias_nie=0.0, bias_se_nde=0.01, bias_se_nie=0.01,
                  coverage_nde=0.95, coverage_nie=0.95,
                  theta_err=0.1, beta_err=0.1)
        for n, mse in mses
    )
    return SimReport(scenario=scenario, cells=cells)


class TestMseSlope:
    def test_inverse_n_gives_minus_one(self):
        report = _synthetic_report([(100, 1.0 / 100), (200, 1.0 / 200),
                                    (400, 1.0 / 400), (800, 1.0 / 800)])
        slopes = mse_slope(report)
        assert slopes["nde"] == pytest.approx(-1.0, abs=1e-12)
        assert slopes["nie"] == pytest.approx(-1.0, abs=1e-12)

    def test_flat_gives_zero(self):
        report = _synthetic_report([(100, 0.5), (200, 0.5), (400, 0.5)])
        slopes = mse_slope(report)
        assert slopes["nde"] == pytest.approx(0.0, abs=1e-12)

    def test_nonpositive_cells_excluded_with_warning(self):
        report = _synthetic_report([(100, 1.0), (200, 0.0), (400, 0.25),
                                    (800, 0.125), (1600, 0.06)])
        with pytest.warns(UserWarning, match="nonpositive"):
            slopes = mse_slope(report)
        assert np.isfinite(slopes["nde"])

    def test_too_few_points(self):
        report = _synthetic_report([(100, 1.0), (200, 0.5)])
        with pytest.raises(InputError):
            mse_slope(report)


class TestParseScenario:
    def test_full_file(self, tmp_path):
        path = tmp_path / "scenario.txt"
        path.write_text(
            "# coverage study\n"
            "model = informative\n"
            "d = 5\n"
            "n_grid = 200, 400, 800\n"
            "d_fit = 1:8\n"
            "reps = 100\n"
            "alpha = 0.05\n"
            "master_seed = 314\n"
            "null_mode = none\n"
        )
        scenario = parse_scenario(path)
        assert scenario.model == "informative"
        assert scenario.d == 5
        assert scenario.n_grid == (200, 400, 800)
        assert scenario.d_fits == (1, 2, 3, 4, 5, 6, 7, 8)
        assert scenario.master_seed == 314

    def test_defaults(self, tmp_path):
        path = tmp_path / "scenario.txt"
        path.write_text("model = uninformative\nd = 2\nn_grid = 100\n")
        scenario = parse_scenario(path)
        assert scenario.reps == 100
        assert scenario.alpha == 0.05
        assert scenario.d_fits == (2,)
        assert scenario.null_mode == "none"

    def test_d_fit_comma_list(self, tmp_path):
        path = tmp_path / "scenario.txt"
        path.write_text("model = informative\nd = 3\nn_grid = 100\nd_fit = 2,3,4\n")
        assert parse_scenario(path).d_fits == (2, 3, 4)

    def test_missing_required_key(self, tmp_path):
        path = tmp_path / "scenario.txt"
        path.write_text("model = informative\nd = 2\n")
        with pytest.raises(InputError, match="n_grid"):
            parse_scenario(path)

    def test_bad_value(self, tmp_path):
        path = tmp_path / "scenario.txt"
        path.write_text("model = informative\nd = two\nn_grid = 100\n")
        with pytest.raises(InputError):
            parse_scenario(path)

    def test_malformed_line(self, tmp_path):
        from netmed.errors import ParseError

        path = tmp_path / "scenario.txt"
        path.write_text("model informative\n")
        with pytest.raises(ParseError) as excinfo:
            parse_scenario(path)
        assert excinfo.value.line == 1


class TestWorkerCount:
    def test_env_variable_caps_workers(self, monkeypatch):
        monkeypatch.setenv("NETMED_THREADS", "2")
        assert sh._worker_count(None) == 2

    def test_explicit_argument_wins(self, monkeypatch):
        monkeypatch.setenv("NETMED_THREADS", "2")
        assert sh._worker_count(5) == 5
