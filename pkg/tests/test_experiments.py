"""Integration tests for the experiment runner and result files"""

import json

import numpy as np
import pandas as pd
import pytest

from tylershape.schemas.experiments import ROW_COLUMNS, ExperimentKind
from tylershape.services.experiments import (
    ExperimentRunner,
    run_alpha_sweep,
    run_alpha_vs_n,
    run_estimator_grid,
    run_outlier_screening,
)
from tylershape.services.reporting import load_matrix


@pytest.mark.integration
class TestEstimatorGrid:
    """Test the estimator comparison grid"""

    def test_rows_and_files(self, small_config):
        config = small_config(
            ExperimentKind.ESTIMATOR_GRID, u_laws=["constant", "cauchy"], alpha=10.0
        )
        result = run_estimator_grid(config)
        rows = result.rows
        assert list(rows.columns) == ROW_COLUMNS
        # 2 u-laws x 2 realizations x 4 estimators
        assert len(rows) == 16
        assert set(rows["estimator"]) == {"SampCov", "th-SampCov", "RegTME", "th-RegTME"}
        assert (rows["status"] == "ok").all()
        assert rows["wall_time_s"].isna().all()
        assert rows.loc[rows["estimator"] == "SampCov", "alpha"].isna().all()
        assert (rows.loc[rows["estimator"] == "th-RegTME", "iterations"] > 0).all()

        on_disk = pd.read_csv(result.files["rows"])
        assert list(on_disk.columns) == ROW_COLUMNS
        assert len(on_disk) == 16
        summary = pd.read_csv(result.files["summary"])
        assert len(summary) == 8
        assert np.allclose(summary["lre"], np.log(summary["mean_rel_error"]))

    def test_include_tme(self, small_config):
        config = small_config(ExperimentKind.ESTIMATOR_GRID, include_tme=True, realizations=1)
        rows = run_estimator_grid(config).rows
        assert {"TME", "th-TME"} <= set(rows["estimator"])

    def test_metadata(self, small_config):
        result = run_estimator_grid(small_config(ExperimentKind.ESTIMATOR_GRID))
        with open(result.files["metadata"]) as f:
            meta = json.load(f)
        assert meta["rng"] == "numpy.random.Philox"
        assert meta["config"]["master_seed"] == 20190
        assert "started_at" not in meta
        with open(result.files["run_info"]) as f:
            assert "started_at" in json.load(f)

    def test_rerun_is_byte_identical(self, small_config, tmp_path):
        """Same config, same data files"""
        first = run_estimator_grid(
            small_config(ExperimentKind.ESTIMATOR_GRID, output_dir=str(tmp_path / "a"))
        )
        second = run_estimator_grid(
            small_config(ExperimentKind.ESTIMATOR_GRID, output_dir=str(tmp_path / "b"))
        )
        for name in ("rows", "summary", "metadata"):
            with open(first.files[name], "rb") as fa, open(second.files[name], "rb") as fb:
                assert fa.read() == fb.read()

    def test_realization_subset_reproducible(self, small_config, tmp_path):
        """Realization r gives the same rows whether or not others are run"""
        full = run_estimator_grid(
            small_config(ExperimentKind.ESTIMATOR_GRID, realizations=3)
        ).rows
        first_only = run_estimator_grid(
            small_config(
                ExperimentKind.ESTIMATOR_GRID,
                realizations=1,
                output_dir=str(tmp_path / "one"),
            )
        ).rows
        expected = full[full["realization"] == 0].reset_index(drop=True)
        pd.testing.assert_frame_equal(expected, first_only)

    def test_workers_do_not_change_results(self, small_config, tmp_path):
        serial = run_estimator_grid(small_config(ExperimentKind.ESTIMATOR_GRID)).rows
        parallel = run_estimator_grid(
            small_config(
                ExperimentKind.ESTIMATOR_GRID, workers=2, output_dir=str(tmp_path / "par")
            )
        ).rows
        pd.testing.assert_frame_equal(serial, parallel)

    def test_matrix_dumps(self, small_config):
        config = small_config(
            ExperimentKind.ESTIMATOR_GRID, realizations=1, dump_matrices=True
        )
        result = ExperimentRunner(config).run()
        dumps = sorted((ExperimentRunner(config).output_dir / "matrices").glob("*.csv"))
        assert len(dumps) == 4
        m = load_matrix(dumps[0])
        assert m.shape == (12, 12)
        assert len(result.rows) == 4

    def test_regtme_columns_shared_across_u_laws(self, small_config):
        """Constant and Cauchy radii on the same directions give the same RegTME errors"""
        config = small_config(
            ExperimentKind.ESTIMATOR_GRID,
            u_laws=["constant", "cauchy"],
            p_over_n=[0.5, 2.0],
            alpha=10.0,
            realizations=3,
        )
        rows = run_estimator_grid(config).rows
        for estimator in ("RegTME", "th-RegTME"):
            selected = rows[rows["estimator"] == estimator]
            constant = selected[selected["u_law"] == "constant"]
            cauchy = selected[selected["u_law"] == "cauchy"]
            assert len(constant) == 6
            np.testing.assert_allclose(
                constant["rel_spec_error"].to_numpy(),
                cauchy["rel_spec_error"].to_numpy(),
                rtol=0.0,
                atol=1e-10,
            )

    def test_dataset_dumps(self, small_config):
        config = small_config(
            ExperimentKind.ESTIMATOR_GRID, realizations=1, u_laws=["laplace"], dump_datasets=True
        )
        runner = ExperimentRunner(config)
        runner.run()
        dumps = sorted((runner.output_dir / "datasets").glob("*.csv"))
        assert [d.name for d in dumps] == ["n24_p12_laplace_a10.0_r0.csv"]
        samples = load_matrix(dumps[0])
        assert samples.shape == (24, 12)

    def test_timing_recorded_on_request(self, small_config):
        config = small_config(ExperimentKind.ESTIMATOR_GRID, realizations=1, record_timing=True)
        rows = run_estimator_grid(config).rows
        assert (rows["wall_time_s"] >= 0).all()


@pytest.mark.integration
class TestAlphaStudies:
    """Test the alpha sweep and alpha-vs-n studies"""

    def test_alpha_sweep(self, small_config):
        config = small_config(
            ExperimentKind.ALPHA_SWEEP,
            points=[{"n": 12, "p": 24}],
            alpha=[0.5, 2.0],
            force_alpha=True,
        )
        result = run_alpha_sweep(config)
        rows = result.rows
        assert list(rows.columns) == ROW_COLUMNS + ["guaranteed"]
        assert set(rows["estimator"]) == {"th-RegTME"}
        assert rows.loc[rows["alpha"] == 0.5, "guaranteed"].eq(False).all()
        assert rows.loc[rows["alpha"] == 2.0, "guaranteed"].eq(True).all()

    def test_unforced_alpha_below_bound_is_tagged(self, small_config):
        """Failures become rows instead of aborting the grid"""
        config = small_config(
            ExperimentKind.ALPHA_SWEEP, points=[{"n": 12, "p": 24}], alpha=[0.5, 2.0]
        )
        rows = run_alpha_sweep(config).rows
        low = rows[rows["alpha"] == 0.5]
        assert (low["status"] == "error:ExistenceError").all()
        assert low["rel_spec_error"].isna().all()
        assert (rows.loc[rows["alpha"] == 2.0, "status"] == "ok").all()

    def test_alpha_vs_n(self, small_config):
        config = small_config(
            ExperimentKind.ALPHA_VS_N, p_fixed=16, n_values=[8, 16, 32], alpha=[1.0, 3.0]
        )
        rows = run_alpha_vs_n(config).rows
        assert sorted(rows["n"].unique()) == [8, 16, 32]
        assert (rows["p"] == 16).all()
        assert len(rows) == 3 * 2 * 2

    def test_auto_alpha(self, small_config):
        config = small_config(
            ExperimentKind.ALPHA_SWEEP, points=[{"n": 20, "p": 10}], alpha="auto"
        )
        rows = run_alpha_sweep(config).rows
        assert (rows["alpha"] > 0).all()
        assert rows["guaranteed"].all()


@pytest.mark.integration
class TestOutlierScreening:
    """Test the screening experiment"""

    def test_rows_and_reports(self, small_config):
        config = small_config(
            ExperimentKind.OUTLIER_SCREENING,
            n_values=[60],
            p_over_n=[0.2],
            epsilons=[0.0, 0.2],
            outlier_models=["uniform"],
        )
        result = run_outlier_screening(config)
        rows = result.rows
        assert list(rows.columns) == ROW_COLUMNS + ["epsilon", "outlier_model"]
        assert set(rows["estimator"]) == {"th-RegTME", "screened-th-RegTME"}
        assert len(result.reports) == 4
        with open(result.files["screening_reports"]) as f:
            reports = json.load(f)
        for report in reports:
            assert report["outlier_labels"] == round(report["epsilon"] * 60)
            if report["status"] == "ok":
                assert len(report["weights"]) == 60

    def test_wrong_kind_rejected(self, small_config):
        with pytest.raises(ValueError):
            run_outlier_screening(small_config(ExperimentKind.ESTIMATOR_GRID))
