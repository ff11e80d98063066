"""Distance metrics between an estimated CDF grid and a reference surface."""

import numpy as np
import pytest

from latticemodels.distributions import bivariate_normal_cdf
from latticemodels.metrics import (
    MetricsReport,
    aggregate_metrics,
    evaluate,
    read_metrics_csv,
    write_metrics_csv,
    write_metrics_summary_csv,
)
from latticemodels.semiparametric import CdfGrid

AXIS = np.linspace(-2.5, 2.5, 80)


def phi2_grid(rho, axis=AXIS):
    a, b = np.meshgrid(axis, axis, indexing="ij")
    return CdfGrid(axis, axis, bivariate_normal_cdf(a, b, rho))


class TestEvaluate:
    def test_identity_is_perfect(self):
        grid = phi2_grid(0.6)
        rep = evaluate(grid, lambda a, b: bivariate_normal_cdf(a, b, 0.6), AXIS, AXIS)
        assert rep.rmse == pytest.approx(0.0, abs=1e-12)
        assert rep.ks == pytest.approx(0.0, abs=1e-12)
        assert rep.cvm == pytest.approx(0.0, abs=1e-14)
        assert rep.correlation == pytest.approx(1.0, abs=1e-9)

    def test_constant_shift(self):
        base = phi2_grid(0.3)
        shifted = CdfGrid(AXIS, AXIS, np.clip(base.values + 0.01, 0.0, 1.0))
        # stay on nodes and away from the clip region
        rep = evaluate(
            shifted,
            lambda a, b: bivariate_normal_cdf(a, b, 0.3),
            AXIS[:60],
            AXIS[:60],
        )
        assert rep.ks == pytest.approx(0.01, abs=1e-9)
        assert rep.rmse == pytest.approx(0.01, abs=1e-9)
        assert rep.correlation == pytest.approx(1.0, abs=1e-7)

    def test_cvm_is_squared_rmse(self):
        grid = phi2_grid(0.45)
        rep = evaluate(grid, lambda a, b: bivariate_normal_cdf(a, b, 0.2), AXIS, AXIS)
        assert abs(rep.cvm - rep.rmse**2) <= 1e-12

    def test_ks_dominates_rmse(self):
        rng = np.random.default_rng(3)
        noise = np.clip(phi2_grid(0.5).values + rng.normal(0, 0.02, (80, 80)), 0, 1)
        grid = CdfGrid(AXIS, AXIS, np.maximum.accumulate(
            np.maximum.accumulate(np.sort(np.sort(noise, axis=0), axis=1), axis=0), axis=1
        ))
        rep = evaluate(grid, lambda a, b: bivariate_normal_cdf(a, b, 0.5), AXIS, AXIS)
        assert rep.ks >= rep.rmse

    def test_order_invariance(self):
        grid = phi2_grid(0.6)
        ref = lambda a, b: bivariate_normal_cdf(a, b, 0.25)
        fwd = evaluate(grid, ref, AXIS, AXIS)
        rev = evaluate(grid, ref, AXIS[::-1].copy(), AXIS[::-1].copy())
        assert fwd.rmse == pytest.approx(rev.rmse, abs=1e-14)
        assert fwd.ks == pytest.approx(rev.ks, abs=1e-14)
        assert fwd.correlation == pytest.approx(rev.correlation, abs=1e-12)

    def test_constant_estimate_has_undefined_correlation(self):
        grid = CdfGrid(AXIS, AXIS, np.full((80, 80), 0.5))
        rep = evaluate(grid, lambda a, b: bivariate_normal_cdf(a, b, 0.1), AXIS, AXIS)
        assert rep.correlation is None
        assert np.isfinite(rep.rmse)

    def test_off_node_uses_interpolation(self):
        axis = np.array([0.0, 1.0])
        grid = CdfGrid(axis, axis, np.array([[0.0, 0.0], [0.0, 1.0]]))
        ref = lambda a, b: np.full_like(np.asarray(a, dtype=float), 0.25)
        rep = evaluate(grid, ref, np.array([0.5]), np.array([0.5]))
        assert rep.rmse == pytest.approx(0.0, abs=1e-12)


class TestReportValidation:
    def test_rejects_metric_mismatch(self):
        with pytest.raises(ValueError):
            MetricsReport(rmse=0.1, ks=0.2, cvm=0.5, correlation=0.9)

    def test_rejects_out_of_range_correlation(self):
        with pytest.raises(ValueError):
            MetricsReport(rmse=0.1, ks=0.2, cvm=0.01, correlation=1.5)

    def test_accepts_undefined_correlation(self):
        rep = MetricsReport(rmse=0.1, ks=0.2, cvm=0.01, correlation=None)
        assert rep.to_dict()["corr"] is None


class TestCsvRoundTrip:
    def make_reports(self):
        reports = []
        for method, rho in (("grid-inversion", 0.2), ("kernel", 0.4)):
            for rep_id in range(3):
                grid = phi2_grid(rho + 0.05 * rep_id)
                reports.append(
                    evaluate(
                        grid,
                        lambda a, b: bivariate_normal_cdf(a, b, 0.6),
                        AXIS,
                        AXIS,
                        replicate=rep_id,
                        method=method,
                    )
                )
        return reports

    def test_round_trip_exact(self, tmp_path):
        reports = self.make_reports()
        path = tmp_path / "metrics.csv"
        write_metrics_csv(reports, path)
        back = read_metrics_csv(path)
        assert len(back) == len(reports)
        for a, b in zip(reports, back):
            assert a.method == b.method and a.replicate == b.replicate
            assert a.rmse == b.rmse and a.ks == b.ks and a.cvm == b.cvm
            assert a.correlation == b.correlation

    def test_aggregate_layout(self, tmp_path):
        reports = self.make_reports()
        rows = aggregate_metrics(reports)
        assert [row["method"] for row in rows] == ["grid-inversion", "kernel"]
        assert all(row["replications"] == 3 for row in rows)
        first = [r for r in reports if r.method == "grid-inversion"]
        manual = np.mean([r.rmse for r in first])
        assert rows[0]["rmse_mean"] == pytest.approx(manual, abs=1e-15)
        path = tmp_path / "summary.csv"
        write_metrics_summary_csv(rows, path)
        header = path.read_text().splitlines()[0]
        assert header == (
            "method,replications,rmse_mean,rmse_sd,ks_mean,ks_sd,"
            "cvm_mean,cvm_sd,corr_mean,corr_sd"
        )

    def test_single_replication_has_empty_sd(self, tmp_path):
        reports = self.make_reports()[:1]
        rows = aggregate_metrics(reports)
        assert rows[0]["replications"] == 1
        assert rows[0]["rmse_sd"] is None
        path = tmp_path / "summary.csv"
        write_metrics_summary_csv(rows, path)
        line = path.read_text().splitlines()[1]
        assert ",," in line
