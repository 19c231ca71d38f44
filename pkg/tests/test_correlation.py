import math
import time

import numpy as np
import pandas as pd
import pytest

from assetnet.correlation import (
    AbsCorrelationMatrix,
    DistanceMatrix,
    abs_corr_coefficient,
    build_abs_corr_matrix,
    cross_correlation,
    distance,
    lagged_correlations,
    pearson,
    strongest_lag,
    to_distance_matrix,
    verify_metric_axioms,
)
from assetnet.errors import (
    InsufficientOverlapError,
    LengthMismatchError,
    MalformedInputError,
    MatrixTooSmallError,
    OutOfRangeError,
    TooFewSamplesError,
    ZeroVarianceError,
)
from assetnet.timeseries import AssetClass, AssetMeta, Panel


def _panel(values: np.ndarray, symbols=None) -> Panel:
    n_obs, n = values.shape
    symbols = symbols or [f"A{i:02d}" for i in range(n)]
    axis = pd.bdate_range("2007-01-02", periods=n_obs, name="date")
    frame = pd.DataFrame(values, index=axis, columns=symbols)
    meta = tuple(AssetMeta(s, AssetClass.STOCK) for s in symbols)
    return Panel(axis, meta, frame, "return")


class TestPearson:
    def test_perfect_and_anti(self):
        x = [1.0, 2.0, 3.0, 4.0]
        assert pearson(x, [2.0, 4.0, 6.0, 8.0]) == pytest.approx(1.0, abs=1e-15)
        assert pearson(x, [8.0, 6.0, 4.0, 2.0]) == pytest.approx(-1.0, abs=1e-15)

    def test_result_is_clamped(self, rng):
        for _ in range(100):
            x = rng.standard_normal(50)
            assert -1.0 <= pearson(x, 3.0 * x + 1.0) <= 1.0

    def test_errors(self):
        with pytest.raises(ZeroVarianceError):
            pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
        with pytest.raises(LengthMismatchError):
            pearson([1.0, 2.0], [1.0, 2.0, 3.0])
        with pytest.raises(TooFewSamplesError):
            pearson([1.0], [2.0])

    @pytest.mark.parametrize("scale", [1e160, 1e-160])
    def test_extreme_scale(self, rng, scale):
        x = rng.standard_normal(50)
        y = 0.3 * x + rng.standard_normal(50)
        assert pearson(scale * x, scale * y) == pytest.approx(pearson(x, y), abs=1e-12)

    @pytest.mark.parametrize("scale", [1e200, 1e-170])
    def test_identical_extreme_values(self, scale):
        v = [1.0 * scale, 2.0 * scale, 3.0 * scale]
        assert pearson(v, v) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("bad", [math.nan, math.inf])
    def test_non_finite_input(self, bad):
        with pytest.raises(MalformedInputError):
            pearson([1.0, bad, 3.0], [1.0, 2.0, 3.0])
        with pytest.raises(MalformedInputError):
            pearson([1.0, 2.0, 3.0], [1.0, bad, 3.0])

    def test_symmetric(self, rng):
        x = rng.standard_normal(80)
        y = 0.5 * x + rng.standard_normal(80)
        assert pearson(x, y) == pytest.approx(pearson(y, x), abs=1e-15)

    @pytest.mark.parametrize("a,b", [(2.0, 5.0), (-3.0, 1.0), (1e-3, -7.0), (-250.0, 0.0)])
    def test_affine_invariance(self, a, b):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        y = np.array([1.0, 3.0, 2.0, 4.0])
        assert pearson(x, y) == pytest.approx(0.8, abs=1e-12)
        assert pearson(a * x + b, y) == pytest.approx(math.copysign(0.8, a), abs=1e-12)


class TestCrossCorrelation:
    def test_zero_lag_matches_pearson(self, rng, series):
        for _ in range(1000):
            x = rng.standard_normal(120)
            y = 0.5 * x + rng.standard_normal(120)
            cc = cross_correlation(series("X", x, "return"), series("Y", y, "return"), max_lag=2, min_obs=100)
            assert cc.at(0) == pytest.approx(pearson(x, y), abs=1e-12)

    @pytest.mark.parametrize("shift", [-7, -1, 0, 3, 12])
    def test_shifted_copy_recovers_shift(self, rng, series, shift):
        base = rng.standard_normal(600)
        # y_t = x_{t - shift}
        x = base[20:520]
        y = base[20 - shift: 520 - shift]
        cc = cross_correlation(series("X", x, "return"), series("Y", y, "return"), max_lag=15, min_obs=100)
        assert int(cc.lags[np.nanargmax(cc.values)]) == shift
        assert cc.at(shift) == pytest.approx(1.0, abs=1e-12)

    def test_swapping_arguments_mirrors_lags(self, rng):
        a = rng.standard_normal(300)
        b = rng.standard_normal(300)
        v_ab, counts = lagged_correlations(a, b, 10)
        v_ba, _ = lagged_correlations(b, a, 10)
        np.testing.assert_array_equal(v_ab, v_ba[::-1])
        assert counts.tolist() == [300 - abs(n) for n in range(-10, 11)]

    def test_global_moments_differs_from_local(self, rng, series):
        x = np.cumsum(rng.standard_normal(400))
        y = np.cumsum(rng.standard_normal(400))
        local = cross_correlation(series("X", x, "return"), series("Y", y, "return"), 50)
        glob = cross_correlation(series("X", x, "return"), series("Y", y, "return"), 50, global_moments=True)
        assert local.at(0) == pytest.approx(glob.at(0), abs=1e-12)
        assert not np.allclose(local.values, glob.values)

    def test_insufficient_overlap_names_pair(self, series):
        x = series("X", np.arange(1.0, 61.0), "return")
        y = series("Y", np.arange(1.0, 61.0) ** 2, "return", start="2007-02-01")
        with pytest.raises(InsufficientOverlapError) as exc:
            cross_correlation(x, y, 5, min_obs=100)
        assert exc.value.pair == ("X", "Y")
        assert "X/Y" in str(exc.value)

    def test_constant_series(self, series):
        with pytest.raises(ZeroVarianceError):
            cross_correlation(series("X", np.ones(200), "return"), series("Y", np.arange(200.0), "return"), 3)

    def test_white_noise_stays_small(self, rng, series):
        x = rng.standard_normal(2000)
        y = rng.standard_normal(2000)
        cc = cross_correlation(series("X", x, "return"), series("Y", y, "return"), max_lag=20)
        assert np.nanmax(np.abs(cc.values)) < 0.15

    @pytest.mark.parametrize("scale", [1e160, 1e-160])
    def test_global_moments_at_extreme_scale(self, rng, scale):
        a = rng.standard_normal(300)
        b = 0.4 * a + rng.standard_normal(300)
        ref, _ = lagged_correlations(a, b, 5, global_moments=True)
        scaled, _ = lagged_correlations(scale * a, scale * b, 5, global_moments=True)
        np.testing.assert_allclose(scaled, ref, rtol=0, atol=1e-12)
        assert np.all(np.abs(scaled) <= 1.0)


class TestAbsCorr:
    def test_sign_is_ignored(self, rng, series):
        x = rng.standard_normal(300)
        assert abs_corr_coefficient(series("X", x, "return"), series("Y", -x, "return")) == pytest.approx(1.0)

    def test_one_day_lead_is_captured(self, rng, series):
        base = rng.standard_normal(301)
        x, y = base[1:], base[:-1]
        assert abs_corr_coefficient(series("X", x, "return"), series("Y", y, "return")) == pytest.approx(1.0)

    def test_symmetric_in_arguments(self, rng, series):
        x = rng.standard_normal(400)
        y = 0.3 * np.roll(x, 1) + rng.standard_normal(400)
        sx, sy = series("X", x, "return"), series("Y", y, "return")
        assert abs_corr_coefficient(sx, sy) == pytest.approx(abs_corr_coefficient(sy, sx), abs=1e-15)

    def test_negation_and_one_step_shift(self, rng, series):
        base = rng.standard_normal(401)
        noise = rng.standard_normal(401)
        x = series("X", base[1:], "return")
        same_day = base[1:] + noise[1:]
        # 같은 y 를 하루 늦춘 시계열
        next_day = base[:-1] + noise[:-1]
        plain = abs_corr_coefficient(x, series("Y", same_day, "return"))
        assert abs_corr_coefficient(x, series("Y", -same_day, "return")) == plain
        moved = abs_corr_coefficient(x, series("Y", -next_day, "return"))
        assert moved == pytest.approx(plain, abs=0.02)
        assert plain > 0.6

    def test_strongest_lag_picks_largest_magnitude(self):
        assert strongest_lag([0.1, -0.3, 0.2]) == pytest.approx((0.3, 0))
        assert strongest_lag([-0.1, 0.3, -0.2]) == pytest.approx((0.3, 0))
        assert strongest_lag([0.5, -0.3, 0.2]) == pytest.approx((0.5, -1))
        assert strongest_lag([0.1, 0.3, -0.7]) == pytest.approx((0.7, 1))

    def test_strongest_lag_ties_and_nan(self):
        assert strongest_lag([0.4, 0.4, 0.4]) == (0.4, 0)
        assert strongest_lag([0.4, 0.2, -0.4]) == (0.4, -1)
        assert strongest_lag([np.nan, np.nan, 0.2]) == (0.2, 1)
        assert strongest_lag([np.nan, np.nan, np.nan]) is None

    def test_distance_values(self):
        assert distance(1.0) == 0.0
        assert distance(0.0) == pytest.approx(math.sqrt(2.0))
        assert distance(0.5) == pytest.approx(1.0)
        with pytest.raises(OutOfRangeError):
            distance(1.5)
        with pytest.raises(OutOfRangeError):
            distance(-0.1)


class TestMatrices:
    def test_matrix_is_symmetric_with_unit_diagonal(self, rng):
        m = build_abs_corr_matrix(_panel(rng.standard_normal((300, 5))))
        assert np.array_equal(m.entries, m.entries.T)
        assert np.all(np.diag(m.entries) == 1.0)
        assert m.argmax_lags is not None
        assert set(np.unique(m.argmax_lags)) <= {-1, 0, 1}
        np.testing.assert_array_equal(m.argmax_lags, -m.argmax_lags.T)

    def test_pairwise_complete_overlap(self, rng):
        values = rng.standard_normal((400, 3))
        values[:150, 2] = np.nan
        m = build_abs_corr_matrix(_panel(values))
        a, c = values[150:, 0], values[150:, 2]
        expected = max(abs(pearson(a, c)), abs(pearson(a[:-1], c[1:])), abs(pearson(a[1:], c[:-1])))
        assert m.entries[0, 2] == pytest.approx(expected, abs=1e-12)

    def test_workers_give_identical_matrix(self, rng):
        panel = _panel(rng.standard_normal((300, 8)))
        m1 = build_abs_corr_matrix(panel, workers=1)
        m4 = build_abs_corr_matrix(panel, workers=4)
        assert np.array_equal(m1.entries, m4.entries)

    def test_duplicated_series_under_two_symbols(self, rng):
        x = rng.standard_normal(300)
        m = build_abs_corr_matrix(_panel(np.column_stack([x, x, rng.standard_normal(300)]), ["AAA", "BBB", "CCC"]))
        assert m.entries[0, 1] == pytest.approx(1.0, abs=1e-15)
        assert m.argmax_lags[0, 1] == 0
        d = to_distance_matrix(m)
        assert d.entries[0, 1] == pytest.approx(0.0, abs=1e-7)

    def test_too_small(self, rng):
        with pytest.raises(MatrixTooSmallError):
            build_abs_corr_matrix(_panel(rng.standard_normal((300, 1))))

    def test_insufficient_overlap_in_panel(self, rng):
        values = rng.standard_normal((300, 3))
        values[:250, 1] = np.nan
        with pytest.raises(InsufficientOverlapError) as exc:
            build_abs_corr_matrix(_panel(values))
        assert "A01" in exc.value.pair

    def test_near_one_is_warned(self, rng):
        x = rng.standard_normal(300)
        d = to_distance_matrix(build_abs_corr_matrix(_panel(np.column_stack([x, 2.0 * x, rng.standard_normal(300)]))))
        assert len(d.warnings) == 1
        assert "A00/A01" in d.warnings[0]
        assert d.entries[0, 1] == pytest.approx(0.0, abs=1e-6)

    def test_abs_corr_matrix_validation(self):
        with pytest.raises(OutOfRangeError):
            AbsCorrelationMatrix(("a", "b"), np.array([[1.0, 0.5], [0.4, 1.0]]))
        with pytest.raises(OutOfRangeError):
            AbsCorrelationMatrix(("a", "b"), np.array([[1.0, 1.2], [1.2, 1.0]]))


class TestMetricAxioms:
    def test_random_panels_satisfy_axioms(self):
        rng = np.random.default_rng(1)
        started = time.perf_counter()
        for _ in range(1000):
            d = to_distance_matrix(build_abs_corr_matrix(_panel(rng.standard_normal((500, 3)))))
            report = verify_metric_axioms(d)
            assert report.ok
            assert not report.symmetry_violations
            assert report.n_triples == 1
            assert report.worst_triangle_slack >= -1e-9
        assert time.perf_counter() - started < 10.0

    def test_violation_is_reported_not_raised(self):
        e = np.array([
            [0.0, 1.4, 0.1],
            [1.4, 0.0, 0.1],
            [0.1, 0.1, 0.0],
        ])
        report = verify_metric_axioms(DistanceMatrix(("a", "b", "c"), e))
        assert not report.ok
        assert report.worst_triangle_slack == pytest.approx(0.2 - 1.4)
        assert set(report.worst_triple[:2]) == {"a", "b"}
        assert report.worst_triple[2] == "c"
        assert report.as_dict()["ok"] is False

    def test_asymmetry_is_reported(self):
        e = np.array([[0.0, 0.5], [0.6, 0.0]])
        report = verify_metric_axioms(DistanceMatrix(("a", "b"), e))
        assert report.symmetry_violations == (("a", "b"),)
        assert report.n_triples == 0
        assert report.worst_triangle_slack is None

    def test_distance_matrix_validation(self):
        with pytest.raises(OutOfRangeError):
            DistanceMatrix(("a", "b"), np.array([[0.0, 2.0], [2.0, 0.0]]))
        with pytest.raises(OutOfRangeError):
            DistanceMatrix(("a", "b"), np.array([[0.1, 0.5], [0.5, 0.0]]))
