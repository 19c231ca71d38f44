import numpy as np
import pytest

from assetnet.errors import AllUndefinedError, DegenerateNeighborhoodError, OutOfRangeError, TooFewPointsError
from assetnet.lowess import LowessConfig, SmoothedCurve, argmax_smoothed, lowess_smooth


def _direct_wls(x, y, k=10, h_fixed=None):
    """점마다 가중 최소제곱을 lstsq 로 직접 푸는 기준 구현."""
    out = np.empty_like(y)
    for i, x0 in enumerate(x):
        d = np.abs(x - x0)
        h = h_fixed if h_fixed is not None else np.sort(d)[k - 1]
        w = (1.0 - np.clip(d / h, 0.0, 1.0) ** 3) ** 3
        sw = np.sqrt(w)
        design = np.column_stack([np.ones_like(x), x - x0])
        beta, *_ = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)
        out[i] = beta[0]
    return out


class TestLowessSmooth:
    def test_matches_direct_weighted_least_squares(self, rng):
        for _ in range(100):
            x = np.sort(rng.choice(np.arange(-150, 151), size=60, replace=False)).astype(float)
            y = np.sin(x / 20.0) + 0.3 * rng.standard_normal(60)
            curve = lowess_smooth(np.column_stack([x, y]))
            np.testing.assert_allclose(curve.smoothed, _direct_wls(x, y), rtol=0, atol=1e-10)

    def test_linear_input_is_reproduced(self, rng):
        for _ in range(20):
            x = np.arange(-150.0, 151.0)
            slope, intercept = rng.uniform(-0.01, 0.01), rng.uniform(-0.5, 0.5)
            y = slope * x + intercept
            curve = lowess_smooth(np.column_stack([x, y]))
            np.testing.assert_allclose(curve.smoothed, y, rtol=0, atol=1e-10)

    @pytest.mark.parametrize("config", [LowessConfig(), LowessConfig(window=20), LowessConfig(robustness_iterations=2)])
    def test_constant_input_is_reproduced(self, config):
        x = np.arange(-60.0, 61.0)
        curve = lowess_smooth(np.column_stack([x, np.full(x.shape[0], 5.0)]), config)
        np.testing.assert_allclose(curve.smoothed, 5.0, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("a,b", [(3.0, -1.0), (-0.5, 2.0), (1e-3, 0.0)])
    def test_commutes_with_affine_maps(self, rng, a, b):
        x = np.arange(-50.0, 51.0)
        y = np.cos(x / 15.0) + 0.2 * rng.standard_normal(x.shape[0])
        base = lowess_smooth(np.column_stack([x, y])).smoothed
        mapped = lowess_smooth(np.column_stack([x, a * y + b])).smoothed
        np.testing.assert_allclose(mapped, a * base + b, rtol=0, atol=1e-10)

    def test_input_order_does_not_matter(self, rng):
        x = np.arange(30.0)
        y = rng.standard_normal(30)
        perm = rng.permutation(30)
        a = lowess_smooth(np.column_stack([x, y]))
        b = lowess_smooth(np.column_stack([x[perm], y[perm]]))
        np.testing.assert_array_equal(a.xs, b.xs)
        np.testing.assert_allclose(a.smoothed, b.smoothed, rtol=0, atol=1e-14)

    def test_fixed_window_mode(self, rng):
        x = np.arange(-40.0, 41.0)
        y = rng.standard_normal(x.shape[0])
        curve = lowess_smooth(np.column_stack([x, y]), LowessConfig(window=30))
        np.testing.assert_allclose(curve.smoothed, _direct_wls(x, y, h_fixed=15.0), rtol=0, atol=1e-10)

    def test_undefined_points_are_skipped(self, rng):
        x = np.arange(-20.0, 21.0)
        y = rng.standard_normal(x.shape[0])
        y_nan = y.copy()
        y_nan[5] = np.nan
        curve = lowess_smooth(np.column_stack([x, y_nan]))
        assert np.isnan(curve.smoothed[5])
        keep = np.arange(x.shape[0]) != 5
        np.testing.assert_allclose(curve.smoothed[keep], _direct_wls(x[keep], y[keep]), rtol=0, atol=1e-10)

    def test_robustness_damps_outlier(self, rng):
        x = np.arange(0.0, 40.0)
        y = 0.1 * x + 0.05 * rng.standard_normal(40)
        y[20] += 50.0
        plain = lowess_smooth(np.column_stack([x, y]))
        robust = lowess_smooth(np.column_stack([x, y]), LowessConfig(robustness_iterations=2))
        assert abs(robust.smoothed[19] - 1.9) < abs(plain.smoothed[19] - 1.9)

    def test_too_few_points(self):
        with pytest.raises(TooFewPointsError):
            lowess_smooth([(0.0, 1.0), (1.0, 2.0), (2.0, 0.5)])

    def test_duplicate_x(self):
        pts = [(float(i % 12), float(i)) for i in range(13)]
        with pytest.raises(DegenerateNeighborhoodError):
            lowess_smooth(pts)

    @pytest.mark.parametrize("kwargs", [{"neighbors": 2}, {"degree": 2}, {"robustness_iterations": -1}, {"window": 0}])
    def test_config_validation(self, kwargs):
        with pytest.raises(OutOfRangeError):
            LowessConfig(**kwargs)


class TestArgmax:
    def _curve(self, xs, smoothed):
        xs = np.asarray(xs, dtype=float)
        return SmoothedCurve(xs, np.zeros_like(xs), np.asarray(smoothed, dtype=float))

    def test_plain_maximum(self):
        assert argmax_smoothed(self._curve([-1, 0, 1], [0.1, 0.2, 0.5])) == (1.0, 0.5)

    def test_tie_prefers_smaller_magnitude(self):
        x, _ = argmax_smoothed(self._curve([-3, -1, 0, 1, 4], [0.5, 0.1, 0.2, 0.5, 0.5]))
        assert x == 1.0

    def test_tie_prefers_negative(self):
        x, _ = argmax_smoothed(self._curve([-2, 0, 2], [0.4, 0.1, 0.4]))
        assert x == -2.0

    def test_undefined_values_ignored(self):
        assert argmax_smoothed(self._curve([-1, 0, 1], [np.nan, 0.2, 0.1])) == (0.0, 0.2)

    def test_all_undefined(self):
        with pytest.raises(AllUndefinedError):
            argmax_smoothed(self._curve([-1, 0, 1], [np.nan, np.nan, np.nan]))

    def test_gaussian_bump_peak(self):
        x = np.arange(-150.0, 151.0)
        y = np.exp(-((x - 30.0) ** 2) / (2.0 * 15.0 ** 2))
        lag, peak = argmax_smoothed(lowess_smooth(np.column_stack([x, y])))
        assert lag == 30.0
        assert 0.9 < peak <= 1.0
