import numpy as np
import pandas as pd
import pytest

from assetnet.synthetic import meta_csv, prices_csv, synthetic_market
from assetnet.timeseries import make_series


@pytest.fixture
def rng():
    return np.random.default_rng(20111231)


@pytest.fixture
def series():
    """series(symbol, values, kind="volatility", start=...) 로 영업일 날짜가 붙은 시계열을 만듭니다."""

    def _make(symbol, values, kind="volatility", start="2007-01-02"):
        values = np.asarray(values, dtype=float)
        return make_series(symbol, pd.bdate_range(start, periods=values.shape[0]), values, kind)

    return _make


@pytest.fixture
def market_files(tmp_path):
    """작은 3-유형 합성 시장을 prices.csv / meta.csv 로 써 두고 경로를 돌려줍니다."""
    prices, meta = synthetic_market(n_days=1100, class_sizes=(4, 3, 3), seed=7)
    p = tmp_path / "prices.csv"
    m = tmp_path / "meta.csv"
    p.write_text(prices_csv(prices))
    m.write_text(meta_csv(meta))
    return p, m
