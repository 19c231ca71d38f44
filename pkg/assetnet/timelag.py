"""
변동성 시차 추정.

- estimate_lag: 변동성 상호상관 C(n) 을 LOWESS 로 평활한 뒤 최대가 되는 시차 n
- lag_summary: 한 대상 자산과 참조 자산 묶음 사이 시차의 평균/표준편차
- granger_test: 이변량 Granger 인과 F 검정
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy import stats

from .correlation import DEFAULT_MIN_OBS, _cross_correlation_arrays, overlap_arrays
from .errors import (
    AllUndefinedError,
    AssetNetError,
    InsufficientOverlapError,
    OutOfRangeError,
    SingularDesignError,
)
from .lowess import LowessConfig, SmoothedCurve, argmax_smoothed, lowess_smooth
from .timeseries import DatedSeries

logger = logging.getLogger(__name__)

DEFAULT_MAX_LAG = 150
DEFAULT_GRANGER_ORDER = 5


# ─────────────────────────────────────────
# 시차 추정
# ─────────────────────────────────────────
@dataclass(frozen=True, eq=False)
class LagEstimate:
    """
    pair = (x, y) 이고 lag_days > 0 이면 y 의 변동성이 x 를 그만큼 뒤따릅니다.
    peak_value 는 평활값 최대, raw_peak_value 는 같은 시차의 원래 C(n) 입니다.
    """

    pair: Tuple[str, str]
    lag_days: int
    peak_value: float
    raw_peak_value: float
    max_lag: int
    lowess: LowessConfig
    n_overlap: int
    curve: SmoothedCurve

    @property
    def significance_threshold(self) -> float:
        return 2.0 / math.sqrt(self.n_overlap)

    @property
    def low_confidence(self) -> bool:
        return self.peak_value < self.significance_threshold

    @property
    def flag(self) -> str:
        return "low_confidence" if self.low_confidence else ""


def estimate_lag(
    x: DatedSeries,
    y: DatedSeries,
    max_lag: int = DEFAULT_MAX_LAG,
    config: LowessConfig = LowessConfig(),
    min_obs: int = DEFAULT_MIN_OBS,
    global_moments: bool = False,
) -> LagEstimate:
    if max_lag < 0:
        raise OutOfRangeError("max_lag 는 0 이상이어야 합니다.")
    pair = (x.symbol, y.symbol)
    a, b = overlap_arrays(x, y)
    required = min_obs + max_lag
    if a.shape[0] < required:
        raise InsufficientOverlapError(pair, int(a.shape[0]), required)

    cc = _cross_correlation_arrays(pair, a, b, max_lag, min_obs, global_moments)
    if not cc.defined.any():
        raise AllUndefinedError(f"{pair[0]}/{pair[1]}: 모든 시차에서 상관계수가 정의되지 않습니다.")
    curve = lowess_smooth(np.column_stack([cc.lags, cc.values]), config)
    lag, peak = argmax_smoothed(curve)
    lag = int(lag)
    est = LagEstimate(pair, lag, peak, cc.at(lag), max_lag, config, int(a.shape[0]), curve)
    logger.debug("%s -> %s: lag=%d peak=%.4f raw=%.4f", pair[0], pair[1], lag, peak, est.raw_peak_value)
    return est


@dataclass(frozen=True, eq=False)
class LagSummary:
    """
    양수 시차 = 대상(target)이 참조 자산들을 뒤따름.
    오류가 난 쌍은 버리지 않고 skipped 에 (참조 심볼, 사유) 로 남깁니다.
    """

    target: str
    reference_label: str
    estimates: Tuple[LagEstimate, ...]
    skipped: Tuple[Tuple[str, str], ...]

    @property
    def lags(self) -> np.ndarray:
        return np.array([e.lag_days for e in self.estimates], dtype=float)

    @property
    def mean_lag(self) -> float:
        return float(np.mean(self.lags)) if self.estimates else math.nan

    @property
    def std_lag(self) -> float:
        # 모표준편차 (ddof=0)
        return float(np.std(self.lags)) if self.estimates else math.nan


def lag_summary(
    target: DatedSeries,
    references: Sequence[DatedSeries],
    max_lag: int = DEFAULT_MAX_LAG,
    config: LowessConfig = LowessConfig(),
    min_obs: int = DEFAULT_MIN_OBS,
    global_moments: bool = False,
    include_self: bool = False,
    label: str = "references",
    workers: int = 1,
) -> LagSummary:
    refs = [r for r in references if include_self or r.symbol != target.symbol]

    def run(ref: DatedSeries):
        try:
            return estimate_lag(ref, target, max_lag, config, min_obs, global_moments)
        except AssetNetError as e:
            return e

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, refs))
    else:
        results = [run(r) for r in refs]

    estimates: List[LagEstimate] = []
    skipped: List[Tuple[str, str]] = []
    for ref, res in zip(refs, results):
        if isinstance(res, AssetNetError):
            logger.warning("%s / %s 건너뜀: %s", target.symbol, ref.symbol, res)
            skipped.append((ref.symbol, str(res)))
        else:
            estimates.append(res)
    return LagSummary(target.symbol, label, tuple(estimates), tuple(skipped))


# ─────────────────────────────────────────
# Granger 인과 검정
# ─────────────────────────────────────────
@dataclass(frozen=True)
class GrangerResult:
    pair: Tuple[str, str]
    order: int
    f_statistic: float
    p_value: float
    n_obs: int
    df_denom: int

    @property
    def direction(self) -> str:
        return f"{self.pair[0]}->{self.pair[1]}"


def _lag_columns(v: np.ndarray, p: int) -> np.ndarray:
    m = v.shape[0]
    return np.column_stack([v[p - j: m - j] for j in range(1, p + 1)])


def _rss(design: np.ndarray, target: np.ndarray) -> float:
    beta, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < design.shape[1]:
        raise SingularDesignError(f"설계행렬의 계수가 부족합니다 (rank {rank} < {design.shape[1]}).")
    resid = target - design @ beta
    return float(resid @ resid)


def granger_test(x: DatedSeries, y: DatedSeries, order: int = DEFAULT_GRANGER_ORDER) -> GrangerResult:
    """
    x 의 과거가 y 예측에 도움이 되는지 검정합니다 (x -> y).
    제한 모형: 상수 + y 의 p 개 시차, 비제한 모형: 여기에 x 의 p 개 시차를 추가.
    """
    if order < 1:
        raise OutOfRangeError("order 는 1 이상이어야 합니다.")
    pair = (x.symbol, y.symbol)
    a, b = overlap_arrays(x, y)
    m = a.shape[0]
    if m < 10 * order:
        raise InsufficientOverlapError(pair, m, 10 * order)

    p = order
    target = b[p:]
    n = target.shape[0]
    const = np.ones((n, 1))
    own = _lag_columns(b, p)
    other = _lag_columns(a, p)
    rss_r = _rss(np.hstack([const, own]), target)
    rss_u = _rss(np.hstack([const, own, other]), target)

    df_denom = n - 2 * p - 1
    if rss_u == 0.0:
        raise SingularDesignError(f"{pair[0]}/{pair[1]}: 비제한 모형의 잔차가 0 입니다.")
    f_stat = max(0.0, ((rss_r - rss_u) / p) / (rss_u / df_denom))
    p_value = float(stats.f.sf(f_stat, p, df_denom))
    return GrangerResult(pair, p, f_stat, p_value, n, df_denom)
