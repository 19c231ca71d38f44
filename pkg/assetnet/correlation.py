"""
상관계수 계산 모듈.

- pearson / cross_correlation: 모집단(1/N) 모멘트를 쓰는 상관계수 커널
- abs_corr_coefficient: 시차 n = -1, 0, 1 에서의 |C(n)| 최댓값
- distance / to_distance_matrix: d = sqrt(2(1-rho)) 거리
- verify_metric_axioms: 거리행렬의 대칭성/삼각부등식 점검 보고서
"""
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import (
    InsufficientOverlapError,
    LengthMismatchError,
    MalformedInputError,
    MatrixTooSmallError,
    OutOfRangeError,
    TooFewSamplesError,
    ZeroVarianceError,
)
from .timeseries import DatedSeries, Panel

logger = logging.getLogger(__name__)

DEFAULT_MIN_OBS = 100
ABS_CORR_LAGS = (-1, 0, 1)
NEAR_ONE = 1.0 - 1e-12
TRIANGLE_TOL = 1e-9


# ─────────────────────────────────────────
# 커널
# ─────────────────────────────────────────
def _centered_unit(v: np.ndarray) -> Optional[np.ndarray]:
    """평균을 빼고 최대 절댓값이 1 이 되도록 맞춘 배열. 상수이면 None."""
    top = float(np.max(np.abs(v)))
    if top == 0.0:
        return None
    d = v / top
    d = d - d.mean()
    s = float(np.max(np.abs(d)))
    return d / s if s > 0.0 else None


def _corr(a: np.ndarray, b: np.ndarray) -> float:
    """두 배열의 피어슨 상관계수. 분산이 0 이면 NaN. [-1, 1] 로 잘라냅니다."""
    da = _centered_unit(a)
    db = _centered_unit(b)
    if da is None or db is None:
        return math.nan
    den = math.sqrt(float(da @ da) * float(db @ db))
    return float(np.clip(float(da @ db) / den, -1.0, 1.0))


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """공분산 / (sigma_x * sigma_y). 부동소수점 오차로 1을 넘는 값은 잘라냅니다."""
    a = np.asarray(x, dtype=float)
    b = np.asarray(y, dtype=float)
    if a.shape != b.shape:
        raise LengthMismatchError(f"길이가 다릅니다: {a.shape[0]} != {b.shape[0]}")
    if a.shape[0] < 2:
        raise TooFewSamplesError("상관계수를 계산하려면 관측치가 2개 이상 필요합니다.")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise MalformedInputError("상관계수 입력에 NaN 또는 무한대 값이 있습니다.")
    if np.ptp(a) == 0.0 or np.ptp(b) == 0.0:
        raise ZeroVarianceError("상수 시계열은 상관계수가 정의되지 않습니다.")
    return _corr(a, b)


@dataclass(frozen=True, eq=False)
class CrossCorrelation:
    """시차별 상관계수. values[i] 는 lags[i] 에서의 C(n), counts[i] 는 그때의 표본 수."""

    pair: Tuple[str, str]
    lags: np.ndarray
    values: np.ndarray
    counts: np.ndarray

    def at(self, lag: int) -> float:
        max_lag = int(self.lags[-1])
        if abs(lag) > max_lag:
            raise OutOfRangeError(f"시차 {lag} 는 범위 [-{max_lag}, {max_lag}] 밖입니다.")
        return float(self.values[lag + max_lag])

    @property
    def defined(self) -> np.ndarray:
        return np.isfinite(self.values)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"lag": self.lags, "value": self.values, "count": self.counts})


def overlap_arrays(x: DatedSeries, y: DatedSeries) -> Tuple[np.ndarray, np.ndarray]:
    """두 시계열이 모두 관측된 날짜만 골라 정렬된 배열 쌍으로 돌려줍니다."""
    common = x.values.index.intersection(y.values.index)
    return (
        x.values.loc[common].to_numpy(dtype=float),
        y.values.loc[common].to_numpy(dtype=float),
    )


def lagged_correlations(a: np.ndarray, b: np.ndarray, max_lag: int, global_moments: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """
    겹치는 관측치 인덱스 기준으로 (a_t, b_{t+n}) 상관계수를 n = -max_lag..max_lag 에 대해 계산합니다.

    기본은 각 시차의 겹치는 구간 평균/표준편차로 정규화(국소 표준화)하고,
    global_moments=True 이면 전체 겹침 구간의 평균/표준편차를 씁니다.
    """
    m = a.shape[0]
    lags = np.arange(-max_lag, max_lag + 1)
    values = np.full(lags.shape[0], np.nan)
    counts = np.maximum(m - np.abs(lags), 0)
    if global_moments:
        ua, ub = _centered_unit(a), _centered_unit(b)
        if ua is None or ub is None:
            return values, counts
        a, b = ua, ub
        scale = math.sqrt(float(a @ a) / m * float(b @ b) / m)
    for i, n in enumerate(lags):
        k = int(counts[i])
        if k < 2:
            continue
        ia, ib = max(-n, 0), max(n, 0)
        seg_a, seg_b = a[ia: ia + k], b[ib: ib + k]
        if not global_moments:
            values[i] = _corr(seg_a, seg_b)
        else:
            values[i] = float(np.clip(float(seg_a @ seg_b) / k / scale, -1.0, 1.0))
    return values, counts


def cross_correlation(
    x: DatedSeries,
    y: DatedSeries,
    max_lag: int,
    min_obs: int = DEFAULT_MIN_OBS,
    global_moments: bool = False,
) -> CrossCorrelation:
    """
    C(n) = corr(x_t, y_{t+n}), n in [-max_lag, max_lag].
    양수 n 에서 값이 크면 y 가 x 를 n 관측치만큼 뒤따른다는 뜻입니다.
    """
    if max_lag < 0:
        raise OutOfRangeError("max_lag 는 0 이상이어야 합니다.")
    a, b = overlap_arrays(x, y)
    return _cross_correlation_arrays((x.symbol, y.symbol), a, b, max_lag, min_obs, global_moments)


def _cross_correlation_arrays(pair, a, b, max_lag, min_obs, global_moments) -> CrossCorrelation:
    if a.shape[0] < max(min_obs, 2):
        raise InsufficientOverlapError(pair, int(a.shape[0]), max(min_obs, 2))
    if np.ptp(a) == 0.0 or np.ptp(b) == 0.0:
        raise ZeroVarianceError(f"{pair[0]}/{pair[1]}: 상수 시계열은 상관계수가 정의되지 않습니다.")
    values, counts = lagged_correlations(a, b, max_lag, global_moments)
    return CrossCorrelation(pair, np.arange(-max_lag, max_lag + 1), values, counts)


def strongest_lag(values: Sequence[float]) -> Optional[Tuple[float, int]]:
    """
    C(-1), C(0), C(+1) 중 절댓값이 가장 큰 (|C|, 시차). 모두 NaN 이면 None.
    동률이면 시차 0, 그다음 -1 을 고릅니다.
    """
    mags = np.abs(np.asarray(values, dtype=float))
    best = None
    for i in (1, 0, 2):
        if np.isfinite(mags[i]) and (best is None or mags[i] > mags[best]):
            best = i
    if best is None:
        return None
    return float(mags[best]), best - 1


def _abs_corr_arrays(pair, a, b, min_obs, global_moments) -> Tuple[float, int]:
    cc = _cross_correlation_arrays(pair, a, b, 1, min_obs, global_moments)
    found = strongest_lag(cc.values)
    if found is None:
        raise ZeroVarianceError(f"{pair[0]}/{pair[1]}: 시차 -1, 0, 1 모두 정의되지 않습니다.")
    return found


def abs_corr_coefficient(
    x: DatedSeries,
    y: DatedSeries,
    min_obs: int = DEFAULT_MIN_OBS,
    global_moments: bool = False,
) -> float:
    """max(|C(-1)|, |C(0)|, |C(+1)|). 비동기 거래에 따른 하루 시차와 부호를 흡수합니다."""
    a, b = overlap_arrays(x, y)
    value, _ = _abs_corr_arrays((x.symbol, y.symbol), a, b, min_obs, global_moments)
    return value


def distance(rho: float) -> float:
    """d = sqrt(2(1 - rho)), rho in [0, 1]."""
    if not (0.0 <= rho <= 1.0):
        raise OutOfRangeError(f"rho 는 [0, 1] 범위여야 합니다: {rho}")
    return math.sqrt(2.0 * (1.0 - rho))


# ─────────────────────────────────────────
# 행렬
# ─────────────────────────────────────────
def _check_square(symbols: Sequence[str], entries: np.ndarray) -> None:
    n = len(symbols)
    if entries.shape != (n, n):
        raise LengthMismatchError(f"행렬 크기 {entries.shape} 가 심볼 수 {n} 와 맞지 않습니다.")
    if len(set(symbols)) != n:
        raise LengthMismatchError("심볼이 중복되었습니다.")


@dataclass(frozen=True, eq=False)
class AbsCorrelationMatrix:
    symbols: Tuple[str, ...]
    entries: np.ndarray
    # 각 원소가 어느 시차(-1, 0, 1)에서 최대였는지
    argmax_lags: Optional[np.ndarray] = None

    def __post_init__(self):
        _check_square(self.symbols, self.entries)
        e = self.entries
        if not np.array_equal(e, e.T):
            raise OutOfRangeError("절대상관행렬은 대칭이어야 합니다.")
        if np.any(np.diag(e) != 1.0):
            raise OutOfRangeError("대각 원소는 1 이어야 합니다.")
        if np.any((e < 0.0) | (e > 1.0)):
            raise OutOfRangeError("원소는 [0, 1] 범위여야 합니다.")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.entries, index=list(self.symbols), columns=list(self.symbols))


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """
    거리행렬. 대칭성과 삼각부등식은 생성 시 강제하지 않고 verify_metric_axioms 로 보고합니다.
    warnings 에는 서로 다른 자산이 거리 ~0 으로 붙은 경우가 기록됩니다.
    """

    symbols: Tuple[str, ...]
    entries: np.ndarray
    warnings: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        _check_square(self.symbols, self.entries)
        e = self.entries
        if not np.all(np.isfinite(e)):
            raise OutOfRangeError("거리에 유한하지 않은 값이 있습니다.")
        if np.any(np.diag(e) != 0.0):
            raise OutOfRangeError("대각 원소는 0 이어야 합니다.")
        if np.any((e < 0.0) | (e > math.sqrt(2.0) + 1e-12)):
            raise OutOfRangeError("거리는 [0, sqrt(2)] 범위여야 합니다.")

    @property
    def n(self) -> int:
        return len(self.symbols)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.entries, index=list(self.symbols), columns=list(self.symbols))


def _pair_task(args):
    i, j, a, b, pair, min_obs, global_moments = args
    mask = ~(np.isnan(a) | np.isnan(b))
    return _abs_corr_arrays(pair, a[mask], b[mask], min_obs, global_moments)


def build_abs_corr_matrix(
    panel: Panel,
    min_obs: int = DEFAULT_MIN_OBS,
    global_moments: bool = False,
    workers: int = 1,
) -> AbsCorrelationMatrix:
    """
    수익률 패널에서 절대상관행렬을 만듭니다.
    - 쌍마다 두 자산이 모두 관측된 날짜만 사용 (pairwise-complete)
    - 순서 없는 쌍마다 한 번만 계산해 대칭을 보장
    - workers > 1 이면 스레드 풀로 계산하되 결과는 쌍 인덱스 순서로 조립
    """
    symbols = panel.symbols
    n = len(symbols)
    if n < 2:
        raise MatrixTooSmallError(f"자산이 2개 이상 필요합니다 (현재 {n}개).")
    values = panel.values
    pairs = list(itertools.combinations(range(n), 2))
    tasks = [
        (i, j, values[:, i], values[:, j], (symbols[i], symbols[j]), min_obs, global_moments)
        for i, j in pairs
    ]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_pair_task, tasks))
    else:
        results = [_pair_task(t) for t in tasks]

    entries = np.eye(n)
    lags = np.zeros((n, n), dtype=int)
    for (i, j), (rho, lag) in zip(pairs, results):
        entries[i, j] = entries[j, i] = rho
        lags[i, j], lags[j, i] = lag, -lag
    logger.info("절대상관행렬 계산 완료: 자산 %d개, 쌍 %d개", n, len(pairs))
    return AbsCorrelationMatrix(tuple(symbols), entries, lags)


def to_distance_matrix(m: AbsCorrelationMatrix) -> DistanceMatrix:
    """원소별 distance(). 서로 다른 자산의 rho 가 1 에 붙으면 경고를 남깁니다."""
    entries = np.sqrt(2.0 * (1.0 - m.entries))
    np.fill_diagonal(entries, 0.0)
    warnings: List[str] = []
    n = len(m.symbols)
    for i, j in itertools.combinations(range(n), 2):
        if m.entries[i, j] >= NEAR_ONE:
            msg = f"{m.symbols[i]}/{m.symbols[j]}: rho={m.entries[i, j]:.17g}, 서로 다른 자산의 거리가 0 에 가깝습니다."
            logger.warning(msg)
            warnings.append(msg)
    return DistanceMatrix(m.symbols, entries, tuple(warnings))


# ─────────────────────────────────────────
# 거리 공리 점검
# ─────────────────────────────────────────
@dataclass(frozen=True)
class AxiomReport:
    n_assets: int
    symmetry_violations: Tuple[Tuple[str, str], ...]
    zero_distance_pairs: Tuple[Tuple[str, str], ...]
    n_triples: int
    worst_triangle_slack: Optional[float]
    worst_triple: Optional[Tuple[str, str, str]]
    triangle_violations: Tuple[Tuple[str, str, str, float], ...]
    warnings: Tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.symmetry_violations and not self.triangle_violations

    def as_dict(self) -> dict:
        return {
            "n_assets": self.n_assets,
            "symmetry_violations": [list(p) for p in self.symmetry_violations],
            "zero_distance_pairs": [list(p) for p in self.zero_distance_pairs],
            "n_triples": self.n_triples,
            "worst_triangle_slack": self.worst_triangle_slack,
            "worst_triple": list(self.worst_triple) if self.worst_triple else None,
            "triangle_violations": [
                {"i": i, "j": j, "k": k, "slack": s} for i, j, k, s in self.triangle_violations
            ],
            "warnings": list(self.warnings),
            "ok": self.ok,
        }


def verify_metric_axioms(d: DistanceMatrix, tol: float = TRIANGLE_TOL) -> AxiomReport:
    """
    거리행렬이 거리 공리를 만족하는지 점검합니다. 실패는 예외가 아니라 보고서 데이터입니다.

    slack(i, j, k) = d_ik + d_kj - d_ij 이고, 모든 순서쌍 중 최솟값을 worst 로 보고합니다.
    """
    e = d.entries
    n = d.n
    sym = tuple(
        (d.symbols[i], d.symbols[j])
        for i, j in itertools.combinations(range(n), 2)
        if e[i, j] != e[j, i]
    )
    zeros = tuple(
        (d.symbols[i], d.symbols[j])
        for i, j in itertools.combinations(range(n), 2)
        if e[i, j] == 0.0 or e[j, i] == 0.0
    )
    if n < 3:
        return AxiomReport(n, sym, zeros, 0, None, None, (), d.warnings)

    worst, worst_triple = math.inf, None
    violations = []
    off_diag = ~np.eye(n, dtype=bool)
    for k in range(n):
        # slack[i, j] = d[i, k] + d[k, j] - d[i, j], i, j, k 서로 다름
        slack = e[:, k][:, None] + e[k, :][None, :] - e
        valid = off_diag.copy()
        valid[k, :] = False
        valid[:, k] = False
        masked = np.where(valid, slack, np.inf)
        i, j = np.unravel_index(int(np.argmin(masked)), masked.shape)
        if masked[i, j] < worst:
            worst, worst_triple = float(masked[i, j]), (d.symbols[i], d.symbols[j], d.symbols[k])
        for a, b in np.argwhere(valid & (slack < -tol)):
            violations.append((d.symbols[a], d.symbols[b], d.symbols[k], float(slack[a, b])))
    n_triples = n * (n - 1) * (n - 2) // 6
    return AxiomReport(n, sym, zeros, n_triples, worst, worst_triple, tuple(violations), d.warnings)
