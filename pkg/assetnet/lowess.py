"""
LOWESS (locally weighted scatterplot smoothing) - 국소 1차 회귀 평활기.

각 점에서 가까운 이웃들로 삼중세제곱(tricube) 가중 선형회귀를 하고 그 점에서의 적합값을 씁니다.
- k-최근접 모드(기본): 자기 자신을 포함한 neighbors 개 이웃, h = 가장 먼 이웃까지의 거리
- 고정 창 모드: window 를 x 단위 창 폭으로 보고 h = window / 2
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import AllUndefinedError, DegenerateNeighborhoodError, OutOfRangeError, TooFewPointsError


@dataclass(frozen=True)
class LowessConfig:
    neighbors: int = 10
    degree: int = 1
    robustness_iterations: int = 0
    window: Optional[int] = None

    def __post_init__(self):
        if self.degree != 1:
            raise OutOfRangeError("degree 는 1(국소 선형)만 지원합니다.")
        if self.neighbors < self.degree + 2:
            raise OutOfRangeError(f"neighbors 는 {self.degree + 2} 이상이어야 합니다.")
        if self.robustness_iterations < 0:
            raise OutOfRangeError("robustness_iterations 는 0 이상이어야 합니다.")
        if self.window is not None and self.window <= 0:
            raise OutOfRangeError("window 는 양수여야 합니다.")

    @property
    def mode(self) -> str:
        return "window" if self.window is not None else "knn"


@dataclass(frozen=True, eq=False)
class SmoothedCurve:
    xs: np.ndarray
    raw: np.ndarray
    smoothed: np.ndarray

    def __len__(self) -> int:
        return len(self.xs)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"lag": self.xs, "raw": self.raw, "smoothed": self.smoothed})


def _bandwidths(dist: np.ndarray, config: LowessConfig) -> np.ndarray:
    n = dist.shape[0]
    if config.window is not None:
        return np.full(n, config.window / 2.0)
    k = config.neighbors
    # x 오름차순 배열에서 stable 정렬이므로 같은 거리면 x 가 작은 점이 먼저 뽑힘
    order = np.argsort(dist, axis=1, kind="stable")[:, :k]
    return dist[np.arange(n), order[:, k - 1]]


def _local_fit(x: np.ndarray, y: np.ndarray, w: np.ndarray, h: np.ndarray) -> np.ndarray:
    """점 i 를 원점으로 옮긴 가중 선형회귀의 절편. 가중 분산이 0 이면 가중평균."""
    dx = x[None, :] - x[:, None]
    sw = w.sum(axis=1)
    sx = (w * dx).sum(axis=1)
    sxx = (w * dx * dx).sum(axis=1)
    sy = w @ y
    sxy = (w * dx) @ y
    det = sw * sxx - sx * sx
    flat = det <= (1e-10 * h) ** 2 * sw * sw
    with np.errstate(divide="ignore", invalid="ignore"):
        fit = np.where(flat, sy / sw, (sxx * sy - sx * sxy) / np.where(flat, 1.0, det))
    fit[sw == 0.0] = np.nan
    return fit


def lowess_smooth(points: Sequence[Tuple[float, float]], config: LowessConfig = LowessConfig()) -> SmoothedCurve:
    """
    (x, y) 점들을 LOWESS 로 평활합니다. 입력은 x 기준으로 정렬한 뒤 처리하며,
    y 가 NaN 인 점은 적합에서 빠지고 결과도 NaN 입니다.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    order = np.argsort(pts[:, 0], kind="stable")
    xs, raw = pts[order, 0], pts[order, 1]
    if np.any(np.diff(xs) == 0.0):
        raise DegenerateNeighborhoodError("x 값이 중복되었습니다.")

    ok = np.isfinite(raw)
    x, y = xs[ok], raw[ok]
    need = config.neighbors if config.window is None else config.degree + 2
    if x.shape[0] < need:
        raise TooFewPointsError(f"점이 {x.shape[0]}개뿐입니다 (최소 {need}개 필요).")

    dist = np.abs(x[None, :] - x[:, None])
    h = _bandwidths(dist, config)
    if np.any(h == 0.0):
        raise DegenerateNeighborhoodError("이웃의 x 값이 모두 같습니다.")
    u = np.clip(dist / h[:, None], 0.0, 1.0)
    w = (1.0 - u ** 3) ** 3

    fit = _local_fit(x, y, w, h)
    for _ in range(config.robustness_iterations):
        resid = y - fit
        s = float(np.median(np.abs(resid)))
        if s == 0.0:
            break
        r = np.clip(resid / (6.0 * s), -1.0, 1.0)
        delta = (1.0 - r ** 2) ** 2
        fit = _local_fit(x, y, w * delta[None, :], h)

    smoothed = np.full(xs.shape[0], np.nan)
    smoothed[ok] = fit
    return SmoothedCurve(xs, raw, smoothed)


def argmax_smoothed(curve: SmoothedCurve) -> Tuple[float, float]:
    """평활값이 최대인 x. 동률이면 |x| 가 작은 쪽, 그다음 음수 x 를 고릅니다."""
    finite = np.isfinite(curve.smoothed)
    if curve.smoothed.size == 0 or not finite.any():
        raise AllUndefinedError("평활값이 모두 정의되지 않았습니다.")
    best = np.max(curve.smoothed[finite])
    ties = curve.xs[finite & (curve.smoothed == best)]
    x = min(ties, key=lambda v: (abs(v), v))
    return float(x), float(best)
