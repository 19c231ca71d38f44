"""
합성 데이터 생성기.

실제 시장 데이터 없이 파이프라인을 돌려볼 수 있도록, 정답(군집 구조, 주입한 시차, 인과 방향)을
알고 있는 가격/변동성 시계열을 만듭니다. 테스트와 `assetnet synth` 에서 씁니다.
"""
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .timeseries import AssetClass, AssetMeta

DEFAULT_START = "2007-01-02"
CLASS_PREFIX = {AssetClass.STOCK: "S", AssetClass.CURRENCY: "C", AssetClass.COMMODITY: "M"}


def _rng(rng: Optional[np.random.Generator]) -> np.random.Generator:
    return rng if rng is not None else np.random.default_rng()


def trading_days(n: int, start: str = DEFAULT_START) -> pd.DatetimeIndex:
    return pd.bdate_range(start, periods=n, name="date")


# ─────────────────────────────────────────
# 수익률 / 가격
# ─────────────────────────────────────────
def block_correlated_returns(
    n_obs: int,
    class_sizes: Sequence[int],
    intra: float = 0.6,
    inter: float = 0.1,
    scale: float = 0.01,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """같은 블록 안 상관계수 intra, 블록 사이 inter 인 정규 수익률 (n_obs, 자산 수)."""
    labels = np.repeat(np.arange(len(class_sizes)), class_sizes)
    corr = np.where(labels[:, None] == labels[None, :], intra, inter)
    np.fill_diagonal(corr, 1.0)
    chol = np.linalg.cholesky(corr)
    z = _rng(rng).standard_normal((n_obs, labels.shape[0]))
    return scale * z @ chol.T


def prices_from_returns(
    returns: np.ndarray,
    symbols: Sequence[str],
    start_price: float = 100.0,
    start: str = DEFAULT_START,
) -> pd.DataFrame:
    """로그수익률을 누적해 가격 테이블(첫 행 = start_price)을 만듭니다."""
    returns = np.asarray(returns, dtype=float).reshape(returns.shape[0], -1)
    logs = np.vstack([np.zeros((1, returns.shape[1])), np.cumsum(returns, axis=0)])
    return pd.DataFrame(start_price * np.exp(logs), index=trading_days(logs.shape[0], start), columns=list(symbols))


def class_symbols(class_sizes: Sequence[int], classes: Sequence[AssetClass]) -> List[AssetMeta]:
    meta = []
    for size, cls in zip(class_sizes, classes):
        for k in range(1, size + 1):
            meta.append(AssetMeta(f"{CLASS_PREFIX[cls]}{k:02d}", cls, f"synthetic {cls.value} {k}"))
    return meta


def synthetic_market(
    n_days: int = 1250,
    class_sizes: Sequence[int] = (28, 21, 20),
    intra: float = 0.6,
    inter: float = 0.1,
    seed: Optional[int] = None,
) -> Tuple[pd.DataFrame, List[AssetMeta]]:
    """주가지수/통화/상품 3개 블록으로 된 가격 패널과 메타데이터. 기본값은 69개 자산."""
    classes = (AssetClass.STOCK, AssetClass.CURRENCY, AssetClass.COMMODITY)[: len(class_sizes)]
    rng = np.random.default_rng(seed)
    meta = class_symbols(class_sizes, classes)
    returns = block_correlated_returns(n_days - 1, class_sizes, intra, inter, rng=rng)
    return prices_from_returns(returns, [m.symbol for m in meta]), meta


# ─────────────────────────────────────────
# 변동성
# ─────────────────────────────────────────
def _ar1_lognormal(n: int, phi: float, rng: np.random.Generator) -> np.ndarray:
    """exp(0.5 u), u 는 정상 상태에서 시작하는 AR(1)."""
    u = np.empty(n)
    u[0] = rng.standard_normal() / np.sqrt(1.0 - phi * phi)
    e = rng.standard_normal(n)
    for t in range(1, n):
        u[t] = phi * u[t - 1] + e[t]
    return np.exp(0.5 * u)


def _noise(n: int, noise_scale: float, rng: np.random.Generator) -> np.ndarray:
    return noise_scale * np.exp(0.5 * rng.standard_normal(n))


def coupled_volatility_pair(
    n_obs: int,
    lag: int,
    coupling: float = 1.0,
    noise_scale: float = 4.0,
    phi: float = 0.8,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    y_t = coupling * x_{t-lag} + 잡음 인 변동성 쌍 (x, y). lag > 0 이면 y 가 x 를 뒤따릅니다.
    기본값에서 원래 상관 최대는 약 0.5, 평활 후 약 0.3 입니다.
    """
    rng = _rng(rng)
    shift = abs(lag)
    full = _ar1_lognormal(n_obs + shift, phi, rng)
    leader = full[shift:]
    follower = coupling * full[:n_obs] + _noise(n_obs, noise_scale, rng)
    return (leader, follower) if lag >= 0 else (follower, leader)


def lagged_family(
    n_obs: int,
    lags: Sequence[int],
    noise_scale: float = 4.0,
    phi: float = 0.8,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[np.ndarray, List[np.ndarray]]:
    """
    대상 변동성 하나와, 대상보다 lags[i] 만큼 앞서는 참조 변동성들.
    (참조_i 의 t 시점 값 = 대상의 t + lags[i] 시점 값 + 잡음)
    """
    rng = _rng(rng)
    lags = [int(v) for v in lags]
    if any(v < 0 for v in lags):
        raise ValueError("lags 는 0 이상이어야 합니다.")
    full = _ar1_lognormal(n_obs + max(lags, default=0), phi, rng)
    target = full[:n_obs]
    refs = [full[lag: lag + n_obs] + _noise(n_obs, noise_scale, rng) for lag in lags]
    return target, refs


def white_volatility(n_obs: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    return np.abs(_rng(rng).standard_normal(n_obs))


def returns_with_volatility(vol: np.ndarray, scale: float = 0.01, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """|r_t| = scale * vol_t 가 되도록 무작위 부호를 붙인 수익률."""
    signs = _rng(rng).choice([-1.0, 1.0], size=np.shape(vol))
    return scale * signs * np.asarray(vol, dtype=float)


def lagged_market(
    n_days: int = 1250,
    n_references: int = 28,
    lag: int = 30,
    jitter: int = 0,
    noise_scale: float = 4.0,
    seed: Optional[int] = None,
) -> Tuple[pd.DataFrame, List[AssetMeta]]:
    """
    주가지수 n_references 개와, 그 변동성을 약 lag 일 뒤따르는 상품 TGT 하나로 된 가격 패널.
    jitter > 0 이면 참조마다 시차를 lag ± jitter 안에서 고릅니다.
    """
    rng = np.random.default_rng(seed)
    lags = lag + rng.integers(-jitter, jitter + 1, size=n_references) if jitter else np.full(n_references, lag)
    target, refs = lagged_family(n_days - 1, lags, noise_scale, rng=rng)
    meta = class_symbols((n_references,), (AssetClass.STOCK,))
    meta.append(AssetMeta("TGT", AssetClass.COMMODITY, "synthetic lagging commodity"))
    vols = np.column_stack(refs + [target])
    return prices_from_returns(returns_with_volatility(vols, rng=rng), [m.symbol for m in meta]), meta


def granger_pair(
    n_obs: int,
    strength: float = 0.8,
    noise: float = 0.1,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """y_t = strength * x_{t-1} + noise * e_t. strength = 0 이면 서로 독립."""
    rng = _rng(rng)
    x = rng.standard_normal(n_obs)
    y = noise * rng.standard_normal(n_obs)
    y[1:] += strength * x[:-1]
    return x, y


# ─────────────────────────────────────────
# 파일 형식
# ─────────────────────────────────────────
def prices_csv(prices: pd.DataFrame) -> str:
    df = prices.copy()
    df.index = df.index.strftime("%Y-%m-%d")
    df.index.name = "date"
    return df.to_csv(float_format="%.17g", na_rep="", lineterminator="\n")


def meta_csv(meta: Sequence[AssetMeta]) -> str:
    df = pd.DataFrame(
        [{"symbol": m.symbol, "class": m.asset_class.value, "description": m.description} for m in meta],
        columns=["symbol", "class", "description"],
    )
    return df.to_csv(index=False, lineterminator="\n")
