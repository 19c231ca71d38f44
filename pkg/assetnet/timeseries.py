import io
import logging
import re
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .errors import (
    DuplicateDateError,
    DuplicateSymbolError,
    EmptyPanelError,
    EmptySeriesError,
    KindMismatchError,
    MalformedInputError,
    NonPositivePriceError,
    SeriesTooShortError,
    UnknownSymbolError,
)

logger = logging.getLogger(__name__)

Source = Union[bytes, str, IO]

DATE_FORMAT = "%Y-%m-%d"


# ─────────────────────────────────────────
# 자산 메타데이터
# ─────────────────────────────────────────
class AssetClass(str, Enum):
    """자산 유형. 값은 메타데이터 CSV 의 class 컬럼 표기와 같습니다."""

    STOCK = "stock"
    CURRENCY = "currency"
    COMMODITY = "commodity"

    @classmethod
    def parse(cls, text: str) -> "AssetClass":
        key = (text or "").strip().lower().replace("_", "").replace(" ", "")
        aliases = {
            "stock": cls.STOCK, "stockindex": cls.STOCK, "index": cls.STOCK,
            "currency": cls.CURRENCY, "currencyfuture": cls.CURRENCY,
            "commodity": cls.COMMODITY, "commodityfuture": cls.COMMODITY,
        }
        if key not in aliases:
            raise ValueError(f"알 수 없는 자산 유형: {text!r}")
        return aliases[key]


@dataclass(frozen=True)
class AssetMeta:
    symbol: str
    asset_class: AssetClass
    description: str = ""

    def __post_init__(self):
        if not self.symbol or not self.symbol.strip():
            raise MalformedInputError("symbol 이 비어 있습니다.")


# ─────────────────────────────────────────
# 날짜가 붙은 시계열
# ─────────────────────────────────────────
@dataclass(frozen=True, eq=False)
class DatedSeries:
    """심볼 하나의 날짜별 값. values 는 DatetimeIndex(일 단위)를 가진 float Series 입니다."""

    symbol: str
    values: pd.Series

    kind = "series"

    def __post_init__(self):
        s = self.values
        if not isinstance(s.index, pd.DatetimeIndex):
            raise MalformedInputError(f"{self.symbol}: 날짜 인덱스가 필요합니다.")
        if len(s) and not (s.index.is_monotonic_increasing and s.index.is_unique):
            raise DuplicateDateError(f"{self.symbol}: 날짜가 순증가하지 않습니다.")
        if not np.all(np.isfinite(s.to_numpy(dtype=float))):
            raise MalformedInputError(f"{self.symbol}: 유한하지 않은 값이 있습니다.")
        self._check_values()

    def _check_values(self) -> None:
        pass

    def __len__(self) -> int:
        return len(self.values)

    @property
    def dates(self) -> pd.DatetimeIndex:
        return self.values.index

    def to_numpy(self) -> np.ndarray:
        return self.values.to_numpy(dtype=float)


@dataclass(frozen=True, eq=False)
class PriceSeries(DatedSeries):
    kind = "price"

    def _check_values(self) -> None:
        if len(self.values) == 0:
            raise EmptySeriesError(f"{self.symbol}: 가격 관측치가 없습니다.")
        if len(self.values) < 2:
            raise SeriesTooShortError(f"{self.symbol}: 가격 관측치가 2개 미만입니다.")
        if (self.values <= 0).any():
            bad = self.values[self.values <= 0].index[0]
            raise NonPositivePriceError(f"{self.symbol}: {bad:%Y-%m-%d} 가격이 0 이하입니다.")

    @property
    def prices(self) -> pd.Series:
        return self.values


@dataclass(frozen=True, eq=False)
class ReturnSeries(DatedSeries):
    kind = "return"


@dataclass(frozen=True, eq=False)
class VolatilitySeries(DatedSeries):
    kind = "volatility"

    def _check_values(self) -> None:
        if (self.values < 0).any():
            raise MalformedInputError(f"{self.symbol}: 변동성은 음수일 수 없습니다.")


SERIES_TYPES = {cls.kind: cls for cls in (PriceSeries, ReturnSeries, VolatilitySeries)}


def make_series(symbol: str, dates: Iterable, values: Iterable[float], kind: str = "price") -> DatedSeries:
    """날짜/값 목록으로 지정한 종류의 시계열을 만듭니다. 테스트와 합성 데이터 생성에 씁니다."""
    index = pd.DatetimeIndex(pd.to_datetime(list(dates)), name="date")
    return SERIES_TYPES[kind](symbol, pd.Series(np.asarray(list(values), dtype=float), index=index, name=symbol))


# ─────────────────────────────────────────
# 입력 파싱
# ─────────────────────────────────────────
def _read_raw(source: Source) -> pd.DataFrame:
    if isinstance(source, bytes):
        source = io.BytesIO(source)
    try:
        return pd.read_csv(
            source, header=None, dtype=str, keep_default_na=False,
            skip_blank_lines=False, skipinitialspace=True,
        )
    except pd.errors.EmptyDataError:
        raise MalformedInputError("입력이 비어 있습니다.", line=1)
    except pd.errors.ParserError as e:
        # pandas 메시지의 "line N" 은 1 부터 센 파일 행 번호
        found = re.search(r"line (\d+)", str(e))
        raise MalformedInputError(f"CSV 파싱 실패: {e}", line=int(found.group(1)) if found else None)


def _first(mask: pd.Series) -> int:
    return int(np.flatnonzero(mask.to_numpy())[0])


def _parse_dates(col: pd.Series, lines: np.ndarray) -> pd.Series:
    """ISO-8601 날짜 컬럼을 파싱합니다. lines 는 각 행의 파일 행 번호입니다."""
    text = col.fillna("").astype(str).str.strip()
    parsed = pd.to_datetime(text, format=DATE_FORMAT, errors="coerce")
    if parsed.isna().any():
        pos = _first(parsed.isna())
        raise MalformedInputError(f"날짜를 해석할 수 없습니다: {text.iloc[pos]!r}", line=int(lines[pos]))
    return parsed


def _parse_prices_column(col: pd.Series, symbol: str, lines: np.ndarray) -> pd.Series:
    """가격 문자열 컬럼을 float 로 바꿉니다. 빈 칸은 결측(NaN)으로 둡니다."""
    text = col.fillna("").astype(str).str.strip()
    empty = text == ""
    numeric = pd.to_numeric(text.where(~empty), errors="coerce")
    bad = (~empty) & (numeric.isna() | ~np.isfinite(numeric.fillna(0.0)))
    if bad.any():
        pos = _first(bad)
        raise MalformedInputError(f"{symbol}: 숫자가 아닌 가격 {text.iloc[pos]!r}", line=int(lines[pos]))
    nonpos = (~empty) & (numeric <= 0)
    if nonpos.any():
        pos = _first(nonpos)
        raise NonPositivePriceError(f"{symbol}: 0 이하 가격 {text.iloc[pos]!r}", line=int(lines[pos]))
    return numeric


def _drop_blank_rows(raw: pd.DataFrame) -> pd.DataFrame:
    blank = raw.apply(lambda r: all((str(v).strip() == "" or v != v) for v in r), axis=1)
    return raw[~blank]


def _reject_short_rows(body: pd.DataFrame, width: int) -> None:
    """필드 수가 헤더보다 적은 행을 거부합니다. 빈 칸은 "" 이고 아예 없는 필드만 NaN 입니다."""
    short = body.iloc[:, :width].isna().any(axis=1)
    if short.any():
        line = int(body.index[_first(short)])
        raise MalformedInputError(f"필드 수가 헤더({width}개)보다 적습니다.", line=line)


def _first_duplicate(dates: pd.Series) -> Optional[int]:
    dup = dates.duplicated().to_numpy()
    return int(np.flatnonzero(dup)[0]) if dup.any() else None


def parse_prices(source: Source, fmt: str = "wide") -> List[PriceSeries]:
    """
    가격 CSV 를 자산별 PriceSeries 목록으로 변환합니다.

    - wide: 헤더 `date,SYM1,SYM2,...`, 빈 칸은 해당 날짜 관측치 없음
    - long: 헤더 `date,symbol,price` (자산별 행)

    행 번호는 헤더를 1행으로 센 파일 기준 번호입니다.
    """
    raw = _read_raw(source)
    header = [str(h).strip() for h in raw.iloc[0].tolist()]
    body = raw.iloc[1:].copy()
    # 파일 행 번호 = DataFrame 인덱스 + 1
    body.index = body.index + 1
    body = _drop_blank_rows(body)
    if body.empty:
        raise EmptySeriesError("가격 데이터 행이 없습니다.")
    _reject_short_rows(body, len(header))

    if fmt == "wide":
        return _parse_wide(header, body)
    if fmt == "long":
        return _parse_long(header, body)
    raise MalformedInputError(f"지원하지 않는 가격 파일 형식: {fmt}")


def _parse_wide(header: List[str], body: pd.DataFrame) -> List[PriceSeries]:
    if not header or header[0].lower() != "date":
        raise MalformedInputError("첫 컬럼은 date 여야 합니다.", line=1)
    symbols = header[1:]
    if not symbols:
        raise MalformedInputError("자산 컬럼이 없습니다.", line=1)
    if any(not s for s in symbols):
        raise MalformedInputError("비어 있는 심볼 컬럼이 있습니다.", line=1)
    if len(set(symbols)) != len(symbols):
        raise MalformedInputError("중복된 심볼 컬럼이 있습니다.", line=1)

    lines = body.index.to_numpy()
    body = body.reset_index(drop=True)
    dates = _parse_dates(body.iloc[:, 0], lines)
    dup = _first_duplicate(dates)
    if dup is not None:
        raise DuplicateDateError(f"중복 날짜 {dates.iloc[dup]:%Y-%m-%d}", line=int(lines[dup]))

    out: List[PriceSeries] = []
    for j, symbol in enumerate(symbols, start=1):
        col = body.iloc[:, j] if j < body.shape[1] else pd.Series([""] * len(body))
        values = _parse_prices_column(col, symbol, lines)
        s = pd.Series(values.to_numpy(dtype=float), index=pd.DatetimeIndex(dates, name="date"), name=symbol)
        s = s.dropna().sort_index()
        if s.empty:
            raise EmptySeriesError(f"{symbol}: 가격 관측치가 없습니다.")
        out.append(PriceSeries(symbol, s))
    logger.debug("wide CSV: 자산 %d개, 행 %d개", len(out), len(body))
    return out


def _parse_long(header: List[str], body: pd.DataFrame) -> List[PriceSeries]:
    if [h.lower() for h in header[:3]] != ["date", "symbol", "price"]:
        raise MalformedInputError("헤더는 date,symbol,price 여야 합니다.", line=1)
    lines = body.index.to_numpy()
    frame = body.iloc[:, :3].reset_index(drop=True)
    frame.columns = ["date", "symbol", "price"]
    dates = _parse_dates(frame["date"], lines)
    symbols = frame["symbol"].fillna("").astype(str).str.strip()
    if (symbols == "").any():
        raise MalformedInputError("symbol 이 비어 있습니다.", line=int(lines[_first(symbols == "")]))

    out: List[PriceSeries] = []
    for symbol in dict.fromkeys(symbols):
        mask = (symbols == symbol).to_numpy()
        sub_lines = lines[mask]
        sub_dates = dates[mask].reset_index(drop=True)
        dup = _first_duplicate(sub_dates)
        if dup is not None:
            raise DuplicateDateError(f"{symbol}: 중복 날짜 {sub_dates.iloc[dup]:%Y-%m-%d}", line=int(sub_lines[dup]))
        values = _parse_prices_column(frame["price"][mask].reset_index(drop=True), symbol, sub_lines)
        s = pd.Series(values.to_numpy(dtype=float), index=pd.DatetimeIndex(sub_dates, name="date"), name=symbol)
        s = s.dropna().sort_index()
        if s.empty:
            raise EmptySeriesError(f"{symbol}: 가격 관측치가 없습니다.")
        out.append(PriceSeries(symbol, s))
    return out


def parse_meta(source: Source) -> List[AssetMeta]:
    """메타데이터 CSV(`symbol,class,description`)를 읽습니다. class 는 대소문자를 구분하지 않습니다."""
    raw = _read_raw(source)
    header = [str(h).strip().lower() for h in raw.iloc[0].tolist()]
    if header[:2] != ["symbol", "class"]:
        raise MalformedInputError("헤더는 symbol,class,description 이어야 합니다.", line=1)
    body = raw.iloc[1:].copy()
    body.index = body.index + 1
    body = _drop_blank_rows(body)

    metas: List[AssetMeta] = []
    seen = set()
    for line, row in body.iterrows():
        symbol = str(row.iloc[0]).strip()
        description = str(row.iloc[2]).strip() if len(row) > 2 and row.iloc[2] == row.iloc[2] else ""
        if not symbol:
            raise MalformedInputError("symbol 이 비어 있습니다.", line=int(line))
        if symbol in seen:
            raise DuplicateSymbolError(f"{int(line)}행: 중복 심볼 {symbol}")
        try:
            asset_class = AssetClass.parse(str(row.iloc[1]))
        except ValueError as e:
            raise MalformedInputError(str(e), line=int(line))
        seen.add(symbol)
        metas.append(AssetMeta(symbol, asset_class, description))
    return metas


# ─────────────────────────────────────────
# 수익률 / 변동성
# ─────────────────────────────────────────
def compute_returns(p: PriceSeries) -> ReturnSeries:
    """로그 가격의 연속 관측치 간 차이. 값은 뒤쪽 관측일에 붙습니다 (주말/휴일 간격은 무시)."""
    if len(p) < 2:
        raise SeriesTooShortError(f"{p.symbol}: 수익률을 계산하려면 가격이 2개 이상 필요합니다.")
    logs = np.log(p.to_numpy())
    r = np.diff(logs)
    return ReturnSeries(p.symbol, pd.Series(r, index=p.dates[1:], name=p.symbol))


def compute_volatility(r: ReturnSeries) -> VolatilitySeries:
    return VolatilitySeries(r.symbol, r.values.abs())


# ─────────────────────────────────────────
# 패널
# ─────────────────────────────────────────
@dataclass(frozen=True, eq=False)
class Panel:
    """
    공통 날짜축에 정렬된 시계열 묶음.
    frame 은 axis 를 인덱스로, 심볼을 컬럼으로 가지며 결측은 NaN 으로 명시합니다.
    """

    axis: pd.DatetimeIndex
    meta: Tuple[AssetMeta, ...]
    frame: pd.DataFrame
    kind: str

    def __post_init__(self):
        if not (self.axis.is_monotonic_increasing and self.axis.is_unique):
            raise DuplicateDateError("패널 날짜축이 순증가하지 않습니다.")
        if len(self.frame) != len(self.axis):
            raise MalformedInputError("컬럼 길이가 날짜축과 다릅니다.")
        values = self.frame.to_numpy(dtype=float)
        if np.isinf(values).any():
            raise MalformedInputError("패널에 유한하지 않은 값이 있습니다.")

    @property
    def symbols(self) -> List[str]:
        return list(self.frame.columns)

    @property
    def values(self) -> np.ndarray:
        return self.frame.to_numpy(dtype=float)

    @property
    def missing(self) -> pd.DataFrame:
        return self.frame.isna()

    def column(self, symbol: str) -> DatedSeries:
        if symbol not in self.frame.columns:
            raise UnknownSymbolError(f"패널에 없는 심볼: {symbol}")
        return SERIES_TYPES[self.kind](symbol, self.frame[symbol].dropna())

    def window(self, start=None, end=None) -> "Panel":
        """[start, end] (양끝 포함) 구간으로 자른 패널. 전부 결측인 날짜는 축에서 뺍니다."""
        frame = self.frame
        if start is not None:
            frame = frame[frame.index >= pd.Timestamp(start)]
        if end is not None:
            frame = frame[frame.index <= pd.Timestamp(end)]
        frame = frame.dropna(how="all")
        return Panel(frame.index, self.meta, frame, self.kind)


def build_panel(series: Sequence[DatedSeries], meta: Optional[Sequence[AssetMeta]]) -> Panel:
    """
    같은 종류의 시계열들을 날짜 합집합 축으로 정렬합니다.
    입력 순서와 무관하도록 컬럼은 심볼 순으로 정렬합니다. 결측은 채우지 않습니다.
    meta=None 이면 메타데이터 없이 만듭니다 (returns, granger 용).
    """
    if not series:
        raise EmptyPanelError("패널을 만들 시계열이 없습니다.")
    kinds = {s.kind for s in series}
    if len(kinds) != 1:
        raise KindMismatchError(f"서로 다른 종류의 시계열이 섞여 있습니다: {sorted(kinds)}")
    symbols = [s.symbol for s in series]
    if len(set(symbols)) != len(symbols):
        raise DuplicateSymbolError("같은 심볼의 시계열이 두 번 이상 있습니다.")
    meta_index = {m.symbol: m for m in (meta or ())}
    unknown = sorted(set(symbols) - set(meta_index))
    if unknown and meta is not None:
        raise UnknownSymbolError(f"메타데이터에 없는 심볼: {', '.join(unknown)}")

    ordered = sorted(series, key=lambda s: s.symbol)
    frame = pd.concat({s.symbol: s.values for s in ordered}, axis=1, sort=True)
    frame.index = pd.DatetimeIndex(frame.index, name="date")
    frame = frame.astype(float)
    known = tuple(meta_index[s.symbol] for s in ordered if s.symbol in meta_index)
    return Panel(frame.index, known, frame, kinds.pop())


def build_series_panels(prices: Sequence[PriceSeries], meta: Optional[Sequence[AssetMeta]]) -> Tuple[Panel, Panel]:
    """가격 목록에서 (수익률 패널, 변동성 패널)을 한 번에 만듭니다."""
    returns = [compute_returns(p) for p in prices]
    vols = [compute_volatility(r) for r in returns]
    return build_panel(returns, meta), build_panel(vols, meta)
