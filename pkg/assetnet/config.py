import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from dateutil import parser as date_parser
from dateutil.rrule import YEARLY, rrule
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError
from .lowess import LowessConfig

logger = logging.getLogger(__name__)

# 스냅샷에서 빼는 값. 결과에 영향을 주지 않으므로 실행마다 달라도 출력은 같아야 합니다.
RUNTIME_ONLY_FIELDS = {"workers", "out"}


class PipelineConfig(BaseModel):
    """
    파이프라인 설정값.
    우선순위: 명령행 옵션 > 설정 파일(--config, TOML) > 기본값
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    prices: Optional[Path] = None
    meta: Optional[Path] = None
    prices_format: Literal["wide", "long"] = "wide"
    start: Optional[date] = None
    end: Optional[date] = None
    yearly: bool = False
    max_lag: int = Field(150, ge=0)
    lowess_k: int = Field(10, ge=3)
    lowess_window: Optional[int] = Field(None, gt=0)
    lowess_robustness: int = Field(0, ge=0)
    min_obs: int = Field(100, ge=2)
    global_moments: bool = False
    granger_order: int = Field(5, ge=1)
    out: Path = Path("out")
    workers: int = Field(1, ge=1)

    @field_validator("start", "end", mode="before")
    @classmethod
    def _parse_date(cls, v):
        if isinstance(v, str):
            try:
                return date_parser.isoparse(v).date()
            except ValueError:
                raise ValueError(f"날짜 형식이 아닙니다: {v!r} (YYYY-MM-DD)")
        return v

    @model_validator(mode="after")
    def _check_window(self):
        if self.start is not None and self.end is not None and not self.start < self.end:
            raise ValueError(f"start({self.start}) 는 end({self.end}) 보다 앞서야 합니다.")
        # 시차 곡선 점 수(2*max_lag+1)가 LOWESS 최소 점 수보다 적으면 평활할 수 없음
        need = self.lowess_k if self.lowess_window is None else 3
        if 2 * self.max_lag + 1 < need:
            raise ValueError(f"max_lag={self.max_lag} 이면 시차 점이 {2 * self.max_lag + 1}개뿐이라 LOWESS 에 필요한 {need}개보다 적습니다.")
        return self

    def lowess_config(self) -> LowessConfig:
        return LowessConfig(
            neighbors=self.lowess_k,
            robustness_iterations=self.lowess_robustness,
            window=self.lowess_window,
        )

    def check_inputs(self, require_meta: bool = True) -> None:
        """실행 시점에 입력 파일이 있는지 확인합니다."""
        for name, path in (("prices", self.prices), ("meta", self.meta)):
            if path is None:
                if name == "prices" or require_meta:
                    raise ConfigError(f"--{name} 이(가) 지정되지 않았습니다.")
                continue
            if not Path(path).is_file():
                raise ConfigError(f"{name} 파일이 없습니다: {path}")

    def snapshot(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", exclude=RUNTIME_ONLY_FIELDS)

def snapshot_text(snap: Dict[str, Any]) -> str:
    """출력 파일에 넣는 정규화된 설정 문자열 (키 정렬, 타임스탬프 없음)."""
    return json.dumps(snap, sort_keys=True, ensure_ascii=False)


def load_config_file(path: Optional[Path]) -> Dict[str, Any]:
    if path is None:
        return {}
    try:
        with open(path, "rb") as f:
            values = tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"설정 파일이 없습니다: {path}")
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"설정 파일 형식 오류 ({path}): {e}")
    # [assetnet] 테이블 안에 적어도 됨
    if set(values) == {"assetnet"} and isinstance(values["assetnet"], dict):
        values = values["assetnet"]
    return values


def resolve_config(file_values: Dict[str, Any], cli_values: Dict[str, Any]) -> PipelineConfig:
    """None 이 아닌 명령행 값이 설정 파일 값을 덮어씁니다. 알 수 없는 키는 오류입니다."""
    merged = dict(file_values)
    merged.update({k: v for k, v in cli_values.items() if v is not None})
    try:
        return PipelineConfig(**merged)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"설정 오류: {problems}")


# ─────────────────────────────────────────
# 분석 구간
# ─────────────────────────────────────────
@dataclass(frozen=True)
class Window:
    label: str
    start: date
    end: date


def plan_windows(first: date, last: date, start: Optional[date] = None, end: Optional[date] = None, yearly: bool = False) -> List[Window]:
    """
    데이터 범위 [first, last] 를 start/end 로 자르고, yearly 이면 달력 연도별로 나눕니다.
    연도 구간은 "2008" 처럼, 전체 구간은 "full" 로 이름 붙입니다.
    """
    lo = max(first, start) if start else first
    hi = min(last, end) if end else last
    if lo > hi:
        raise ConfigError(f"데이터 범위({first}~{last})와 요청 구간이 겹치지 않습니다.")
    if not yearly:
        return [Window("full", lo, hi)]
    windows = []
    for jan1 in rrule(YEARLY, dtstart=date(lo.year, 1, 1), until=date(hi.year, 1, 1)):
        y = jan1.year
        windows.append(Window(str(y), max(lo, date(y, 1, 1)), min(hi, date(y, 12, 31))))
    return windows
