"""assetnet 에서 사용하는 예외 계층.

모든 사용자/데이터 오류는 AssetNetError 를 상속하며 CLI 종료 코드 2 로 매핑됩니다.
ValueError 도 함께 상속하므로 기존처럼 ValueError 로 잡아도 됩니다.
"""
from typing import Optional, Tuple


class AssetNetError(ValueError):
    """사용자 입력 또는 데이터 문제로 발생하는 오류의 기본 클래스"""

    exit_code = 2


class ConfigError(AssetNetError):
    pass


# ─────────────────────────────────────────
# timeseries
# ─────────────────────────────────────────
class MalformedInputError(AssetNetError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"{line}행: {message}"
        super().__init__(message)


class NonPositivePriceError(MalformedInputError):
    pass


class DuplicateDateError(MalformedInputError):
    pass


class EmptySeriesError(AssetNetError):
    pass


class SeriesTooShortError(AssetNetError):
    pass


class UnknownSymbolError(AssetNetError):
    pass


class KindMismatchError(AssetNetError):
    pass


class EmptyPanelError(AssetNetError):
    pass


# ─────────────────────────────────────────
# correlation / lowess / mst / timelag
# ─────────────────────────────────────────
class ZeroVarianceError(AssetNetError):
    pass


class LengthMismatchError(AssetNetError):
    pass


class TooFewSamplesError(AssetNetError):
    pass


class InsufficientOverlapError(AssetNetError):
    """두 시계열의 공통 관측치가 부족할 때 발생합니다. 어떤 쌍인지 pair 에 담습니다."""

    def __init__(self, pair: Tuple[str, str], n_overlap: int, required: int):
        self.pair = pair
        self.n_overlap = n_overlap
        self.required = required
        super().__init__(
            f"{pair[0]}/{pair[1]}: 공통 관측치 {n_overlap}개 (최소 {required}개 필요)"
        )


class OutOfRangeError(AssetNetError):
    pass


class TooFewPointsError(AssetNetError):
    pass


class DegenerateNeighborhoodError(AssetNetError):
    pass


class AllUndefinedError(AssetNetError):
    pass


class MatrixTooSmallError(AssetNetError):
    pass


class SymbolSetMismatchError(AssetNetError):
    pass


class SingularDesignError(AssetNetError):
    pass


class DuplicateSymbolError(AssetNetError):
    pass
