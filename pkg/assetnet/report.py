"""
분석 결과를 DataFrame / CSV / JSON 으로 정리합니다. CLI 와 Streamlit 뷰어가 함께 씁니다.
"""
import json
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from .correlation import AbsCorrelationMatrix, AxiomReport, DistanceMatrix
from .mst import ClusteringReport, SpanningTree, StabilityReport
from .timelag import GrangerResult, LagEstimate, LagSummary
from .timeseries import Panel

FLOAT_FORMAT = "%.17g"

LAG_COLUMNS = ["target", "reference", "lag_days", "peak", "raw_peak", "flag"]


# ─────────────────────────────────────────
# 직렬화
# ─────────────────────────────────────────
def to_csv_text(df: pd.DataFrame, config_json: Optional[str] = None, index: bool = False) -> str:
    """
    float 는 17 유효숫자, 결측은 빈 칸으로 씁니다.
    config_json 을 주면 첫 줄에 "# config: ..." 주석으로 실행 설정을 남깁니다.
    """
    body = df.to_csv(index=index, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")
    if config_json is None:
        return body
    return f"# config: {config_json}\n{body}"


def to_json_bytes(payload: Dict[str, Any]) -> bytes:
    return (json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode("utf-8")


# ─────────────────────────────────────────
# 시계열 / 행렬
# ─────────────────────────────────────────
def series_frame(panel: Panel) -> pd.DataFrame:
    df = panel.frame.copy()
    df.index = df.index.strftime("%Y-%m-%d")
    df.index.name = "date"
    return df.reset_index()


def matrix_frame(m) -> pd.DataFrame:
    """AbsCorrelationMatrix / DistanceMatrix 를 symbol 컬럼이 붙은 정방 테이블로."""
    df = m.to_frame()
    df.index.name = "symbol"
    return df.reset_index()


def argmax_lag_frame(m: AbsCorrelationMatrix) -> pd.DataFrame:
    rows = []
    n = len(m.symbols)
    for i in range(n):
        for j in range(i + 1, n):
            rows.append({
                "a": m.symbols[i],
                "b": m.symbols[j],
                "abs_corr": float(m.entries[i, j]),
                "lag": int(m.argmax_lags[i, j]) if m.argmax_lags is not None else None,
            })
    return pd.DataFrame(rows, columns=["a", "b", "abs_corr", "lag"])


# ─────────────────────────────────────────
# 트리 보고서
# ─────────────────────────────────────────
def mst_edges_frame(t: SpanningTree) -> pd.DataFrame:
    return pd.DataFrame(
        [{"a": e.a, "b": e.b, "distance": e.distance} for e in t.edges],
        columns=["a", "b", "distance"],
    )


def degree_frame(t: SpanningTree) -> pd.DataFrame:
    deg = t.degrees()
    df = pd.DataFrame({"symbol": list(deg), "degree": list(deg.values())})
    return df.sort_values(["degree", "symbol"], ascending=[False, True], kind="stable").reset_index(drop=True)


def clustering_frame(report: ClusteringReport) -> pd.DataFrame:
    rows = [
        {
            "class": c.asset_class.value,
            "n_assets": c.n_assets,
            "intra_edges": c.intra_edges,
            "cross_edges": c.cross_edges,
            "intra_fraction": c.intra_fraction,
        }
        for c in report.per_class
    ]
    rows.append({
        "class": "all",
        "n_assets": sum(c.n_assets for c in report.per_class),
        "intra_edges": report.intra_total,
        "cross_edges": report.cross_total,
        "intra_fraction": report.intra_fraction,
    })
    return pd.DataFrame(rows)


def stability_frame(reports: Sequence[StabilityReport]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {"period_a": r.period_a, "period_b": r.period_b, "shared_edges": r.shared_edges, "overlap_fraction": r.overlap_fraction}
            for r in reports
        ],
        columns=["period_a", "period_b", "shared_edges", "overlap_fraction"],
    )


def axioms_payload(report: AxiomReport, d: DistanceMatrix, config: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    payload = report.as_dict()
    payload["symbols"] = list(d.symbols)
    if config is not None:
        payload["config"] = config
    return payload


# ─────────────────────────────────────────
# 시차 보고서
# ─────────────────────────────────────────
def lag_table_frame(summaries: Sequence[LagSummary]) -> pd.DataFrame:
    """
    target,reference,lag_days,peak,raw_peak,flag.
    실패한 쌍은 값 없이 flag=skipped 로 남깁니다.
    """
    rows: List[Dict[str, Any]] = []
    for s in summaries:
        for e in s.estimates:
            rows.append({
                "target": s.target,
                "reference": e.pair[0],
                "lag_days": e.lag_days,
                "peak": e.peak_value,
                "raw_peak": e.raw_peak_value,
                "flag": e.flag,
            })
        for ref, _reason in s.skipped:
            rows.append({"target": s.target, "reference": ref, "lag_days": None, "peak": None, "raw_peak": None, "flag": "skipped"})
    df = pd.DataFrame(rows, columns=LAG_COLUMNS)
    df["lag_days"] = df["lag_days"].astype("Int64")
    return df


def lag_summary_frame(summaries: Sequence[LagSummary]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "target": s.target,
                "references": s.reference_label,
                "n_pairs": len(s.estimates),
                "n_skipped": len(s.skipped),
                "mean_lag": s.mean_lag,
                "std_lag": s.std_lag,
            }
            for s in summaries
        ],
        columns=["target", "references", "n_pairs", "n_skipped", "mean_lag", "std_lag"],
    )


def skipped_frame(summaries: Sequence[LagSummary]) -> pd.DataFrame:
    return pd.DataFrame(
        [{"target": s.target, "reference": ref, "reason": reason} for s in summaries for ref, reason in s.skipped],
        columns=["target", "reference", "reason"],
    )


def curve_frame(e: LagEstimate) -> pd.DataFrame:
    df = e.curve.to_frame()
    df["lag"] = df["lag"].astype(int)
    return df


def granger_frame(results: Sequence[GrangerResult]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "x": r.pair[0],
                "y": r.pair[1],
                "direction": r.direction,
                "order": r.order,
                "n_obs": r.n_obs,
                "df_denom": r.df_denom,
                "f_statistic": r.f_statistic,
                "p_value": r.p_value,
            }
            for r in results
        ],
        columns=["x", "y", "direction", "order", "n_obs", "df_denom", "f_statistic", "p_value"],
    )
