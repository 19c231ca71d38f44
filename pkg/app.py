import io

import streamlit as st

from assetnet.config import plan_windows
from assetnet.correlation import build_abs_corr_matrix, to_distance_matrix, verify_metric_axioms
from assetnet.errors import AssetNetError
from assetnet.lowess import LowessConfig
from assetnet.mst import build_mst, class_clustering, export_tree, stability_table
from assetnet.report import (
    clustering_frame,
    degree_frame,
    lag_summary_frame,
    lag_table_frame,
    matrix_frame,
    mst_edges_frame,
    skipped_frame,
    stability_frame,
    to_csv_text,
)
from assetnet.timelag import lag_summary
from assetnet.timeseries import AssetClass, build_series_panels, parse_meta, parse_prices
from assetnet.ui import get_viewer_defaults, render_main_view, render_sidebar


# ─────────────────────────────────────────
# Session State & Data Processing
# ─────────────────────────────────────────
def initialize_session_state():
    """Streamlit 의 세션 상태를 초기화합니다."""
    ss = st.session_state
    d = get_viewer_defaults()
    defaults = {
        "analysis_type": "MST 분석",
        "max_lag": d.max_lag,
        "min_obs": d.min_obs,
        "lowess_k": d.lowess_k,
        "global_moments": False,
        "yearly": False,
        "targets": "",
        "include_self": False,
        "lag_series": "volatility",
        "mst_results": {},  # 구간 label -> 결과 테이블/내보내기
        "df_stability": None,
        "df_lags": None,
        "df_lag_summary": None,
        "df_skipped": None,
        "lags_csv": "",
    }
    for key, value in defaults.items():
        if key not in ss:
            ss[key] = value


def _load(params: dict):
    prices = parse_prices(io.BytesIO(params["prices"]), params["prices_format"])
    meta = parse_meta(io.BytesIO(params["meta"]))
    return build_series_panels(prices, meta)


def handle_mst_analysis(params: dict):
    """구간별 MST 와 보고서를 만들어 세션 상태에 저장합니다."""
    ss = st.session_state
    ss.df_lags = None
    ret, _ = _load(params)
    windows = plan_windows(ret.axis[0].date(), ret.axis[-1].date(), yearly=ss.yearly)

    results, trees = {}, []
    for w in windows:
        with st.spinner(f"구간 {w.label} 계산 중..."):
            panel = ret.window(w.start, w.end)
            m = build_abs_corr_matrix(panel, int(ss.min_obs), ss.global_moments)
            d = to_distance_matrix(m)
            tree = build_mst(d)
        for msg in d.warnings:
            st.toast(msg)
        results[w.label] = {
            "edges": mst_edges_frame(tree),
            "clustering": clustering_frame(class_clustering(tree, panel.meta)),
            "degrees": degree_frame(tree),
            "corr": m.to_frame(),
            "axioms_ok": verify_metric_axioms(d).ok,
            "dot": export_tree(tree, panel.meta, "dot"),
            "json": export_tree(tree, panel.meta, "json"),
            "corr_csv": to_csv_text(matrix_frame(m)),
        }
        trees.append((w.label, tree))
    ss.mst_results = results
    ss.df_stability = stability_frame(stability_table(trees))
    st.success(f"MST {len(trees)}개를 만들었습니다.")


def handle_lag_analysis(params: dict):
    """대상 자산마다 주가지수 전체를 참조로 시차를 추정합니다. 기본은 변동성, 선택 시 수익률."""
    ss = st.session_state
    ss.mst_results = {}
    ret, vol = _load(params)
    panel = ret if ss.lag_series == "returns" else vol
    targets = [t.strip() for t in ss.targets.split(",") if t.strip()]
    if not targets:
        st.error("대상 심볼을 입력하세요.")
        return
    missing = [t for t in targets if t not in panel.symbols]
    if missing:
        st.error(f"패널에 없는 심볼: {', '.join(missing)}")
        return

    refs = [panel.column(m.symbol) for m in panel.meta if m.asset_class == AssetClass.STOCK]
    config = LowessConfig(neighbors=int(ss.lowess_k))
    summaries = []
    for t in targets:
        with st.spinner(f"{t} 시차 추정 중... (참조 {len(refs)}개)"):
            summaries.append(lag_summary(
                panel.column(t), refs, max_lag=int(ss.max_lag), config=config, min_obs=int(ss.min_obs),
                global_moments=ss.global_moments, include_self=ss.include_self, label="stock",
            ))
    ss.df_lags = lag_table_frame(summaries)
    ss.df_lag_summary = lag_summary_frame(summaries)
    ss.df_skipped = skipped_frame(summaries)
    ss.lags_csv = to_csv_text(ss.df_lags)
    st.toast(f"대상 {len(targets)}개의 시차 분석을 마쳤습니다.")


# ─────────────────────────────────────────
# Main App Logic
# ─────────────────────────────────────────
def main():
    """메인 애플리케이션 실행 함수"""
    st.set_page_config(page_title="자산 상관 네트워크 분석기", layout="wide")
    st.title("자산 상관 네트워크 / 변동성 시차 분석")

    initialize_session_state()
    ss = st.session_state
    run, params = render_sidebar(ss)

    if run:
        try:
            if params["analysis_type"] == "MST 분석":
                handle_mst_analysis(params)
            else:
                handle_lag_analysis(params)
        except AssetNetError as e:
            st.error(str(e))

    render_main_view(ss)


if __name__ == "__main__":
    main()
