import os
from dataclasses import dataclass

import streamlit as st


@dataclass
class ViewerDefaults:
    """뷰어 사이드바의 초기값"""
    max_lag: int
    min_obs: int
    lowess_k: int


def _secret(name: str, default: str) -> str:
    try:
        return str(st.secrets.get(name, os.getenv(name, default)))
    except FileNotFoundError:
        return os.getenv(name, default)


def get_viewer_defaults() -> ViewerDefaults:
    """
    Streamlit secrets 또는 환경 변수에서 기본 분석 파라미터를 읽습니다.
    secrets 에 값이 있으면 우선 사용하고, 없으면 환경 변수, 그것도 없으면 기본값을 씁니다.
    """
    return ViewerDefaults(
        max_lag=int(_secret("ASSETNET_MAX_LAG", "150")),
        min_obs=int(_secret("ASSETNET_MIN_OBS", "100")),
        lowess_k=int(_secret("ASSETNET_LOWESS_K", "10")),
    )


def render_sidebar(ss):
    """
    사이드바(입력 파일, 분석 유형, 파라미터)를 그리고 (실행 여부, 파라미터)를 돌려줍니다.
    """
    with st.sidebar:
        st.markdown("### 입력 파일")
        prices_file = st.file_uploader("가격 CSV (date,SYM1,SYM2,...)", type=["csv"])
        prices_format = st.radio("가격 파일 형식", ["wide", "long"], horizontal=True)
        meta_file = st.file_uploader("메타데이터 CSV (symbol,class,description)", type=["csv"])

        st.divider()
        st.markdown("### 분석 유형")
        ss.analysis_type = st.radio(
            "분석 유형 선택",
            ["MST 분석", "시차 분석"],
            label_visibility="collapsed",
            key="analysis_type_radio",
        )

        st.markdown("##### 파라미터")
        ss.min_obs = st.number_input("min_obs", min_value=2, value=ss.min_obs, step=10)
        ss.global_moments = st.checkbox("전체 구간 평균/표준편차 사용", value=ss.global_moments)
        ss.yearly = False
        if ss.analysis_type == "MST 분석":
            ss.yearly = st.checkbox("연도별 구간", value=False)
        else:
            ss.max_lag = st.number_input("max_lag (일)", min_value=1, value=ss.max_lag, step=10)
            ss.lowess_k = st.number_input("LOWESS 이웃 수", min_value=3, value=ss.lowess_k, step=1)
            ss.targets = st.text_input("대상 심볼 (쉼표 구분)", value=ss.targets, placeholder="예: EUA,WTI")
            ss.include_self = st.checkbox("자기 자신과의 쌍 포함", value=ss.include_self)
            ss.lag_series = st.radio(
                "상호상관 시계열",
                ["volatility", "returns"],
                index=["volatility", "returns"].index(ss.lag_series),
                horizontal=True,
            )

        ready = prices_file is not None and meta_file is not None
        if not ready:
            st.info("가격 CSV 와 메타데이터 CSV 를 모두 올려주세요.")
        run = st.button("분석 실행", disabled=not ready)

    params = {
        "prices": prices_file.getvalue() if prices_file is not None else None,
        "prices_format": prices_format,
        "meta": meta_file.getvalue() if meta_file is not None else None,
        "analysis_type": ss.analysis_type,
    }
    return run, params


def _download(label: str, data, file_name: str, mime: str = "text/csv"):
    st.download_button(label, data=data, file_name=file_name, mime=mime, key=f"dl_{file_name}")


def render_main_view(ss):
    """메인 화면(결과 테이블과 다운로드)을 그립니다."""
    if ss.mst_results:
        st.markdown("## MST 분석 결과")
        for label, res in ss.mst_results.items():
            st.markdown(f"### 구간: {label}")
            if not res["axioms_ok"]:
                st.warning("거리 공리 위반이 있습니다. axioms JSON 을 확인하세요.")
            col1, col2 = st.columns(2)
            col1.markdown("##### MST 간선")
            col1.dataframe(res["edges"], use_container_width=True)
            col2.markdown("##### 유형별 군집")
            col2.dataframe(res["clustering"], use_container_width=True)
            col2.markdown("##### 허브(차수)")
            col2.dataframe(res["degrees"].head(10), use_container_width=True)
            with st.expander("절대상관행렬"):
                st.dataframe(res["corr"], use_container_width=True)
            d1, d2, d3 = st.columns(3)
            with d1:
                _download("DOT 다운로드", res["dot"], f"mst_{label}.dot", "text/vnd.graphviz")
            with d2:
                _download("JSON 다운로드", res["json"], f"mst_{label}.json", "application/json")
            with d3:
                _download("행렬 CSV 다운로드", res["corr_csv"], f"corr_{label}.csv")
            st.divider()
        if ss.df_stability is not None and not ss.df_stability.empty:
            st.markdown("### 구간 간 MST 안정성")
            st.dataframe(ss.df_stability, use_container_width=True)

    if ss.df_lags is not None:
        st.markdown("## 변동성 시차 분석 결과")
        st.caption("양수 시차 = 대상의 변동성이 참조 자산을 그만큼 뒤따름")
        st.dataframe(ss.df_lag_summary, use_container_width=True)
        st.dataframe(ss.df_lags, use_container_width=True, height=600)
        if ss.df_skipped is not None and not ss.df_skipped.empty:
            st.markdown("##### 건너뛴 쌍")
            st.dataframe(ss.df_skipped, use_container_width=True)
        _download("lags.csv 다운로드", ss.lags_csv, "lags.csv")
