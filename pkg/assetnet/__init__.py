"""자산 상관 네트워크(최소신장트리)와 변동성 시차 분석."""
from .correlation import (
    AbsCorrelationMatrix,
    AxiomReport,
    CrossCorrelation,
    DistanceMatrix,
    abs_corr_coefficient,
    build_abs_corr_matrix,
    cross_correlation,
    distance,
    pearson,
    to_distance_matrix,
    verify_metric_axioms,
)
from .errors import AssetNetError
from .lowess import LowessConfig, SmoothedCurve, argmax_smoothed, lowess_smooth
from .mst import (
    SpanningTree,
    TreeEdge,
    build_mst,
    class_clustering,
    edge_overlap,
    export_tree,
    parse_tree_json,
    stability_table,
)
from .timelag import GrangerResult, LagEstimate, LagSummary, estimate_lag, granger_test, lag_summary
from .timeseries import (
    AssetClass,
    AssetMeta,
    Panel,
    PriceSeries,
    ReturnSeries,
    VolatilitySeries,
    build_panel,
    compute_returns,
    compute_volatility,
    parse_meta,
    parse_prices,
)
