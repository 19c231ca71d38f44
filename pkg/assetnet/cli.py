"""
assetnet 명령행 파이프라인.

    python -m assetnet mst --prices prices.csv --meta meta.csv --yearly --out out/
    python -m assetnet lag --prices prices.csv --meta meta.csv --targets EUA,WTI --dump-curves
    python -m assetnet granger --prices prices.csv --pair SPX,WTI --order 5

종료 코드: 0 성공, 1 내부 오류, 2 사용자/데이터 오류
"""
import argparse
import contextlib
import logging
import re
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from . import synthetic
from .config import PipelineConfig, Window, load_config_file, plan_windows, resolve_config, snapshot_text
from .correlation import build_abs_corr_matrix, to_distance_matrix, verify_metric_axioms
from .errors import AssetNetError, UnknownSymbolError
from .mst import build_mst, class_clustering, export_tree, stability_table
from .report import (
    argmax_lag_frame,
    axioms_payload,
    clustering_frame,
    curve_frame,
    granger_frame,
    lag_summary_frame,
    lag_table_frame,
    matrix_frame,
    series_frame,
    stability_frame,
    to_csv_text,
    to_json_bytes,
)
from .timelag import granger_test, lag_summary
from .timeseries import AssetClass, Panel, build_series_panels, parse_meta, parse_prices

logger = logging.getLogger("assetnet")

console = Console(stderr=True)


# ─────────────────────────────────────────
# 공통
# ─────────────────────────────────────────
def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


@contextlib.contextmanager
def _context(label: str):
    """오류 메시지 앞에 구간/쌍 이름을 붙입니다."""
    try:
        yield
    except AssetNetError as e:
        e.args = (f"[{label}] {e}",)
        raise


def _split(text: Optional[str]) -> List[str]:
    return [s.strip() for s in (text or "").split(",") if s.strip()]


def _write(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data if isinstance(data, bytes) else data.encode("utf-8"))
    logger.debug("저장: %s", path)


def _safe_name(symbol: str) -> str:
    return re.sub(r"[^\w.\-^=]", "_", symbol)


def _curve_file_names(pairs: Sequence[Tuple[str, str]]) -> List[str]:
    """
    (대상, 참조) 쌍마다 곡선 파일 이름. 치환 후 이름이 겹치면 뒤에 __2, __3 을 붙입니다.
    """
    names: List[str] = []
    used = set()
    for target, reference in pairs:
        stem = f"{_safe_name(target)}__{_safe_name(reference)}"
        name, k = stem, 1
        while name in used:
            k += 1
            name = f"{stem}__{k}"
        if name != stem:
            logger.warning("곡선 파일 이름 충돌: %s/%s -> %s.csv", target, reference, name)
        used.add(name)
        names.append(f"{name}.csv")
    return names


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    cli_values = {
        "prices": args.prices,
        "meta": args.meta,
        "prices_format": args.prices_format,
        "start": args.start,
        "end": args.end,
        "yearly": args.yearly,
        "max_lag": args.max_lag,
        "lowess_k": args.lowess_k,
        "lowess_window": args.lowess_window,
        "lowess_robustness": args.lowess_robust,
        "min_obs": args.min_obs,
        "global_moments": args.global_moments,
        "granger_order": getattr(args, "order", None),
        "out": args.out,
        "workers": args.workers,
    }
    return resolve_config(load_config_file(args.config), cli_values)


def _load_panels(cfg: PipelineConfig, require_meta: bool) -> Tuple[Panel, Panel]:
    cfg.check_inputs(require_meta=require_meta)
    with open(cfg.prices, "rb") as f:
        prices = parse_prices(f, cfg.prices_format)
    meta = None
    if cfg.meta is not None:
        with open(cfg.meta, "rb") as f:
            meta = parse_meta(f)
    logger.info("가격 시계열 %d개를 읽었습니다.", len(prices))
    return build_series_panels(prices, meta)


def _windows(cfg: PipelineConfig, panel: Panel, yearly: Optional[bool] = None) -> List[Window]:
    yearly = cfg.yearly if yearly is None else yearly
    return plan_windows(panel.axis[0].date(), panel.axis[-1].date(), cfg.start, cfg.end, yearly)


def _run_config(cfg: PipelineConfig, command: str, window: Optional[Window] = None, **extra) -> Dict:
    """출력에 기록할 설정 스냅샷: 설정값 + 하위 명령 + 구간 + 명령별 인자."""
    snap = cfg.snapshot()
    snap["command"] = command
    if window is not None:
        snap["window"] = {"label": window.label, "start": window.start.isoformat(), "end": window.end.isoformat()}
    snap.update(extra)
    return snap


# ─────────────────────────────────────────
# 하위 명령
# ─────────────────────────────────────────
def cmd_mst(cfg: PipelineConfig) -> int:
    """구간마다 수익률 → 절대상관 → 거리 → MST, 그리고 공리/군집/안정성 보고서."""
    ret, _ = _load_panels(cfg, require_meta=True)
    out = Path(cfg.out)
    trees = []
    for w in _windows(cfg, ret):
        with _context(f"구간 {w.label}"):
            panel = ret.window(w.start, w.end)
            m = build_abs_corr_matrix(panel, cfg.min_obs, cfg.global_moments, cfg.workers)
            d = to_distance_matrix(m)
            tree = build_mst(d)
            axioms = verify_metric_axioms(d)
            clustering = class_clustering(tree, panel.meta)

        snap = _run_config(cfg, "mst", w)
        _write(out / f"mst_{w.label}.dot", export_tree(tree, panel.meta, "dot", snap))
        _write(out / f"mst_{w.label}.json", export_tree(tree, panel.meta, "json", snap))
        _write(out / f"axioms_{w.label}.json", to_json_bytes(axioms_payload(axioms, d, snap)))
        _write(out / f"clustering_{w.label}.csv", to_csv_text(clustering_frame(clustering), snapshot_text(snap)))
        if not axioms.ok:
            logger.warning("구간 %s: 거리 공리 위반 %d건", w.label, len(axioms.triangle_violations) + len(axioms.symmetry_violations))
        logger.info(
            "구간 %s: 자산 %d개, 트리 길이 %.4f, 같은 유형 간선 비율 %.3f",
            w.label, tree.n, tree.total_weight, clustering.intra_fraction,
        )
        trees.append((w.label, tree))

    _write(out / "stability.csv", to_csv_text(stability_frame(stability_table(trees)), snapshot_text(_run_config(cfg, "mst"))))
    return 0


def cmd_corr(cfg: PipelineConfig) -> int:
    ret, _ = _load_panels(cfg, require_meta=True)
    out = Path(cfg.out)
    for w in _windows(cfg, ret):
        with _context(f"구간 {w.label}"):
            m = build_abs_corr_matrix(ret.window(w.start, w.end), cfg.min_obs, cfg.global_moments, cfg.workers)
            d = to_distance_matrix(m)
        snap = snapshot_text(_run_config(cfg, "corr", w))
        _write(out / f"corr_{w.label}.csv", to_csv_text(matrix_frame(m), snap))
        _write(out / f"corr_lags_{w.label}.csv", to_csv_text(argmax_lag_frame(m), snap))
        _write(out / f"distance_{w.label}.csv", to_csv_text(matrix_frame(d), snap))
    return 0


def cmd_returns(cfg: PipelineConfig) -> int:
    ret, vol = _load_panels(cfg, require_meta=False)
    out = Path(cfg.out)
    w = _windows(cfg, ret, yearly=False)[0]
    snap = snapshot_text(_run_config(cfg, "returns", w))
    _write(out / "returns.csv", to_csv_text(series_frame(ret.window(w.start, w.end)), snap))
    _write(out / "volatility.csv", to_csv_text(series_frame(vol.window(w.start, w.end)), snap))
    return 0


def _print_lag_summaries(summaries, series: str) -> None:
    title = "변동성" if series == "volatility" else "수익률"
    table = Table(title=f"{title} 시차 요약 (양수 = 대상이 뒤따름)")
    for col in ("target", "references", "pairs", "skipped", "mean lag", "std lag"):
        table.add_column(col)
    for s in summaries:
        table.add_row(s.target, s.reference_label, str(len(s.estimates)), str(len(s.skipped)), f"{s.mean_lag:.2f}", f"{s.std_lag:.2f}")
    console.print(table)


def cmd_lag(
    cfg: PipelineConfig,
    targets: Sequence[str],
    references: Sequence[str],
    include_self: bool,
    dump_curves: bool,
    series: str = "volatility",
) -> int:
    """
    대상마다 참조 자산들과의 시차를 추정합니다.
    series="returns" 이면 변동성 대신 수익률 상호상관을 씁니다 (비교용, 보통 뚜렷한 시차가 없음).
    """
    ret, vol = _load_panels(cfg, require_meta=True)
    panel = vol if series == "volatility" else ret
    w = _windows(cfg, panel, yearly=False)[0]
    panel = panel.window(w.start, w.end)
    if not targets:
        raise UnknownSymbolError("--targets 에 대상 심볼을 하나 이상 지정해야 합니다.")
    missing = [s for s in list(targets) + list(references) if s not in panel.symbols]
    if missing:
        raise UnknownSymbolError(f"패널에 없는 심볼: {', '.join(missing)}")

    if references:
        ref_symbols, label = list(references), "custom"
    else:
        ref_symbols = [m.symbol for m in panel.meta if m.asset_class == AssetClass.STOCK]
        label = AssetClass.STOCK.value
    ref_series = [panel.column(s) for s in ref_symbols]

    summaries = []
    for target in targets:
        summaries.append(lag_summary(
            panel.column(target), ref_series,
            max_lag=cfg.max_lag, config=cfg.lowess_config(), min_obs=cfg.min_obs,
            global_moments=cfg.global_moments, include_self=include_self, label=label, workers=cfg.workers,
        ))

    out = Path(cfg.out)
    snap_json = snapshot_text(_run_config(
        cfg, "lag", w,
        targets=list(targets), references=list(references), reference_set=label,
        include_self=include_self, dump_curves=dump_curves, series=series,
    ))
    _write(out / "lags.csv", to_csv_text(lag_table_frame(summaries), snap_json))
    _write(out / "lag_summary.csv", to_csv_text(lag_summary_frame(summaries), snap_json))
    if dump_curves:
        estimates = [(s.target, e) for s in summaries for e in s.estimates]
        names = _curve_file_names([(t, e.pair[0]) for t, e in estimates])
        for name, (_, e) in zip(names, estimates):
            _write(out / "curves" / name, to_csv_text(curve_frame(e), snap_json))
    _print_lag_summaries(summaries, series)
    return 0


def cmd_granger(cfg: PipelineConfig, pair: Sequence[str], series: str) -> int:
    if len(pair) != 2:
        raise UnknownSymbolError("--pair 는 X,Y 형식이어야 합니다.")
    ret, vol = _load_panels(cfg, require_meta=False)
    panel = vol if series == "volatility" else ret
    w = _windows(cfg, panel, yearly=False)[0]
    panel = panel.window(w.start, w.end)
    with _context(f"{pair[0]}->{pair[1]}"):
        result = granger_test(panel.column(pair[0]), panel.column(pair[1]), cfg.granger_order)
    snap = _run_config(cfg, "granger", w, pair=list(pair), series=series)
    _write(Path(cfg.out) / "granger.csv", to_csv_text(granger_frame([result]), snapshot_text(snap)))
    logger.info("%s: F=%.4f, p=%.4g (order %d)", result.direction, result.f_statistic, result.p_value, result.order)
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    if args.kind == "lagged":
        prices, meta = synthetic.lagged_market(args.days, lag=args.lag, jitter=args.jitter, seed=args.seed)
    else:
        prices, meta = synthetic.synthetic_market(args.days, seed=args.seed)
    out = Path(args.out or "out")
    _write(out / "prices.csv", synthetic.prices_csv(prices))
    _write(out / "meta.csv", synthetic.meta_csv(meta))
    logger.info("합성 데이터 저장: %s (자산 %d개, %d일)", out, len(meta), len(prices))
    return 0


# ─────────────────────────────────────────
# argparse
# ─────────────────────────────────────────
def _add_pipeline_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None, help="TOML 설정 파일 (명령행 옵션이 우선)")
    p.add_argument("--prices", type=Path, default=None, help="가격 CSV")
    p.add_argument("--prices-format", choices=["wide", "long"], default=None)
    p.add_argument("--meta", type=Path, default=None, help="메타데이터 CSV (symbol,class,description)")
    p.add_argument("--from", dest="start", default=None, help="시작일 YYYY-MM-DD")
    p.add_argument("--to", dest="end", default=None, help="종료일 YYYY-MM-DD")
    p.add_argument("--yearly", action="store_true", default=None, help="달력 연도별 구간으로 나눔")
    p.add_argument("--max-lag", type=int, default=None)
    p.add_argument("--lowess-k", type=int, default=None, help="LOWESS 최근접 이웃 수")
    p.add_argument("--lowess-window", type=int, default=None, help="LOWESS 고정 창 폭(일). 지정하면 k-최근접 대신 사용")
    p.add_argument("--lowess-robust", type=int, default=None, help="LOWESS 강건화 반복 횟수")
    p.add_argument("--min-obs", type=int, default=None)
    p.add_argument("--global-moments", action="store_true", default=None, help="시차별 대신 전체 겹침 구간의 평균/표준편차 사용")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="assetnet", description="자산 상관 네트워크(MST)와 변동성 시차 분석")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("mst", "구간별 최소신장트리와 보고서"),
        ("corr", "절대상관/거리 행렬 덤프"),
        ("returns", "수익률/변동성 시계열 덤프"),
    ):
        _add_pipeline_args(sub.add_parser(name, help=help_text))

    lag = sub.add_parser("lag", help="변동성 시차 추정")
    _add_pipeline_args(lag)
    lag.add_argument("--targets", default=None, help="대상 심볼 (쉼표 구분)")
    lag.add_argument("--references", default=None, help="참조 심볼 (쉼표 구분, 기본: 주가지수 전체)")
    lag.add_argument("--include-self", action="store_true")
    lag.add_argument("--dump-curves", action="store_true")
    lag.add_argument("--series", choices=["volatility", "returns"], default="volatility", help="상호상관에 쓸 시계열 (기본: 변동성)")

    granger = sub.add_parser("granger", help="Granger 인과 F 검정")
    _add_pipeline_args(granger)
    granger.add_argument("--pair", required=True, help="X,Y (X -> Y 검정)")
    granger.add_argument("--order", type=int, default=None)
    granger.add_argument("--series", choices=["volatility", "returns"], default="volatility")

    synth = sub.add_parser("synth", help="합성 가격/메타데이터 생성")
    synth.add_argument("--kind", choices=["market", "lagged"], default="market")
    synth.add_argument("--days", type=int, default=1250)
    synth.add_argument("--lag", type=int, default=30)
    synth.add_argument("--jitter", type=int, default=0)
    synth.add_argument("--seed", type=int, default=None)
    synth.add_argument("--out", type=Path, default=None)
    synth.add_argument("-v", "--verbose", action="store_true")
    return parser


def run(args: argparse.Namespace) -> int:
    if args.command == "synth":
        return cmd_synth(args)
    cfg = _config_from_args(args)
    if args.command == "mst":
        return cmd_mst(cfg)
    if args.command == "corr":
        return cmd_corr(cfg)
    if args.command == "returns":
        return cmd_returns(cfg)
    if args.command == "lag":
        return cmd_lag(cfg, _split(args.targets), _split(args.references), args.include_self, args.dump_curves, args.series)
    if args.command == "granger":
        return cmd_granger(cfg, _split(args.pair), args.series)
    raise AssertionError(args.command)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(args.verbose)
    try:
        return run(args)
    except AssetNetError as e:
        logger.error("%s", e)
        return e.exit_code
    except Exception:
        logger.exception("내부 오류")
        return 1


if __name__ == "__main__":
    sys.exit(main())
