import itertools
import json
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field
from scipy.cluster.hierarchy import DisjointSet

from .correlation import DistanceMatrix
from .errors import (
    MalformedInputError,
    MatrixTooSmallError,
    SymbolSetMismatchError,
    UnknownSymbolError,
)
from .timeseries import AssetClass, AssetMeta

logger = logging.getLogger(__name__)

MAX_DISTANCE = math.sqrt(2.0)

# 본문 기준 색상: 주가지수 파랑, 통화 초록, 상품 빨강
CLASS_COLORS = {
    AssetClass.STOCK: "blue",
    AssetClass.CURRENCY: "green",
    AssetClass.COMMODITY: "red",
}
UNKNOWN_COLOR = "lightgray"


# ─────────────────────────────────────────
# 트리
# ─────────────────────────────────────────
@dataclass(frozen=True)
class TreeEdge:
    """무방향 간선. 항상 a < b (심볼 사전순)로 저장합니다."""

    a: str
    b: str
    distance: float

    def __post_init__(self):
        if self.a == self.b:
            raise MalformedInputError(f"자기 자신으로의 간선: {self.a}")
        if self.a > self.b:
            a, b = self.b, self.a
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)

    @property
    def key(self) -> Tuple[str, str]:
        return (self.a, self.b)


@dataclass(frozen=True)
class SpanningTree:
    symbols: Tuple[str, ...]
    edges: Tuple[TreeEdge, ...]

    def __post_init__(self):
        n = len(self.symbols)
        if len(set(self.symbols)) != n:
            raise MalformedInputError("트리 심볼이 중복되었습니다.")
        if len(self.edges) != n - 1:
            raise MalformedInputError(f"간선이 {len(self.edges)}개입니다 ({n - 1}개여야 함).")
        ds = DisjointSet(self.symbols)
        for e in self.edges:
            if e.a not in ds or e.b not in ds:
                raise UnknownSymbolError(f"트리에 없는 심볼의 간선: {e.a}-{e.b}")
            if not (0.0 <= e.distance <= MAX_DISTANCE + 1e-12):
                raise MalformedInputError(f"간선 거리 범위 오류: {e.a}-{e.b} {e.distance}")
            if not ds.merge(e.a, e.b):
                raise MalformedInputError(f"순환이 생기는 간선: {e.a}-{e.b}")

    @property
    def n(self) -> int:
        return len(self.symbols)

    @property
    def total_weight(self) -> float:
        return math.fsum(e.distance for e in self.edges)

    @property
    def edge_set(self) -> frozenset:
        return frozenset(e.key for e in self.edges)

    def degrees(self) -> Dict[str, int]:
        deg = {s: 0 for s in self.symbols}
        for e in self.edges:
            deg[e.a] += 1
            deg[e.b] += 1
        return deg


def build_mst(d: DistanceMatrix) -> SpanningTree:
    """
    Kruskal 방식 최소신장트리.
    간선은 (거리, 심볼 a, 심볼 b) 순으로 정렬하므로 거리가 같아도 결과가 항상 같습니다.
    거리 0 인 서로 다른 자산 쌍도 그대로 허용합니다 (가장 먼저 선택됨).
    """
    n = d.n
    if n < 2:
        raise MatrixTooSmallError(f"자산이 2개 이상 필요합니다 (현재 {n}개).")
    candidates = []
    for i, j in itertools.combinations(range(n), 2):
        a, b = sorted((d.symbols[i], d.symbols[j]))
        candidates.append((float(d.entries[i, j]), a, b))
    candidates.sort()

    ds = DisjointSet(d.symbols)
    edges: List[TreeEdge] = []
    for w, a, b in candidates:
        if ds.merge(a, b):
            edges.append(TreeEdge(a, b, w))
            if len(edges) == n - 1:
                break
    return SpanningTree(tuple(d.symbols), tuple(edges))


# ─────────────────────────────────────────
# 안정성 / 군집 보고서
# ─────────────────────────────────────────
@dataclass(frozen=True)
class StabilityReport:
    period_a: str
    period_b: str
    shared_edges: int
    overlap_fraction: float


def edge_overlap(a: SpanningTree, b: SpanningTree, labels: Tuple[str, str] = ("a", "b")) -> StabilityReport:
    """두 트리(같은 심볼 집합)에 모두 있는 무방향 간선 수와 그 비율."""
    if set(a.symbols) != set(b.symbols):
        diff = sorted(set(a.symbols) ^ set(b.symbols))
        raise SymbolSetMismatchError(f"두 트리의 심볼 집합이 다릅니다: {', '.join(diff)}")
    shared = len(a.edge_set & b.edge_set)
    return StabilityReport(labels[0], labels[1], shared, shared / (a.n - 1))


def stability_table(trees: Sequence[Tuple[str, SpanningTree]]) -> List[StabilityReport]:
    """연속한 기간 쌍마다 edge_overlap. 심볼 집합이 다르면 공통 심볼 여부와 무관하게 오류입니다."""
    return [
        edge_overlap(ta, tb, (la, lb))
        for (la, ta), (lb, tb) in zip(trees, trees[1:])
    ]


@dataclass(frozen=True)
class ClassClustering:
    asset_class: AssetClass
    n_assets: int
    intra_edges: int
    cross_edges: int

    @property
    def intra_fraction(self) -> float:
        total = self.intra_edges + self.cross_edges
        return self.intra_edges / total if total else math.nan


@dataclass(frozen=True)
class ClusteringReport:
    per_class: Tuple[ClassClustering, ...]
    intra_total: int
    cross_total: int

    @property
    def intra_fraction(self) -> float:
        return self.intra_total / (self.intra_total + self.cross_total)


def class_clustering(t: SpanningTree, meta: Sequence[AssetMeta]) -> ClusteringReport:
    """
    간선을 같은 유형끼리(intra) / 다른 유형 사이(cross)로 나눕니다.
    유형별 cross_edges 는 그 유형에 닿는 cross 간선 수이고, intra_total + cross_total = n - 1 입니다.
    """
    classes = {m.symbol: m.asset_class for m in meta}
    unknown = [s for s in t.symbols if s not in classes]
    if unknown:
        raise UnknownSymbolError(f"메타데이터에 없는 심볼: {', '.join(unknown)}")

    present = sorted({classes[s] for s in t.symbols}, key=lambda c: c.value)
    intra = {c: 0 for c in present}
    cross = {c: 0 for c in present}
    for e in t.edges:
        ca, cb = classes[e.a], classes[e.b]
        if ca == cb:
            intra[ca] += 1
        else:
            cross[ca] += 1
            cross[cb] += 1
    counts = {c: sum(1 for s in t.symbols if classes[s] == c) for c in present}
    per_class = tuple(ClassClustering(c, counts[c], intra[c], cross[c]) for c in present)
    intra_total = sum(intra.values())
    return ClusteringReport(per_class, intra_total, t.n - 1 - intra_total)


# ─────────────────────────────────────────
# 내보내기 (DOT / JSON)
# ─────────────────────────────────────────
class TreeNode(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    symbol: str
    asset_class: Optional[str] = Field(None, alias="class")


class TreeEdgeModel(BaseModel):
    a: str
    b: str
    distance: float = Field(..., ge=0.0)


class TreeDocument(BaseModel):
    nodes: List[TreeNode]
    edges: List[TreeEdgeModel]
    config: Optional[Dict[str, Any]] = None


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_tree(
    t: SpanningTree,
    meta: Optional[Sequence[AssetMeta]] = None,
    fmt: str = "dot",
    config: Optional[Dict[str, Any]] = None,
) -> bytes:
    """
    트리를 DOT 또는 JSON 바이트열로 내보냅니다.
    config 를 주면 DOT 은 주석으로, JSON 은 config 키로 실행 설정을 함께 기록합니다.
    """
    classes = {m.symbol: m.asset_class for m in (meta or [])}
    if fmt == "dot":
        lines = []
        if config is not None:
            lines.append("// config: " + json.dumps(config, sort_keys=True))
        lines.append("graph mst {")
        lines.append("  node [style=filled];")
        for s in t.symbols:
            c = classes.get(s)
            color = CLASS_COLORS.get(c, UNKNOWN_COLOR)
            label = c.value if c is not None else "unknown"
            lines.append(f'  {_dot_quote(s)} [fillcolor="{color}", class="{label}"];')
        for e in t.edges:
            lines.append(f'  {_dot_quote(e.a)} -- {_dot_quote(e.b)} [label="{e.distance:.4f}"];')
        lines.append("}")
        return ("\n".join(lines) + "\n").encode("utf-8")

    if fmt == "json":
        doc = TreeDocument(
            nodes=[TreeNode(symbol=s, asset_class=classes[s].value if s in classes else None) for s in t.symbols],
            edges=[TreeEdgeModel(a=e.a, b=e.b, distance=e.distance) for e in t.edges],
            config=config,
        )
        payload = doc.model_dump(by_alias=True, exclude_none=True)
        return (json.dumps(payload, indent=2, ensure_ascii=False) + "\n").encode("utf-8")

    raise MalformedInputError(f"지원하지 않는 내보내기 형식: {fmt}")


def parse_tree_json(data: Union[bytes, str]) -> SpanningTree:
    """export_tree(fmt="json") 결과를 다시 SpanningTree 로 읽습니다."""
    try:
        doc = TreeDocument.model_validate(json.loads(data))
    except ValueError as e:
        raise MalformedInputError(f"트리 JSON 형식 오류: {e}")
    return SpanningTree(
        tuple(node.symbol for node in doc.nodes),
        tuple(TreeEdge(e.a, e.b, e.distance) for e in doc.edges),
    )
