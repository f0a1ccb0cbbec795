"""Hit matrices, the researcher graph, and per-researcher metrics.

All log-based quantities use the natural logarithm so that the exponential
of the link-weight entropy reads as an effective number of links.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import KeywordCatalog, Kind
from .errors import CatalogError, DataWarning, SchemaError, UndefinedMetric
from .harvester import HitSample


@dataclass
class TopicHitMatrix:
    values: np.ndarray
    researcher_ids: list[int]
    topic_ids: list[int]

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.researcher_ids), len(self.topic_ids)):
            raise SchemaError(
                f"matrix shape {self.values.shape} does not match "
                f"{len(self.researcher_ids)} researchers x {len(self.topic_ids)} topics"
            )
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise SchemaError("hit counts must be finite and non-negative")

    @cached_property
    def _rows(self) -> dict[int, int]:
        return {rid: i for i, rid in enumerate(self.researcher_ids)}

    @cached_property
    def _cols(self) -> dict[int, int]:
        return {tid: j for j, tid in enumerate(self.topic_ids)}

    def row(self, researcher_id: int) -> int:
        try:
            return self._rows[researcher_id]
        except KeyError:
            raise CatalogError(f"researcher {researcher_id} not in matrix") from None

    def col(self, topic_id: int) -> int:
        try:
            return self._cols[topic_id]
        except KeyError:
            raise CatalogError(f"topic {topic_id} not in matrix") from None


@dataclass
class ResearcherGraph:
    """Undirected weighted graph; each unordered pair is stored once as (min, max)."""

    nodes: list[int]
    edges: dict[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        known = set(self.nodes)
        if len(known) != len(self.nodes):
            raise SchemaError("duplicate node ids")
        clean: dict[tuple[int, int], float] = {}
        for (a, b), w in self.edges.items():
            if a == b:
                raise SchemaError(f"self-loop on node {a}")
            if a not in known or b not in known:
                raise SchemaError(f"edge ({a},{b}) references unknown node")
            if not (w > 0 and math.isfinite(w)):
                raise SchemaError(f"edge ({a},{b}) has non-positive weight {w}")
            clean[(min(a, b), max(a, b))] = float(w)
        self.edges = clean

    @property
    def n(self) -> int:
        return len(self.nodes)

    @cached_property
    def index(self) -> dict[int, int]:
        return {node: i for i, node in enumerate(self.nodes)}

    @cached_property
    def adjacency(self) -> dict[int, dict[int, float]]:
        adj: dict[int, dict[int, float]] = {node: {} for node in self.nodes}
        for (a, b), w in self.edges.items():
            adj[a][b] = w
            adj[b][a] = w
        return adj

    def weight(self, a: int, b: int) -> float:
        return self.edges.get((min(a, b), max(a, b)), 0.0)

    def weight_matrix(self) -> np.ndarray:
        """Dense symmetric weights in node order, zero where no edge exists."""
        W = np.zeros((self.n, self.n))
        idx = self.index
        for (a, b), w in self.edges.items():
            W[idx[a], idx[b]] = W[idx[b], idx[a]] = w
        return W

    def scaled(self, alpha: float) -> "ResearcherGraph":
        return ResearcherGraph(list(self.nodes), {e: w * alpha for e, w in self.edges.items()})


@dataclass
class MetricVector:
    """Per-researcher values; undefined entries hold NaN and ``defined`` False."""

    name: str
    values: np.ndarray
    researcher_ids: list[int]
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.researcher_ids),):
            raise SchemaError(f"{self.name}: expected {len(self.researcher_ids)} values")

    @property
    def defined(self) -> np.ndarray:
        return np.isfinite(self.values)

    @property
    def n_undefined(self) -> int:
        return int((~self.defined).sum())

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("researcher_id,value,defined\n")
            for rid, v in zip(self.researcher_ids, self.values):
                ok = math.isfinite(v)
                fh.write(f"{rid},{float(v)!r},{int(ok)}\n" if ok else f"{rid},nan,0\n")


# -- building -----------------------------------------------------------------

def _split_samples(samples: Iterable[HitSample], catalog: KeywordCatalog, want: frozenset[Kind]):
    """Yield (a, b, aggregate) for usable samples whose endpoint kinds equal ``want``."""
    for s in samples:
        a, b = s.pair.a, s.pair.b
        if a not in catalog or b not in catalog:
            raise SchemaError(f"sample ({a},{b}) references an id outside the catalog")
        kinds = frozenset({catalog[a].kind, catalog[b].kind})
        if kinds != want or (len(kinds) == 1 and a == b):
            continue
        if s.failed:
            continue
        yield a, b, float(s.aggregate)


def build_topic_matrix(samples: Iterable[HitSample], catalog: KeywordCatalog) -> TopicHitMatrix:
    """Place each researcher-topic aggregate; missing or failed pairs become 0."""
    H = TopicHitMatrix(
        np.zeros((catalog.n_researchers, catalog.n_topics)),
        catalog.researcher_ids,
        catalog.topic_ids,
    )
    seen = np.zeros(H.values.shape, dtype=bool)
    for a, b, agg in _split_samples(samples, catalog, frozenset({Kind.RESEARCHER, Kind.TOPIC})):
        r, t = (a, b) if catalog[a].kind is Kind.RESEARCHER else (b, a)
        i, j = H.row(r), H.col(t)
        H.values[i, j] = agg
        seen[i, j] = True
    missing = int((~seen).sum())
    if missing:
        warnings.warn(f"{missing} researcher-topic pair(s) missing; filled with 0", DataWarning)
    return H


def build_researcher_graph(samples: Iterable[HitSample], catalog: KeywordCatalog) -> ResearcherGraph:
    """Researcher-researcher aggregates become edge weights; zero aggregates are dropped."""
    edges: dict[tuple[int, int], float] = {}
    seen = 0
    for a, b, agg in _split_samples(samples, catalog, frozenset({Kind.RESEARCHER})):
        seen += 1
        key = (min(a, b), max(a, b))
        if agg > 0:
            edges[key] = agg
        else:
            edges.pop(key, None)
    R = catalog.n_researchers
    expected = R * (R - 1) // 2
    if seen < expected:
        warnings.warn(f"{expected - seen} researcher-researcher pair(s) missing; treated as 0", DataWarning)
    return ResearcherGraph(catalog.researcher_ids, edges)


# -- topic-side metrics -------------------------------------------------------

def visibility_boost(H: TopicHitMatrix, r: int, t: int) -> float:
    """Share of topic ``t`` hits held by ``r`` relative to ``r``'s share of all hits."""
    i, j = H.row(r), H.col(t)
    col = H.values[:, j].sum()
    row = H.values[i, :].sum()
    if col == 0 or row == 0:
        raise UndefinedMetric(f"visibility boost undefined for researcher {r}, topic {t}")
    return float(H.values[i, j] * H.values.sum() / (col * row))


def vb_matrix(H: TopicHitMatrix) -> np.ndarray:
    """Elementwise visibility boost; NaN marks entries with a zero row or column sum."""
    V = H.values
    rows = V.sum(axis=1, keepdims=True)
    cols = V.sum(axis=0, keepdims=True)
    denom = rows * cols
    with np.errstate(divide="ignore", invalid="ignore"):
        out = V * V.sum() / denom
    out[denom == 0] = np.nan
    return out


def total_topic_hits(H: TopicHitMatrix, r: int) -> float:
    return float(H.values[H.row(r)].sum())


def _entropy(p_counts: np.ndarray) -> float:
    total = p_counts.sum()
    p = p_counts[p_counts > 0] / total
    return float(-(p * np.log(p)).sum())


def topic_hit_entropy(H: TopicHitMatrix, r: int) -> float:
    row = H.values[H.row(r)]
    if row.sum() == 0:
        raise UndefinedMetric(f"researcher {r} has no topic hits")
    return _entropy(row)


def tth_vector(H: TopicHitMatrix) -> MetricVector:
    return MetricVector("TTH", H.values.sum(axis=1), list(H.researcher_ids))


def the_vector(H: TopicHitMatrix) -> MetricVector:
    vals = np.array([_entropy(row) if row.sum() > 0 else np.nan for row in H.values])
    return MetricVector("THE", vals, list(H.researcher_ids))


def vb_vector(H: TopicHitMatrix, t: int, vb: np.ndarray | None = None) -> MetricVector:
    vb = vb_matrix(H) if vb is None else vb
    return MetricVector("VB", vb[:, H.col(t)], list(H.researcher_ids), {"topic": t})


# -- graph-side metrics -------------------------------------------------------

def total_name_hits(G: ResearcherGraph, r: int) -> float:
    return float(sum(G.adjacency[r].values()))


def effective_degree(G: ResearcherGraph, r: int) -> float:
    """exp of the entropy of ``r``'s link-weight shares (equals degree for equal weights)."""
    w = np.fromiter(G.adjacency[r].values(), dtype=float)
    if w.sum() == 0:
        raise UndefinedMetric(f"researcher {r} has no links")
    return float(np.exp(_entropy(w)))


def incoming_weight(G: ResearcherGraph, r: int) -> float:
    """Sum over neighbours of the fraction of their total weight that goes to ``r``."""
    adj = G.adjacency
    return float(sum(w / total_name_hits(G, j) for j, w in adj[r].items()))


def tnh_vector(G: ResearcherGraph) -> MetricVector:
    return MetricVector("TNH", G.weight_matrix().sum(axis=1), list(G.nodes))


def effective_degree_vector(G: ResearcherGraph) -> MetricVector:
    vals = np.array([
        effective_degree(G, r) if G.adjacency[r] else np.nan for r in G.nodes
    ])
    return MetricVector("effective_degree", vals, list(G.nodes))


def incoming_weight_vector(G: ResearcherGraph) -> MetricVector:
    W = G.weight_matrix()
    tnh = W.sum(axis=1)
    inv = np.divide(1.0, tnh, out=np.zeros_like(tnh), where=tnh > 0)
    return MetricVector("incoming_weight", W.T @ inv, list(G.nodes))


# -- file formats -------------------------------------------------------------

def write_matrix(H: TopicHitMatrix, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(["researcher_id", *map(str, H.topic_ids)]) + "\n")
        for rid, row in zip(H.researcher_ids, H.values):
            fh.write(",".join([str(rid), *(repr(float(v)) for v in row)]) + "\n")


def read_matrix(path: str | Path) -> TopicHitMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "researcher_id":
        raise SchemaError(f"{path}: matrix header must start with 'researcher_id'")
    try:
        topic_ids = [int(c) for c in rows[0][1:]]
        researcher_ids = [int(r[0]) for r in rows[1:]]
        values = np.array([[float(v) for v in r[1:]] for r in rows[1:]], dtype=float)
    except (ValueError, IndexError) as exc:
        raise SchemaError(f"{path}: malformed matrix: {exc}") from None
    return TopicHitMatrix(values.reshape(len(researcher_ids), len(topic_ids)), researcher_ids, topic_ids)


def write_graph(G: ResearcherGraph, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("a_id,b_id,weight\n")
        for (a, b), w in sorted(G.edges.items()):
            fh.write(f"{a},{b},{w!r}\n")


def read_graph(path: str | Path, nodes: Sequence[int]) -> ResearcherGraph:
    """Read an edge list; ``nodes`` supplies the full node set, isolated ones included."""
    edges: dict[tuple[int, int], float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["a_id", "b_id", "weight"]:
            raise SchemaError(f"{path}: expected header a_id,b_id,weight")
        for row in reader:
            try:
                a, b, w = int(row["a_id"]), int(row["b_id"]), float(row["weight"])
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"{path}: malformed edge {row}: {exc}") from None
            if w > 0:
                edges[(min(a, b), max(a, b))] = w
    return ResearcherGraph(list(nodes), edges)
