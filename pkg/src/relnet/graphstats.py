"""Shortest paths and centralities on the researcher graph.

Edge distances are reciprocal link weights, so strongly related researchers
are close. All-pairs distances come from scipy's Dijkstra; betweenness is
accumulated Brandes-style on top of them.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Collection, NamedTuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import UndefinedMetric
from .metrics import MetricVector, ResearcherGraph

TIE_ATOL = 1e-12
TIE_RTOL = 1e-12


def length_matrix(G: ResearcherGraph) -> np.ndarray:
    """Dense reciprocal-weight distances, ``inf`` where there is no edge."""
    W = G.weight_matrix()
    with np.errstate(divide="ignore"):
        L = np.where(W > 0, 1.0 / W, np.inf)
    return L


def _sparse_lengths(G: ResearcherGraph) -> csr_matrix:
    idx = G.index
    rows, cols, data = [], [], []
    for (a, b), w in G.edges.items():
        rows += [idx[a], idx[b]]
        cols += [idx[b], idx[a]]
        data += [1.0 / w, 1.0 / w]
    return csr_matrix((data, (rows, cols)), shape=(G.n, G.n))


def distance_matrix(G: ResearcherGraph, sources: Collection[int] | None = None) -> np.ndarray:
    """Shortest distances in node order; rows restricted to ``sources`` if given."""
    if G.n == 0:
        return np.zeros((0, 0))
    indices = None if sources is None else [G.index[s] for s in sources]
    D = np.atleast_2d(dijkstra(_sparse_lengths(G), directed=False, indices=indices))
    if indices is None:
        # summation order can differ by one ulp between directions
        D = np.minimum(D, D.T)
    return D


def shortest_path_lengths(G: ResearcherGraph, source: int) -> dict[int, float]:
    """Single-source Dijkstra; unreachable nodes are left out of the result."""
    adj = G.adjacency
    if source not in adj:
        raise KeyError(source)
    dist = {source: 0.0}
    done: set[int] = set()
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, w in adj[u].items():
            nd = d + 1.0 / w
            if nd < dist.get(v, np.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def betweenness(G: ResearcherGraph, distances: np.ndarray | None = None) -> MetricVector:
    """Normalized shortest-path betweenness under reciprocal-weight distances.

    Endpoints are not counted and credit is split evenly over equal-length
    shortest paths. Path lengths within ``TIE_ATOL + TIE_RTOL * d`` count as
    equal. Normalization is ``2 / ((n-1)(n-2))`` over unordered pairs.
    """
    n = G.n
    bc = np.zeros(n)
    if n < 3:
        return MetricVector("betweenness", bc, list(G.nodes))
    D = distance_matrix(G) if distances is None else distances
    L = length_matrix(G)
    for s in range(n):
        d = D[s]
        reach = np.flatnonzero(np.isfinite(d))
        order = reach[np.argsort(d[reach], kind="stable")]
        m = len(order)
        if m < 3:
            continue
        ds = d[order]
        slack = np.abs(ds[:, None] + L[np.ix_(order, order)] - ds[None, :])
        pred = (slack <= TIE_ATOL + TIE_RTOL * ds[None, :]).astype(float)
        sigma = np.zeros(m)
        sigma[0] = 1.0
        for k in range(1, m):
            sigma[k] = pred[:, k] @ sigma
        delta = np.zeros(m)
        for k in range(m - 1, 0, -1):
            delta += pred[:, k] * sigma * ((1.0 + delta[k]) / sigma[k])
        bc[order[1:]] += delta[1:]
    # each unordered pair was visited from both ends
    bc /= (n - 1) * (n - 2)
    return MetricVector("betweenness", bc, list(G.nodes))


def closeness(G: ResearcherGraph, distances: np.ndarray | None = None) -> MetricVector:
    """Closeness over the reachable set, scaled by the fraction of nodes reached."""
    n = G.n
    out = np.zeros(n)
    if n < 2:
        return MetricVector("closeness", out, list(G.nodes))
    D = distance_matrix(G) if distances is None else distances
    for i in range(n):
        d = D[i]
        mask = np.isfinite(d)
        mask[i] = False
        k = int(mask.sum())
        if k:
            out[i] = (k / d[mask].sum()) * (k / (n - 1))
    return MetricVector("closeness", out, list(G.nodes))


class SubsetPathStats(NamedTuple):
    mean: float
    reachable_pairs: int
    unreachable_pairs: int


def subset_path_stats(
    G: ResearcherGraph, subset: Collection[int], distances: np.ndarray | None = None
) -> SubsetPathStats:
    """Mean shortest distance over mutually reachable unordered pairs of ``subset``.

    ``distances`` may be a full all-pairs matrix in node order; otherwise
    only the rows for ``subset`` are computed.
    """
    members = sorted(set(subset))
    if len(members) < 2:
        raise UndefinedMetric("need at least two researchers to average path lengths")
    cols = [G.index[m] for m in members]
    if distances is None:
        rows = distance_matrix(G, members)
    else:
        rows = distances[cols]
    sub = rows[:, cols]
    iu = np.triu_indices(len(members), k=1)
    pairs = sub[iu]
    ok = np.isfinite(pairs)
    if not ok.any():
        raise UndefinedMetric("no pair in the subset is connected")
    return SubsetPathStats(float(pairs[ok].mean()), int(ok.sum()), int((~ok).sum()))


def avg_shortest_path_among(
    G: ResearcherGraph, subset: Collection[int], distances: np.ndarray | None = None
) -> float:
    return subset_path_stats(G, subset, distances).mean


@dataclass
class CcdfSeries:
    x: np.ndarray
    fraction: np.ndarray

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("x,ccdf\n")
            for x, p in zip(self.x, self.fraction):
                fh.write(f"{float(x)!r},{float(p)!r}\n")


def ccdf(values: np.ndarray) -> CcdfSeries:
    """P(X >= x) at each distinct value of ``values``."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("CCDF of an empty sample")
    xs, counts = np.unique(values, return_counts=True)
    at_least = np.cumsum(counts[::-1])[::-1]
    return CcdfSeries(xs, at_least / values.size)


def ccdf_total_weights(G: ResearcherGraph) -> CcdfSeries:
    return ccdf(G.weight_matrix().sum(axis=1))
