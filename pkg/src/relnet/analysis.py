"""Selection coverage, path-length tests and topic correlation rankings."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats

from .errors import SchemaError, SelectionError, StatError, UndefinedMetric
from .graphstats import subset_path_stats
from .metrics import MetricVector, ResearcherGraph


class SelectionMode(enum.Enum):
    VISIBILITY_BOOST = "vb"
    RAW_HITS = "raw"
    RANDOM = "random"


@dataclass(frozen=True)
class SelectionSet:
    key: int
    selected: tuple[int, ...]
    mode: SelectionMode


def selection_size(n: int, fraction: float) -> int:
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    # guard against 0.2 * 1000 landing a hair above 200
    return max(1, math.ceil(fraction * n - 1e-9))


def top_fraction(
    scores: Sequence[float],
    fraction: float,
    ids: Sequence[int] | None = None,
    key: int = 0,
    mode: SelectionMode = SelectionMode.VISIBILITY_BOOST,
) -> SelectionSet:
    """The ``ceil(fraction * R)`` best-scoring researchers; ties go to the lower id.

    NaN scores are treated as undefined and never selected.
    """
    scores = np.asarray(scores, dtype=float)
    ids = np.arange(len(scores)) if ids is None else np.asarray(ids)
    k = selection_size(len(scores), fraction)
    ok = np.isfinite(scores)
    if ok.sum() < k:
        raise SelectionError(f"only {int(ok.sum())} defined scores for a selection of {k}")
    s, i = scores[ok], ids[ok]
    order = np.lexsort((i, -s))[:k]
    return SelectionSet(key, tuple(sorted(int(x) for x in i[order])), mode)


def unique_coverage(selections: Sequence[SelectionSet]) -> int:
    covered: set[int] = set()
    for sel in selections:
        covered.update(sel.selected)
    return len(covered)


def random_selections(
    R: int, fraction: float, trials: int, seed: int, ids: Sequence[int] | None = None
) -> list[SelectionSet]:
    """Uniform samples without replacement, one independently seeded stream per trial."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    ids = np.arange(R) if ids is None else np.asarray(ids)
    k = selection_size(R, fraction)
    out = []
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        picked = rng.choice(R, size=k, replace=False)
        out.append(SelectionSet(trial, tuple(sorted(int(x) for x in ids[picked])), SelectionMode.RANDOM))
    return out


def expected_random_coverage(R: int, k: int, trials: int) -> tuple[float, float]:
    """Mean and standard deviation of the union size of ``trials`` random k-subsets of R."""
    miss1 = (R - k) / R
    mean_uncovered = R * miss1**trials
    miss2 = (R - k) * (R - k - 1) / (R * (R - 1)) if R > 1 else 0.0
    var = R * miss1**trials * (1 - miss1**trials) + R * (R - 1) * (miss2**trials - miss1 ** (2 * trials))
    return R - mean_uncovered, math.sqrt(max(var, 0.0))


# -- hypothesis testing -------------------------------------------------------

class TTestResult(NamedTuple):
    t: float
    p: float
    df: float
    degenerate: bool


def two_sample_ttest(x: Sequence[float], y: Sequence[float], equal_var: bool = True) -> TTestResult:
    """Two-sided two-sample t-test (Student's pooled by default, Welch otherwise).

    When both samples have zero variance the statistic is 0 (equal means)
    or infinite, and ``degenerate`` is set.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n1, n2 = len(x), len(y)
    if n1 < 2 or n2 < 2:
        raise StatError(f"each sample needs at least 2 values, got {n1} and {n2}")
    diff = x.mean() - y.mean()
    v1, v2 = x.var(ddof=1), y.var(ddof=1)
    if equal_var:
        df = n1 + n2 - 2
        pooled = ((n1 - 1) * v1 + (n2 - 1) * v2) / df
        se2 = pooled * (1 / n1 + 1 / n2)
    else:
        a, b = v1 / n1, v2 / n2
        se2 = a + b
        df = se2**2 / (a**2 / (n1 - 1) + b**2 / (n2 - 1)) if se2 > 0 else n1 + n2 - 2
    if se2 == 0:
        if diff == 0:
            return TTestResult(0.0, 1.0, float(df), True)
        return TTestResult(math.copysign(math.inf, diff), 0.0, float(df), True)
    t = diff / math.sqrt(se2)
    p = 2 * stats.t.sf(abs(t), df)
    return TTestResult(float(t), float(min(p, 1.0)), float(df), False)


@dataclass
class PathLengthComparison:
    vb_sample: list[float]
    rnd_sample: list[float]
    t: float
    p: float
    df: float
    degenerate: bool = False
    excluded: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "vb_sample": self.vb_sample,
            "rnd_sample": self.rnd_sample,
            "t": _json_float(self.t),
            "p": _json_float(self.p),
            "df": self.df,
            "degenerate": self.degenerate,
            "excluded": self.excluded,
        }


def _path_sample(G, sets, distances):
    sample, excluded, unreachable = [], [], 0
    for sel in sets:
        try:
            st = subset_path_stats(G, sel.selected, distances)
        except UndefinedMetric:
            excluded.append(sel.key)
            continue
        sample.append(st.mean)
        unreachable += st.unreachable_pairs
    return sample, excluded, unreachable


def path_length_comparison(
    G: ResearcherGraph,
    vb_sets: Sequence[SelectionSet],
    rnd_sets: Sequence[SelectionSet],
    equal_var: bool = True,
    distances: np.ndarray | None = None,
) -> PathLengthComparison:
    """Compare mean shortest-path length within VB-selected vs random sets."""
    vb, vb_excl, vb_unr = _path_sample(G, vb_sets, distances)
    rnd, rnd_excl, rnd_unr = _path_sample(G, rnd_sets, distances)
    excluded = {
        "vb_sets": vb_excl,
        "rnd_sets": rnd_excl,
        "vb_unreachable_pairs": vb_unr,
        "rnd_unreachable_pairs": rnd_unr,
    }
    if len(vb) < 2 or len(rnd) < 2:
        raise StatError(f"need >= 2 defined path averages per group, got {len(vb)} and {len(rnd)}")
    res = two_sample_ttest(vb, rnd, equal_var=equal_var)
    return PathLengthComparison(vb, rnd, res.t, res.p, res.df, res.degenerate, excluded)


# -- correlations -------------------------------------------------------------

def _flat(v: np.ndarray) -> bool:
    scale = np.abs(v).max()
    return bool(np.ptp(v) <= 1e-12 * scale) if scale > 0 else True


def correlate(x: Sequence[float], y: Sequence[float], method: str = "pearson") -> float:
    """Pearson (or Spearman) correlation over entries where both values are finite."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise SchemaError(f"vectors differ in length: {x.shape} vs {y.shape}")
    ok = np.isfinite(x) & np.isfinite(y)
    x, y = x[ok], y[ok]
    if len(x) < 3:
        raise UndefinedMetric(f"correlation needs >= 3 paired values, got {len(x)}")
    if _flat(x) or _flat(y):
        raise UndefinedMetric("correlation undefined for a constant vector")
    if method == "spearman":
        x, y = stats.rankdata(x), stats.rankdata(y)
    elif method != "pearson":
        raise ValueError(f"unknown correlation method {method!r}")
    xc, yc = x - x.mean(), y - y.mean()
    # rescale first so the squared norms cannot underflow or overflow
    xc, yc = xc / np.abs(xc).max(), yc / np.abs(yc).max()
    r = (xc @ yc) / math.sqrt((xc @ xc) * (yc @ yc))
    return float(np.clip(r, -1.0, 1.0))


@dataclass
class CorrelationReport:
    target: str
    topic_ids: list[int]
    topic_texts: list[str]
    coefficients: np.ndarray
    n: list[int]
    ranking: list[int]
    method: str = "pearson"

    def coefficient(self, topic: int) -> float:
        return float(self.coefficients[self.topic_ids.index(topic)])

    @property
    def n_undefined(self) -> int:
        return int((~np.isfinite(self.coefficients)).sum())

    def to_json(self, movements: list | None = None) -> dict:
        text = dict(zip(self.topic_ids, self.topic_texts))
        out = {
            "target": self.target,
            "method": self.method,
            "topics": [
                {"id": tid, "text": txt, "coefficient": _json_float(c), "n": k}
                for tid, txt, c, k in zip(self.topic_ids, self.topic_texts, self.coefficients, self.n)
            ],
            "ranking": [text[t] for t in self.ranking],
        }
        if movements is not None:
            out["movements"] = [
                {"topic": text.get(m.topic, str(m.topic)), "delta": m.delta, "direction": m.direction}
                for m in movements
            ]
        return out


def topic_correlation_report(
    vb: np.ndarray,
    target: MetricVector,
    topic_ids: Sequence[int],
    topic_texts: Sequence[str],
    method: str = "pearson",
) -> CorrelationReport:
    """Correlate each topic's VB column with ``target``; rank topics high to low.

    Topics whose coefficient is undefined are kept with NaN and left out of
    the ranking. Equal coefficients rank by topic text.
    """
    if vb.shape != (len(target.values), len(topic_ids)):
        raise SchemaError(f"VB matrix {vb.shape} does not match target/topics")
    coefs = np.full(len(topic_ids), np.nan)
    counts = []
    for j in range(len(topic_ids)):
        col = vb[:, j]
        counts.append(int((np.isfinite(col) & target.defined).sum()))
        try:
            coefs[j] = correlate(col, target.values, method)
        except UndefinedMetric:
            pass
    defined = [j for j in range(len(topic_ids)) if np.isfinite(coefs[j])]
    defined.sort(key=lambda j: (-coefs[j], topic_texts[j]))
    return CorrelationReport(
        target.name, list(topic_ids), list(topic_texts), coefs, counts,
        [topic_ids[j] for j in defined], method,
    )


class Movement(NamedTuple):
    topic: int
    delta: int
    direction: str


def rank_movement(rank_a: Sequence[int], rank_b: Sequence[int], threshold: int = 20) -> list[Movement]:
    """Topics whose 1-based position changes by at least ``threshold`` places.

    ``delta = position_a - position_b``; positive deltas move toward the
    positive-correlation end and are reported as ``"up"``.
    """
    if sorted(rank_a) != sorted(rank_b) or len(set(rank_a)) != len(rank_a):
        raise SchemaError("rankings must order the same set of topics")
    pos_b = {t: i for i, t in enumerate(rank_b)}
    moves = []
    for i, t in enumerate(rank_a):
        delta = i - pos_b[t]
        if abs(delta) >= threshold:
            moves.append(Movement(t, delta, "up" if delta > 0 else "down"))
    return moves


class MapPoint(NamedTuple):
    topic: int
    x: float
    y: float


@dataclass
class CorrelationMap:
    x_target: str
    y_target: str
    points: list[MapPoint]
    omitted: int

    def write_csv(self, path, texts: dict[int, str]) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["topic", "x", "y"])
            for p in self.points:
                writer.writerow([texts.get(p.topic, str(p.topic)), repr(p.x), repr(p.y)])


def correlation_map(x_report: CorrelationReport, y_report: CorrelationReport) -> CorrelationMap:
    """Pair up each topic's coefficients from two reports; undefined ones are dropped."""
    if sorted(x_report.topic_ids) != sorted(y_report.topic_ids):
        raise SchemaError("reports cover different topic sets")
    points, omitted = [], 0
    for t in x_report.topic_ids:
        x, y = x_report.coefficient(t), y_report.coefficient(t)
        if math.isfinite(x) and math.isfinite(y):
            points.append(MapPoint(t, x, y))
        else:
            omitted += 1
    return CorrelationMap(x_report.target, y_report.target, points, omitted)


def _json_float(v: float):
    v = float(v)
    if math.isnan(v):
        return None
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v
