"""Run query plans against a hit-count backend.

Each pair is sampled three times, the samples are reduced with the
median-outlier rule in :func:`aggregate_samples`, and the result is appended
to a samples CSV together with a JSON checkpoint so a multi-week run can be
resumed after interruption.
"""

from __future__ import annotations

import abc
import csv
import hashlib
import json
import logging
import os
import time
import urllib.parse
import urllib.request
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterator, Sequence

from .corpus import (
    Keyword,
    KeywordCatalog,
    Kind,
    PairKind,
    QueryPair,
    normalize_name,
    plan_digest,
)
from .errors import BackendError, CatalogError, DataWarning, ResumeError, SchemaError

log = logging.getLogger(__name__)

FILTER_WORD = "research"
N_SAMPLES = 3
SAMPLES_HEADER = "a_id,b_id,s1,s2,s3,aggregate,failed\n"
BACKEND_KEY_ENV = "RELNET_BACKEND_KEY"


def compose_query(pair: QueryPair, catalog: KeywordCatalog) -> list[str]:
    """Return ``[phrase(a), phrase(b), "research"]`` for a query pair."""
    if pair.a == pair.b:
        raise CatalogError(f"query pair must join two distinct keywords, got {pair.a} twice")
    a, b = sorted((pair.a, pair.b))
    return [catalog[a].text, catalog[b].text, FILTER_WORD]


def query_key(terms: Sequence[str]) -> str:
    """Canonical string used to key offline backend fixtures."""
    return " + ".join(terms)


def query_string(terms: Sequence[str]) -> str:
    """Search-engine syntax: keywords as exact phrases, filter word bare."""
    return " ".join(t if t == FILTER_WORD else f'"{t}"' for t in terms)


def aggregate_samples(samples: Sequence[float]) -> float:
    """Mean of three samples after dropping the one farther from the median.

    If the smallest and largest are equally far from the median, nothing is
    dropped and the result is the median itself.
    """
    if len(samples) != N_SAMPLES:
        raise ValueError(f"expected {N_SAMPLES} samples, got {len(samples)}")
    lo, mid, hi = sorted(samples)
    upper, lower = hi - mid, mid - lo
    if upper > lower:
        return float(lo + mid) / 2
    if upper < lower:
        return float(mid + hi) / 2
    return float(mid)


class SearchBackend(abc.ABC):
    """Anything that can estimate the hit count of a list of phrase terms."""

    @abc.abstractmethod
    def query(self, terms: Sequence[str]) -> int:
        ...


class OfflineBackend(SearchBackend):
    """Replays hit counts from a JSON fixture.

    The fixture maps ``" + ".join(terms)`` to a list of counts; successive
    calls for the same key consume the list, repeating the last value once
    it is exhausted. Unknown keys raise :class:`BackendError`.
    """

    def __init__(self, table: dict[str, list[int]]):
        self.table = {k: [int(v) for v in (vals if isinstance(vals, list) else [vals])]
                      for k, vals in table.items()}
        self._calls: dict[str, int] = {}

    @classmethod
    def from_file(cls, path: str | Path) -> "OfflineBackend":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def query(self, terms: Sequence[str]) -> int:
        key = query_key(terms)
        seq = self.table.get(key)
        if not seq:
            raise BackendError(f"offline backend has no entry for {key!r}")
        i = self._calls.get(key, 0)
        self._calls[key] = i + 1
        return seq[min(i, len(seq) - 1)]


class MockBackend(SearchBackend):
    """Deterministic pseudo hit counts derived from a hash of the query."""

    def __init__(self, seed: int = 0, scale: int = 10_000):
        self.seed = seed
        self.scale = scale

    def query(self, terms: Sequence[str]) -> int:
        digest = hashlib.sha256(f"{self.seed}|{query_key(terms)}".encode()).digest()
        u = int.from_bytes(digest[:8], "big") / 2**64
        # skewed toward small counts, as real co-occurrence hits are
        return int(self.scale * u**3)


class HttpJsonBackend(SearchBackend):
    """Generic JSON-over-HTTP hit-count service.

    Issues ``GET {endpoint}?q=<query>&key=<key>`` and reads an integer
    ``hits`` field from the response body. The key defaults to the
    ``RELNET_BACKEND_KEY`` environment variable.
    """

    def __init__(self, endpoint: str, key: str | None = None, timeout: float = 30.0):
        self.endpoint = endpoint
        self.key = key if key is not None else os.environ.get(BACKEND_KEY_ENV, "")
        self.timeout = timeout

    def query(self, terms: Sequence[str]) -> int:
        params = urllib.parse.urlencode({"q": query_string(terms), "key": self.key})
        try:
            with urllib.request.urlopen(f"{self.endpoint}?{params}", timeout=self.timeout) as resp:
                payload = json.load(resp)
            return int(payload["hits"])
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise BackendError(f"HTTP backend query failed: {exc}") from exc


class Pacer:
    """Enforces a minimum delay between consecutive backend requests."""

    def __init__(
        self,
        min_interval: float,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if min_interval < 0:
            raise ValueError("min_interval must be non-negative")
        self.min_interval = min_interval
        self.clock = clock
        self.sleep = sleep
        self._last: float | None = None

    def wait(self) -> None:
        if self._last is not None and self.min_interval > 0:
            remaining = self._last + self.min_interval - self.clock()
            if remaining > 0:
                self.sleep(remaining)
        self._last = self.clock()


@dataclass(frozen=True)
class HitSample:
    pair: QueryPair
    samples: tuple[float, ...]
    aggregate: float
    failed: bool = False
    timestamps: tuple[str, ...] = field(default=(), compare=False)

    def csv_line(self) -> str:
        s = ",".join(_fmt_count(v) for v in self.samples)
        return f"{self.pair.a},{self.pair.b},{s},{float(self.aggregate)!r},{int(self.failed)}\n"


def _fmt_count(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


@dataclass
class HarvestCheckpoint:
    digest: str
    completed: int
    offset: int

    def save(self, path: str | Path) -> None:
        tmp = Path(f"{path}.tmp")
        tmp.write_text(json.dumps(
            {"digest": self.digest, "completed": self.completed, "offset": self.offset},
            sort_keys=True,
        ))
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str | Path) -> "HarvestCheckpoint":
        data = json.loads(Path(path).read_text())
        return cls(data["digest"], int(data["completed"]), int(data["offset"]))


def checkpoint_path(samples_path: str | Path) -> Path:
    return Path(f"{samples_path}.ckpt.json")


def timestamps_path(samples_path: str | Path) -> Path:
    return Path(f"{samples_path}.log")


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def harvest(
    plan: Sequence[QueryPair],
    backend: SearchBackend,
    catalog: KeywordCatalog,
    samples_path: str | Path,
    min_interval: float = 0.0,
    checkpoint: HarvestCheckpoint | None = None,
    retries: int = 2,
    sample_delay: float = 0.0,
    pacer: Pacer | None = None,
    now: Callable[[], str] = _utcnow,
) -> Iterator[HitSample]:
    """Query every pair of ``plan`` three times, yielding one HitSample per pair.

    Every yielded sample has already been appended to ``samples_path`` and
    the checkpoint next to it updated, so stopping the iteration at any
    point leaves a resumable state. Per-sample timestamps go to a sidecar
    log to keep the samples file itself deterministic.

    A query that still fails after ``retries`` extra attempts marks the
    whole pair failed (zero samples and aggregate, ``failed=1``).
    """
    digest = plan_digest(plan)
    samples_path = Path(samples_path)
    ckpt_file = checkpoint_path(samples_path)
    pacer = pacer or Pacer(min_interval)

    if checkpoint is None:
        with open(samples_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(SAMPLES_HEADER)
        timestamps_path(samples_path).write_text("")
        checkpoint = HarvestCheckpoint(digest, 0, len(SAMPLES_HEADER.encode()))
        checkpoint.save(ckpt_file)
    else:
        if checkpoint.digest != digest:
            raise ResumeError("checkpoint digest does not match the plan being resumed")
        if not 0 <= checkpoint.completed <= len(plan):
            raise ResumeError(f"checkpoint reports {checkpoint.completed} of {len(plan)} pairs done")
        if not samples_path.exists() or samples_path.stat().st_size < checkpoint.offset:
            raise ResumeError(f"{samples_path} is shorter than the checkpoint offset")
        # drop anything written after the last completed pair
        with open(samples_path, "r+b") as fh:
            fh.truncate(checkpoint.offset)

    for idx in range(checkpoint.completed, len(plan)):
        pair = plan[idx]
        terms = compose_query(pair, catalog)
        values: list[int] = []
        stamps: list[str] = []
        failed = False
        for k in range(N_SAMPLES):
            if k and sample_delay > 0:
                pacer.sleep(sample_delay)
            hit = _query_with_retries(backend, terms, pacer, retries)
            if hit is None:
                failed = True
                break
            values.append(hit)
            stamps.append(now())
        if failed:
            warnings.warn(f"pair ({pair.a},{pair.b}) failed after {retries} retries", DataWarning)
            record = HitSample(pair, (0,) * N_SAMPLES, 0.0, True, tuple(stamps))
        else:
            record = HitSample(pair, tuple(values), aggregate_samples(values), False, tuple(stamps))

        line = record.csv_line().encode()
        with open(samples_path, "ab") as fh:
            fh.write(line)
            fh.flush()
            os.fsync(fh.fileno())
        with open(timestamps_path(samples_path), "a", encoding="utf-8") as fh:
            fh.write(f"{pair.a},{pair.b},{','.join(stamps)}\n")
        checkpoint = HarvestCheckpoint(digest, idx + 1, checkpoint.offset + len(line))
        checkpoint.save(ckpt_file)
        yield record


def _query_with_retries(
    backend: SearchBackend, terms: Sequence[str], pacer: Pacer, retries: int
) -> int | None:
    for attempt in range(retries + 1):
        pacer.wait()
        try:
            hit = backend.query(terms)
        except BackendError as exc:
            log.warning("query %r failed (attempt %d/%d): %s", terms, attempt + 1, retries + 1, exc)
            continue
        if hit < 0:
            log.warning("backend returned negative count %d for %r", hit, terms)
            continue
        return int(hit)
    return None


def read_samples(path: str | Path, catalog: KeywordCatalog | None = None) -> Iterator[HitSample]:
    """Parse a samples CSV.

    The file does not store pair kinds; they are resolved from ``catalog``
    when one is given and default to researcher-researcher otherwise.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = SAMPLES_HEADER.strip().split(",")
        if reader.fieldnames != expected:
            raise SchemaError(f"{path}: expected header {expected}, got {reader.fieldnames}")
        for row in reader:
            try:
                a, b = int(row["a_id"]), int(row["b_id"])
                samples = tuple(float(row[f"s{i}"]) for i in range(1, N_SAMPLES + 1))
                aggregate = float(row["aggregate"])
                failed = row["failed"].strip() not in ("", "0")
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"{path}: malformed samples row {row}: {exc}") from None
            kind = PairKind.RESEARCHER_RESEARCHER
            if catalog is not None:
                kind = pair_kind(catalog, a, b)
            yield HitSample(QueryPair(a, b, kind), samples, aggregate, failed)


def pair_kind(catalog: KeywordCatalog, a: int, b: int) -> PairKind:
    try:
        kinds = {catalog[a].kind, catalog[b].kind}
    except CatalogError as exc:
        raise SchemaError(f"sample references unknown keyword: {exc}") from None
    if kinds == {Kind.RESEARCHER}:
        return PairKind.RESEARCHER_RESEARCHER
    if kinds == {Kind.RESEARCHER, Kind.TOPIC}:
        return PairKind.RESEARCHER_TOPIC
    raise SchemaError(f"topic-topic pair ({a},{b}) is not part of any plan")


def write_samples(records: Sequence[HitSample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(SAMPLES_HEADER)
        for rec in records:
            fh.write(rec.csv_line())


def preselect_researchers(names: Sequence[str], backend: SearchBackend, k: int) -> list[Keyword]:
    """Keep the ``k`` names with the most single-name hits.

    Each name is queried once together with the filter word. Ties are
    broken by normalized name; a failed query counts as zero hits.
    """
    if not 0 < k <= len(names):
        raise ValueError(f"k must be in 1..{len(names)}, got {k}")
    scored: list[tuple[int, str]] = []
    seen: set[str] = set()
    for raw in names:
        name = normalize_name(raw)
        if name.casefold() in seen:
            warnings.warn(f"duplicate name {raw!r} skipped", DataWarning)
            continue
        seen.add(name.casefold())
        try:
            hits = int(backend.query([name, FILTER_WORD]))
        except BackendError as exc:
            warnings.warn(f"preselection query for {name!r} failed: {exc}; using 0 hits", DataWarning)
            hits = 0
        scored.append((hits, name))
    scored.sort(key=lambda item: (-item[0], item[1]))
    return [Keyword(i, name, Kind.RESEARCHER) for i, (_, name) in enumerate(scored[:k])]
