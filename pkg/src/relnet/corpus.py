"""Keyword catalogs, name normalization and query-pair planning."""

from __future__ import annotations

import csv
import enum
import hashlib
import re
import unicodedata
import warnings
from dataclasses import dataclass, field
from math import comb
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .errors import CatalogError, DataWarning, InvalidKeyword, SchemaError


class Kind(enum.Enum):
    RESEARCHER = "researcher"
    TOPIC = "topic"


class Category(enum.Enum):
    BIO_MEDICAL = "bio_medical"
    PHYSICAL = "physical"
    ENGINEERING = "engineering"
    GENERAL = "general"


class PairKind(enum.Enum):
    RESEARCHER_RESEARCHER = "RR"
    RESEARCHER_TOPIC = "RT"


# Letters that survive NFKD decomposition unchanged.
_FOLD_TABLE = str.maketrans({
    "ø": "o", "Ø": "O",
    "ß": "ss",
    "æ": "ae", "Æ": "AE",
    "œ": "oe", "Œ": "OE",
    "đ": "d", "Đ": "D",
    "ł": "l", "Ł": "L",
    "ı": "i",
})

_INITIAL = re.compile(r"^[^\W\d_]\.$")


def fold_diacritics(text: str) -> str:
    decomposed = unicodedata.normalize("NFKD", text.translate(_FOLD_TABLE))
    stripped = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
    return unicodedata.normalize("NFC", stripped)


def normalize_text(raw: str) -> str:
    """Fold diacritics and collapse whitespace; used for topic keywords."""
    text = " ".join(fold_diacritics(raw).split())
    if not text:
        raise InvalidKeyword(f"keyword is empty after normalization: {raw!r}")
    return text


def normalize_name(raw: str) -> str:
    """Normalize a researcher name.

    Diacritics are folded to base letters, whitespace is collapsed and
    middle initials (a single letter followed by a period, strictly between
    the first and last tokens) are dropped.

    >>> normalize_name("  John  Q. Doe ")
    'John Doe'
    >>> normalize_name("Jörg Müller")
    'Jorg Muller'
    """
    tokens = normalize_text(raw).split(" ")
    if len(tokens) > 2:
        middle = [tok for tok in tokens[1:-1] if not _INITIAL.match(tok)]
        tokens = [tokens[0], *middle, tokens[-1]]
    return " ".join(tokens)


@dataclass(frozen=True)
class Keyword:
    id: int
    text: str
    kind: Kind
    category: Category | None = None

    def __post_init__(self) -> None:
        if not self.text:
            raise InvalidKeyword("keyword text must be non-empty")
        if (self.kind is Kind.TOPIC) != (self.category is not None):
            raise InvalidKeyword(f"category must be set iff keyword is a topic: {self!r}")


@dataclass
class KeywordCatalog:
    """Researchers take ids ``0..R-1``; topics follow with ``R..R+T-1``."""

    researchers: list[Keyword] = field(default_factory=list)
    topics: list[Keyword] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self._by_id = {kw.id: kw for kw in (*self.researchers, *self.topics)}

    @classmethod
    def from_texts(
        cls,
        researcher_names: Iterable[str],
        topics: Iterable[tuple[str, Category | str]] = (),
    ) -> "KeywordCatalog":
        seen: dict[str, str] = {}
        notes: list[str] = []

        def admit(text: str, raw: str) -> bool:
            key = text.casefold()
            if key in seen:
                msg = f"duplicate keyword {raw!r} collapses onto {seen[key]!r}; keeping first"
                notes.append(msg)
                warnings.warn(msg, DataWarning, stacklevel=3)
                return False
            seen[key] = text
            return True

        researchers: list[Keyword] = []
        for raw in researcher_names:
            text = normalize_name(raw)
            if admit(text, raw):
                researchers.append(Keyword(len(researchers), text, Kind.RESEARCHER))

        topic_rows: list[tuple[str, Category]] = []
        for raw, cat in topics:
            text = normalize_text(raw)
            category = parse_category(cat)
            if admit(text, raw):
                topic_rows.append((text, category))
        offset = len(researchers)
        topic_kws = [
            Keyword(offset + i, text, Kind.TOPIC, cat) for i, (text, cat) in enumerate(topic_rows)
        ]
        return cls(researchers, topic_kws, notes)

    @property
    def n_researchers(self) -> int:
        return len(self.researchers)

    @property
    def n_topics(self) -> int:
        return len(self.topics)

    def __len__(self) -> int:
        return len(self._by_id)

    def __getitem__(self, keyword_id: int) -> Keyword:
        try:
            return self._by_id[keyword_id]
        except KeyError:
            raise CatalogError(f"unknown keyword id {keyword_id}") from None

    def __contains__(self, keyword_id: object) -> bool:
        return keyword_id in self._by_id

    @property
    def researcher_ids(self) -> list[int]:
        return [kw.id for kw in self.researchers]

    @property
    def topic_ids(self) -> list[int]:
        return [kw.id for kw in self.topics]


def parse_category(value: Category | str) -> Category:
    if isinstance(value, Category):
        return value
    try:
        return Category(value.strip().lower())
    except ValueError:
        allowed = ", ".join(c.value for c in Category)
        raise SchemaError(f"unknown topic category {value!r} (expected one of {allowed})") from None


def _read_rows(path: Path, required: Sequence[str]) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [col for col in required if col not in header]
        if missing and header:
            raise SchemaError(f"{path}: missing column(s) {missing}; header is {header}")
        return list(reader)


def load_catalog(researchers_path: str | Path, topics_path: str | Path) -> KeywordCatalog:
    """Read the researchers CSV (``text``) and topics CSV (``text,category``)."""
    researcher_rows = _read_rows(Path(researchers_path), ["text"])
    topic_rows = _read_rows(Path(topics_path), ["text", "category"])
    return KeywordCatalog.from_texts(
        (row["text"] for row in researcher_rows),
        ((row["text"], row["category"]) for row in topic_rows),
    )


def write_catalog(catalog: KeywordCatalog, researchers_path: str | Path, topics_path: str | Path) -> None:
    with open(researchers_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["text"])
        writer.writerows([kw.text] for kw in catalog.researchers)
    with open(topics_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["text", "category"])
        writer.writerows([kw.text, kw.category.value] for kw in catalog.topics)


class QueryPair(NamedTuple):
    a: int
    b: int
    kind: PairKind


def expected_pair_count(n_researchers: int, n_topics: int) -> int:
    return comb(n_researchers + n_topics, 2) - comb(n_topics, 2)


def plan_queries(catalog: KeywordCatalog) -> list[QueryPair]:
    """Every unordered keyword pair except topic-topic ones.

    Researcher-researcher pairs come first, then researcher-topic pairs,
    each in lexicographic id order.
    """
    rr = PairKind.RESEARCHER_RESEARCHER
    rt = PairKind.RESEARCHER_TOPIC
    rids = catalog.researcher_ids
    tids = catalog.topic_ids
    plan = [QueryPair(a, b, rr) for i, a in enumerate(rids) for b in rids[i + 1:]]
    plan.extend(QueryPair(r, t, rt) for r in rids for t in tids)
    return plan


def plan_lines(plan: Iterable[QueryPair]) -> Iterable[str]:
    for pair in plan:
        yield f"{pair.a},{pair.b},{pair.kind.value}\n"


def plan_digest(plan: Iterable[QueryPair]) -> str:
    h = hashlib.sha256()
    for line in plan_lines(plan):
        h.update(line.encode())
    return h.hexdigest()


def write_plan(plan: Sequence[QueryPair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("a_id,b_id,kind\n")
        fh.writelines(plan_lines(plan))


def read_plan(path: str | Path) -> list[QueryPair]:
    rows = _read_rows(Path(path), ["a_id", "b_id", "kind"])
    try:
        return [QueryPair(int(r["a_id"]), int(r["b_id"]), PairKind(r["kind"])) for r in rows]
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: malformed plan row: {exc}") from None
