import unicodedata
from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import all_pairs_excluding_topic_topic
from relnet.corpus import (
    Category,
    KeywordCatalog,
    Kind,
    PairKind,
    expected_pair_count,
    load_catalog,
    normalize_name,
    plan_digest,
    plan_queries,
    read_plan,
    write_plan,
)
from relnet.errors import DataWarning, InvalidKeyword, SchemaError


def catalog(R, T):
    return KeywordCatalog.from_texts(
        [f"Person {i}" for i in range(R)],
        [(f"topic {j}", "general") for j in range(T)],
    )


@pytest.mark.parametrize(
    "raw, expected",
    [
        ("Jörg Müller", "Jorg Muller"),
        ("John Q. Doe", "John Doe"),
        ("Alice Smith", "Alice Smith"),
        ("  Mary   Ann  Jones ", "Mary Ann Jones"),
        ("José García", "Jose Garcia"),
        ("Søren Kierkegaard", "Soren Kierkegaard"),
        ("Anna B. C. Łukasiewicz", "Anna Lukasiewicz"),
        ("J. Doe", "J. Doe"),  # two tokens are never reduced
        ("Jan Q.", "Jan Q."),
    ],
)
def test_normalize_name(raw, expected):
    assert normalize_name(raw) == expected


@pytest.mark.parametrize("raw", ["", "   ", "\t\n"])
def test_normalize_name_rejects_empty(raw):
    with pytest.raises(InvalidKeyword):
        normalize_name(raw)


@given(st.text(min_size=1, max_size=40))
def test_normalize_name_idempotent(raw):
    try:
        once = normalize_name(raw)
    except InvalidKeyword:
        return
    assert normalize_name(once) == once
    assert not any(unicodedata.combining(c) for c in unicodedata.normalize("NFD", once))


def test_load_catalog(tmp_path):
    (tmp_path / "r.csv").write_text("text\nJosé García\nAlice Smith\nalice  smith\n", encoding="utf-8")
    (tmp_path / "t.csv").write_text("text,category\nnetwork,general\ncell,bio_medical\n")
    with pytest.warns(DataWarning, match="duplicate"):
        cat = load_catalog(tmp_path / "r.csv", tmp_path / "t.csv")
    assert [kw.text for kw in cat.researchers] == ["Jose Garcia", "Alice Smith"]
    assert [kw.id for kw in cat.topics] == [2, 3]
    assert cat.topics[1].category is Category.BIO_MEDICAL
    assert cat[0].kind is Kind.RESEARCHER
    assert len(cat.warnings) == 1


def test_load_catalog_empty_topics(tmp_path):
    (tmp_path / "r.csv").write_text("text\nA B\n")
    (tmp_path / "t.csv").write_text("text,category\n")
    cat = load_catalog(tmp_path / "r.csv", tmp_path / "t.csv")
    assert cat.n_topics == 0 and cat.n_researchers == 1


def test_load_catalog_bad_category(tmp_path):
    (tmp_path / "r.csv").write_text("text\nA B\n")
    (tmp_path / "t.csv").write_text("text,category\nnetwork,sociology\n")
    with pytest.raises(SchemaError):
        load_catalog(tmp_path / "r.csv", tmp_path / "t.csv")


def test_load_catalog_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_catalog(tmp_path / "nope.csv", tmp_path / "nope2.csv")


def test_full_size_catalog(tmp_path):
    (tmp_path / "r.csv").write_text("text\n" + "".join(f"Person {i}\n" for i in range(1000)))
    (tmp_path / "t.csv").write_text("text,category\n" + "".join(f"topic {j},physical\n" for j in range(40)))
    cat = load_catalog(tmp_path / "r.csv", tmp_path / "t.csv")
    assert len(cat) == 1040


def test_plan_small():
    plan = plan_queries(catalog(2, 1))
    assert [(p.a, p.b) for p in plan] == [(0, 1), (0, 2), (1, 2)]
    assert [p.kind for p in plan] == [PairKind.RESEARCHER_RESEARCHER] + [PairKind.RESEARCHER_TOPIC] * 2


def test_plan_no_researchers():
    assert plan_queries(catalog(0, 5)) == []


@given(st.integers(0, 50), st.integers(0, 50))
def test_plan_matches_enumeration(R, T):
    plan = plan_queries(catalog(R, T))
    assert len(plan) == expected_pair_count(R, T)
    assert sorted((p.a, p.b) for p in plan) == all_pairs_excluding_topic_topic(R, T)
    assert max(Counter((p.a, p.b) for p in plan).values(), default=1) == 1
    assert all(p.a < p.b for p in plan)


def test_plan_roundtrip(tmp_path):
    plan = plan_queries(catalog(4, 3))
    write_plan(plan, tmp_path / "plan.csv")
    again = read_plan(tmp_path / "plan.csv")
    assert again == plan
    assert plan_digest(again) == plan_digest(plan)
    assert (tmp_path / "plan.csv").read_text().splitlines()[0] == "a_id,b_id,kind"
