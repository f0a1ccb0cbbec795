import itertools
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import aggregate_rule
from relnet.corpus import KeywordCatalog, PairKind, QueryPair, plan_queries
from relnet.errors import BackendError, CatalogError, DataWarning, ResumeError
from relnet.harvester import (
    HarvestCheckpoint,
    MockBackend,
    OfflineBackend,
    Pacer,
    aggregate_samples,
    checkpoint_path,
    compose_query,
    harvest,
    preselect_researchers,
    query_key,
    query_string,
    read_samples,
)


@pytest.fixture
def cat():
    return KeywordCatalog.from_texts(["John Doe", "Alice Smith"], [("network", "general")])


@pytest.mark.parametrize(
    "samples, expected",
    [([10, 20, 100], 15.0), ([10, 20, 30], 20.0), ([7, 7, 7], 7.0), ([100, 1, 2], 1.5), ([0, 50, 51], 50.5)],
)
def test_aggregate_examples(samples, expected):
    assert aggregate_samples(samples) == expected


@given(st.lists(st.integers(0, 10**9), min_size=3, max_size=3))
def test_aggregate_properties(s):
    out = aggregate_samples(s)
    assert min(s) <= out <= max(s)
    for perm in itertools.permutations(s):
        assert aggregate_samples(perm) == out
    assert out == aggregate_rule(s)


@given(st.integers(0, 1000), st.integers(0, 1000))
def test_aggregate_equidistant_is_median(m, gap):
    assert aggregate_samples([m - gap, m, m + gap]) == m


def test_aggregate_needs_three():
    with pytest.raises(ValueError):
        aggregate_samples([1, 2])


def test_compose_query(cat):
    assert compose_query(QueryPair(0, 2, PairKind.RESEARCHER_TOPIC), cat) == ["John Doe", "network", "research"]
    assert compose_query(QueryPair(0, 1, PairKind.RESEARCHER_RESEARCHER), cat) == [
        "John Doe", "Alice Smith", "research"]
    with pytest.raises(CatalogError):
        compose_query(QueryPair(1, 1, PairKind.RESEARCHER_RESEARCHER), cat)
    with pytest.raises(CatalogError):
        compose_query(QueryPair(0, 9, PairKind.RESEARCHER_TOPIC), cat)


def test_query_formats():
    terms = ["John Doe", "network", "research"]
    assert query_key(terms) == "John Doe + network + research"
    assert query_string(terms) == '"John Doe" "network" research'


def test_offline_backend_sequences():
    b = OfflineBackend({"a + research": [1, 2], "b + research": 5})
    assert [b.query(["a", "research"]) for _ in range(4)] == [1, 2, 2, 2]
    assert b.query(["b", "research"]) == 5
    with pytest.raises(BackendError):
        b.query(["c", "research"])


def test_mock_backend_deterministic():
    assert MockBackend(3).query(["x"]) == MockBackend(3).query(["x"])
    assert MockBackend(3).query(["x"]) >= 0


def test_pacer_enforces_interval():
    now = [0.0]
    slept = []

    def sleep(dt):
        slept.append(dt)
        now[0] += dt

    p = Pacer(2.0, clock=lambda: now[0], sleep=sleep)
    p.wait()
    now[0] += 0.5
    p.wait()
    p.wait()
    assert slept == [1.5, 2.0]


def fixture_backend(cat, seqs=None):
    seqs = seqs or {}
    table = {}
    for i, pair in enumerate(plan_queries(cat)):
        key = query_key(compose_query(pair, cat))
        table[key] = seqs.get((pair.a, pair.b), [10 * (i + 1)])
    return OfflineBackend(table)


def test_harvest_fresh(cat, tmp_path):
    plan = plan_queries(cat)
    out = list(harvest(plan, fixture_backend(cat, {(0, 1): [10, 20, 100]}), cat, tmp_path / "s.csv"))
    assert [r.pair for r in out] == plan
    assert out[0].aggregate == 15.0 and out[0].samples == (10, 20, 100)
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "a_id,b_id,s1,s2,s3,aggregate,failed"
    assert lines[1] == "0,1,10,20,100,15.0,0"
    assert len(lines) == 4
    assert len(out[0].timestamps) == 3
    assert list(read_samples(tmp_path / "s.csv", cat)) == out


def test_harvest_resume_is_identical(cat, tmp_path):
    plan = plan_queries(cat)
    list(harvest(plan, fixture_backend(cat), cat, tmp_path / "full.csv"))

    part = tmp_path / "part.csv"
    stream = harvest(plan, fixture_backend(cat), cat, part)
    next(stream), next(stream)
    stream.close()
    ckpt = HarvestCheckpoint.load(checkpoint_path(part))
    assert ckpt.completed == 2
    # a torn write after the checkpoint must be discarded on resume
    with open(part, "a") as fh:
        fh.write("1,2,99")
    resumed = list(harvest(plan, fixture_backend(cat), cat, part, checkpoint=ckpt))
    assert len(resumed) == 1
    assert part.read_bytes() == (tmp_path / "full.csv").read_bytes()


def test_harvest_resume_wrong_plan(cat, tmp_path):
    plan = plan_queries(cat)
    list(harvest(plan, fixture_backend(cat), cat, tmp_path / "s.csv"))
    ckpt = HarvestCheckpoint.load(checkpoint_path(tmp_path / "s.csv"))
    with pytest.raises(ResumeError):
        next(harvest(plan[:2], fixture_backend(cat), cat, tmp_path / "s.csv", checkpoint=ckpt))


def test_harvest_failure_recorded(cat, tmp_path):
    plan = plan_queries(cat)
    backend = OfflineBackend({})
    with pytest.warns(DataWarning):
        out = list(harvest(plan, backend, cat, tmp_path / "s.csv", retries=1))
    assert all(r.failed and r.aggregate == 0.0 for r in out)
    assert (tmp_path / "s.csv").read_text().splitlines()[1] == "0,1,0,0,0,0.0,1"


def test_harvest_retries_transient(cat, tmp_path):
    class Flaky(OfflineBackend):
        calls = 0

        def query(self, terms):
            Flaky.calls += 1
            if Flaky.calls % 2:
                raise BackendError("transient")
            return 4

    out = list(harvest(plan_queries(cat), Flaky({}), cat, tmp_path / "s.csv", retries=1))
    assert not any(r.failed for r in out)
    assert out[0].aggregate == 4.0


def test_preselect():
    b = OfflineBackend({"A + research": [5], "B + research": [5], "C + research": [3]})
    got = preselect_researchers(["B", "C", "A"], b, 2)
    assert [k.text for k in got] == ["A", "B"]
    assert [k.text for k in preselect_researchers(["B", "C", "A"], b, 3)] == ["A", "B", "C"]


def test_preselect_failure_counts_zero():
    b = OfflineBackend({"A + research": [5]})
    with pytest.warns(DataWarning):
        got = preselect_researchers(["Zed", "A"], b, 2)
    assert [k.text for k in got] == ["A", "Zed"]


def test_preselect_scale():
    names = [f"Person {i}" for i in range(4050)]
    got = preselect_researchers(names, MockBackend(1), 1000)
    assert len(got) == 1000
    hits = [MockBackend(1).query([k.text, "research"]) for k in got]
    assert hits == sorted(hits, reverse=True)


def test_offline_fixture_file(tmp_path):
    path = tmp_path / "fx.json"
    path.write_text(json.dumps({"a + b + research": [10, 20, 100]}))
    b = OfflineBackend.from_file(path)
    assert aggregate_samples([b.query(["a", "b", "research"]) for _ in range(3)]) == 15.0
