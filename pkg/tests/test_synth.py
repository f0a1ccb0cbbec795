import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relnet.analysis import random_selections, SelectionMode, SelectionSet, path_length_comparison
from relnet.corpus import load_catalog
from relnet.errors import ConfigError
from relnet.harvester import read_samples
from relnet.metrics import build_researcher_graph, build_topic_matrix, vb_matrix
from relnet.synth import SynthConfig, generate, synth_catalog, world_samples, write_world


def test_config_validation():
    with pytest.raises(ConfigError):
        SynthConfig(researchers=5, communities=6, topics=6)
    with pytest.raises(ConfigError):
        SynthConfig(topics=3, communities=4)
    with pytest.raises(ConfigError):
        SynthConfig(base_rate=0)


def test_config_json_roundtrip(tmp_path):
    cfg = SynthConfig(researchers=30, seed=9, noise=False)
    (tmp_path / "c.json").write_text(cfg.to_json())
    assert SynthConfig.from_json(tmp_path / "c.json") == cfg
    (tmp_path / "bad.json").write_text(json.dumps({"nodes": 3}))
    with pytest.raises(ConfigError):
        SynthConfig.from_json(tmp_path / "bad.json")


def test_neutral_world_vb_is_one():
    w = generate(SynthConfig(topic_affinity=1, intra_multiplier=1, noise=False))
    np.testing.assert_allclose(vb_matrix(w.matrix), 1.0, atol=1e-12)


def test_single_community_vb_is_one():
    # one community means every row carries the same affinity profile
    w = generate(SynthConfig(communities=1, noise=False))
    np.testing.assert_allclose(vb_matrix(w.matrix), 1.0, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_argmax_vb_is_community_topic(seed):
    w = generate(SynthConfig(noise=False, seed=seed))
    assert np.array_equal(np.argmax(vb_matrix(w.matrix), axis=1), w.labels)


@settings(max_examples=25)
@given(st.integers(2, 6), st.integers(0, 4), st.floats(1.1, 20), st.floats(0.1, 3), st.integers(0, 10**6))
def test_argmax_property(C, extra_topics, a, sigma, seed):
    cfg = SynthConfig(researchers=40, topics=C + extra_topics, communities=C, topic_affinity=a,
                      pop_sigma=sigma, noise=False, seed=seed)
    w = generate(cfg)
    V = vb_matrix(w.matrix)
    assert np.array_equal(np.argmax(V, axis=1), w.labels)
    # rescaling popularity changes TTH but not the argmax
    H2 = w.matrix.values * np.linspace(1, 50, cfg.researchers)[:, None]
    assert np.array_equal(np.argmax(vb_matrix(type(w.matrix)(H2, w.matrix.researcher_ids,
                                                               w.matrix.topic_ids)), axis=1), w.labels)


def test_deterministic_and_wellformed():
    a = generate(SynthConfig(researchers=60, seed=4))
    b = generate(SynthConfig(researchers=60, seed=4))
    c = generate(SynthConfig(researchers=60, seed=5))
    assert a.graph.edges == b.graph.edges
    np.testing.assert_array_equal(a.matrix.values, b.matrix.values)
    assert a.graph.edges != c.graph.edges
    W = a.graph.weight_matrix()
    np.testing.assert_array_equal(W, W.T)
    assert np.all(np.diag(W) == 0)
    assert all(x > 0 for x in a.graph.edges.values())


def test_world_samples_rebuild(tmp_path):
    w = generate(SynthConfig(researchers=25, topics=4, communities=4, seed=1))
    write_world(w, tmp_path)
    cat = load_catalog(tmp_path / "researchers.csv", tmp_path / "topics.csv")
    assert cat == synth_catalog(w.config)
    records = list(read_samples(tmp_path / "samples.csv", cat))
    assert len(records) == len(world_samples(w))
    np.testing.assert_array_equal(build_topic_matrix(records, cat).values, w.matrix.values)
    assert build_researcher_graph(records, cat).edges == w.graph.edges
    labels = (tmp_path / "labels.csv").read_text().splitlines()
    assert labels[0] == "researcher_id,community" and len(labels) == 26
    assert SynthConfig.from_json(tmp_path / "synth_config.json") == w.config


def test_planted_communities_are_close():
    """Sets drawn from one community sit closer together than random sets."""
    w = generate(SynthConfig(seed=0))
    comm = [SelectionSet(c, tuple(np.flatnonzero(w.labels == c)), SelectionMode.VISIBILITY_BOOST)
            for c in range(w.config.communities)]
    rnd = random_selections(200, 0.1, 10, seed=0)
    res = path_length_comparison(w.graph, comm, rnd)
    assert res.t < 0 and res.p < 0.05
