import sys
from pathlib import Path

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from relnet.metrics import ResearcherGraph, TopicHitMatrix  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


def random_graph(rng, n, p=0.5, weights=(1, 2, 3, 4)):
    """Random graph with small integer weights, so equal-length ties really occur."""
    edges = {}
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < p:
                edges[(a, b)] = float(rng.choice(weights))
    return ResearcherGraph(list(range(n)), edges)


@st.composite
def graphs(draw, min_nodes=1, max_nodes=7, real_weights=False):
    n = draw(st.integers(min_nodes, max_nodes))
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    present = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    if real_weights:
        w = st.floats(0.1, 100.0, allow_nan=False)
    else:
        w = st.sampled_from([1.0, 2.0, 3.0, 4.0])
    edges = {pr: draw(w) for pr, keep in zip(pairs, present) if keep}
    return ResearcherGraph(list(range(n)), edges)


@st.composite
def hit_matrices(draw, max_r=12, max_t=8, positive=False):
    R = draw(st.integers(1, max_r))
    T = draw(st.integers(1, max_t))
    lo = 1.0 if positive else 0.0
    # hit counts are zero or at least moderately sized; subnormals are not meaningful input
    value = st.floats(max(lo, 1e-3), 1e4, allow_nan=False)
    if not positive:
        value = st.one_of(st.just(0.0), value)
    vals = draw(st.lists(value, min_size=R * T, max_size=R * T))
    return TopicHitMatrix(np.array(vals).reshape(R, T), list(range(R)), list(range(R, R + T)))


@pytest.fixture
def square_h():
    return TopicHitMatrix(np.array([[3.0, 1.0], [1.0, 3.0]]), [0, 1], [2, 3])


@pytest.fixture
def path_abc():
    # a=0, b=1, c=2
    return ResearcherGraph([0, 1, 2], {(0, 1): 4.0, (1, 2): 2.0})


# -- acceptance reporting -----------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
