"""Planted-community hit-count generator.

Every researcher belongs to one community and every community owns one
topic. Researcher-topic rates are boosted by ``topic_affinity`` on the
community's own topic; researcher-researcher rates scale with the geometric
mean of the two popularities and are boosted by ``intra_multiplier`` inside
a community. Popularity is log-normal, which gives the long-tailed strength
distribution seen in real co-occurrence data.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .corpus import Category, KeywordCatalog, PairKind, QueryPair, write_catalog
from .errors import ConfigError
from .harvester import HitSample, write_samples
from .metrics import ResearcherGraph, TopicHitMatrix


@dataclass(frozen=True)
class SynthConfig:
    researchers: int = 200
    topics: int = 10
    communities: int = 10
    pop_mu: float = 0.0
    pop_sigma: float = 1.0
    topic_affinity: float = 5.0
    intra_multiplier: float = 5.0
    base_rate: float = 100.0
    noise: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.researchers >= self.communities >= 1:
            raise ConfigError("need researchers >= communities >= 1")
        if self.topics < self.communities:
            raise ConfigError("each community needs its own topic (topics >= communities)")
        if min(self.topic_affinity, self.intra_multiplier, self.base_rate) <= 0 or self.pop_sigma < 0:
            raise ConfigError("multipliers and rates must be positive")

    @classmethod
    def from_json(cls, path: str | Path) -> "SynthConfig":
        data = json.loads(Path(path).read_text())
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown synth config field(s): {sorted(unknown)}")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


@dataclass
class SynthWorld:
    config: SynthConfig
    matrix: TopicHitMatrix
    graph: ResearcherGraph
    labels: np.ndarray
    popularity: np.ndarray


def generate(config: SynthConfig) -> SynthWorld:
    rng = np.random.default_rng(config.seed)
    R, T, C = config.researchers, config.topics, config.communities
    pop = rng.lognormal(config.pop_mu, config.pop_sigma, size=R)
    labels = rng.permutation(np.arange(R) % C)

    affinity = np.ones((R, T))
    affinity[np.arange(R), labels] = config.topic_affinity
    h = pop[:, None] * config.base_rate * affinity

    same = labels[:, None] == labels[None, :]
    w = np.sqrt(np.outer(pop, pop)) * config.base_rate * np.where(same, config.intra_multiplier, 1.0)
    iu = np.triu_indices(R, k=1)
    w_upper = w[iu]

    if config.noise:
        h = rng.poisson(h).astype(float)
        w_upper = rng.poisson(w_upper).astype(float)

    researcher_ids = list(range(R))
    topic_ids = list(range(R, R + T))
    edges = {
        (int(a), int(b)): float(x)
        for a, b, x in zip(iu[0], iu[1], w_upper) if x > 0
    }
    return SynthWorld(
        config,
        TopicHitMatrix(h, researcher_ids, topic_ids),
        ResearcherGraph(researcher_ids, edges),
        labels,
        pop,
    )


def synth_catalog(config: SynthConfig) -> KeywordCatalog:
    cats = list(Category)
    width = len(str(max(config.researchers, config.topics)))
    return KeywordCatalog.from_texts(
        (f"Researcher {i:0{width}d}" for i in range(config.researchers)),
        ((f"topic {j:0{width}d}", cats[j % len(cats)]) for j in range(config.topics)),
    )


def world_samples(world: SynthWorld) -> list[HitSample]:
    """Express a world as harvest records: each pair's value repeated three times."""
    H, G = world.matrix, world.graph
    out = []
    R = len(H.researcher_ids)
    for a in range(R):
        for b in range(a + 1, R):
            v = G.weight(a, b)
            out.append(HitSample(QueryPair(a, b, PairKind.RESEARCHER_RESEARCHER), (v, v, v), v))
    for i, r in enumerate(H.researcher_ids):
        for j, t in enumerate(H.topic_ids):
            v = float(H.values[i, j])
            out.append(HitSample(QueryPair(r, t, PairKind.RESEARCHER_TOPIC), (v, v, v), v))
    return out


def write_world(world: SynthWorld, out_dir: str | Path) -> None:
    """Write catalogs, samples, labels and the config that produced them."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_catalog(synth_catalog(world.config), out / "researchers.csv", out / "topics.csv")
    write_samples(world_samples(world), out / "samples.csv")
    with open(out / "labels.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("researcher_id,community\n")
        for rid, c in zip(world.matrix.researcher_ids, world.labels):
            fh.write(f"{rid},{int(c)}\n")
    (out / "synth_config.json").write_text(world.config.to_json())
