"""Researcher and topic relatedness networks built from search-hit co-occurrence counts."""

from .analysis import (
    correlate,
    correlation_map,
    path_length_comparison,
    random_selections,
    rank_movement,
    top_fraction,
    topic_correlation_report,
    unique_coverage,
)
from .corpus import KeywordCatalog, load_catalog, normalize_name, plan_queries
from .graphstats import (
    avg_shortest_path_among,
    betweenness,
    ccdf_total_weights,
    closeness,
    shortest_path_lengths,
)
from .harvester import aggregate_samples, compose_query, harvest, preselect_researchers
from .metrics import (
    ResearcherGraph,
    TopicHitMatrix,
    build_researcher_graph,
    build_topic_matrix,
    effective_degree,
    incoming_weight,
    topic_hit_entropy,
    total_name_hits,
    total_topic_hits,
    vb_matrix,
    visibility_boost,
)
from .synth import SynthConfig, generate

__version__ = "0.1.0"
