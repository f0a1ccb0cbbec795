"""Command-line front end: ``relnet <subcommand>``.

Every subcommand reads and writes plain files under ``--out-dir`` (paths can
be overridden individually), so the pipeline can be scripted as::

    relnet synth --out-dir run && relnet build --out-dir run && relnet analyze --out-dir run
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis as an
from . import graphstats as gs
from . import metrics as mx
from .corpus import KeywordCatalog, load_catalog, plan_queries, read_plan, write_plan
from .errors import ConfigError, RelnetError, SelectionError, StatError
from .harvester import (
    HarvestCheckpoint,
    HttpJsonBackend,
    MockBackend,
    OfflineBackend,
    SearchBackend,
    checkpoint_path,
    harvest,
    preselect_researchers,
    read_samples,
)
from .synth import SynthConfig, generate, write_world

log = logging.getLogger("relnet")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARTIAL = 3
EXIT_DEGENERATE = 4

ANALYSIS_TARGETS = ("TTH", "THE", "effective_degree", "incoming_weight", "betweenness", "closeness")
CENTRALITY_TARGETS = ("effective_degree", "incoming_weight", "betweenness", "closeness")


@dataclass
class RunConfig:
    out_dir: str = "."
    researchers: str | None = None
    topics: str | None = None
    names: str | None = None
    plan: str | None = None
    samples: str | None = None
    matrix: str | None = None
    graph: str | None = None
    report_dir: str | None = None
    fraction: float = 0.2
    trials: int = 40
    threshold: int = 20
    seed: int = 0
    k: int = 1000
    backend: str = "mock"
    correlation: str = "pearson"
    ttest: str = "student"
    min_interval: float = 0.0
    sample_delay: float = 0.0
    retries: int = 2
    resume: bool = False
    limit: int | None = None
    synth: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0 < self.fraction <= 1:
            raise ConfigError("fraction must lie in (0, 1]")
        if self.trials < 1 or self.threshold < 1:
            raise ConfigError("trials and threshold must be >= 1")
        if self.correlation not in ("pearson", "spearman"):
            raise ConfigError(f"unknown correlation method {self.correlation!r}")
        if self.ttest not in ("student", "welch"):
            raise ConfigError(f"unknown t-test {self.ttest!r}")

    def path(self, name: str, default: str) -> Path:
        value = getattr(self, name)
        return Path(value) if value else Path(self.out_dir) / default


def resolve_backend(spec: str, seed: int = 0) -> SearchBackend:
    kind, _, arg = spec.partition(":")
    if kind == "mock":
        return MockBackend(seed=int(arg) if arg else seed)
    if kind == "offline":
        if not arg or not Path(arg).is_file():
            raise ConfigError(f"offline backend fixture not found: {arg!r}")
        return OfflineBackend.from_file(arg)
    if kind == "http":
        if not arg:
            raise ConfigError("http backend needs an endpoint URL")
        return HttpJsonBackend(arg)
    raise ConfigError(f"unknown backend {spec!r} (use mock[:seed], offline:PATH or http:URL)")


def _require(path: Path, what: str) -> Path:
    if not path.is_file():
        raise ConfigError(f"{what} not found: {path}")
    return path


def _catalog(cfg: RunConfig) -> KeywordCatalog:
    return load_catalog(
        _require(cfg.path("researchers", "researchers.csv"), "researchers catalog"),
        _require(cfg.path("topics", "topics.csv"), "topics catalog"),
    )


def _file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# -- subcommands --------------------------------------------------------------

def cmd_plan(cfg: RunConfig) -> int:
    catalog = _catalog(cfg)
    plan = plan_queries(catalog)
    out = cfg.path("plan", "plan.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_plan(plan, out)
    print(len(plan))
    return EXIT_OK


def cmd_preselect(cfg: RunConfig) -> int:
    src = _require(cfg.path("names", "names.csv"), "names file")
    lines = [ln.strip() for ln in src.read_text(encoding="utf-8").splitlines()]
    names = [ln for ln in lines[1:] if ln] if lines and lines[0] == "text" else [ln for ln in lines if ln]
    backend = resolve_backend(cfg.backend, cfg.seed)
    if cfg.k > len(names):
        raise ConfigError(f"k={cfg.k} exceeds the {len(names)} names available")
    chosen = preselect_researchers(names, backend, cfg.k)
    out = cfg.path("researchers", "researchers.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["text"])
        writer.writerows([kw.text] for kw in chosen)
    print(len(chosen))
    return EXIT_OK


def cmd_harvest(cfg: RunConfig) -> int:
    catalog = _catalog(cfg)
    plan = read_plan(_require(cfg.path("plan", "plan.csv"), "query plan"))
    backend = resolve_backend(cfg.backend, cfg.seed)
    samples = cfg.path("samples", "samples.csv")
    ckpt = None
    if cfg.resume and checkpoint_path(samples).is_file():
        ckpt = HarvestCheckpoint.load(checkpoint_path(samples))
    stream = harvest(
        plan, backend, catalog, samples,
        min_interval=cfg.min_interval, checkpoint=ckpt,
        retries=cfg.retries, sample_delay=cfg.sample_delay,
    )
    done = ckpt.completed if ckpt else 0
    for i, _ in enumerate(stream, start=1):
        done += 1
        if cfg.limit is not None and i >= cfg.limit:
            break
    failed = sum(rec.failed for rec in read_samples(samples))
    log.info("harvested %d/%d pairs, %d failed", done, len(plan), failed)
    return EXIT_PARTIAL if failed or done < len(plan) else EXIT_OK


def cmd_build(cfg: RunConfig) -> int:
    catalog = _catalog(cfg)
    records = list(read_samples(_require(cfg.path("samples", "samples.csv"), "samples file"), catalog))
    H = mx.build_topic_matrix(records, catalog)
    G = mx.build_researcher_graph(records, catalog)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mx.write_matrix(H, cfg.path("matrix", "matrix.csv"))
    mx.write_graph(G, cfg.path("graph", "graph.csv"))
    log.info("built %dx%d matrix and graph with %d edges", *H.values.shape, len(G.edges))
    return EXIT_OK


def _load_inputs(cfg: RunConfig):
    H = mx.read_matrix(_require(cfg.path("matrix", "matrix.csv"), "topic hit matrix"))
    G = mx.read_graph(_require(cfg.path("graph", "graph.csv"), "graph edge list"), H.researcher_ids)
    return H, G


def _metric_vectors(H: mx.TopicHitMatrix, G: mx.ResearcherGraph, D: np.ndarray) -> dict[str, mx.MetricVector]:
    return {
        "TTH": mx.tth_vector(H),
        "THE": mx.the_vector(H),
        "TNH": mx.tnh_vector(G),
        "effective_degree": mx.effective_degree_vector(G),
        "incoming_weight": mx.incoming_weight_vector(G),
        "betweenness": gs.betweenness(G, D),
        "closeness": gs.closeness(G, D),
    }


def _write_metrics(vectors: dict[str, mx.MetricVector], G: mx.ResearcherGraph, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for name, vec in vectors.items():
        vec.write_csv(out / f"metric_{name}.csv")
    cols = ("betweenness", "closeness", "effective_degree", "incoming_weight", "TNH")
    with open(out / "centralities.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("researcher_id,betweenness,closeness,effective_degree,incoming_weight,tnh\n")
        for i, rid in enumerate(G.nodes):
            vals = (vectors[c].values[i] for c in cols)
            fh.write(",".join([str(rid), *(repr(float(v)) if np.isfinite(v) else "nan" for v in vals)]) + "\n")
    gs.ccdf_total_weights(G).write_csv(out / "ccdf.csv")


def cmd_metrics(cfg: RunConfig) -> int:
    H, G = _load_inputs(cfg)
    D = gs.distance_matrix(G)
    _write_metrics(_metric_vectors(H, G, D), G, cfg.path("report_dir", "metrics"))
    return EXIT_OK


def _config_hash(cfg: RunConfig, inputs: dict[str, str]) -> str:
    relevant = {
        "fraction": cfg.fraction, "trials": cfg.trials, "threshold": cfg.threshold,
        "seed": cfg.seed, "correlation": cfg.correlation, "ttest": cfg.ttest, "inputs": inputs,
    }
    return hashlib.sha256(json.dumps(relevant, sort_keys=True).encode()).hexdigest()


def _common_order(rank: list[int], keep: set[int]) -> list[int]:
    return [t for t in rank if t in keep]


def cmd_analyze(cfg: RunConfig) -> int:
    """Metric vectors, CCDF, coverage, path-length test, correlation reports and maps."""
    catalog = _catalog(cfg)
    H, G = _load_inputs(cfg)
    out = cfg.path("report_dir", "report")
    out.mkdir(parents=True, exist_ok=True)
    texts = {kw.id: kw.text for kw in catalog.topics}
    missing = [t for t in H.topic_ids if t not in texts]
    if missing:
        raise ConfigError(f"matrix topics {missing} are not in the topics catalog")
    topic_texts = [texts[t] for t in H.topic_ids]
    inputs = {
        "matrix": _file_digest(cfg.path("matrix", "matrix.csv")),
        "graph": _file_digest(cfg.path("graph", "graph.csv")),
        "topics": _file_digest(cfg.path("topics", "topics.csv")),
    }
    notes: list[str] = []
    exit_code = EXIT_OK

    D = gs.distance_matrix(G)
    vectors = _metric_vectors(H, G, D)
    _write_metrics(vectors, G, out)

    vb = mx.vb_matrix(H)
    R, T = vb.shape
    undefined_vb = int(np.isnan(vb).sum())
    if vb.size and undefined_vb > vb.size / 2:
        notes.append(f"{undefined_vb}/{vb.size} visibility boosts undefined")

    # coverage
    vb_sets, raw_sets, skipped = [], [], []
    for j, t in enumerate(H.topic_ids):
        try:
            vb_sets.append(an.top_fraction(vb[:, j], cfg.fraction, H.researcher_ids, t))
            raw_sets.append(an.top_fraction(H.values[:, j], cfg.fraction, H.researcher_ids, t,
                                            an.SelectionMode.RAW_HITS))
        except SelectionError:
            skipped.append(t)
    rnd_sets = an.random_selections(R, cfg.fraction, cfg.trials, cfg.seed, H.researcher_ids)
    k = an.selection_size(R, cfg.fraction) if R else 0
    exp_mean, exp_sd = an.expected_random_coverage(R, k, cfg.trials) if R else (0.0, 0.0)
    _dump_json({
        "researchers": R, "fraction": cfg.fraction, "trials": cfg.trials,
        "vb": an.unique_coverage(vb_sets), "raw": an.unique_coverage(raw_sets),
        "random": an.unique_coverage(rnd_sets),
        "random_expected": exp_mean, "random_expected_sd": exp_sd,
        "skipped_topics": skipped,
    }, out / "coverage.json")

    # path lengths
    try:
        comp = an.path_length_comparison(G, vb_sets, rnd_sets, cfg.ttest == "student", D)
        payload = comp.to_json()
        if comp.degenerate:
            exit_code = EXIT_DEGENERATE
    except StatError as exc:
        payload = {"error": str(exc)}
        exit_code = EXIT_DEGENERATE
    _dump_json(payload, out / "path_comparison.json")

    # correlation reports, movements between consecutive targets
    reports: dict[str, an.CorrelationReport] = {}
    prev = None
    for name in ANALYSIS_TARGETS:
        rep = an.topic_correlation_report(vb, vectors[name], H.topic_ids, topic_texts, cfg.correlation)
        reports[name] = rep
        if rep.n_undefined > T / 2:
            notes.append(f"{rep.n_undefined}/{T} correlations with {name} undefined")
        moves = None
        if prev is not None:
            common = set(prev.ranking) & set(rep.ranking)
            moves = an.rank_movement(_common_order(prev.ranking, common),
                                     _common_order(rep.ranking, common), cfg.threshold)
        body = rep.to_json(moves)
        if prev is not None:
            body["movements_from"] = prev.target
        _dump_json(body, out / f"correlation_{name}.json")
        prev = rep

    for name in CENTRALITY_TARGETS:
        cmap = an.correlation_map(reports[name], reports["THE"])
        cmap.write_csv(out / f"map_THE_vs_{name}.csv", texts)
        if cmap.omitted:
            notes.append(f"map THE vs {name}: {cmap.omitted} topic(s) omitted")

    for note in notes:
        log.warning(note)
    _dump_json({
        "config_hash": _config_hash(cfg, inputs),
        "inputs": inputs,
        "warnings": notes,
        "files": sorted(p.name for p in out.iterdir() if p.name != "manifest.json"),
    }, out / "manifest.json")
    return exit_code


def cmd_synth(cfg: RunConfig) -> int:
    params = dict(cfg.synth)
    params.setdefault("seed", cfg.seed)
    try:
        sc = SynthConfig(**params)
    except TypeError as exc:
        raise ConfigError(f"bad synth config: {exc}") from None
    write_world(generate(sc), cfg.out_dir)
    return EXIT_OK


COMMANDS = {
    "plan": cmd_plan,
    "preselect": cmd_preselect,
    "harvest": cmd_harvest,
    "build": cmd_build,
    "metrics": cmd_metrics,
    "analyze": cmd_analyze,
    "synth": cmd_synth,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int)
    common.add_argument("--config", help="JSON file with RunConfig fields")
    common.add_argument("--out-dir")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="relnet", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_, *opts):
        p = sub.add_parser(name, help=help_, parents=[common])
        for opt in opts:
            p.add_argument(f"--{opt}")
        return p

    add("plan", "enumerate query pairs", "researchers", "topics", "plan")
    p = add("preselect", "keep the top-k names by single-name hits", "names", "researchers", "backend")
    p.add_argument("--k", type=int)
    p = add("harvest", "run a query plan against a backend",
            "researchers", "topics", "plan", "samples", "backend")
    p.add_argument("--min-interval", type=float)
    p.add_argument("--sample-delay", type=float)
    p.add_argument("--retries", type=int)
    p.add_argument("--resume", action="store_true", default=None)
    p.add_argument("--limit", type=int, help="stop after this many pairs (resumable)")
    add("build", "samples -> matrix and graph", "researchers", "topics", "samples", "matrix", "graph")
    add("metrics", "per-researcher metric vectors", "matrix", "graph", "report-dir")
    p = add("analyze", "full report bundle", "researchers", "topics", "matrix", "graph", "report-dir",
            "correlation", "ttest")
    p.add_argument("--fraction", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--threshold", type=int)
    p = add("synth", "generate a planted-community world")
    p.add_argument("--synth-config", help="JSON file with SynthConfig fields")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    synth_path = getattr(args, "synth_config", None)
    if synth_path:
        try:
            data["synth"] = {**data.get("synth", {}), **json.loads(Path(synth_path).read_text())}
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read synth config {synth_path}: {exc}") from None
    known = {f.name for f in dataclasses.fields(RunConfig)}
    for key, value in vars(args).items():
        if key in known and value is not None:
            data[key] = value
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config field(s): {sorted(unknown)}")
    return RunConfig(**data)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    warnings.simplefilter("default")
    try:
        cfg = config_from_args(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"relnet: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RelnetError, OSError) as exc:
        print(f"relnet: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
