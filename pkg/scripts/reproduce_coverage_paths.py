"""Coverage and path-length experiment on an ensemble of planted-community worlds.

For every seed: generate a world, select the top fraction of researchers per
topic by visibility boost and by raw hits, draw one random selection per
topic, then compare unique coverage and the mean shortest path inside the
selected sets (Student's t-test, VB sets vs random sets).

Also reports two diagnostics that explain the path-length outcome: the same
test with each community used as a selection, and the correlation between a
researcher's popularity and how often VB selects them.

    python3 scripts/reproduce_coverage_paths.py --seeds 20
    python3 scripts/reproduce_coverage_paths.py --no-noise --json out.json
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math

import numpy as np

from relnet.analysis import (
    SelectionMode,
    SelectionSet,
    path_length_comparison,
    random_selections,
    top_fraction,
    unique_coverage,
)
from relnet.graphstats import distance_matrix
from relnet.metrics import vb_matrix
from relnet.synth import SynthConfig, generate


def run_seed(base: SynthConfig, seed: int, fraction: float) -> dict:
    cfg = dataclasses.replace(base, seed=seed)
    world = generate(cfg)
    H, G = world.matrix, world.graph
    ids = H.researcher_ids
    V = vb_matrix(H)
    D = distance_matrix(G)

    vb_sets = [top_fraction(V[:, j], fraction, ids, t) for j, t in enumerate(H.topic_ids)]
    raw_sets = [top_fraction(H.values[:, j], fraction, ids, t, SelectionMode.RAW_HITS)
                for j, t in enumerate(H.topic_ids)]
    rnd_sets = random_selections(len(ids), fraction, len(H.topic_ids), seed, ids)
    comp = path_length_comparison(G, vb_sets, rnd_sets, distances=D)

    communities = [SelectionSet(c, tuple(int(i) for i in np.flatnonzero(world.labels == c)),
                                SelectionMode.VISIBILITY_BOOST) for c in range(cfg.communities)]
    comm = path_length_comparison(G, communities, rnd_sets, distances=D)

    picks = np.zeros(len(ids))
    for s in vb_sets:
        picks[list(s.selected)] += 1
    own = np.mean([np.mean(world.labels[list(s.selected)] == j) for j, s in enumerate(vb_sets)])
    return {
        "seed": seed,
        "coverage_vb": unique_coverage(vb_sets),
        "coverage_raw": unique_coverage(raw_sets),
        "coverage_random": unique_coverage(rnd_sets),
        "path_vb": float(np.mean(comp.vb_sample)),
        "path_random": float(np.mean(comp.rnd_sample)),
        "t": comp.t,
        "p": comp.p,
        "community_t": comm.t,
        "community_p": comm.p,
        "vb_own_community_share": float(own),
        "corr_log_popularity_vs_picks": float(np.corrcoef(np.log(world.popularity), picks)[0, 1]),
    }


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--fraction", type=float, default=0.2)
    ap.add_argument("--researchers", type=int, default=200)
    ap.add_argument("--topics", type=int, default=10)
    ap.add_argument("--communities", type=int, default=10)
    ap.add_argument("--affinity", type=float, default=5.0)
    ap.add_argument("--intra", type=float, default=5.0)
    ap.add_argument("--sigma", type=float, default=1.0)
    ap.add_argument("--base-rate", type=float, default=100.0)
    ap.add_argument("--no-noise", action="store_true")
    ap.add_argument("--json", help="write per-seed rows and the summary here")
    args = ap.parse_args(argv)

    base = SynthConfig(researchers=args.researchers, topics=args.topics, communities=args.communities,
                       topic_affinity=args.affinity, intra_multiplier=args.intra, pop_sigma=args.sigma,
                       base_rate=args.base_rate, noise=not args.no_noise)
    rows = [run_seed(base, s, args.fraction) for s in range(args.seeds)]

    head = f"{'seed':>4} {'cov_vb':>6} {'cov_raw':>7} {'cov_rnd':>7} {'path_vb':>9} {'path_rnd':>9} {'t':>7} {'p':>8}"
    print(head)
    for r in rows:
        print(f"{r['seed']:>4} {r['coverage_vb']:>6} {r['coverage_raw']:>7} {r['coverage_random']:>7} "
              f"{r['path_vb']:>9.5f} {r['path_random']:>9.5f} {r['t']:>+7.2f} {r['p']:>8.4f}")

    R, T = args.researchers, args.topics
    summary = {
        "config": dataclasses.asdict(base),
        "seeds": args.seeds,
        "vb_ge_raw": sum(r["coverage_vb"] >= r["coverage_raw"] for r in rows),
        "vb_within_10pct_of_random": sum(
            abs(r["coverage_vb"] - r["coverage_random"]) <= 0.1 * r["coverage_random"] for r in rows),
        "random_expected": R * (1 - (1 - args.fraction) ** T),
        "random_mean": float(np.mean([r["coverage_random"] for r in rows])),
        "vb_shorter_and_significant": sum(r["path_vb"] < r["path_random"] and r["p"] < 0.05 for r in rows),
        "community_shorter_and_significant": sum(r["community_t"] < 0 and r["community_p"] < 0.05 for r in rows),
        "mean_vb_own_community_share": float(np.mean([r["vb_own_community_share"] for r in rows])),
        "mean_corr_log_popularity_vs_picks": float(np.mean([r["corr_log_popularity_vs_picks"] for r in rows])),
    }
    print()
    for k, v in summary.items():
        if k != "config":
            print(f"{k:>36}: {v:.4g}" if isinstance(v, float) and not math.isnan(v) else f"{k:>36}: {v}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump({"rows": rows, "summary": summary}, fh, indent=2, sort_keys=True)
            fh.write("\n")


if __name__ == "__main__":
    main()
