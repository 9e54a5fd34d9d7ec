"""Command line surface.

Subcommands: load (parse + prune + summarize), seeds (Ward seed
construction), cluster (full multi-resolution clustering run), cplc (town
decomposition sweep of one link set), analyze (recompute tables for a
finished run), bench (planted benchmark generation), oracle (exhaustive
valid-cluster enumeration for tiny graphs). Thread default comes from the
LINKTOPICS_THREADS environment variable when set.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from fractions import Fraction
from pathlib import Path


def _schedule_tuple(text: str):
    parts = tuple(s.strip() for s in text.split(",") if s.strip())
    if not parts:
        raise argparse.ArgumentTypeError("empty schedule")
    return parts


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--input", required=True, help="edge list TSV "
                   "(paper_id<TAB>source_id, # comments allowed)")
    p.add_argument("--out", default="linktopics_run",
                   help="artifact directory")
    p.add_argument("--schedule", type=_schedule_tuple,
                   default=("1/20", "1/10", "1/5", "1/4", "1/3"),
                   help="comma-separated increasing resolutions")
    p.add_argument("--evolutions", type=int, default=16)
    p.add_argument("--population", type=int, default=8)
    p.add_argument("--stagnation", type=int, default=100)
    p.add_argument("--mutation-rate", type=float, default=0.05)
    p.add_argument("--init-attempts-factor", type=int, default=50,
                   help="cap on population seeding retries, per slot")
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None,
                   help=f"default: $LINKTOPICS_THREADS or 1")
    p.add_argument("--seed-mode", default="ward",
                   choices=("ward", "explicit", "secondary", "towns"))
    p.add_argument("--seed-count", type=int, default=27,
                   help="long-branch Ward clusters to seed from")
    p.add_argument("--seeds-file", default=None,
                   help="JSON seeds for --seed-mode explicit")
    p.add_argument("--min-seed-links", type=int, default=2)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--core-share", type=float, default=0.95)
    p.add_argument("--bridge-share", type=float, default=0.05)
    p.add_argument("--keep-single-citers", action="store_true",
                   help="skip the degree-1 paper pruning")


def _run_config(args):
    from .pipeline import RunConfig
    return RunConfig(
        input_path=args.input, out_dir=args.out, schedule=args.schedule,
        num_evolutions=args.evolutions, population_size=args.population,
        stagnation_limit=args.stagnation, mutation_rate=args.mutation_rate,
        rng_seed=args.rng_seed, threads=args.threads,
        seed_mode=args.seed_mode, seed_count=args.seed_count,
        seeds_file=args.seeds_file, min_seed_links=args.min_seed_links,
        alpha=args.alpha, core_share=args.core_share,
        bridge_share=args.bridge_share, prune=not args.keep_single_citers,
        init_attempts_factor=args.init_attempts_factor)


def _load_graph(path, prune):
    from .graph import load_edge_list_path, prune_single_citers
    graph = load_edge_list_path(path)
    if prune:
        graph = prune_single_citers(graph)
    return graph


def cmd_load(args) -> int:
    from .graph import cocitation_projection
    from .analysis import significance_filter
    graph = _load_graph(args.input, not args.keep_single_citers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = graph.summary()
    with open(out / "graph_summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")
    proj = cocitation_projection(graph, alpha=args.alpha)
    proj.to_graphml(str(out / "projection.graphml"))
    significance_filter(proj, args.alpha).to_graphml(
        str(out / "projection_significant.graphml"))
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_seeds(args) -> int:
    from .graph import cocitation_projection
    from .seeds import (select_long_branch_clusters, seed_links_for_sources,
                        view_distance_matrix, ward_dendrogram)
    graph = _load_graph(args.input, not args.keep_single_citers)
    proj = cocitation_projection(graph, alpha=args.alpha)
    dist = view_distance_matrix(proj)
    dendro = ward_dendrogram(dist, leaves=list(proj.source_labels))
    sel = select_long_branch_clusters(dendro, args.seed_count)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "dendrogram.json", "w", encoding="utf-8") as fh:
        json.dump(dendro.to_json(), fh, indent=1, sort_keys=True)
    entries = []
    for entry, srcs in zip(sel.entries, sel.source_sets()):
        ls = seed_links_for_sources(srcs, graph)
        if ls.size < args.min_seed_links:
            continue
        entries.append({
            "name": f"ward{entry.cluster_id}",
            "sources": srcs,
            "links": [int(e) for e in ls.edge_ids()],
            "branch_length": entry.branch_length,
            "class_maximum": entry.class_maximum,
        })
    with open(out / "seeds.json", "w", encoding="utf-8") as fh:
        json.dump(entries, fh, indent=1, sort_keys=True)
    print(f"wrote {len(entries)} seeds to {out / 'seeds.json'}")
    return 0


def cmd_cluster(args) -> int:
    from .pipeline import run_pipeline
    out = run_pipeline(_run_config(args), analyze=False)
    print(f"clusters written to {out}")
    return 0


def cmd_analyze(args) -> int:
    from .pipeline import analyze_run
    out = analyze_run(args.run, core_share=args.core_share,
                      bridge_share=args.bridge_share, alpha=args.alpha,
                      out_dir=args.out)
    print(f"analysis written to {out}")
    return 0


def cmd_run(args) -> int:
    from .pipeline import run_pipeline
    out = run_pipeline(_run_config(args), analyze=True)
    print(f"run artifacts written to {out}")
    return 0


def cmd_cplc(args) -> int:
    from .graph import LinkSet, largest_component
    from .towns import explore_resolutions, first_top_two_split
    graph = _load_graph(args.input, not args.keep_single_citers)
    if args.links_file:
        with open(args.links_file, encoding="utf-8") as fh:
            ids = json.load(fh)
        links = LinkSet.from_edges(graph, [int(e) for e in ids])
        if not links.is_connected():
            links = largest_component(links)
            warnings.warn("link set was disconnected; kept largest component")
    else:
        links = graph.full_link_set()
    levels = explore_resolutions(links)
    marked = first_top_two_split(levels)
    doc = {
        "links": int(links.size),
        "marked_level": marked,
        "levels": [{"q": str(q), "num_towns": dec.num_towns,
                    "top_two_split": dec.top_two_split,
                    "decomposition": dec.to_json()}
                   for q, dec in levels],
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
    print(f"{len(levels)} resolution levels written to {args.out}")
    return 0


def cmd_bench(args) -> int:
    from .bench import PlantedSpec, generate_planted, ground_truth_json
    spec = PlantedSpec(num_sources=args.sources, num_groups=args.groups,
                       num_papers=args.papers,
                       citations_per_paper=args.citations,
                       mixing=args.mixing,
                       overlap_fraction=args.overlap,
                       rng_seed=args.rng_seed)
    graph, truth = generate_planted(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "planted.tsv", "w", encoding="utf-8") as fh:
        fh.write("# planted benchmark graph\n")
        for paper, source in graph.edge_pairs_raw():
            fh.write(f"{paper}\t{source}\n")
    with open(out / "truth.json", "w", encoding="utf-8") as fh:
        json.dump(ground_truth_json(truth), fh, indent=1, sort_keys=True)
    with open(out / "spec.json", "w", encoding="utf-8") as fh:
        json.dump(vars(spec), fh, indent=1, sort_keys=True)
    print(f"planted graph with {graph.m} links and {len(truth)} "
          f"communities written to {out}")
    return 0


def cmd_oracle(args) -> int:
    from .bench import brute_force_valid_clusters
    from .nodecut import normalized_cut
    graph = _load_graph(args.input, not args.keep_single_citers)
    valid = brute_force_valid_clusters(graph, Fraction(args.r))
    doc = [{"links": [int(e) for e in ls.edge_ids()],
            "size": ls.size,
            "score": repr(normalized_cut(ls).value)} for ls in valid]
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
    print(f"{len(valid)} valid clusters at r={args.r} written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="linktopics",
        description="Overlapping link-community detection for bipartite "
                    "citation networks")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("load", help="parse, prune, summarize, project")
    q.add_argument("--input", required=True)
    q.add_argument("--out", default="linktopics_load")
    q.add_argument("--alpha", type=float, default=0.05)
    q.add_argument("--keep-single-citers", action="store_true")
    q.set_defaults(func=cmd_load)

    q = sub.add_parser("seeds", help="Ward dendrogram and long-branch seeds")
    q.add_argument("--input", required=True)
    q.add_argument("--out", default="linktopics_seeds")
    q.add_argument("--seed-count", type=int, default=27)
    q.add_argument("--min-seed-links", type=int, default=2)
    q.add_argument("--alpha", type=float, default=0.05)
    q.add_argument("--keep-single-citers", action="store_true")
    q.set_defaults(func=cmd_seeds)

    q = sub.add_parser("cluster", help="multi-resolution clustering run")
    _add_run_flags(q)
    q.set_defaults(func=cmd_cluster)

    q = sub.add_parser("run", help="cluster plus analysis in one go")
    _add_run_flags(q)
    q.set_defaults(func=cmd_run)

    q = sub.add_parser("analyze", help="tables and views for a finished run")
    q.add_argument("--run", required=True, help="run directory")
    q.add_argument("--out", default=None)
    q.add_argument("--alpha", type=float, default=None)
    q.add_argument("--core-share", type=float, default=None)
    q.add_argument("--bridge-share", type=float, default=None)
    q.set_defaults(func=cmd_analyze)

    q = sub.add_parser("cplc", help="town decomposition sweep")
    q.add_argument("--input", required=True)
    q.add_argument("--links-file", default=None,
                   help="JSON list of edge ids; full graph when omitted")
    q.add_argument("--out", default="towns.json")
    q.add_argument("--keep-single-citers", action="store_true")
    q.set_defaults(func=cmd_cplc)

    q = sub.add_parser("bench", help="generate a planted benchmark")
    q.add_argument("--groups", type=int, default=4)
    q.add_argument("--sources", type=int, default=300)
    q.add_argument("--papers", type=int, default=3000)
    q.add_argument("--citations", type=int, default=8)
    q.add_argument("--mixing", type=float, default=0.1)
    q.add_argument("--overlap", type=float, default=0.0)
    q.add_argument("--rng-seed", type=int, default=0)
    q.add_argument("--out", default="linktopics_bench")
    q.set_defaults(func=cmd_bench)

    q = sub.add_parser("oracle", help="exhaustive valid clusters (m <= 14)")
    q.add_argument("--input", required=True)
    q.add_argument("--r", default="1/3")
    q.add_argument("--out", default="oracle_clusters.json")
    q.add_argument("--keep-single-citers", action="store_true")
    q.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    from .graph import GraphError
    from .pipeline import PipelineError
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GraphError, PipelineError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
