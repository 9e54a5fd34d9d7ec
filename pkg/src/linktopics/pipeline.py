"""End-to-end pipeline: load, seed, cluster, analyze, decompose, export.

A run is driven by a RunConfig and leaves a self-describing artifact
directory: graph summary, dendrogram, seeds, per-level cluster sets, the
final cluster list (JSON + CSV), overlap / match tables, per-cluster GraphML
views, town decompositions, and a manifest whose hash covers the config and
the input digest so reruns can be checked byte for byte. Wall-clock timings
go to a separate file that determinism comparisons must ignore.

Any stage failure writes a FAILED marker naming the stage and preserves
whatever was already written.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .analysis import (match_dendrogram, overlap_table, export_cluster_views,
                       significance_filter, source_membership,
                       write_clusters_csv)
from .bench import ground_truth_json
from .evolve import EvolutionConfig, derive_secondary_seeds, run_schedule
from .graph import (GraphError, LinkSet, cocitation_projection,
                    load_edge_list_path, largest_component,
                    prune_single_citers)
from .search import ResolutionParam
from .seeds import (select_long_branch_clusters, seed_links_for_sources,
                    view_distance_matrix, ward_dendrogram)
from .towns import build_towns, explore_resolutions, extract_stars

DEFAULT_SCHEDULE = ("1/20", "1/10", "1/5", "1/4", "1/3")
THREADS_ENV = "LINKTOPICS_THREADS"


class PipelineError(RuntimeError):
    """A stage failed; .stage names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


def default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            warnings.warn(f"ignoring non-integer {THREADS_ENV}={env!r}")
    return 1


@dataclass
class RunConfig:
    """Everything a reproducible run needs."""

    input_path: str
    out_dir: str
    schedule: Tuple[str, ...] = DEFAULT_SCHEDULE
    num_evolutions: int = 16
    population_size: int = 8
    stagnation_limit: int = 100
    mutation_rate: float = 0.05
    crossover_pairs: int = 1
    rng_seed: int = 0
    threads: Optional[int] = None
    seed_mode: str = "ward"
    seed_count: int = 27
    seeds_file: Optional[str] = None
    min_seed_links: int = 2
    alpha: float = 0.05
    core_share: float = 0.95
    bridge_share: float = 0.05
    prune: bool = True
    init_attempts_factor: int = 50
    view_count: int = 4
    town_count: int = 4
    town_star_bound: int = 200

    def __post_init__(self):
        rs = [ResolutionParam(s) for s in self.schedule]
        fr = [r.fraction for r in rs]
        if any(b <= a for a, b in zip(fr, fr[1:])):
            raise ValueError("schedule must be strictly increasing")
        if self.seed_mode not in ("ward", "explicit", "secondary", "towns"):
            raise ValueError(f"unknown seed_mode {self.seed_mode!r}")
        if self.seed_mode == "explicit" and not self.seeds_file:
            raise ValueError("seed_mode 'explicit' needs seeds_file")

    def resolved_threads(self) -> int:
        return self.threads if self.threads else default_threads()

    def evolution_config(self) -> EvolutionConfig:
        return EvolutionConfig(
            resolution=self.schedule[0],
            population_size=self.population_size,
            num_evolutions=self.num_evolutions,
            stagnation_limit=self.stagnation_limit,
            mutation_rate=self.mutation_rate,
            crossover_pairs=self.crossover_pairs,
            rng_seed=self.rng_seed,
            threads=self.resolved_threads(),
            init_attempts_factor=self.init_attempts_factor)

    def to_json(self) -> dict:
        out = {
            "input_path": str(self.input_path),
            "schedule": list(self.schedule),
            "num_evolutions": self.num_evolutions,
            "population_size": self.population_size,
            "stagnation_limit": self.stagnation_limit,
            "mutation_rate": self.mutation_rate,
            "crossover_pairs": self.crossover_pairs,
            "rng_seed": self.rng_seed,
            "threads": self.threads,
            "seed_mode": self.seed_mode,
            "seed_count": self.seed_count,
            "seeds_file": self.seeds_file,
            "min_seed_links": self.min_seed_links,
            "alpha": self.alpha,
            "core_share": self.core_share,
            "bridge_share": self.bridge_share,
            "prune": self.prune,
            "init_attempts_factor": self.init_attempts_factor,
            "view_count": self.view_count,
            "town_count": self.town_count,
            "town_star_bound": self.town_star_bound,
        }
        return out

    @classmethod
    def from_json(cls, obj: dict, out_dir: str) -> "RunConfig":
        kwargs = dict(obj)
        kwargs["schedule"] = tuple(kwargs.get("schedule", DEFAULT_SCHEDULE))
        return cls(out_dir=out_dir, **kwargs)


def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _dump_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _write_failed(out: Path, stage: str, err: Exception):
    try:
        (out / "FAILED").write_text(f"stage: {stage}\nerror: {err}\n",
                                    encoding="utf-8")
    except OSError:
        pass


def load_explicit_seeds(path, graph) -> List[Tuple[str, LinkSet]]:
    """Seed file: JSON list of {"name", "links": [edge ids]} and/or
    {"name", "sources": [source ids]} entries."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    out = []
    for i, entry in enumerate(data):
        name = str(entry.get("name", f"seed{i}"))
        if "links" in entry:
            ls = LinkSet.from_edges(graph, [int(e) for e in entry["links"]])
            if not ls.is_connected():
                ls = largest_component(ls)
                warnings.warn(f"seed {name} was disconnected; "
                              f"kept largest component")
        elif "sources" in entry:
            ls = seed_links_for_sources([str(s) for s in entry["sources"]],
                                        graph)
        else:
            raise ValueError(f"seed entry {i} has neither links nor sources")
        out.append((name, ls))
    if not out:
        raise ValueError("seed file holds no seeds")
    return out


def _record_sort_key(rec):
    return (rec.score.value, rec.links.key())


def _town_levels(links: LinkSet, star_bound: int):
    stars = extract_stars(links)
    if len(stars) > star_bound:
        dec = build_towns(stars, 0)
        dec.graph = links.graph
        return [(Fraction(0), dec)], None, True
    levels = explore_resolutions(links)
    marked = next((i for i, (_, d) in enumerate(levels) if d.top_two_split),
                  None)
    return levels, marked, False


def run_pipeline(config: RunConfig, analyze: bool = True) -> Path:
    """Execute the configured run; returns the artifact directory."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    failed = out / "FAILED"
    if failed.exists():
        failed.unlink()
    timings = {}

    def stage(name):
        return _Stage(name, out, timings)

    with stage("load"):
        digest = _sha256_file(config.input_path)
        graph = load_edge_list_path(config.input_path)
        raw_papers = len(graph.paper_nodes)
        raw_sources = len(graph.source_nodes)
        raw_links = graph.m
        if config.prune:
            graph = prune_single_citers(graph)
        if graph.m == 0:
            raise PipelineError("load", "no links remain after pruning "
                                        "single-citing papers")
        summary = dict(graph.summary())
        summary.update({
            "raw_papers": raw_papers, "raw_sources": raw_sources,
            "raw_links": raw_links, "input_sha256": digest,
            "pruned": bool(config.prune),
        })
        _dump_json(summary, out / "graph_summary.json")

    with stage("project"):
        projection = cocitation_projection(graph, alpha=config.alpha)
        filtered = significance_filter(projection, alpha=config.alpha)

    dendro = None
    with stage("seeds"):
        if config.seed_mode == "explicit":
            seeds = load_explicit_seeds(config.seeds_file, graph)
        else:
            if projection.n_sources < 2:
                raise PipelineError("seeds", "need at least 2 sources "
                                             "for Ward seeding")
            dist = view_distance_matrix(projection)
            dendro = ward_dendrogram(dist,
                                     leaves=list(projection.source_labels))
            _dump_json(dendro.to_json(), out / "dendrogram.json")
            sel = select_long_branch_clusters(dendro, config.seed_count)
            seeds = []
            for entry, srcs in zip(sel.entries, sel.source_sets()):
                ls = seed_links_for_sources(srcs, graph)
                if ls.size >= config.min_seed_links:
                    seeds.append((f"ward{entry.cluster_id}", ls))
            if not seeds:
                raise PipelineError("seeds", "no usable Ward seeds")
        _dump_json([{"name": name, "links": [int(e) for e in ls.edge_ids()]}
                    for name, ls in seeds], out / "seeds.json")

    with stage("cluster"):
        evo = config.evolution_config()
        result = run_schedule(seeds, config.schedule, evo)
        if config.seed_mode in ("secondary", "towns"):
            towns_in = None
            if config.seed_mode == "towns":
                towns_in = []
                for rec in sorted(result.survivors, key=_record_sort_key):
                    stars = extract_stars(rec.links)
                    dec = build_towns(stars, 0)
                    for town in dec.towns:
                        mask = np.zeros(graph.m, bool)
                        for s in town.stars:
                            mask[s.link_ids] = True
                        ls = LinkSet.from_mask(graph, mask)
                        if not ls.is_connected():
                            ls = largest_component(ls)
                        if 0 < ls.size < graph.m:
                            towns_in.append(ls)
            sec_seeds = derive_secondary_seeds(
                [rec.links for rec in
                 sorted(result.survivors, key=_record_sort_key)],
                towns=towns_in)
            if sec_seeds:
                evo2 = replace(evo, rng_seed=config.rng_seed + 1)
                result2 = run_schedule(sec_seeds, config.schedule, evo2)
                by_key = {rec.links.key(): rec for rec in result.records}
                for rec in result2.records:
                    k = rec.links.key()
                    if k in by_key:
                        if len(rec.valid_at) > len(by_key[k].valid_at):
                            by_key[k].valid_at = rec.valid_at
                    else:
                        by_key[k] = rec
                        result.records.append(rec)
                skeys = {rec.links.key() for rec in result.survivors}
                for rec in result2.survivors:
                    if rec.links.key() not in skeys:
                        result.survivors.append(by_key[rec.links.key()])
        records = sorted(result.records, key=_record_sort_key)
        names = {rec.links.key(): f"C{i + 1}"
                 for i, rec in enumerate(records)}
        survivor_keys = {rec.links.key() for rec in result.survivors}
        rows = []
        for rec in records:
            k = rec.links.key()
            inv = rec.invalidated_by
            rows.append({
                "name": names[k],
                "size": rec.links.size,
                "links": [int(e) for e in rec.links.edge_ids()],
                "score": repr(rec.score.value),
                "valid_at": [str(f) for f in rec.valid_at],
                "survived": k in survivor_keys,
                "seed": rec.provenance.get("seed"),
                "supporting_evolutions": rec.supporting_evolutions,
                "invalidated_by": (names.get(inv.links.key())
                                   if inv is not None else None),
            })
        _dump_json(rows, out / "clusters.json")
        _dump_json(result.levels, out / "levels.json")
        write_clusters_csv(
            [(names[rec.links.key()], rec.links) for rec in records],
            out / "clusters.csv")
        survivors = [rec for rec in records
                     if rec.links.key() in survivor_keys]

    if analyze:
        named = [(names[rec.links.key()], rec.links) for rec in survivors]
        with stage("analyze"):
            _write_analysis(out, graph, named, dendro, filtered,
                            config.core_share, config.bridge_share,
                            config.view_count)
        with stage("towns"):
            _write_towns(out, named, config.town_count,
                         config.town_star_bound)

    with stage("manifest"):
        cfg_json = config.to_json()
        core = json.dumps({"config": cfg_json, "input_sha256": digest},
                          sort_keys=True, separators=(",", ":"))
        manifest = {
            "config": cfg_json,
            "input_sha256": digest,
            "version": __version__,
            "hash": hashlib.sha256(core.encode()).hexdigest(),
        }
        _dump_json(manifest, out / "manifest.json")
        _dump_json(timings, out / "timings.json")
    return out


def _write_analysis(out: Path, graph, named, dendro, filtered,
                    core_share, bridge_share, view_count):
    if len(named) >= 2:
        overlap_table(named).to_csv(out / "overlaps.csv")
    if not named:
        return
    mem = source_membership(named, graph, core_share=core_share,
                            bridge_share=bridge_share)
    if dendro is not None:
        match_dendrogram(named, dendro, graph,
                         memberships=mem).to_csv(out / "matches.csv")
    views_dir = out / "views"
    views_dir.mkdir(exist_ok=True)
    top = named[:view_count]
    export_cluster_views(top, filtered,
                         source_membership(top, graph,
                                           core_share=core_share,
                                           bridge_share=bridge_share),
                         out_dir=str(views_dir))


def _write_towns(out: Path, named, town_count, town_star_bound):
    town_doc = []
    for name, ls in named[:town_count]:
        levels, marked, truncated = _town_levels(ls, town_star_bound)
        town_doc.append({
            "cluster": name,
            "truncated_to_q0": truncated,
            "marked_level": marked,
            "levels": [{"q": str(q), "num_towns": dec.num_towns,
                        "top_two_split": dec.top_two_split}
                       for q, dec in levels],
            "decomposition_q0": levels[0][1].to_json(),
        })
    _dump_json(town_doc, out / "towns.json")


def load_run_clusters(run_dir):
    """(graph, named clusters, survivor names, dendrogram or None, manifest)
    from a finished run directory."""
    from .seeds import Dendrogram
    run = Path(run_dir)
    with open(run / "manifest.json", encoding="utf-8") as fh:
        manifest = json.load(fh)
    cfg = manifest["config"]
    graph = load_edge_list_path(cfg["input_path"])
    if cfg.get("prune", True):
        graph = prune_single_citers(graph)
    with open(run / "clusters.json", encoding="utf-8") as fh:
        rows = json.load(fh)
    named = [(row["name"], LinkSet.from_edges(graph, row["links"]))
             for row in rows]
    survivors = [row["name"] for row in rows if row["survived"]]
    dendro = None
    if (run / "dendrogram.json").exists():
        with open(run / "dendrogram.json", encoding="utf-8") as fh:
            dendro = Dendrogram.from_json(json.load(fh))
    return graph, named, survivors, dendro, manifest


def analyze_run(run_dir, core_share: Optional[float] = None,
                bridge_share: Optional[float] = None,
                alpha: Optional[float] = None,
                out_dir=None) -> Path:
    """Recompute the analysis artifacts of a finished run, optionally at
    different thresholds, writing into out_dir (default: the run itself)."""
    graph, named, survivor_names, dendro, manifest = load_run_clusters(
        run_dir)
    cfg = manifest["config"]
    core_share = cfg["core_share"] if core_share is None else core_share
    bridge_share = cfg["bridge_share"] if bridge_share is None else bridge_share
    alpha = cfg["alpha"] if alpha is None else alpha
    out = Path(out_dir) if out_dir else Path(run_dir)
    out.mkdir(parents=True, exist_ok=True)
    keep = set(survivor_names)
    named_survivors = [(n, ls) for n, ls in named if n in keep]
    filtered = significance_filter(cocitation_projection(graph, alpha=alpha),
                                   alpha=alpha)
    _write_analysis(out, graph, named_survivors, dendro, filtered,
                    core_share, bridge_share, cfg.get("view_count", 4))
    _write_towns(out, named_survivors, cfg.get("town_count", 4),
                 cfg.get("town_star_bound", 200))
    return out


class _Stage:
    """Context manager timing one stage and planting the FAILED marker."""

    def __init__(self, name: str, out: Path, timings: dict):
        self.name = name
        self.out = out
        self.timings = timings

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.timings[self.name] = round(time.perf_counter() - self.t0, 3)
        if exc is not None:
            _write_failed(self.out, self.name, exc)
            if not isinstance(exc, PipelineError):
                raise PipelineError(self.name, str(exc)) from exc
        return False
