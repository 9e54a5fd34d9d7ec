"""Memetic evolution of link communities around seed subgraphs.

Each evolution keeps a small population of connected link sets, all local
minima of the cut landscape. Generations mutate every individual and cross
the best with its most distant partner; every offspring is driven downhill by
the invalidation probe, which either discards it (first improvement over the
incumbent best found outside the radius r * |best|) or dethrones the best
(improvement inside the radius). Several independent evolutions run per seed
and must agree before a cluster is accepted; disagreement triggers
consolidation rounds seeded with the pooled best individuals.

A ClusterRegistry can ride along to record every link set the search ever
visits; its finalize() step certifies which visited sets are valid at a given
resolution, exhaustively when the neighborhood is small enough to enumerate
and by cross-invalidation otherwise.
"""

from __future__ import annotations

import math
import multiprocessing
import warnings
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .graph import LinkSet, complement, largest_component
from .nodecut import CutScore, normalized_cut
from .search import (ResolutionParam, _exactly_less, candidate_moves,
                     invalidation_probe, tunneling_descent)


@dataclass
class EvolutionConfig:
    """Evolution parameters. Only the resolution influences which clusters
    are judged valid; everything else trades runtime for search effort."""

    resolution: object = Fraction(1, 20)
    population_size: int = 8
    num_evolutions: int = 16
    stagnation_limit: int = 100
    mutation_rate: float = 0.05
    crossover_pairs: int = 1
    rng_seed: int = 0
    threads: int = 1
    max_consolidation_rounds: int = 5
    init_attempts_factor: int = 50

    def __post_init__(self):
        self.resolution = ResolutionParam(self.resolution)
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if self.stagnation_limit < 1:
            raise ValueError("stagnation_limit must be at least 1")
        if not (0.0 < self.mutation_rate < 1.0):
            raise ValueError("mutation_rate must lie strictly between 0 and 1")
        if self.num_evolutions < 1:
            raise ValueError("num_evolutions must be at least 1")

    def with_resolution(self, r) -> "EvolutionConfig":
        return replace(self, resolution=ResolutionParam(r))


@dataclass
class ClusterRecord:
    """A found cluster with its score, validity history and provenance."""

    links: LinkSet
    score: CutScore
    valid_at: List[Fraction] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    invalidated_by: Optional["ClusterRecord"] = None
    supporting_evolutions: int = 0

    PROVISIONAL_SUPPORT = 3

    @property
    def provisionally_valid(self) -> bool:
        """True once enough independent evolutions failed to invalidate it."""
        return self.supporting_evolutions >= self.PROVISIONAL_SUPPORT

    def key(self) -> bytes:
        return self.links.key()

    def __repr__(self):
        return (f"<ClusterRecord size={self.links.size} "
                f"score={self.score.value:.5f} valid_at={self.valid_at}>")


def _float_value(ls: LinkSet) -> float:
    a = ls.k_in
    b = 2 * ls.graph.m - a
    return ls.mass / a + ls.mass / b


def _exact_min(items: Sequence[LinkSet]) -> LinkSet:
    ordered = sorted(items, key=lambda ls: ls.key())
    best = ordered[0]
    m = best.graph.m
    for ls in ordered[1:]:
        if _exactly_less(ls.mass_scaled, ls.size, best.mass_scaled, best.size, m):
            best = ls
    return best


def _select(pool: Sequence[LinkSet], k: int) -> List[LinkSet]:
    """Elitist truncation: dedupe, keep the exact best plus the k-1 next."""
    uniq = {}
    for ls in pool:
        uniq.setdefault(ls.key(), ls)
    items = list(uniq.values())
    if not items:
        return []
    best = _exact_min(items)
    rest = [ls for ls in items if ls.key() != best.key()]
    rest.sort(key=lambda ls: (_float_value(ls), ls.key()))
    return [best] + rest[:k - 1]


class ClusterRegistry:
    """Every link set the search visits, and which of them are valid.

    Intended for desk-scale runs (the store grows with every distinct
    visited state). finalize() certifies validity exhaustively whenever all
    sets within the open radius can be enumerated within `exact_ball_budget`
    score evaluations, and falls back to cross-invalidation among the
    registered sets otherwise.
    """

    def __init__(self, graph):
        self.graph = graph
        self._masks = {}

    def visit(self, links: LinkSet):
        k = links.key()
        if k not in self._masks:
            self._masks[k] = links.mask.copy()

    def __len__(self):
        return len(self._masks)

    def candidates(self) -> List[LinkSet]:
        g = self.graph
        out = []
        for key in sorted(self._masks):
            ls = LinkSet.from_mask(g, self._masks[key])
            if 0 < ls.size < g.m and ls.is_connected():
                out.append(ls)
        return out

    def finalize(self, r, exact_ball_budget: int = 200_000) -> List[ClusterRecord]:
        r = ResolutionParam(r)
        g = self.graph
        cands = self.candidates()
        records = []
        for ls in cands:
            dmax = r.max_invalidation_distance(ls.size)
            ball = sum(math.comb(g.m, d) for d in range(1, dmax + 1))
            if ball <= exact_ball_budget:
                ok = self._exact_ball_valid(ls, dmax)
                tier = "exact"
            else:
                ok = not self._cross_invalidated(ls, r, cands)
                tier = "provisional"
            if ok:
                records.append(ClusterRecord(
                    links=ls, score=normalized_cut(ls),
                    valid_at=[r.fraction],
                    provenance={"phase": "registry", "tier": tier}))
        return records

    def _exact_ball_valid(self, ls: LinkSet, dmax: int) -> bool:
        from itertools import combinations
        if dmax <= 0:
            return True
        g = self.graph
        base = ls.mask
        for d in range(1, dmax + 1):
            for combo in combinations(range(g.m), d):
                mask2 = base.copy()
                mask2[list(combo)] ^= True
                other = LinkSet.from_mask(g, mask2)
                if other.size == 0 or other.size == g.m:
                    continue
                if _exactly_less(other.mass_scaled, other.size,
                                 ls.mass_scaled, ls.size, g.m):
                    return False
        return True

    def _cross_invalidated(self, ls: LinkSet, r: ResolutionParam,
                           cands: Sequence[LinkSet]) -> bool:
        for other in cands:
            if other.key() == ls.key():
                continue
            d = ls.symmetric_difference_size(other)
            if not r.within_radius(d, ls.size):
                continue
            if _exactly_less(other.mass_scaled, other.size,
                             ls.mass_scaled, ls.size, ls.graph.m):
                return True
        return False


def mutate(links: LinkSet, config: EvolutionConfig, rng) -> LinkSet:
    """Toggle each available move independently with mutation_rate, applying
    the chosen toggles in random order and skipping any that would disconnect
    the set, empty it, or complete it to the full edge set."""
    g = links.graph
    adds, rems = candidate_moves(links)
    n_moves = adds.size + rems.size
    if n_moves == 0:
        return links.copy()
    chosen = np.flatnonzero(rng.random(n_moves) < config.mutation_rate)
    result = links.copy()
    if chosen.size == 0:
        return result
    for idx in chosen[rng.permutation(chosen.size)]:
        if idx < adds.size:
            e = int(adds[idx])
            if result.size >= g.m - 1:
                continue
            u, v = g.edge_endpoints(e)
            if result.kin[u] == 0 and result.kin[v] == 0:
                continue
            result.add(e)
        else:
            e = int(rems[idx - adds.size])
            if result.size <= 1:
                continue
            result.remove(e)
            if not result.is_connected():
                result.add(e)
    return result


def crossover(best: LinkSet, partner: LinkSet, graph=None) -> List[LinkSet]:
    """Intersection and union offspring. A disconnected intersection is cut
    down to its largest component; a disconnected or complete union is
    dropped; an empty intersection yields nothing."""
    g = best.graph
    out = []
    inter = best.mask & partner.mask
    if inter.any():
        child = LinkSet.from_mask(g, inter)
        if not child.is_connected():
            child = largest_component(child)
        out.append(child)
    union = best.mask | partner.mask
    if int(np.count_nonzero(union)) < g.m:
        child = LinkSet.from_mask(g, union)
        if child.is_connected():
            out.append(child)
    return out


def _fill_population(population: List[LinkSet], seed: Optional[LinkSet],
                     config: EvolutionConfig, rng, registry) -> List[LinkSet]:
    """Top up a population with distinct mutate-then-descend results."""
    keys = {ls.key() for ls in population}
    max_attempts = config.init_attempts_factor * config.population_size
    attempts = 0
    while len(population) < config.population_size and attempts < max_attempts:
        attempts += 1
        pool = population if seed is None else [seed] + population
        parent = pool[int(rng.integers(len(pool)))]
        mutant = mutate(parent, config, rng)
        desc = tunneling_descent(mutant, config.resolution,
                                 registry=registry).best
        k = desc.key()
        if k not in keys:
            keys.add(k)
            population.append(desc)
    if len(population) < config.population_size:
        warnings.warn(
            f"population shrunk to {len(population)} distinct individuals "
            f"after {attempts} attempts")
    return population


def init_population(seed: LinkSet, config: EvolutionConfig, rng=None,
                    registry=None) -> List[LinkSet]:
    """Descend the seed, then mutate-and-descend (parents drawn from the seed
    and the individuals found so far) until population_size distinct link
    sets exist or the attempt budget runs out."""
    if rng is None:
        rng = np.random.default_rng(config.rng_seed)
    first = tunneling_descent(seed, config.resolution, registry=registry).best
    return _fill_population([first], seed, config, rng, registry)


def _most_distant_partner(population: Sequence[LinkSet], best: LinkSet,
                          rng) -> Optional[LinkSet]:
    cands = [ls for ls in population if ls.key() != best.key()]
    if not cands:
        return None
    dists = np.array([best.symmetric_difference_size(ls) for ls in cands])
    top = np.flatnonzero(dists == dists.max())
    return cands[int(top[int(rng.integers(top.size))])]


def _single_evolution(seed: LinkSet, config: EvolutionConfig, rng,
                      registry=None,
                      initial_pool: Optional[List[LinkSet]] = None) -> LinkSet:
    """One evolution run; returns its best individual."""
    g = seed.graph
    if initial_pool:
        population = []
        keys = set()
        for ls in initial_pool:
            k = ls.key()
            if k not in keys:
                keys.add(k)
                population.append(ls.copy())
            if len(population) == config.population_size:
                break
        population = _fill_population(population, seed, config, rng, registry)
    else:
        population = init_population(seed, config, rng, registry)
    best = _exact_min(population)
    stagnation = 0
    while stagnation < config.stagnation_limit:
        offspring = []
        best_beaten = False
        for ind in population:
            mutant = mutate(ind, config, rng)
            trace = invalidation_probe(best, mutant, config.resolution,
                                       registry=registry)
            if trace.outcome == "discarded":
                continue
            offspring.append(trace.best)
            best_beaten = best_beaten or trace.invalidated_best
        for _ in range(config.crossover_pairs):
            if len(population) < 2:
                break
            partner = _most_distant_partner(population, best, rng)
            if partner is None:
                break
            for child in crossover(best, partner):
                trace = invalidation_probe(best, child, config.resolution,
                                           registry=registry)
                if trace.outcome == "discarded":
                    continue
                offspring.append(trace.best)
                best_beaten = best_beaten or trace.invalidated_best
        pool = list(population) + offspring
        if best_beaten:
            bk = best.key()
            pool = [ls for ls in pool if ls.key() != bk]
        population = _select(pool, config.population_size)
        new_best = _exact_min(population)
        if _exactly_less(new_best.mass_scaled, new_best.size,
                         best.mass_scaled, best.size, g.m):
            best = new_best
            stagnation = 0
        else:
            if best_beaten:
                best = new_best
            stagnation += 1
    return best


# fork-shared state for worker processes; set right before the pool is
# created so children inherit it without pickling the graph
_FORK_STATE = None


def _evolution_task(args):
    round_idx, evo_idx = args
    seed, config, pool_masks = _FORK_STATE
    g = seed.graph
    initial_pool = None
    if pool_masks is not None:
        initial_pool = [LinkSet.from_mask(g, mk) for mk in pool_masks]
    ss = np.random.SeedSequence(entropy=config.rng_seed,
                                spawn_key=(round_idx, evo_idx))
    rng = np.random.default_rng(ss)
    best = _single_evolution(seed, config, rng, None, initial_pool)
    return np.packbits(best.mask).tobytes()


def _run_round(seed: LinkSet, config: EvolutionConfig, round_idx: int,
               pool_masks, registry) -> List[LinkSet]:
    """Run num_evolutions independent evolutions; list ordered by index."""
    global _FORK_STATE
    g = seed.graph
    tasks = [(round_idx, i) for i in range(config.num_evolutions)]
    use_procs = (config.threads > 1 and registry is None
                 and config.num_evolutions > 1)
    if use_procs:
        _FORK_STATE = (seed, config, pool_masks)
        try:
            ctx = multiprocessing.get_context("fork")
            with ctx.Pool(min(config.threads, config.num_evolutions)) as pool:
                packed = pool.map(_evolution_task, tasks)
        finally:
            _FORK_STATE = None
        out = []
        for blob in packed:
            mask = np.unpackbits(
                np.frombuffer(blob, dtype=np.uint8), count=g.m).astype(bool)
            out.append(LinkSet.from_mask(g, mask))
        return out
    results = []
    for round_i, evo_i in tasks:
        initial_pool = None
        if pool_masks is not None:
            initial_pool = [LinkSet.from_mask(g, mk) for mk in pool_masks]
        ss = np.random.SeedSequence(entropy=config.rng_seed,
                                    spawn_key=(round_i, evo_i))
        rng = np.random.default_rng(ss)
        results.append(_single_evolution(seed, config, rng, registry,
                                         initial_pool))
    return results


def evolve(seed: LinkSet, config: EvolutionConfig, graph=None, registry=None,
           seed_id=None) -> ClusterRecord:
    """Full memetic search around one seed.

    Runs num_evolutions independent evolutions; when at least half agree on
    the same best link set, that set is returned. Otherwise consolidation
    rounds reseed fresh evolutions with the pooled best individuals, at most
    max_consolidation_rounds times, after which the lowest-score result wins
    with a warning.
    """
    if not seed.is_connected():
        raise ValueError("evolve requires a connected seed")
    pool_masks = None
    results = []
    for round_idx in range(config.max_consolidation_rounds):
        results = _run_round(seed, config, round_idx, pool_masks, registry)
        counts = Counter(ls.key() for ls in results)
        agreed = [k for k, c in counts.items() if 2 * c >= config.num_evolutions]
        if agreed:
            by_key = {}
            for ls in results:
                by_key.setdefault(ls.key(), ls)
            winner = _exact_min([by_key[k] for k in agreed])
            return ClusterRecord(
                links=winner, score=normalized_cut(winner),
                valid_at=[config.resolution.fraction],
                provenance={"seed": seed_id, "phase": f"round{round_idx}"},
                supporting_evolutions=counts[winner.key()])
        carry = _select(results, config.population_size)
        pool_masks = [ls.mask.copy() for ls in carry]
    warnings.warn("evolutions did not reach agreement; "
                  "returning the lowest-score result")
    counts = Counter(ls.key() for ls in results)
    winner = _exact_min(results)
    return ClusterRecord(
        links=winner, score=normalized_cut(winner),
        valid_at=[config.resolution.fraction],
        provenance={"seed": seed_id, "phase": "unconverged"},
        supporting_evolutions=counts[winner.key()])


def _normalize_seeds(seeds) -> List[Tuple[str, LinkSet]]:
    out = []
    for i, item in enumerate(seeds):
        if isinstance(item, LinkSet):
            out.append((f"seed{i}", item))
        else:
            sid, ls = item
            out.append((str(sid), ls))
    return out


@dataclass
class ScheduleResult:
    """Everything run_schedule found, by link-set identity."""
    records: List[ClusterRecord]
    survivors: List[ClusterRecord]
    levels: List[dict]
    schedule: List[Fraction]


def run_schedule(seeds, schedule=None, config: EvolutionConfig = None,
                 registry=None) -> ScheduleResult:
    """Multi-resolution sweep: each level reuses the previous level's
    surviving clusters as seeds; a cluster's valid_at always covers the full
    prefix of levels up to the highest one it survived (validity is monotone
    toward smaller radii), and a cluster beaten at a level records what
    replaced it and drops out."""
    if config is None:
        config = EvolutionConfig()
    levels = [ResolutionParam(x) for x in (schedule or ResolutionParam.SCHEDULE)]
    fr = [rp.fraction for rp in levels]
    if any(b <= a for a, b in zip(fr, fr[1:])):
        raise ValueError("schedule must be strictly increasing")
    named = _normalize_seeds(seeds)
    if not named:
        raise ValueError("at least one seed is required")
    all_records = {}
    alive = {}
    level_log = []
    for li, rp in enumerate(levels):
        cfg = config.with_resolution(rp)
        if li == 0:
            batch = named
        else:
            batch = [(rec.provenance.get("seed"), rec.links)
                     for rec in alive.values()]
        new_alive = {}
        prefix = fr[:li + 1]
        for sid, seed_ls in batch:
            rec = evolve(seed_ls, cfg, registry=registry, seed_id=sid)
            key = rec.links.key()
            if key in new_alive:
                pass
            elif key in all_records:
                existing = all_records[key]
                existing.valid_at = list(prefix)
                existing.supporting_evolutions = max(
                    existing.supporting_evolutions, rec.supporting_evolutions)
                new_alive[key] = existing
            else:
                rec.valid_at = list(prefix)
                all_records[key] = rec
                new_alive[key] = rec
            if li > 0:
                seed_key = seed_ls.key()
                if seed_key != key and seed_key in all_records:
                    all_records[seed_key].invalidated_by = all_records[key]
        alive = new_alive
        level_log.append({
            "resolution": str(rp.fraction),
            "clusters": [k.hex() for k in alive],
        })
    return ScheduleResult(records=list(all_records.values()),
                          survivors=list(alive.values()),
                          levels=level_log, schedule=fr)


def derive_secondary_seeds(valid, graph=None, towns=None,
                           few_links_threshold: int = 10,
                           intersection_max_share: float = 0.7,
                           complement_min_share: float = 0.2):
    """Secondary seeds from a set of valid clusters: connected pairwise
    unions; pairwise intersections unless too small or covering more than
    70% of the smaller parent; complements of clusters holding at least 20%
    of all links, when connected and proper; plus caller-supplied towns."""
    items = []
    for i, item in enumerate(valid):
        links = item.links if isinstance(item, ClusterRecord) else item
        items.append((str(i), links))
    if not items:
        raise ValueError("at least one valid cluster is required")
    g = items[0][1].graph
    out = []
    seen = set()

    def emit(sid, ls):
        k = ls.key()
        if k not in seen:
            seen.add(k)
            out.append((sid, ls))

    for a in range(len(items)):
        for b in range(a + 1, len(items)):
            ia, la = items[a]
            ib, lb = items[b]
            union = la.mask | lb.mask
            if int(np.count_nonzero(union)) < g.m:
                ls = LinkSet.from_mask(g, union)
                if ls.is_connected():
                    emit(f"union:{ia}+{ib}", ls)
            inter = la.mask & lb.mask
            if inter.any():
                ls = LinkSet.from_mask(g, inter)
                if not ls.is_connected():
                    ls = largest_component(ls)
                smaller = min(la.size, lb.size)
                if (ls.size >= few_links_threshold
                        and ls.size <= intersection_max_share * smaller):
                    emit(f"intersection:{ia}*{ib}", ls)
    for sid, links in items:
        if links.size >= complement_min_share * g.m and links.size < g.m:
            comp = complement(links)
            if comp.is_connected():
                emit(f"complement:{sid}", comp)
    if towns:
        for i, ls in enumerate(towns):
            emit(f"town:{i}", ls)
    return out


def find_valid_clusters(graph, seeds, r, config: EvolutionConfig,
                        exact_ball_budget: int = 200_000) -> List[ClusterRecord]:
    """Run the engine over the seeds with a registry and certify every
    visited set's validity at resolution r. The exhaustive tier applies
    whenever the invalidation neighborhood is enumerable."""
    registry = ClusterRegistry(graph)
    cfg = config.with_resolution(r)
    for sid, seed in _normalize_seeds(seeds):
        evolve(seed, cfg, registry=registry, seed_id=sid)
    return registry.finalize(cfg.resolution, exact_ball_budget)
