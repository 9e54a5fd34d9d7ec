"""Memetic engine: mutation, crossover, consensus, schedule, registry."""

import warnings
from fractions import Fraction

import numpy as np
import pytest

from linktopics.evolve import (ClusterRecord, ClusterRegistry,
                               EvolutionConfig, crossover,
                               derive_secondary_seeds, evolve,
                               find_valid_clusters, init_population, mutate,
                               run_schedule)
from linktopics.graph import LinkSet
from linktopics.nodecut import normalized_cut

from conftest import random_link_graph


def small_config(**over):
    base = dict(resolution=Fraction(1, 3), population_size=4,
                num_evolutions=4, stagnation_limit=6, mutation_rate=0.3,
                rng_seed=1)
    base.update(over)
    return EvolutionConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        small_config(population_size=1)
    with pytest.raises(ValueError):
        small_config(mutation_rate=0.0)
    with pytest.raises(ValueError):
        small_config(mutation_rate=1.0)
    with pytest.raises(ValueError):
        small_config(num_evolutions=0)
    with pytest.raises(ValueError):
        small_config(stagnation_limit=0)


def test_config_with_resolution_returns_copy():
    cfg = small_config()
    cfg2 = cfg.with_resolution(Fraction(1, 4))
    assert cfg.resolution.fraction == Fraction(1, 3)
    assert cfg2.resolution.fraction == Fraction(1, 4)
    assert cfg2.population_size == cfg.population_size


def test_mutate_stays_connected(bridge_graph):
    tri = LinkSet.from_edges(bridge_graph, [0, 1, 2])
    cfg = small_config(mutation_rate=0.4)
    rng = np.random.default_rng(5)
    for _ in range(50):
        child = mutate(tri, cfg, rng)
        assert child.is_connected()
        assert 0 < child.size


def test_mutate_same_seed_same_child(bridge_graph):
    tri = LinkSet.from_edges(bridge_graph, [0, 1, 2, 3])
    cfg = small_config(mutation_rate=0.5)
    a = mutate(tri, cfg, np.random.default_rng(9))
    b = mutate(tri, cfg, np.random.default_rng(9))
    assert a.key() == b.key()


def test_crossover_children_connected_and_proper(bridge_graph):
    a = LinkSet.from_edges(bridge_graph, [0, 1, 2, 3])
    b = LinkSet.from_edges(bridge_graph, [3, 4, 5, 6])
    kids = crossover(a, b)
    for kid in kids:
        assert kid.is_connected()
        assert 0 < kid.size < bridge_graph.m
    # intersection {3} survives, the union covers everything and is skipped
    keys = {frozenset(kid.edge_ids().tolist()) for kid in kids}
    assert frozenset([3]) in keys
    assert frozenset(range(7)) not in keys


def test_crossover_empty_intersection_skipped(bridge_graph):
    a = LinkSet.from_edges(bridge_graph, [0, 1, 2])
    b = LinkSet.from_edges(bridge_graph, [4, 5, 6])
    kids = crossover(a, b)
    keys = {frozenset(kid.edge_ids().tolist()) for kid in kids}
    # intersection empty; union disconnected: nothing crossable
    assert keys == set()


def test_init_population_distinct(bridge_graph):
    seed = LinkSet.from_edges(bridge_graph, [0])
    cfg = small_config()
    rng = np.random.default_rng(0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pop = init_population(seed, cfg, rng)
    keys = {ls.key() for ls in pop}
    assert len(keys) == len(pop) >= 1


def test_evolve_finds_triangle(bridge_graph):
    seed = LinkSet.from_edges(bridge_graph, [0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rec = evolve(seed, small_config())
    got = frozenset(rec.links.edge_ids().tolist())
    assert got in (frozenset([0, 1, 2]), frozenset([3, 4, 5, 6]))
    assert rec.score.as_fraction() == Fraction(7, 36)
    assert rec.supporting_evolutions >= 2


def test_evolve_deterministic(bridge_graph):
    seed = LinkSet.from_edges(bridge_graph, [3])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        a = evolve(seed, small_config())
        b = evolve(seed, small_config())
    assert a.links.key() == b.links.key()
    assert a.supporting_evolutions == b.supporting_evolutions


def test_evolve_thread_count_does_not_change_result(bridge_graph):
    seed = LinkSet.from_edges(bridge_graph, [1])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        serial = evolve(seed, small_config(threads=1))
        forked = evolve(seed, small_config(threads=2))
    assert serial.links.key() == forked.links.key()


def test_cluster_record_provisional_validity(bridge_graph):
    ls = LinkSet.from_edges(bridge_graph, [0, 1, 2])
    rec = ClusterRecord(links=ls, score=normalized_cut(ls),
                        valid_at=[Fraction(1, 3)],
                        supporting_evolutions=2)
    assert not rec.provisionally_valid
    rec.supporting_evolutions = 3
    assert rec.provisionally_valid


def test_run_schedule_requires_increasing_resolutions(bridge_graph):
    seed = LinkSet.from_edges(bridge_graph, [0])
    with pytest.raises(ValueError):
        run_schedule([("s", seed)], ["1/3", "1/4"], small_config())


def test_run_schedule_levels_and_survivors(bridge_graph):
    seed = LinkSet.from_edges(bridge_graph, [0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        result = run_schedule([("s", seed)], ["1/4", "1/3"], small_config())
    assert result.schedule == [Fraction(1, 4), Fraction(1, 3)]
    assert [lv["resolution"] for lv in result.levels] == ["1/4", "1/3"]
    assert result.survivors
    for rec in result.survivors:
        # a full-schedule survivor was re-validated at every level
        assert rec.valid_at == [Fraction(1, 4), Fraction(1, 3)]


def test_derive_secondary_seeds_combinations(bridge_graph):
    tri = LinkSet.from_edges(bridge_graph, [0, 1, 2])
    tri_plus = LinkSet.from_edges(bridge_graph, [0, 1, 2, 3])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        secondary = derive_secondary_seeds([tri, tri_plus], bridge_graph)
    keys = {frozenset(ls.edge_ids().tolist()) for _, ls in secondary}
    assert frozenset([0, 1, 2, 3]) in keys          # union
    assert frozenset([3, 4, 5, 6]) in keys          # complement of tri
    names = [name for name, _ in secondary]
    assert len(names) == len(set(names))


def test_registry_exact_tier_catches_all(bridge_graph):
    registry = ClusterRegistry(bridge_graph)
    seed = LinkSet.from_edges(bridge_graph, [0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        evolve(seed, small_config(), registry=registry)
    finals = registry.finalize(Fraction(1, 3))
    assert finals
    tiers = {rec.provenance.get("tier") for rec in finals}
    # small graph: every invalidation ball fits the exhaustive budget
    assert tiers == {"exact"}


def test_find_valid_clusters_sound_on_small_graph():
    from linktopics.bench import brute_force_valid_clusters
    g = random_link_graph(n=5, m=7, rng_seed=3)
    seeds = [(str(e), LinkSet.from_edges(g, [e])) for e in range(g.m)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        found = find_valid_clusters(g, seeds, Fraction(1, 3),
                                    small_config(num_evolutions=2))
    oracle_keys = {ls.key() for ls in
                   brute_force_valid_clusters(g, Fraction(1, 3))}
    assert found
    for rec in found:
        assert rec.links.key() in oracle_keys
