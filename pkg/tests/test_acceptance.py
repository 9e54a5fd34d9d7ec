"""Acceptance suite: ten go/no-go checks, one line of verdict each.

Budgets marked "four-core desktop" scale their wall-clock allowance by the
number of cores actually present (a single-core box gets 4x the wall time
for the same total work); all other budgets are absolute.
"""

import json
import os
import shutil
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

import conftest
from linktopics.analysis import poly_hierarchy, salton_index
from linktopics.bench import (PlantedSpec, brute_force_valid_clusters,
                              generate_planted, random_bipartite_graph)
from linktopics.evolve import EvolutionConfig, find_valid_clusters, run_schedule
from linktopics.graph import (BipartiteCitationGraph, LinkGraph, LinkSet,
                              complement, load_edge_list_path,
                              prune_single_citers)
from linktopics.nodecut import (cut_after_move, escape_probability,
                                normalized_cut)
from linktopics.pipeline import RunConfig, run_pipeline
from linktopics.search import tunneling_descent

BRIDGE_EDGES = [(1, 2), (2, 3), (1, 3), (3, 4), (4, 5), (5, 6), (4, 6)]


def _cores_vs_four():
    return 4.0 / max(1, min(4, os.cpu_count() or 4))


def _record(num, label, ok, detail):
    line = f"criterion {num:>2} {'PASS' if ok else 'FAIL'}  {label}: {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def _random_connected(n, m, seed):
    """Spanning tree plus random extra pairs; connected by construction."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    pairs = set()
    for i in range(1, n):
        parent = order[rng.integers(0, i)]
        pairs.add((min(int(order[i]), int(parent)),
                   max(int(order[i]), int(parent))))
    while len(pairs) < m:
        u, v = rng.integers(0, n, size=2)
        if u != v:
            pairs.add((min(int(u), int(v)), max(int(u), int(v))))
    return LinkGraph(sorted(pairs))


def test_criterion_01_complement_symmetry():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    checked = 0
    for gi in range(20):
        n = int(rng.integers(20, 201))
        m = int(rng.integers(n, min(1001, n * (n - 1) // 2 + 1)))
        g = _random_connected(n, m, seed=1000 + gi)
        for _ in range(50):
            size = int(rng.integers(1, g.m))
            ids = rng.choice(g.m, size=size, replace=False)
            ls = LinkSet.from_edges(g, sorted(int(i) for i in ids))
            a = float(normalized_cut(ls).value)
            b = float(normalized_cut(complement(ls)).value)
            worst = max(worst, abs(a - b))
            checked += 1
    dt = time.perf_counter() - t0
    ok = checked == 1000 and worst <= 1e-12 and dt < 10
    line = _record(1, "complement symmetry",
                   ok, f"{checked} subsets, max |diff| {worst:.2e}, {dt:.1f}s")
    assert ok, line


def test_criterion_02_incremental_updates():
    t0 = time.perf_counter()
    g = _random_connected(50, 200, seed=2)
    rng = np.random.default_rng(2)
    ls = LinkSet.from_edges(g, [0])
    worst = 0.0
    moves = 0
    endpoints = [g.edge_endpoints(e) for e in range(g.m)]
    while moves < 10_000:
        member = ls.mask
        adjacent = np.fromiter(
            (ls.kin[u] + ls.kin[v] > 0 for u, v in endpoints),
            dtype=bool, count=g.m)
        addable = np.flatnonzero(adjacent & ~member)
        if ls.size <= 1 or (addable.size and rng.random() < 0.5
                            and ls.size < g.m - 1):
            move, direction = int(rng.choice(addable)), "add"
        else:
            move, direction = int(rng.choice(np.flatnonzero(member))), "remove"
        predicted = float(cut_after_move(ls, move, direction).value)
        ls.add(move) if direction == "add" else ls.remove(move)
        actual = float(normalized_cut(ls).value)
        worst = max(worst, abs(predicted - actual))
        moves += 1
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and dt < 10
    line = _record(2, "incremental vs recompute",
                   ok, f"{moves} moves, max |diff| {worst:.2e}, {dt:.1f}s")
    assert ok, line


def test_criterion_03_bridge_landscape():
    t0 = time.perf_counter()
    g = LinkGraph(BRIDGE_EDGES)
    tri = LinkSet.from_edges(g, [0, 1, 2])
    exact = normalized_cut(tri).as_fraction() == Fraction(7, 36)
    # both triangles and both their complements share the minimum score
    minima = (frozenset([0, 1, 2]), frozenset([3, 4, 5, 6]),
              frozenset([4, 5, 6]), frozenset([0, 1, 2, 3]))
    reached = True
    for e in range(g.m):
        trace = tunneling_descent(LinkSet.from_edges(g, [e]), Fraction(1, 3))
        got = frozenset(trace.best.edge_ids().tolist())
        reached &= got in minima
        reached &= trace.best_score.as_fraction() == Fraction(7, 36)
    dt = time.perf_counter() - t0
    ok = exact and reached and dt < 1
    line = _record(3, "hand-derived landscape",
                   ok, f"score 7/36 exact={exact}, descents ok={reached}, "
                       f"{dt:.2f}s")
    assert ok, line


def test_criterion_04_oracle_equivalence():
    t0 = time.perf_counter()
    cfg = EvolutionConfig(resolution=Fraction(1, 3), population_size=6,
                          num_evolutions=4, stagnation_limit=12,
                          mutation_rate=0.35, rng_seed=7)
    total_oracle = 0
    total_found = 0
    unsound = 0
    for gi in range(50):
        n = 4 + gi % 4
        m_max = min(10, n * (n - 1) // 2)
        m = max(n - 1, m_max - gi % 3)
        g = _random_connected(n, m, seed=4000 + gi)
        oracle = {ls.key() for ls in
                  brute_force_valid_clusters(g, Fraction(1, 3))}
        seeds = [LinkSet.from_edges(g, [e]) for e in range(g.m)]
        records = find_valid_clusters(g, seeds, Fraction(1, 3), cfg)
        found = {rec.links.key() for rec in records}
        unsound += len(found - oracle)
        total_oracle += len(oracle)
        total_found += len(found & oracle)
    dt = time.perf_counter() - t0
    recovery = total_found / total_oracle
    ok = unsound == 0 and recovery >= 0.9 and dt < 300
    line = _record(4, "oracle equivalence",
                   ok, f"recovery {recovery:.1%} of {total_oracle}, "
                       f"unsound {unsound}, {dt:.0f}s")
    assert ok, line


def test_criterion_05_validity_monotonicity():
    t0 = time.perf_counter()
    schedule = [Fraction(1, 20), Fraction(1, 10), Fraction(1, 5),
                Fraction(1, 4), Fraction(1, 3)]
    cfg = EvolutionConfig(population_size=4, num_evolutions=4,
                          stagnation_limit=8, mutation_rate=0.3, rng_seed=5)
    survivors_checked = 0
    violations = 0
    for gi in range(8):
        n = 5 + gi % 3
        m = min(10, n * (n - 1) // 2)
        g = _random_connected(n, m, seed=5000 + gi)
        seeds = [LinkSet.from_edges(g, [e]) for e in range(g.m)]
        result = run_schedule(seeds, schedule, cfg)
        oracle_by_r = {r: {ls.key() for ls in brute_force_valid_clusters(g, r)}
                       for r in schedule}
        for rec in result.survivors:
            survivors_checked += 1
            for r in schedule:
                if rec.links.key() not in oracle_by_r[r]:
                    violations += 1
    dt = time.perf_counter() - t0
    ok = survivors_checked > 0 and violations == 0 and dt < 60
    line = _record(5, "validity monotone in r",
                   ok, f"{survivors_checked} survivors re-verified at all "
                       f"5 levels, {violations} violations, {dt:.0f}s")
    assert ok, line


def test_criterion_06_town_breakpoints():
    from linktopics.towns import (build_towns, explore_resolutions,
                                  extract_stars, verify_never_uphill)
    t0 = time.perf_counter()
    pairs = [(f"p{i}", "A") for i in range(1, 11)]
    pairs += [(f"p{i}", "B") for i in (1, 2, 3)]
    pairs += [(f"q{i}", "B") for i in range(1, 6)]
    g = BipartiteCitationGraph(pairs)
    full = g.full_link_set()
    levels = [(q, dec.num_towns) for q, dec in explore_resolutions(full)]
    toy_ok = levels == [(Fraction(0), 1), (Fraction(3, 8), 2)]
    stars = extract_stars(full)
    toy_ok &= len(build_towns(stars, Fraction(3, 8) - Fraction(1, 100)).towns) == 1
    toy_ok &= len(build_towns(stars, Fraction(3, 8)).towns) == 2

    disjoint = BipartiteCitationGraph(
        [(f"x{i}", "C") for i in range(4)] + [(f"y{i}", "D") for i in range(4)])
    disjoint_ok = len(build_towns(
        extract_stars(disjoint.full_link_set()), 0).towns) == 2

    rng = np.random.default_rng(6)
    uphill_ok = True
    tested = 0
    while tested < 100:
        papers = int(rng.integers(6, 20))
        sources = int(rng.integers(3, 8))
        lo = papers + sources - 1
        hi = min(40, papers * sources)
        g2 = random_bipartite_graph(num_papers=papers, num_sources=sources,
                                    num_edges=int(rng.integers(lo, hi + 1)),
                                    rng_seed=int(rng.integers(10_000)))
        size = int(rng.integers(2, g2.m + 1))
        ids = rng.choice(g2.m, size=size, replace=False)
        ls = LinkSet.from_edges(g2, sorted(int(i) for i in ids))
        for q in (0, Fraction(1, 4), Fraction(1, 2)):
            dec = build_towns(extract_stars(ls), q)
            uphill_ok &= verify_never_uphill(dec)
        tested += 1
    dt = time.perf_counter() - t0
    ok = toy_ok and disjoint_ok and uphill_ok and dt < 10
    line = _record(6, "town breakpoints",
                   ok, f"toy {levels == [(Fraction(0), 1), (Fraction(3, 8), 2)]},"
                       f" disjoint {disjoint_ok}, never-uphill on {tested} sets,"
                       f" {dt:.1f}s")
    assert ok, line


def test_criterion_07_planted_recovery(tmp_path):
    t0 = time.perf_counter()
    spec = PlantedSpec(num_sources=300, num_groups=4, num_papers=3000,
                       citations_per_paper=8, mixing=0.1, rng_seed=11)
    graph, truth = generate_planted(spec)
    inp = tmp_path / "planted.tsv"
    with open(inp, "w") as fh:
        for u, v in graph.edge_pairs_raw():
            fh.write(f"{u}\t{v}\n")
    cfg = RunConfig(
        input_path=str(inp), out_dir=str(tmp_path / "run"),
        schedule=("1/20", "1/10", "1/5", "1/4", "1/3"),
        num_evolutions=4, population_size=2, stagnation_limit=3,
        mutation_rate=0.01, init_attempts_factor=2,
        seed_mode="ward", seed_count=10, min_seed_links=2,
        rng_seed=0, threads=4)
    out = run_pipeline(cfg, analyze=False)
    rows = json.loads((Path(out) / "clusters.json").read_text())
    survivors = [r for r in rows if r["survived"]]

    g2 = prune_single_citers(load_edge_list_path(inp))
    truth_sets = [set(t.edge_ids().tolist()) for t in truth]
    worst_escape = 0.0
    best_jac = [0.0] * len(truth_sets)
    for row in survivors:
        ids = set(row["links"])
        ls = LinkSet.from_edges(g2, sorted(ids))
        worst_escape = max(worst_escape, escape_probability(ls))
        for i, ts in enumerate(truth_sets):
            best_jac[i] = max(best_jac[i], len(ids & ts) / len(ids | ts))
    mean_jac = sum(best_jac) / len(best_jac)
    dt = time.perf_counter() - t0
    budget = 1800 * _cores_vs_four()
    ok = (len(survivors) > 0 and mean_jac >= 0.9 and worst_escape < 0.5
          and dt < budget)
    line = _record(7, "planted recovery",
                   ok, f"mean best-match Jaccard {mean_jac:.3f}, worst escape "
                       f"{worst_escape:.3f}, {len(survivors)} clusters, "
                       f"{dt:.0f}s of {budget:.0f}s")
    assert ok, line


def test_criterion_08_table_arithmetic():
    t0 = time.perf_counter()
    salton_ok = round(salton_index(39, 46, 47), 2) == 0.84
    # published pairwise/triple overlap sizes must be mutually consistent
    triple, pairwise = 823, (858, 8072, 2355)
    overlap_ok = all(triple <= p for p in pairwise)

    # containment rule on sets of the published sizes: 0 of 231 links outside
    # the larger cluster draws the edge, 16 of 231 outside does not
    g = LinkGraph([(0, i) for i in range(1, 401)])
    contained = LinkSet.from_edges(g, range(231))
    container = LinkSet.from_edges(g, range(300))
    partial = LinkSet.from_edges(g, list(range(16, 231)) + list(range(300, 316)))
    ph = poly_hierarchy([("contained", contained), ("container", container),
                         ("partial", partial)], outside_threshold=0.05)
    edges = set(ph.raw_edges)
    rule_ok = (0, 1) in edges and (2, 1) not in edges
    dt = time.perf_counter() - t0
    ok = salton_ok and overlap_ok and rule_ok and dt < 1
    line = _record(8, "table arithmetic",
                   ok, f"salton 0.84 {salton_ok}, triple<=pairwise {overlap_ok},"
                       f" containment rule {rule_ok}, {dt:.2f}s")
    assert ok, line


def test_criterion_09_determinism(tmp_path):
    t0 = time.perf_counter()
    spec = PlantedSpec(num_sources=45, num_groups=3, num_papers=300,
                       citations_per_paper=4, mixing=0.1, rng_seed=9)
    graph, _ = generate_planted(spec)
    inp = tmp_path / "planted.tsv"
    with open(inp, "w") as fh:
        for u, v in graph.edge_pairs_raw():
            fh.write(f"{u}\t{v}\n")
    out = tmp_path / "run"
    cfg = RunConfig(
        input_path=str(inp), out_dir=str(out),
        schedule=("1/10", "1/5", "1/4", "1/3"),
        num_evolutions=4, population_size=2, stagnation_limit=3,
        mutation_rate=0.05, init_attempts_factor=2,
        seed_mode="ward", seed_count=5, min_seed_links=2,
        rng_seed=0, threads=4)
    run_pipeline(cfg, analyze=True)
    compared = [p.relative_to(out).as_posix() for p in sorted(out.rglob("*"))
                if p.is_file() and p.name != "timings.json"]
    first = {name: (out / name).read_bytes() for name in compared}
    shutil.rmtree(out)
    run_pipeline(cfg, analyze=True)
    mismatched = [name for name in compared
                  if (out / name).read_bytes() != first[name]]
    dt = time.perf_counter() - t0
    budget = 2 * 1800 * _cores_vs_four()
    ok = not mismatched and len(compared) >= 8 and dt < budget
    line = _record(9, "determinism",
                   ok, f"{len(compared)} artifacts byte-identical across "
                       f"reruns ({', '.join(mismatched) or 'none differ'}), "
                       f"{dt:.0f}s of {budget:.0f}s")
    assert ok, line


def test_criterion_10_scale():
    from linktopics.evolve import evolve
    from linktopics.graph import cocitation_projection
    from linktopics.seeds import ward_seeds
    t0 = time.perf_counter()
    spec = PlantedSpec(num_sources=300, num_groups=4, num_papers=6500,
                       citations_per_paper=5, mixing=0.1, rng_seed=42)
    graph, truth = generate_planted(spec)
    proj = cocitation_projection(graph)
    seeds = ward_seeds(graph, proj, count=8, min_links=2)
    _, seed = seeds[1]
    cfg = EvolutionConfig(resolution=Fraction(1, 20), population_size=4,
                          num_evolutions=4, stagnation_limit=10,
                          mutation_rate=0.01, init_attempts_factor=3,
                          rng_seed=0, threads=4)
    rec = evolve(seed, cfg)
    dt = time.perf_counter() - t0
    budget = 600 * _cores_vs_four()
    got = set(rec.links.edge_ids().tolist())
    best_jac = max(len(got & set(t.edge_ids().tolist()))
                   / len(got | set(t.edge_ids().tolist())) for t in truth)
    ok = dt < budget and rec.links.size > 0
    line = _record(10, "scale",
                   ok, f"{graph.m} links, one evolution at r=1/20 in {dt:.0f}s "
                       f"of {budget:.0f}s, best-match Jaccard {best_jac:.3f}")
    assert ok, line
