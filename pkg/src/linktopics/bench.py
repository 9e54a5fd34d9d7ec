"""Planted benchmark graphs and the exhaustive small-graph oracle.

The generator plants block-structured citation graphs with known link
communities so recovery can be scored without any proprietary corpus. The
oracle enumerates every edge subset of a small graph (m <= 14) and certifies
exactly which connected sets are valid at a resolution, with disconnected
sets admitted as potential invalidators; it shares no code with the search
path beyond the graph container, so the two can check each other.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from ._kernels import subset_connectivity_flags
from .graph import BipartiteCitationGraph, LinkSet, load_edge_list, prune_single_citers
from .search import ResolutionParam


@dataclass
class PlantedSpec:
    """Parameters of a planted-community citation graph."""

    num_sources: int = 300
    num_groups: int = 4
    num_papers: int = 3000
    citations_per_paper: int = 8
    mixing: float = 0.1
    overlap_fraction: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.num_groups < 2:
            raise ValueError("num_groups must be at least 2")
        if self.citations_per_paper < 2:
            raise ValueError("citations_per_paper must be at least 2")
        if not (0.0 <= self.mixing < 0.5):
            raise ValueError("mixing must lie in [0, 0.5)")
        if not (0.0 <= self.overlap_fraction <= 1.0):
            raise ValueError("overlap_fraction must lie in [0, 1]")
        if self.num_sources % self.num_groups != 0:
            raise ValueError("num_sources must split evenly into num_groups")
        per_group = self.num_sources // self.num_groups
        if self.mixing == 0.0 and self.citations_per_paper > per_group:
            raise ValueError(
                f"infeasible: {self.citations_per_paper} distinct citations "
                f"cannot come from a group of {per_group} sources at mixing 0")
        if self.citations_per_paper > self.num_sources:
            raise ValueError("citations_per_paper exceeds num_sources")

    @property
    def sources_per_group(self) -> int:
        return self.num_sources // self.num_groups


def generate_planted(spec: PlantedSpec) -> Tuple[BipartiteCitationGraph,
                                                 List[LinkSet]]:
    """Build the planted graph and its ground-truth link communities.

    Sources split evenly into groups; each paper belongs to one group (two
    with probability overlap_fraction) and cites citations_per_paper distinct
    sources, each drawn from its own group(s) with probability 1 - mixing and
    from the outside sources otherwise. Ground truth community k holds every
    link whose source sits in group k.
    """
    rng = np.random.default_rng(spec.rng_seed)
    g = spec.num_groups
    spg = spec.sources_per_group
    c = spec.citations_per_paper
    all_sources = np.arange(spec.num_sources)
    pairs = []
    for paper in range(spec.num_papers):
        primary = int(rng.integers(g))
        groups = [primary]
        if spec.overlap_fraction > 0 and rng.random() < spec.overlap_fraction:
            second = int(rng.integers(g - 1))
            if second >= primary:
                second += 1
            groups.append(second)
        inside = np.concatenate([np.arange(k * spg, (k + 1) * spg)
                                 for k in groups])
        outside_ok = spec.num_sources - inside.size
        cited = set()
        draws = 0
        while len(cited) < c:
            draws += 1
            if draws > 1000 * c:
                raise RuntimeError("citation sampling failed to terminate")
            if outside_ok == 0 or rng.random() >= spec.mixing:
                s = int(inside[int(rng.integers(inside.size))])
            else:
                s = int(all_sources[int(rng.integers(spec.num_sources))])
                while s in inside:
                    s = int(all_sources[int(rng.integers(spec.num_sources))])
            cited.add(s)
        for s in sorted(cited):
            pairs.append((f"p{paper}", f"s{s}"))
    graph = load_edge_list(pairs)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        graph = prune_single_citers(graph)
    group_of_node = np.full(graph.n_nodes, -1, np.int64)
    for node in graph.source_nodes:
        sid = int(graph.raw_id(node)[1:])
        group_of_node[node] = sid // spg
    truth = []
    for k in range(g):
        mask = group_of_node[graph.edge_v] == k
        if not mask.any():
            continue
        truth.append(LinkSet.from_mask(graph, mask))
    return graph, truth


def ground_truth_json(truth: Sequence[LinkSet]) -> dict:
    """Group index -> sorted link ids, ready for json.dump."""
    return {str(i): [int(e) for e in ls.edge_ids()]
            for i, ls in enumerate(truth)}


def brute_force_valid_clusters(graph, r, return_masks: bool = False):
    """All valid connected link clusters of a small graph, by enumeration.

    Keeps a connected nonempty proper subset L iff no scoreable subset
    (connected or not) both beats L's cut score exactly and lies strictly
    inside the radius r * |L| in symmetric-difference distance.
    """
    m = graph.m
    if m > 14:
        raise ValueError(f"exhaustive oracle is limited to m <= 14; got {m}")
    rp = ResolutionParam(r)
    if m < 2:
        return [] if not return_masks else ([], None)
    total = 1 << m
    masks = np.arange(total, dtype=np.uint64)
    sizes = np.bitwise_count(masks).astype(np.int64)
    inc_bits = np.zeros(graph.n_nodes, np.uint64)
    for e in range(m):
        u, v = graph.edge_endpoints(e)
        inc_bits[u] |= np.uint64(1 << e)
        inc_bits[v] |= np.uint64(1 << e)
    assert graph.mass_scale <= 360360, "degree lcm exceeds the int64 budget"
    sigma = np.zeros(total, np.int64)
    for node in range(graph.n_nodes):
        k = int(graph.degree[node])
        unit = int(graph.mass_unit[node])
        kin = np.bitwise_count(masks & inc_bits[node]).astype(np.int64)
        sigma += kin * (k - kin) * unit
    adj_bits = np.zeros(m, np.uint64)
    for e in range(m):
        u, v = graph.edge_endpoints(e)
        adj_bits[e] = inc_bits[u] | inc_bits[v]
    conn = subset_connectivity_flags(adj_bits, m)
    proper = (sizes > 0) & (sizes < m)
    a = 2 * sizes
    ab = a * (2 * m - a)
    out = []
    for cm in np.flatnonzero(conn & proper):
        size = int(sizes[cm])
        dmax = rp.max_invalidation_distance(size)
        if dmax > 0:
            dist = np.bitwise_count(masks ^ np.uint64(cm))
            near = (dist <= dmax) & proper
            if np.any(near & (sigma * int(ab[cm]) < int(sigma[cm]) * ab)):
                continue
        bits = (int(cm) >> np.arange(m)) & 1
        out.append(LinkSet.from_mask(graph, bits.astype(bool)))
    if return_masks:
        return out, (masks, sizes, sigma, conn)
    return out


def recovery_score(found, planted) -> float:
    """Mean over planted communities of the best Jaccard index achieved by
    any found link set. Empty found scores 0."""
    planted = list(planted)
    if not planted:
        raise ValueError("at least one planted community is required")
    found_masks = []
    for item in found:
        links = getattr(item, "links", item)
        found_masks.append(links.mask)
    if not found_masks:
        return 0.0
    fm = np.array(found_masks)
    best = []
    for truth in planted:
        t = truth.mask
        inter = np.count_nonzero(fm & t, axis=1)
        union = np.count_nonzero(fm | t, axis=1)
        with np.errstate(invalid="ignore"):
            jac = np.where(union > 0, inter / np.maximum(union, 1), 0.0)
        best.append(float(jac.max()))
    return float(np.mean(best))


def random_bipartite_graph(num_papers: int, num_sources: int, num_edges: int,
                           rng_seed: int = 0,
                           max_tries: int = 500) -> BipartiteCitationGraph:
    """A random connected bipartite citation graph for test suites.

    Samples num_edges distinct (paper, source) pairs and retries until the
    resulting graph is connected.
    """
    if num_edges > num_papers * num_sources:
        raise ValueError("more edges requested than distinct pairs exist")
    rng = np.random.default_rng(rng_seed)
    for _ in range(max_tries):
        flat = rng.choice(num_papers * num_sources, size=num_edges,
                          replace=False)
        pairs = [(f"p{int(x) // num_sources}", f"s{int(x) % num_sources}")
                 for x in sorted(flat)]
        graph = load_edge_list(pairs)
        if graph.full_link_set().is_connected():
            return graph
    raise RuntimeError(
        f"no connected graph found in {max_tries} tries; "
        f"increase num_edges or retries")
