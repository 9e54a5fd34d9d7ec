"""Downstream analyses over link clusters.

Everything here treats clusters as plain link sets: membership shares per
source (with core / majority / bridging flags at configurable thresholds),
pairwise and triple link overlaps, the containment poly-hierarchy, exact
hypergeometric significance filtering of the co-citation projection,
matching against Ward dendrogram clusters, and GraphML / CSV exports.

Threshold comparisons run in exact rational arithmetic so boundary cases
(a share of exactly 95%) behave as written rather than by float luck.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .graph import LinkSet
from .nodecut import normalized_cut


def _named_clusters(clusters) -> Tuple[List[str], List[LinkSet]]:
    names, sets = [], []
    for i, item in enumerate(clusters):
        if isinstance(item, LinkSet):
            names.append(f"C{i}")
            sets.append(item)
        elif hasattr(item, "links"):
            names.append(f"C{i}")
            sets.append(item.links)
        else:
            name, ls = item
            names.append(str(name))
            sets.append(ls)
    if not sets:
        raise ValueError("no clusters given")
    return names, sets


def salton_index(overlap: int, size_a: int, size_b: int) -> float:
    """o / sqrt(|A| * |B|); 0 when either set is empty."""
    if overlap == 0 or size_a == 0 or size_b == 0:
        return 0.0
    return overlap / math.sqrt(size_a * size_b)


class MembershipReport:
    """Per-(cluster, source) internal link shares and threshold flags.

    share(c, s) is the fraction of source s's citation links inside cluster
    c. Core means share strictly above core_share; majority membership
    (share strictly above 1/2) defines the cluster's source set S(L);
    bridging, defined against a second cluster, needs at least bridge_share
    on both sides.
    """

    def __init__(self, names, clusters, graph, core_share, bridge_share):
        self.names = list(names)
        self.clusters = list(clusters)
        self.graph = graph
        self.core_share = Fraction(core_share)
        self.bridge_share = Fraction(bridge_share)
        if not (0 < self.core_share < 1) or not (0 < self.bridge_share < 1):
            raise ValueError("thresholds must lie strictly between 0 and 1")
        self.source_nodes = graph.source_nodes
        self.source_ids = [graph.raw_id(int(s)) for s in self.source_nodes]
        self.degrees = graph.degree[self.source_nodes].astype(np.int64)
        self.kin = np.vstack([ls.kin[self.source_nodes].astype(np.int64)
                              for ls in self.clusters])

    @property
    def shares(self) -> np.ndarray:
        return self.kin / self.degrees[None, :]

    def share(self, ci: int, si: int) -> Fraction:
        return Fraction(int(self.kin[ci, si]), int(self.degrees[si]))

    def core_mask(self, ci: int) -> np.ndarray:
        t = self.core_share
        return self.kin[ci] * t.denominator > t.numerator * self.degrees

    def majority_mask(self, ci: int) -> np.ndarray:
        return 2 * self.kin[ci] > self.degrees

    def source_set(self, ci: int) -> List[str]:
        """S(L): sources with a strict majority of links inside."""
        return [self.source_ids[i]
                for i in np.flatnonzero(self.majority_mask(ci))]

    def bridging_mask(self, ci: int, cj: int) -> np.ndarray:
        t = self.bridge_share
        lo_i = self.kin[ci] * t.denominator >= t.numerator * self.degrees
        lo_j = self.kin[cj] * t.denominator >= t.numerator * self.degrees
        return lo_i & lo_j

    def bridging_sources(self, ci: int, cj: Optional[int] = None) -> List[str]:
        """Sources with at least bridge_share of their links in each of two
        clusters; cj defaults to ci's complement when it is present."""
        if cj is None:
            comp = ~self.clusters[ci].mask
            cj = next((j for j, ls in enumerate(self.clusters)
                       if j != ci and np.array_equal(ls.mask, comp)), None)
            if cj is None:
                raise ValueError("no complementary cluster found; pass cj")
        return [self.source_ids[i]
                for i in np.flatnonzero(self.bridging_mask(ci, cj))]

    def is_complementary(self, ci: int, cj: int) -> bool:
        return bool(np.array_equal(self.clusters[ci].mask,
                                   ~self.clusters[cj].mask))


def source_membership(clusters, graph=None, core_share: float = 0.95,
                      bridge_share: float = 0.05) -> MembershipReport:
    names, sets = _named_clusters(clusters)
    g = sets[0].graph if graph is None else graph
    for ls in sets:
        if ls.graph is not g:
            raise ValueError("clusters must share one graph")
    if not hasattr(g, "source_nodes"):
        raise TypeError("membership needs a bipartite citation graph")
    return MembershipReport(names, sets, g, core_share, bridge_share)


@dataclass
class OverlapTable:
    """Pairwise (and optional triple) link-overlap counts."""

    names: List[str]
    sizes: List[int]
    pairwise: np.ndarray
    triples: Dict[Tuple[int, int, int], int]

    def pair(self, i: int, j: int) -> int:
        return int(self.pairwise[i, j])

    def triple(self, i: int, j: int, k: int) -> int:
        return self.triples[tuple(sorted((i, j, k)))]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["cluster"] + self.names)
            for i, name in enumerate(self.names):
                w.writerow([name] + [int(x) for x in self.pairwise[i]])
            if self.triples:
                w.writerow([])
                w.writerow(["triple", "links"])
                for key in sorted(self.triples):
                    label = "&".join(self.names[i] for i in key)
                    w.writerow([label, self.triples[key]])


def overlap_table(clusters, triples: bool = True,
                  max_triple_sets: int = 12) -> OverlapTable:
    """|A∩B| for every pair, in links; |A∩B∩C| for every triple when the
    cluster count stays within max_triple_sets. Diagonal holds sizes."""
    names, sets = _named_clusters(clusters)
    if len(sets) < 2:
        raise ValueError("need at least 2 clusters")
    masks = np.vstack([ls.mask for ls in sets])
    pair = (masks.astype(np.int64) @ masks.T.astype(np.int64))
    trip = {}
    if triples and len(sets) <= max_triple_sets:
        for i in range(len(sets)):
            for j in range(i + 1, len(sets)):
                ij = masks[i] & masks[j]
                for k in range(j + 1, len(sets)):
                    trip[(i, j, k)] = int(np.count_nonzero(ij & masks[k]))
    return OverlapTable(names, [ls.size for ls in sets], pair, trip)


@dataclass
class PolyHierarchy:
    """Containment DAG over clusters.

    raw_edges hold every small-to-large containment before collapsing;
    classes group clusters connected by mutual containment; dag_edges are
    the transitive reduction over class representatives (smallest index).
    """

    names: List[str]
    raw_edges: List[Tuple[int, int]]
    classes: List[List[int]]
    dag_edges: List[Tuple[int, int]]

    def to_networkx(self):
        import networkx as nx
        gx = nx.DiGraph()
        for cls in self.classes:
            rep = cls[0]
            gx.add_node(self.names[rep],
                        members=",".join(self.names[c] for c in cls))
        for a, b in self.dag_edges:
            gx.add_edge(self.names[a], self.names[b])
        return gx


def poly_hierarchy(clusters, outside_threshold: float = 0.05
                   ) -> PolyHierarchy:
    """Draw small -> large when the smaller cluster keeps strictly less than
    outside_threshold of its links outside the larger; mutual containments
    collapse into one node and the rest reduces transitively."""
    import networkx as nx
    names, sets = _named_clusters(clusters)
    if len(sets) < 2:
        raise ValueError("need at least 2 clusters")
    t = Fraction(outside_threshold)
    masks = np.vstack([ls.mask for ls in sets])
    sizes = [ls.size for ls in sets]
    gx = nx.DiGraph()
    gx.add_nodes_from(range(len(sets)))
    raw = []
    for i in range(len(sets)):
        for j in range(len(sets)):
            if i == j or sizes[i] > sizes[j]:
                continue
            outside = sizes[i] - int(np.count_nonzero(masks[i] & masks[j]))
            if outside * t.denominator < t.numerator * sizes[i]:
                raw.append((i, j))
                gx.add_edge(i, j)
    cond = nx.condensation(gx)
    classes = [sorted(cond.nodes[c]["members"]) for c in sorted(cond.nodes)]
    reduced = nx.transitive_reduction(cond)
    rep = {c: classes[c][0] for c in sorted(cond.nodes)}
    dag_edges = sorted((rep[a], rep[b]) for a, b in reduced.edges)
    classes = sorted(classes)
    return PolyHierarchy(names, raw, classes, dag_edges)


def significance_filter(projection, alpha: float = 0.05):
    """Keep projection edges whose one-sided hypergeometric tail is at most
    alpha; the filtered projection's weights are observed minus expected."""
    from scipy.stats import hypergeom
    from .graph import CoCitationProjection
    if not (0 < alpha <= 1):
        raise ValueError("alpha must lie in (0, 1]")
    n_i = projection.citation_counts[projection.i_idx]
    n_j = projection.citation_counts[projection.j_idx]
    if projection.count.size:
        pvals = hypergeom.sf(projection.count - 1, projection.num_papers,
                             n_i, n_j)
        keep = pvals <= alpha
    else:
        keep = np.zeros(0, bool)
    return CoCitationProjection(
        projection.source_nodes, projection.source_labels,
        projection.i_idx[keep], projection.j_idx[keep],
        projection.count[keep], projection.expected[keep],
        np.ones(int(keep.sum()), bool), projection.num_papers,
        projection.citation_counts, alpha)


@dataclass
class MatchRow:
    ward_id: int
    ward_size: int
    cluster: str
    source_count: int
    overlap: int
    salton: float
    sym_diff: int


@dataclass
class MatchReport:
    rows: List[MatchRow]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["W", "|W|", "L", "|S(L)|", "o", "s"])
            for r in self.rows:
                w.writerow([r.ward_id, r.ward_size, r.cluster,
                            r.source_count, r.overlap, f"{r.salton:.2f}"])


def match_dendrogram(clusters, dendrogram, graph=None, memberships=None,
                     cluster_ids=None) -> MatchReport:
    """Best link cluster per Ward cluster by minimum symmetric difference
    between the Ward member set and the cluster's majority-source set S(L);
    ties prefer the larger Salton index, then the smaller cluster index."""
    names, sets = _named_clusters(clusters)
    mem = memberships
    if mem is None:
        mem = source_membership(list(zip(names, sets)), graph)
    source_sets = [set(mem.source_set(ci)) for ci in range(len(sets))]
    if cluster_ids is None:
        cluster_ids = [cid for cid in dendrogram.internal_clusters()
                       if dendrogram.parent(cid) is not None]
    rows = []
    for wid in cluster_ids:
        W = set(dendrogram.member_ids(wid))
        best = None
        for ci, S in enumerate(source_sets):
            o = len(S & W)
            sd = len(S) + len(W) - 2 * o
            s = salton_index(o, len(S), len(W))
            key = (sd, -s, ci)
            if best is None or key < best[0]:
                best = (key, ci, o, s, sd)
        _, ci, o, s, sd = best
        rows.append(MatchRow(wid, len(W), names[ci], len(source_sets[ci]),
                             o, s, sd))
    return MatchReport(rows)


def export_cluster_views(clusters, projection, memberships=None,
                         out_dir=None) -> Dict[str, object]:
    """Per-cluster colored projection graphs.

    A source is colored when it is a core member of the cluster; a
    projection edge is colored when strictly more than half of its co-citing
    papers carry both citation links inside the cluster. Writes
    <out_dir>/<name>.graphml when out_dir is given; returns the graphs.
    """
    import networkx as nx
    from scipy import sparse
    names, sets = _named_clusters(clusters)
    mem = memberships
    if mem is None:
        mem = source_membership(list(zip(names, sets)))
    g = mem.graph
    src_local = {int(s): i for i, s in enumerate(g.source_nodes)}
    pap_local = {int(p): i for i, p in enumerate(g.paper_nodes)}
    out = {}
    for ci, (name, ls) in enumerate(zip(names, sets)):
        edge_ids = ls.edge_ids()
        rows = [pap_local[int(g.edge_u[e])] for e in edge_ids]
        cols = [src_local[int(g.edge_v[e])] for e in edge_ids]
        bi = sparse.csr_matrix(
            (np.ones(len(rows), np.int64), (rows, cols)),
            shape=(len(pap_local), len(src_local)))
        co_in = (bi.T @ bi).tocsr()
        core = mem.core_mask(ci)
        shares = mem.shares[ci]
        gx = nx.Graph()
        for si, label in enumerate(projection.source_labels):
            gx.add_node(label, colored=bool(core[si]),
                        share=float(shares[si]))
        for a_i, b_i, count in zip(projection.i_idx, projection.j_idx,
                                   projection.count):
            inside = int(co_in[int(a_i), int(b_i)])
            gx.add_edge(projection.source_labels[int(a_i)],
                        projection.source_labels[int(b_i)],
                        count=int(count), inside=inside,
                        colored=bool(2 * inside > int(count)))
        out[name] = gx
        if out_dir is not None:
            nx.write_graphml(gx, f"{out_dir}/{name}.graphml")
    return out


def write_clusters_csv(records, path, graph=None):
    """name, link count, cut score per cluster; scores print via repr so
    reruns byte-match."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "links", "score"])
        for i, item in enumerate(records):
            if hasattr(item, "links") and hasattr(item, "score"):
                name, ls, score = f"C{i}", item.links, item.score
            elif isinstance(item, LinkSet):
                name, ls, score = f"C{i}", item, normalized_cut(item)
            else:
                name, ls = item
                score = normalized_cut(ls)
            w.writerow([name, ls.size, repr(score.value)])
