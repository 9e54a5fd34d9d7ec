"""Citation graphs and link-set primitives.

The clustering unit throughout this package is a set of links (edges), not a
set of nodes. This module provides the immutable graph containers, a mutable
LinkSet with cached per-node internal degrees, a loader for tab-separated
citation records, degree-1 pruning, and the co-citation projection with an
independence null model.

Graphs come in two layers. LinkGraph is role-agnostic and carries everything
the cut score and the search need (labels, degrees, incidence); it accepts
arbitrary simple graphs, which the small hand-checked fixtures require.
BipartiteCitationGraph adds paper/source roles, loading, pruning and the
projection.
"""

from __future__ import annotations

import math
import warnings
from fractions import Fraction

import numpy as np

from . import _kernels


class GraphError(Exception):
    """Malformed input or a violated graph-level precondition."""


class LinkGraph:
    """Immutable undirected simple graph indexed for link-set work.

    Nodes are referred to by dense integer indices; `labels[i]` holds the
    external name. Edges are dense integers in load order; `edge_u`/`edge_v`
    give endpoint node indices. Degree bookkeeping and per-node incidence
    lists are built once and never change.
    """

    def __init__(self, edge_pairs):
        """edge_pairs: iterable of (label_u, label_v) tuples. Duplicate pairs
        are collapsed (count kept in `duplicates_collapsed`), self loops are
        rejected."""
        label_index = {}
        labels = []
        seen = set()
        us = []
        vs = []
        dupes = 0
        for u_lab, v_lab in edge_pairs:
            if u_lab == v_lab:
                raise GraphError(f"self loop on {u_lab!r}")
            if u_lab not in label_index:
                label_index[u_lab] = len(labels)
                labels.append(u_lab)
            if v_lab not in label_index:
                label_index[v_lab] = len(labels)
                labels.append(v_lab)
            u = label_index[u_lab]
            v = label_index[v_lab]
            pair = (u, v) if u < v else (v, u)
            if pair in seen:
                dupes += 1
                continue
            seen.add(pair)
            us.append(u)
            vs.append(v)
        self.labels = labels
        self.label_index = label_index
        self.duplicates_collapsed = dupes
        self.edge_u = np.asarray(us, dtype=np.int32)
        self.edge_v = np.asarray(vs, dtype=np.int32)
        self.m = len(us)
        self.n_nodes = len(labels)
        self._finish_index()

    def _finish_index(self):
        n, m = self.n_nodes, self.m
        degree = np.zeros(n, dtype=np.int32)
        for arr in (self.edge_u, self.edge_v):
            np.add.at(degree, arr, 1)
        self.degree = degree
        # CSR incidence: edges touching each node
        indptr = np.zeros(n + 1, dtype=np.int64)
        indptr[1:] = np.cumsum(degree)
        fill = indptr[:-1].copy()
        inc = np.empty(2 * m, dtype=np.int32)
        for e in range(m):
            for x in (int(self.edge_u[e]), int(self.edge_v[e])):
                inc[fill[x]] = e
                fill[x] += 1
        self.inc_indptr = indptr
        self.inc_edges = inc
        # exact-arithmetic support: cut mass is kept as an integer multiple
        # of 1/lcm(degrees) so complement symmetry and incremental updates
        # are exact
        distinct = set(int(k) for k in degree if k > 0)
        scale = 1
        for k in sorted(distinct):
            scale = scale * k // math.gcd(scale, k)
        self.mass_scale = scale
        self.mass_unit = [scale // int(k) if k > 0 else 0 for k in degree]
        with np.errstate(divide="ignore"):
            inv = np.where(degree > 0, 1.0 / degree.astype(np.float64), 0.0)
        self.inv_degree = inv
        self.degree_f = degree.astype(np.float64)

    # -- small accessors -------------------------------------------------

    def edge_endpoints(self, e):
        return int(self.edge_u[e]), int(self.edge_v[e])

    def incident_edges(self, node):
        return self.inc_edges[self.inc_indptr[node]:self.inc_indptr[node + 1]]

    def edge_label(self, e):
        return (self.labels[self.edge_u[e]], self.labels[self.edge_v[e]])

    def full_link_set(self):
        return LinkSet.from_mask(self, np.ones(self.m, dtype=bool))

    def __repr__(self):
        return f"<{type(self).__name__} n={self.n_nodes} m={self.m}>"


PAPER_PREFIX = "paper:"
SOURCE_PREFIX = "source:"


class BipartiteCitationGraph(LinkGraph):
    """Papers-cite-sources graph with role bookkeeping.

    Node labels are role-qualified ("paper:X", "source:X") so the same
    document id may appear in both roles without merging. Every edge joins
    exactly one paper and one source; `edge_u` always holds the paper
    endpoint and `edge_v` the source endpoint.
    """

    def __init__(self, paper_source_pairs):
        pairs = [(PAPER_PREFIX + p, SOURCE_PREFIX + s) for p, s in paper_source_pairs]
        super().__init__(pairs)
        role = np.zeros(self.n_nodes, dtype=np.int8)
        for lab, idx in self.label_index.items():
            role[idx] = 1 if lab.startswith(SOURCE_PREFIX) else 0
        self.node_role = role  # 0 paper, 1 source
        self.paper_nodes = np.flatnonzero(role == 0).astype(np.int32)
        self.source_nodes = np.flatnonzero(role == 1).astype(np.int32)
        # edge_u must be the paper side by construction; assert cheaply
        if self.m and not (role[self.edge_u] == 0).all():
            raise GraphError("internal role mix-up")

    @property
    def papers(self):
        return {self.labels[i][len(PAPER_PREFIX):] for i in self.paper_nodes}

    @property
    def sources(self):
        return {self.labels[i][len(SOURCE_PREFIX):] for i in self.source_nodes}

    def raw_id(self, node):
        lab = self.labels[node]
        pre = SOURCE_PREFIX if self.node_role[node] else PAPER_PREFIX
        return lab[len(pre):]

    def edge_pairs_raw(self, edge_ids=None):
        """(paper_id, source_id) string pairs for the given edges (all edges
        when None), in edge-id order."""
        if edge_ids is None:
            edge_ids = range(self.m)
        return [(self.raw_id(self.edge_u[e]), self.raw_id(self.edge_v[e]))
                for e in edge_ids]

    def summary(self):
        return {
            "papers": int(self.paper_nodes.size),
            "sources": int(self.source_nodes.size),
            "links": int(self.m),
            "duplicates_collapsed": int(self.duplicates_collapsed),
        }


def load_edge_list(records) -> BipartiteCitationGraph:
    """Build a citation graph from (paper_id, source_id) records.

    Accepts an iterable of 2-tuples or of text lines in the form
    ``paper_id<TAB>source_id``; lines starting with '#' and blank lines are
    ignored. Duplicate pairs are collapsed and counted. Malformed lines raise
    GraphError with the 1-based line number.
    """
    pairs = []
    for lineno, rec in enumerate(records, start=1):
        if isinstance(rec, str):
            line = rec.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise GraphError(f"line {lineno}: expected 'paper<TAB>source', got {line!r}")
            pairs.append((parts[0], parts[1]))
        else:
            try:
                p, s = rec
            except (TypeError, ValueError):
                raise GraphError(f"record {lineno}: expected a (paper, source) pair, got {rec!r}")
            if not p or not s:
                raise GraphError(f"record {lineno}: empty id in {rec!r}")
            pairs.append((str(p), str(s)))
    return BipartiteCitationGraph(pairs)


def load_edge_list_path(path) -> BipartiteCitationGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return load_edge_list(fh)


def prune_single_citers(graph: BipartiteCitationGraph) -> BipartiteCitationGraph:
    """Drop paper nodes with fewer than two citation links, then sources left
    without citers. Single pass: removing a degree-1 paper cannot lower any
    other paper's degree, so no cascade is possible."""
    keep_paper = graph.degree >= 2
    kept_edges = [e for e in range(graph.m) if keep_paper[graph.edge_u[e]]]
    pruned = BipartiteCitationGraph(graph.edge_pairs_raw(kept_edges))
    pruned.pruned_papers = int(np.count_nonzero(
        (graph.node_role == 0) & (graph.degree < 2)))
    pruned.pruned_sources = int(graph.source_nodes.size - pruned.source_nodes.size)
    if pruned.m == 0:
        warnings.warn("pruning removed every link; graph is empty")
    return pruned


class LinkSet:
    """A mutable subset of a graph's edges with exact degree bookkeeping.

    Caches, per node, how many of its incident links are members (`kin`), the
    member count (`size`), and the cut mass as an exact integer multiple of
    1/graph.mass_scale (`mass_scaled`). All three are updated in O(1) per
    add/remove, and `mass_scaled` is symmetric under complement because each
    node contributes kin*(degree-kin).
    """

    __slots__ = ("graph", "mask", "kin", "size", "mass_scaled")

    def __init__(self, graph, mask, kin, size, mass_scaled):
        self.graph = graph
        self.mask = mask
        self.kin = kin
        self.size = size
        self.mass_scaled = mass_scaled

    @classmethod
    def from_edges(cls, graph, edge_ids):
        mask = np.zeros(graph.m, dtype=bool)
        mask[np.asarray(list(edge_ids), dtype=np.int64)] = True
        return cls.from_mask(graph, mask)

    @classmethod
    def from_mask(cls, graph, mask):
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (graph.m,):
            raise ValueError("mask length does not match edge count")
        mask = mask.copy()
        kin = np.zeros(graph.n_nodes, dtype=np.int32)
        member = np.flatnonzero(mask)
        np.add.at(kin, graph.edge_u[member], 1)
        np.add.at(kin, graph.edge_v[member], 1)
        mass = _mass_scaled_from_kin(graph, kin)
        return cls(graph, mask, kin, int(member.size), mass)

    # -- mutation ---------------------------------------------------------

    def add(self, e):
        if self.mask[e]:
            raise ValueError(f"edge {e} already a member")
        g = self.graph
        self.mask[e] = True
        for x in (int(g.edge_u[e]), int(g.edge_v[e])):
            kin = int(self.kin[x])
            k = int(g.degree[x])
            self.mass_scaled += (k - 2 * kin - 1) * g.mass_unit[x]
            self.kin[x] = kin + 1
        self.size += 1

    def remove(self, e):
        if not self.mask[e]:
            raise ValueError(f"edge {e} not a member")
        g = self.graph
        self.mask[e] = False
        for x in (int(g.edge_u[e]), int(g.edge_v[e])):
            kin = int(self.kin[x])
            k = int(g.degree[x])
            self.mass_scaled += (2 * kin - k - 1) * g.mass_unit[x]
            self.kin[x] = kin - 1
        self.size -= 1

    # -- queries ----------------------------------------------------------

    def contains(self, e):
        return bool(self.mask[e])

    @property
    def k_in(self):
        """Total internal degree, always 2*size."""
        return 2 * self.size

    @property
    def mass(self):
        """Cut mass as a float, derived from the exact integer cache."""
        return self.mass_scaled / self.graph.mass_scale

    def edge_ids(self):
        return np.flatnonzero(self.mask)

    def attached_nodes(self):
        return np.flatnonzero(self.kin > 0)

    def key(self) -> bytes:
        """Canonical hashable identity of the member set."""
        return np.packbits(self.mask).tobytes()

    def symmetric_difference_size(self, other) -> int:
        return int(np.count_nonzero(self.mask ^ other.mask))

    def is_connected(self) -> bool:
        return is_connected_link_set(self)

    def copy(self):
        return LinkSet(self.graph, self.mask.copy(), self.kin.copy(),
                       self.size, self.mass_scaled)

    def assign_from(self, other):
        """In-place overwrite, used to revert a search to an earlier state."""
        np.copyto(self.mask, other.mask)
        np.copyto(self.kin, other.kin)
        self.size = other.size
        self.mass_scaled = other.mass_scaled

    def complement(self):
        return complement(self)

    def check_cache(self):
        """Recompute every cache from scratch and verify. Test helper."""
        fresh = LinkSet.from_mask(self.graph, self.mask)
        assert fresh.size == self.size
        assert np.array_equal(fresh.kin, self.kin)
        assert fresh.mass_scaled == self.mass_scaled
        assert int(self.kin.sum()) == 2 * self.size

    def __len__(self):
        return self.size

    def __eq__(self, other):
        return isinstance(other, LinkSet) and np.array_equal(self.mask, other.mask)

    def __repr__(self):
        return f"<LinkSet size={self.size} of m={self.graph.m}>"


def _mass_scaled_from_kin(graph, kin) -> int:
    total = 0
    for x in np.flatnonzero(kin):
        ki = int(kin[x])
        k = int(graph.degree[x])
        if ki != k:
            total += ki * (k - ki) * graph.mass_unit[x]
    return total


def is_connected_link_set(links, graph=None) -> bool:
    """True iff the member edges form one connected subgraph via shared
    nodes. Empty sets are not connected by convention."""
    if isinstance(links, LinkSet):
        graph = links.graph
        mask = links.mask
    else:
        mask = np.zeros(graph.m, dtype=bool)
        mask[np.asarray(list(links), dtype=np.int64)] = True
    if not mask.any():
        return False
    return bool(_kernels.connected_edges(
        mask, graph.inc_indptr, graph.inc_edges, graph.edge_u, graph.edge_v))


def complement(links: LinkSet, graph=None) -> LinkSet:
    """E minus the given links. Undefined (ValueError) for the empty and the
    full set, whose cut score has a zero denominator."""
    g = links.graph
    if links.size == 0 or links.size == g.m:
        raise ValueError("complement is only defined for nonempty proper link sets")
    mask = ~links.mask
    kin = (g.degree - links.kin).astype(np.int32)
    return LinkSet(g, mask, kin, g.m - links.size, links.mass_scaled)


def largest_component(links: LinkSet) -> LinkSet:
    """Largest connected component of a link set (ties broken toward the
    component holding the smallest edge id)."""
    g = links.graph
    if links.size == 0:
        raise ValueError("empty link set has no components")
    labels, count = _kernels.edge_component_labels(
        links.mask, g.inc_indptr, g.inc_edges, g.edge_u, g.edge_v)
    if count == 1:
        return links.copy()
    sizes = np.bincount(labels[labels >= 0], minlength=count)
    best = int(np.argmax(sizes))  # argmax takes the first max: smallest label
    return LinkSet.from_mask(g, labels == best)


class CoCitationProjection:
    """Weighted co-citation graph over the sources.

    One record per unordered source pair cited together by at least one
    paper: observed count, expected count under independent citation
    (n_i*n_j/N), and a significance flag from the one-sided hypergeometric
    tail at the stored alpha.
    """

    def __init__(self, source_nodes, source_labels, i_idx, j_idx, count,
                 expected, significant, num_papers, citation_counts, alpha):
        self.source_nodes = source_nodes
        self.source_labels = source_labels
        self.i_idx = i_idx
        self.j_idx = j_idx
        self.count = count
        self.expected = expected
        self.significant = significant
        self.num_papers = num_papers
        self.citation_counts = citation_counts
        self.alpha = alpha

    @property
    def n_sources(self):
        return len(self.source_labels)

    @property
    def n_edges(self):
        return int(self.count.size)

    def count_matrix(self):
        """Dense symmetric co-citation count matrix with zero diagonal."""
        s = self.n_sources
        mat = np.zeros((s, s), dtype=np.float64)
        mat[self.i_idx, self.j_idx] = self.count
        mat[self.j_idx, self.i_idx] = self.count
        return mat

    def weights(self):
        """Per-edge observed minus expected co-citation count."""
        return self.count - self.expected

    def edges(self):
        """Iterate (label_i, label_j, count, expected, significant)."""
        for a, b, c, x, sig in zip(self.i_idx, self.j_idx, self.count,
                                   self.expected, self.significant):
            yield (self.source_labels[a], self.source_labels[b],
                   int(c), float(x), bool(sig))

    def to_networkx(self):
        import networkx as nx
        gx = nx.Graph()
        gx.add_nodes_from(self.source_labels)
        for a, b, c, x, sig in self.edges():
            gx.add_edge(a, b, count=c, expected=x, significant=sig)
        return gx

    def to_graphml(self, path):
        import networkx as nx
        nx.write_graphml(self.to_networkx(), path)


def cocitation_projection(graph: BipartiteCitationGraph,
                          alpha: float = 0.05) -> CoCitationProjection:
    """Project the bipartite graph onto its sources.

    For every unordered source pair with at least one common citer, the
    observed co-citation count, the expected count n_i*n_j/N under the
    independence null model (N papers, n_i citers each), and a one-sided
    hypergeometric significance flag at level alpha.
    """
    from scipy import sparse
    from scipy.stats import hypergeom

    src_nodes = graph.source_nodes
    src_local = {int(s): i for i, s in enumerate(src_nodes)}
    pap_nodes = graph.paper_nodes
    pap_local = {int(p): i for i, p in enumerate(pap_nodes)}
    n_pap = pap_nodes.size
    n_src = src_nodes.size
    if graph.m:
        rows = np.fromiter((pap_local[int(u)] for u in graph.edge_u), dtype=np.int64,
                           count=graph.m)
        cols = np.fromiter((src_local[int(v)] for v in graph.edge_v), dtype=np.int64,
                           count=graph.m)
        bi = sparse.csr_matrix((np.ones(graph.m, dtype=np.int64), (rows, cols)),
                               shape=(n_pap, n_src))
        co = (bi.T @ bi).tocoo()
        keep = (co.row < co.col) & (co.data > 0)
        i_idx = co.row[keep].astype(np.int32)
        j_idx = co.col[keep].astype(np.int32)
        count = co.data[keep].astype(np.int64)
        order = np.lexsort((j_idx, i_idx))
        i_idx, j_idx, count = i_idx[order], j_idx[order], count[order]
    else:
        i_idx = j_idx = np.empty(0, dtype=np.int32)
        count = np.empty(0, dtype=np.int64)
    cite_counts = graph.degree[src_nodes].astype(np.int64)
    n_i = cite_counts[i_idx]
    n_j = cite_counts[j_idx]
    expected = n_i * n_j / max(n_pap, 1)
    if count.size:
        pvals = hypergeom.sf(count - 1, n_pap, n_i, n_j)
        significant = pvals <= alpha
    else:
        significant = np.empty(0, dtype=bool)
    labels = [graph.raw_id(int(s)) for s in src_nodes]
    return CoCitationProjection(src_nodes, labels, i_idx, j_idx, count,
                                expected, significant, n_pap, cite_counts, alpha)
