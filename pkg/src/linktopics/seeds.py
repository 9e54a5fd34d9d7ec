"""Seed construction: Ward clustering of co-citation views, long branches.

Sources are compared by their views, the vectors of co-citation counts with
every other source. Ward's minimum-variance agglomeration over the cosine
distances gives a dendrogram; clusters sitting at the bottom of long branches
(a large height gap to their parent) are compact and well separated, and the
citation links into their sources make good seed subgraphs.

The Ward merge loop is implemented directly via the Lance-Williams update so
test suites can check it against an independent reference implementation.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .graph import LinkSet, largest_component


class Dendrogram:
    """Agglomeration tree over source ids.

    Leaves carry ids 0..n-1 in `leaves` order; each merge creates cluster
    n+i. Heights are the merge distances and never decrease from child to
    parent (Ward is reducible, so no inversions occur).
    """

    def __init__(self, leaves: Sequence[str], merges: Sequence[tuple]):
        self.leaves = [str(x) for x in leaves]
        n = len(self.leaves)
        if len(merges) != n - 1:
            raise ValueError(f"expected {n - 1} merges for {n} leaves, "
                             f"got {len(merges)}")
        self.merges = [(int(a), int(b), float(h)) for a, b, h in merges]
        total = 2 * n - 1
        self._size = np.ones(total, np.int64)
        self._height = np.zeros(total, float)
        self._parent = np.full(total, -1, np.int64)
        self._children = {}
        for i, (a, b, h) in enumerate(self.merges):
            cid = n + i
            for ch in (a, b):
                if not (0 <= ch < cid):
                    raise ValueError(f"merge {i} references cluster {ch} "
                                     f"not yet formed")
                if self._parent[ch] != -1:
                    raise ValueError(f"cluster {ch} merged twice")
                self._parent[ch] = cid
            self._size[cid] = self._size[a] + self._size[b]
            self._height[cid] = h
            self._children[cid] = (a, b)

    @property
    def num_leaves(self) -> int:
        return len(self.leaves)

    @property
    def num_clusters(self) -> int:
        return 2 * len(self.leaves) - 1

    @property
    def root(self) -> int:
        return self.num_clusters - 1

    def internal_clusters(self) -> range:
        return range(self.num_leaves, self.num_clusters)

    def size(self, cid: int) -> int:
        return int(self._size[cid])

    def height(self, cid: int) -> float:
        return float(self._height[cid])

    def parent(self, cid: int) -> Optional[int]:
        p = int(self._parent[cid])
        return None if p == -1 else p

    def children(self, cid: int):
        return self._children.get(cid)

    def branch_length(self, cid: int) -> float:
        p = self.parent(cid)
        if p is None:
            raise ValueError("the root has no parent and no branch length")
        return self.height(p) - self.height(cid)

    def members(self, cid: int) -> List[int]:
        """Leaf indices under cid, ascending."""
        out = []
        stack = [cid]
        while stack:
            c = stack.pop()
            ch = self._children.get(c)
            if ch is None:
                out.append(c)
            else:
                stack.extend(ch)
        return sorted(out)

    def member_ids(self, cid: int) -> List[str]:
        return [self.leaves[i] for i in self.members(cid)]

    def to_json(self) -> dict:
        return {"leaves": list(self.leaves),
                "merges": [{"a": a, "b": b, "height": h}
                           for a, b, h in self.merges]}

    @classmethod
    def from_json(cls, obj) -> "Dendrogram":
        if isinstance(obj, str):
            obj = json.loads(obj)
        merges = [(m["a"], m["b"], m["height"]) for m in obj["merges"]]
        return cls(obj["leaves"], merges)

    def __repr__(self):
        return f"<Dendrogram leaves={self.num_leaves}>"


def view_distance_matrix(projection) -> np.ndarray:
    """Pairwise view distances: 1 minus the Salton cosine of co-citation
    count vectors (self counts excluded). A source co-cited with nothing has
    a zero view and sits at distance 1 from everything; such sources are
    reported in a warning."""
    counts = np.asarray(projection.count_matrix(), float)
    n = counts.shape[0]
    if n < 2:
        raise ValueError("need at least 2 sources")
    np.fill_diagonal(counts, 0.0)
    norms = np.linalg.norm(counts, axis=1)
    zero = norms == 0
    if zero.any():
        idx = np.flatnonzero(zero)
        warnings.warn(f"{idx.size} sources have empty co-citation views "
                      f"(first indices {idx[:5].tolist()}); they sit at "
                      f"distance 1 from everything")
    safe = np.where(zero, 1.0, norms)
    sim = (counts @ counts.T) / np.outer(safe, safe)
    sim[zero, :] = 0.0
    sim[:, zero] = 0.0
    dist = np.clip(1.0 - sim, 0.0, 1.0)
    dist = (dist + dist.T) / 2.0
    np.fill_diagonal(dist, 0.0)
    return dist


def ward_dendrogram(distance_matrix, leaves: Optional[Sequence[str]] = None
                    ) -> Dendrogram:
    """Ward minimum-variance agglomeration via Lance-Williams updates.

    Heights follow the usual reference convention (merge distances, not
    variances). The global minimum pair merges each step; ties break toward
    the lexicographically smallest slot pair.
    """
    D = np.asarray(distance_matrix, float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError("distance matrix must be square")
    n = D.shape[0]
    if n < 2:
        raise ValueError("need at least 2 items to cluster")
    if not np.allclose(D, D.T, atol=1e-9):
        raise ValueError("distance matrix must be symmetric")
    if leaves is None:
        leaves = [str(i) for i in range(n)]
    if len(leaves) != n:
        raise ValueError("leaf labels do not match matrix size")
    work = D.astype(float).copy()
    np.fill_diagonal(work, np.inf)
    sizes = np.ones(n, float)
    slot_cid = np.arange(n)
    alive = np.ones(n, bool)
    merges = []
    for step in range(n - 1):
        masked = np.where(alive[:, None] & alive[None, :], work, np.inf)
        flat = int(np.argmin(masked))
        i, j = divmod(flat, n)
        if i > j:
            i, j = j, i
        h = float(work[i, j])
        merges.append((int(slot_cid[i]), int(slot_cid[j]), h))
        si, sj = sizes[i], sizes[j]
        k = alive.copy()
        k[i] = k[j] = False
        sk = sizes[k]
        dki = work[k, i]
        dkj = work[k, j]
        num = ((sk + si) * dki ** 2 + (sk + sj) * dkj ** 2 - sk * h ** 2)
        new = np.sqrt(np.maximum(num / (sk + si + sj), 0.0))
        work[k, i] = new
        work[i, k] = new
        sizes[i] = si + sj
        slot_cid[i] = n + step
        alive[j] = False
        work[j, :] = np.inf
        work[:, j] = np.inf
    return Dendrogram(leaves, merges)


@dataclass
class BranchEntry:
    """One selected cluster with its ranking facts."""
    cluster_id: int
    size: int
    branch_length: float
    class_maximum: bool


@dataclass
class BranchSelection:
    """Long-branch clusters in selection order."""
    entries: List[BranchEntry]
    dendrogram: Dendrogram

    def source_sets(self) -> List[List[str]]:
        return [self.dendrogram.member_ids(e.cluster_id)
                for e in self.entries]

    def __len__(self):
        return len(self.entries)


def select_long_branch_clusters(dendrogram: Dendrogram,
                                count: int) -> BranchSelection:
    """Pick `count` clusters by branch length, size-class maxima first.

    Size classes are geometric bins (2-3, 4-7, 8-15, ...). Each class
    contributes its longest-branch cluster; remaining slots fill by global
    branch-length rank over the other clusters. The root never qualifies.
    """
    if count < 1:
        raise ValueError("count must be positive")
    cands = []
    for cid in dendrogram.internal_clusters():
        if dendrogram.parent(cid) is None:
            continue
        size = dendrogram.size(cid)
        cands.append((cid, size, dendrogram.branch_length(cid)))
    if not cands:
        raise ValueError("dendrogram has no selectable clusters")
    by_class = {}
    for cid, size, bl in cands:
        cls = size.bit_length() - 1
        cur = by_class.get(cls)
        if cur is None or bl > cur[2] or (bl == cur[2] and cid < cur[0]):
            by_class[cls] = (cid, size, bl)
    winner_ids = {c[0] for c in by_class.values()}
    winners = sorted(by_class.values(), key=lambda t: (-t[2], t[0]))
    others = sorted((c for c in cands if c[0] not in winner_ids),
                    key=lambda t: (-t[2], t[0]))
    ranked = winners + others
    if count > len(ranked):
        warnings.warn(f"only {len(ranked)} selectable clusters for "
                      f"count={count}; returning all")
        count = len(ranked)
    entries = [BranchEntry(cid, size, bl, cid in winner_ids)
               for cid, size, bl in ranked[:count]]
    return BranchSelection(entries, dendrogram)


def seed_links_for_sources(source_ids: Sequence[str], graph) -> LinkSet:
    """All citation links into the listed sources, as a connected seed.

    A disconnected union is cut down to its largest component with a
    warning."""
    ids = list(source_ids)
    if not ids:
        raise ValueError("source set is empty")
    mask = np.zeros(graph.m, bool)
    for sid in ids:
        label = f"source:{sid}"
        node = graph.label_index.get(label)
        if node is None:
            raise ValueError(f"unknown source id: {sid!r}")
        mask[graph.incident_edges(node)] = True
    if not mask.any():
        raise ValueError("the listed sources have no incident links")
    ls = LinkSet.from_mask(graph, mask)
    if not ls.is_connected():
        whole = ls.size
        ls = largest_component(ls)
        warnings.warn(f"seed spanned {whole} links in multiple components; "
                      f"kept the largest with {ls.size}")
    return ls


def ward_seeds(graph, projection, count: int,
               min_links: int = 2) -> List[tuple]:
    """Convenience chain: views -> Ward -> long branches -> seed link sets.

    Returns (name, LinkSet) pairs, skipping seeds smaller than min_links.
    """
    dist = view_distance_matrix(projection)
    dendro = ward_dendrogram(dist, leaves=list(projection.source_labels))
    sel = select_long_branch_clusters(dendro, count)
    out = []
    for entry, srcs in zip(sel.entries, sel.source_sets()):
        ls = seed_links_for_sources(srcs, graph)
        if ls.size >= min_links:
            out.append((f"ward{entry.cluster_id}", ls))
    return out
