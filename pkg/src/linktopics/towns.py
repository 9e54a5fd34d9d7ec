"""Core-periphery decomposition of a link set into towns of stars.

A star is a source node together with its citation links inside the link
set; its outer nodes are the papers at the far ends. Stars are processed in
decreasing size. Each either attaches to the existing town whose
equal-or-larger stars share the largest fraction of its outer nodes
(strictly above the resolution q), or founds a new town. Attachment via
equal-or-larger stars means every star reaches its town center along a path
of non-increasing star sizes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .graph import LinkSet


@dataclass
class Star:
    """A source with its link-set-internal citation links."""

    center: int
    link_ids: np.ndarray
    outer: np.ndarray

    @property
    def size(self) -> int:
        return int(self.link_ids.size)

    def outer_set(self) -> set:
        return set(int(x) for x in self.outer)

    def __repr__(self):
        return f"<Star center={self.center} size={self.size}>"


@dataclass
class Town:
    """One core-periphery unit: the center star plus its attached stars in
    attachment (hence size-descending) order."""

    center: Star
    stars: List[Star] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.stars)

    def total_links(self) -> int:
        return int(sum(s.size for s in self.stars))


@dataclass
class TownDecomposition:
    q: Fraction
    towns: List[Town]
    stars: List[Star]
    assignment: Dict[int, int]
    graph: object = None

    @property
    def num_towns(self) -> int:
        return len(self.towns)

    @property
    def top_two_split(self) -> bool:
        """True when the two largest stars center different towns."""
        if len(self.stars) < 2:
            return False
        first, second = self.stars[0], self.stars[1]
        ta = self.assignment[first.center]
        tb = self.assignment[second.center]
        return ta != tb and self.towns[tb].center.center == second.center

    def _source_name(self, node: int):
        if self.graph is not None and hasattr(self.graph, "raw_id"):
            return self.graph.raw_id(node)
        return int(node)

    def to_json(self) -> dict:
        return {
            "q": str(self.q),
            "num_towns": self.num_towns,
            "towns": [
                {
                    "center": self._source_name(t.center.center),
                    "stars": [
                        {
                            "source": self._source_name(s.center),
                            "size": s.size,
                            "links": [int(e) for e in s.link_ids],
                        }
                        for s in t.stars
                    ],
                }
                for t in self.towns
            ],
        }

    def dump_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)

    def to_networkx(self):
        """Bipartite view with per-source town index and center flag."""
        import networkx as nx
        gx = nx.Graph()
        for ti, town in enumerate(self.towns):
            for s in town.stars:
                name = self._source_name(s.center)
                gx.add_node(name, town=ti,
                            is_center=(s.center == town.center.center),
                            kind="source")
                for e in s.link_ids:
                    u = int(self.graph.edge_u[int(e)])
                    pname = self.graph.raw_id(u)
                    if pname not in gx:
                        gx.add_node(pname, kind="paper")
                    gx.add_edge(pname, name)
        return gx

    def to_graphml(self, path):
        import networkx as nx
        nx.write_graphml(self.to_networkx(), path)


def extract_stars(links: LinkSet, graph=None) -> List[Star]:
    """One star per source touched by the link set, holding its internal
    links; ordered by decreasing size, ties by node id."""
    g = links.graph if graph is None else graph
    if links.size == 0:
        raise ValueError("link set is empty")
    if not hasattr(g, "node_role"):
        raise TypeError("star extraction needs a bipartite citation graph")
    stars = []
    for node in np.flatnonzero(links.kin > 0):
        node = int(node)
        if not g.node_role[node]:
            continue
        edges = np.array([int(e) for e in g.incident_edges(node)
                          if links.mask[e]], dtype=np.int64)
        outer = g.edge_u[edges].astype(np.int64)
        stars.append(Star(center=node, link_ids=edges, outer=outer))
    stars.sort(key=lambda s: (-s.size, s.center))
    return stars


def build_towns(stars: Sequence[Star], q) -> TownDecomposition:
    """Assign every star to exactly one town at resolution q in [0, 1).

    Overlap with a town is |shared outer nodes| / |own outer nodes| against
    the union over the town's already-placed (equal-or-larger) stars; the
    star attaches to the maximal-overlap town when the overlap strictly
    exceeds q, founding a new town otherwise. Ties go to the earliest town.
    """
    qf = Fraction(q)
    if not (0 <= qf < 1):
        raise ValueError("q must lie in [0, 1)")
    if not stars:
        raise ValueError("star list is empty")
    towns: List[Town] = []
    town_outer: List[set] = []
    assignment: Dict[int, int] = {}
    for s in stars:
        own = s.outer_set()
        o = len(own)
        best_idx = -1
        best = Fraction(0)
        for ti in range(len(towns)):
            shared = len(own & town_outer[ti])
            frac = Fraction(shared, o)
            if frac > best:
                best = frac
                best_idx = ti
        if best_idx >= 0 and best > qf:
            towns[best_idx].stars.append(s)
            town_outer[best_idx] |= own
            assignment[s.center] = best_idx
        else:
            towns.append(Town(center=s, stars=[s]))
            town_outer.append(set(own))
            assignment[s.center] = len(towns) - 1
    return TownDecomposition(q=qf, towns=towns, stars=list(stars),
                             assignment=assignment)


def explore_resolutions(links: LinkSet, graph=None
                        ) -> List[Tuple[Fraction, TownDecomposition]]:
    """Decompositions at every q where the town count first increases.

    Candidate breakpoints are the realized overlap ratios k / |outer(s)|;
    the q=0 level is always emitted. The scan stops once every star is its
    own town. Quadratic in the number of distinct ratios, so intended for
    single link sets, not batch pipelines.
    """
    stars = extract_stars(links, graph)
    dec0 = build_towns(stars, Fraction(0))
    levels = [(Fraction(0), dec0)]
    if len(stars) == 1:
        return levels
    cands = {Fraction(k, s.size) for s in stars for k in range(1, s.size)}
    last = dec0.num_towns
    for q in sorted(cands):
        if last == len(stars):
            break
        dec = build_towns(stars, q)
        if dec.num_towns > last:
            levels.append((q, dec))
            last = dec.num_towns
    for _, dec in levels:
        dec.graph = links.graph if graph is None else graph
    return levels


def first_top_two_split(levels) -> Optional[int]:
    """Index of the first emitted level where the two largest stars center
    different towns; None when it never happens."""
    for i, (_, dec) in enumerate(levels):
        if dec.top_two_split:
            return i
    return None


def verify_never_uphill(dec: TownDecomposition) -> bool:
    """Check that every star reaches its town center through town stars of
    non-increasing size that share at least one outer node per step."""
    for town in dec.towns:
        ordered = sorted(town.stars, key=lambda s: (-s.size, s.center))
        if not ordered:
            return False
        reach = [ordered[0]]
        reach_outer = [ordered[0].outer_set()]
        pending = list(ordered[1:])
        changed = True
        while pending and changed:
            changed = False
            still = []
            for s in pending:
                own = s.outer_set()
                hit = any(len(own & ro) > 0 and r.size >= s.size
                          for r, ro in zip(reach, reach_outer))
                if hit:
                    reach.append(s)
                    reach_outer.append(own)
                    changed = True
                else:
                    still.append(s)
            pending = still
        if pending:
            return False
        if town.center.center != ordered[0].center:
            return False
    return True
