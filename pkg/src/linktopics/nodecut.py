"""Normalized node-cut scoring of link sets.

The cut score of a nonempty proper link set L is

    mass(L) / k_in(L)  +  mass(L) / k_in(E-L)

where the cut mass sums, over every node, the product of the node's internal
degree share and external degree share, kin*(k - kin)/k. The first summand is
the probability for a random link-node-link walker inside L to step outside;
a set is a weak community when that escape probability is below one half.

All mass arithmetic is exact: LinkSet carries the mass as an integer multiple
of 1/lcm(degrees), so the score of a set and of its complement are the same
float bit for bit, and incremental updates equal recomputation exactly.
"""

from __future__ import annotations

from fractions import Fraction

from .graph import LinkSet


class CutScore:
    """Cut score of one link set, with the exact integers it derives from.

    value = mass/k_in + mass/k_in_complement. `mass_scaled` and `scale` give
    the mass as the exact rational mass_scaled/scale, enabling drift-free
    comparisons (`exactly_less`) and rational checks (`as_fraction`).
    """

    __slots__ = ("value", "mass", "k_in", "k_in_complement", "mass_scaled", "scale")

    def __init__(self, mass_scaled, scale, k_in, k_in_complement):
        self.mass_scaled = mass_scaled
        self.scale = scale
        self.k_in = k_in
        self.k_in_complement = k_in_complement
        self.mass = mass_scaled / scale
        self.value = self.mass / k_in + self.mass / k_in_complement

    def as_fraction(self) -> Fraction:
        m = Fraction(self.mass_scaled, self.scale)
        return m / self.k_in + m / self.k_in_complement

    def exactly_less(self, other: "CutScore") -> bool:
        """Exact rational comparison of two scores from the same graph."""
        if self.scale != other.scale:
            return self.as_fraction() < other.as_fraction()
        # k_in + k_in_complement is 2m for both, so compare mass/(a*b)
        return (self.mass_scaled * other.k_in * other.k_in_complement
                < other.mass_scaled * self.k_in * self.k_in_complement)

    def exactly_equal(self, other: "CutScore") -> bool:
        if self.scale != other.scale:
            return self.as_fraction() == other.as_fraction()
        return (self.mass_scaled * other.k_in * other.k_in_complement
                == other.mass_scaled * self.k_in * self.k_in_complement)

    def __repr__(self):
        return f"CutScore({self.value:.6g}, mass={self.mass:.6g}, k_in={self.k_in})"


def _require_proper(links: LinkSet, what: str):
    if links.size == 0:
        raise ValueError(f"{what} is undefined for the empty link set")
    if links.size == links.graph.m:
        raise ValueError(f"{what} is undefined for the full edge set "
                         "(zero complement degree)")


def cut_mass(links: LinkSet, graph=None) -> float:
    """Node-cut mass: sum over nodes of kin*(k - kin)/k.

    Zero iff every attached node has all or none of its links inside, and
    symmetric under complement. Accepts any link set, including empty.
    """
    return links.mass


def normalized_cut(links: LinkSet, graph=None) -> CutScore:
    """Score a nonempty proper link set. ValueError on the empty or full set."""
    _require_proper(links, "normalized cut")
    g = links.graph
    return CutScore(links.mass_scaled, g.mass_scale, links.k_in,
                    2 * g.m - links.k_in)


def cut_after_move(links: LinkSet, edge_id: int, direction: str,
                   graph=None) -> CutScore:
    """Score of links +/- one edge, from the two endpoints' deltas only.

    direction 'add' requires the edge to be outside the set and to share a
    node with it; 'remove' requires membership. The result equals scoring the
    moved set from scratch, exactly.
    """
    g = links.graph
    u, v = g.edge_endpoints(edge_id)
    if direction == "add":
        if links.contains(edge_id):
            raise ValueError(f"edge {edge_id} is already a member")
        if links.kin[u] == 0 and links.kin[v] == 0:
            raise ValueError(f"edge {edge_id} is not adjacent to the link set")
        if links.size + 1 == g.m:
            raise ValueError("move would produce the full edge set")
        delta = 0
        for x in (u, v):
            kin = int(links.kin[x])
            k = int(g.degree[x])
            delta += (k - 2 * kin - 1) * g.mass_unit[x]
        new_kin = links.k_in + 2
    elif direction == "remove":
        if not links.contains(edge_id):
            raise ValueError(f"edge {edge_id} is not a member")
        if links.size == 1:
            raise ValueError("move would empty the link set")
        delta = 0
        for x in (u, v):
            kin = int(links.kin[x])
            k = int(g.degree[x])
            delta += (2 * kin - k - 1) * g.mass_unit[x]
        new_kin = links.k_in - 2
    else:
        raise ValueError(f"direction must be 'add' or 'remove', got {direction!r}")
    return CutScore(links.mass_scaled + delta, g.mass_scale, new_kin,
                    2 * g.m - new_kin)


def escape_probability(links: LinkSet, graph=None) -> float:
    """Probability that a random link-node-link walker on a member link
    leaves the set in one step: mass/k_in, the first score summand."""
    if links.size == 0:
        raise ValueError("escape probability is undefined for the empty set")
    return links.mass / links.k_in


def is_weak_community(links: LinkSet, graph=None) -> bool:
    """Weak-community predicate: escape probability strictly below 1/2."""
    return escape_probability(links) < 0.5
