"""Greedy descent with uphill tunneling over the cut landscape.

The descent alternates link-exclusion and link-inclusion phases. Within a
phase it always applies the move of that type with the lowest resulting cut
score, even when that is uphill; the incumbent minimum is tracked separately.
After ceil(r * |incumbent|) consecutive moves without a strict improvement
the search reverts to the incumbent and the phase ends. The search stops once
a full exclusion+inclusion cycle brings no improvement.

The same machinery doubles as the invalidation probe used by the evolutionary
engine: descending from a perturbed copy of a reference set, the first
visited state with a strictly lower score than the reference either
invalidates it (symmetric difference inside the open radius r * |reference|)
or discards the probe (outside the radius).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from . import _kernels
from .graph import LinkSet
from .nodecut import CutScore, normalized_cut


class ResolutionParam:
    """Resolution r in (0,1): the invalidation radius is r * |L| links.

    Standard runs use the schedule 1/20, 1/10, 1/5, 1/4, 1/3; other values
    are accepted with a warning.
    """

    SCHEDULE = (Fraction(1, 20), Fraction(1, 10), Fraction(1, 5),
                Fraction(1, 4), Fraction(1, 3))

    def __init__(self, r):
        if isinstance(r, ResolutionParam):
            r = r.fraction
        if isinstance(r, str):
            r = Fraction(r)
        r = Fraction(r).limit_denominator(10**9) if isinstance(r, float) else Fraction(r)
        if not (0 < r < 1):
            raise ValueError(f"resolution must lie in (0, 1), got {r}")
        if r not in self.SCHEDULE:
            warnings.warn(f"resolution {r} is outside the standard schedule")
        self.fraction = r

    def radius(self, size: int) -> Fraction:
        return self.fraction * size

    def tunnel_budget(self, size: int) -> int:
        """Consecutive non-improving moves allowed before reverting,
        ceil(r * size), at least 1."""
        p, q = self.fraction.numerator, self.fraction.denominator
        return max(1, -(-p * size // q))

    def max_invalidation_distance(self, size: int) -> int:
        """Largest symmetric-difference distance strictly inside the radius."""
        return self.tunnel_budget(size) - 1

    def within_radius(self, distance: int, size: int) -> bool:
        p, q = self.fraction.numerator, self.fraction.denominator
        return distance * q < p * size

    def __eq__(self, other):
        if isinstance(other, ResolutionParam):
            return self.fraction == other.fraction
        return self.fraction == other

    def __hash__(self):
        return hash(self.fraction)

    def __repr__(self):
        return f"ResolutionParam({self.fraction})"


@dataclass
class SearchTrace:
    """Outcome of one descent or probe."""
    start: LinkSet
    best: LinkSet
    best_score: CutScore
    steps: int
    tunneled_steps: int
    outcome: str  # 'improved' | 'unchanged' | 'discarded'
    invalidated_best: bool = False
    first_better_distance: Optional[int] = None


def candidate_moves(links: LinkSet, graph=None):
    """(additions, removals) available from a connected link set.

    Additions are edges outside the set sharing at least one node with it.
    Removals are member edges touching a boundary node whose removal keeps
    the set connected. Both ascend by edge id.
    """
    g = links.graph
    adds = _kernels.addition_candidates(links.mask, links.kin, g.edge_u, g.edge_v)
    rems = _kernels.removable_members(links.mask, links.kin, g.degree,
                                      g.inc_indptr, g.inc_edges,
                                      g.edge_u, g.edge_v)
    return adds, rems


def _score_additions(links: LinkSet, adds: np.ndarray, mass_f: float) -> np.ndarray:
    g = links.graph
    u = g.edge_u[adds]
    v = g.edge_v[adds]
    dm = ((g.degree_f[u] - 2.0 * links.kin[u] - 1.0) * g.inv_degree[u]
          + (g.degree_f[v] - 2.0 * links.kin[v] - 1.0) * g.inv_degree[v])
    a = links.k_in + 2
    b = 2 * g.m - a
    return (mass_f + dm) * (1.0 / a + 1.0 / b)


def _score_removals(links: LinkSet, rems: np.ndarray, mass_f: float) -> np.ndarray:
    g = links.graph
    u = g.edge_u[rems]
    v = g.edge_v[rems]
    dm = ((2.0 * links.kin[u] - g.degree_f[u] - 1.0) * g.inv_degree[u]
          + (2.0 * links.kin[v] - g.degree_f[v] - 1.0) * g.inv_degree[v])
    a = links.k_in - 2
    b = 2 * g.m - a
    return (mass_f + dm) * (1.0 / a + 1.0 / b)


def _exactly_less(mass_a: int, size_a: int, mass_b: int, size_b: int, m: int) -> bool:
    """Exact comparison of cut scores given integer masses and sizes."""
    aa = 2 * size_a
    ba = 2 * m - aa
    ab = 2 * size_b
    bb = 2 * m - ab
    return mass_a * ab * bb < mass_b * aa * ba


class _Watch:
    """Probe bookkeeping: the reference set awaiting its first challenger."""

    __slots__ = ("mask", "mass_scaled", "size", "max_distance", "active",
                 "invalidated", "first_distance")

    def __init__(self, reference: LinkSet, r: ResolutionParam):
        self.mask = reference.mask.copy()
        self.mass_scaled = reference.mass_scaled
        self.size = reference.size
        self.max_distance = r.max_invalidation_distance(reference.size)
        self.active = True
        self.invalidated = False
        self.first_distance = None

    def challenge(self, current: LinkSet) -> str:
        """'none' while the reference is unbeaten, 'invalidated' or
        'discarded' at the first strictly better visited state."""
        if not self.active:
            return "none"
        g = current.graph
        if not _exactly_less(current.mass_scaled, current.size,
                             self.mass_scaled, self.size, g.m):
            return "none"
        dist = int(np.count_nonzero(current.mask ^ self.mask))
        self.first_distance = dist
        self.active = False
        if dist <= self.max_distance:
            self.invalidated = True
            return "invalidated"
        return "discarded"


def tunneling_descent(start: LinkSet, r, graph=None, registry=None) -> SearchTrace:
    """Descend from a connected nonempty link set; returns the incumbent
    minimum. Deterministic: score ties break toward the smallest edge id."""
    return _descend(start, ResolutionParam(r), None, registry)


def invalidation_probe(reference: LinkSet, start: LinkSet, r, graph=None,
                       registry=None) -> SearchTrace:
    """Descend from `start` watching the first state that beats `reference`.

    Within the open radius r * |reference| (symmetric difference) the
    reference is invalidated and the descent continues; outside it the probe
    stops with outcome 'discarded'.
    """
    r = ResolutionParam(r)
    return _descend(start, r, _Watch(reference, r), registry)


def _descend(start: LinkSet, r: ResolutionParam, watch: Optional[_Watch],
             registry) -> SearchTrace:
    if start.size == 0 or not start.is_connected():
        raise ValueError("descent requires a connected nonempty link set")
    g = start.graph
    current = start.copy()
    best = start.copy()
    if registry is not None:
        registry.visit(start)
    steps = 0
    last_tunnel = 0

    if watch is not None:
        verdict = watch.challenge(current)
        if verdict == "discarded":
            return SearchTrace(start, best, normalized_cut(best), 0, 0,
                               "discarded", False, watch.first_distance)

    while True:
        cycle_improved = False
        for phase in ("remove", "add"):
            took_step = False
            nonimp = 0
            budget = r.tunnel_budget(best.size)
            discarded = False
            while True:
                if phase == "remove":
                    if current.size <= 1:
                        break
                    cands = _kernels.removable_members(
                        current.mask, current.kin, g.degree, g.inc_indptr,
                        g.inc_edges, g.edge_u, g.edge_v)
                    if cands.size == 0:
                        break
                    scores = _score_removals(current, cands, current.mass)
                else:
                    if current.size >= g.m - 1:
                        break
                    cands = _kernels.addition_candidates(
                        current.mask, current.kin, g.edge_u, g.edge_v)
                    if cands.size == 0:
                        break
                    scores = _score_additions(current, cands, current.mass)
                e = int(cands[int(np.argmin(scores))])
                if phase == "remove":
                    current.remove(e)
                else:
                    current.add(e)
                steps += 1
                took_step = True
                if registry is not None:
                    registry.visit(current)
                if watch is not None and watch.active:
                    verdict = watch.challenge(current)
                    if verdict == "discarded":
                        discarded = True
                        break
                if _exactly_less(current.mass_scaled, current.size,
                                 best.mass_scaled, best.size, g.m):
                    best.assign_from(current)
                    cycle_improved = True
                    nonimp = 0
                    budget = r.tunnel_budget(best.size)
                else:
                    nonimp += 1
                    if nonimp >= budget:
                        break
            if discarded:
                return SearchTrace(start, best, normalized_cut(best), steps,
                                   last_tunnel, "discarded", False,
                                   watch.first_distance)
            if not np.array_equal(current.mask, best.mask):
                current.assign_from(best)
            if took_step:
                last_tunnel = nonimp
        if not cycle_improved:
            break

    outcome = "unchanged" if np.array_equal(best.mask, start.mask) else "improved"
    invalidated = bool(watch.invalidated) if watch is not None else False
    first_dist = watch.first_distance if watch is not None else None
    return SearchTrace(start, best, normalized_cut(best), steps, last_tunnel,
                       outcome, invalidated, first_dist)
