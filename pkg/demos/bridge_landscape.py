"""Walk the smallest interesting cut landscape by hand.

Two triangles joined by a bridge edge. The left triangle scores 7/36 and so
do its complement and the mirrored pair, which makes this the standard
fixture for checking the descent: wherever you drop a single-link seed, the
search must end on one of those four sets.
"""

from fractions import Fraction

from linktopics.graph import LinkGraph, LinkSet, complement
from linktopics.nodecut import escape_probability, normalized_cut
from linktopics.search import invalidation_probe, tunneling_descent

g = LinkGraph([
    (1, 2), (2, 3), (1, 3),     # left triangle, edge ids 0..2
    (3, 4),                     # bridge, id 3
    (4, 5), (5, 6), (4, 6),     # right triangle, ids 4..6
])

tri = LinkSet.from_edges(g, [0, 1, 2])
score = normalized_cut(tri)
print(f"triangle score      : {score.as_fraction()} = {float(score.value):.6f}")
print(f"complement score    : {normalized_cut(complement(tri)).as_fraction()}")
print(f"escape probability  : {escape_probability(tri):.4f}  (< 0.5 -> weak community)")
print()

print("descent from every single-link seed at r=1/3:")
for e in range(g.m):
    trace = tunneling_descent(LinkSet.from_edges(g, [e]), Fraction(1, 3))
    ids = sorted(trace.best.edge_ids().tolist())
    print(f"  seed {e}: -> {ids}  score {trace.best_score.as_fraction()} "
          f"in {trace.steps} steps")
print()

# A probe answers "is there something strictly better close to this set?".
# Size-5 reference: dropping its dangling edge reaches 7/36 at distance 1,
# inside the invalidation radius, so the reference cannot stand.
ref = LinkSet.from_edges(g, [0, 1, 2, 3, 4])
trace = invalidation_probe(ref, ref.copy(), Fraction(1, 3))
print(f"probe on triangle+bridge+tail: invalidated={trace.invalidated_best} "
      f"(first better set at distance {trace.first_better_distance})")

# The triangle itself has no strictly better neighbor anywhere, so probes
# from arbitrary starts leave it standing.
trace = invalidation_probe(tri, LinkSet.from_edges(g, [5]), Fraction(1, 3))
print(f"probe on the triangle itself : invalidated={trace.invalidated_best}")
