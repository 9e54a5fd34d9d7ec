"""Shared fixtures: small hand-checked graphs with frozen oracle values."""

import numpy as np
import pytest

from linktopics.graph import BipartiteCitationGraph, LinkGraph

# one line per acceptance criterion, echoed after the test summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def bridge_graph():
    """Two triangles joined by one bridge edge.

    Edge ids in load order: 0..2 left triangle, 3 bridge, 4..6 right
    triangle. The left triangle {0,1,2} scores 7/36 exactly.
    """
    return LinkGraph([
        (1, 2), (2, 3), (1, 3),
        (3, 4),
        (4, 5), (5, 6), (4, 6),
    ])


@pytest.fixture
def path3_graph():
    """Three citation links: a->s1, b->s1, b->s2 (a path as a line graph)."""
    return BipartiteCitationGraph([("a", "s1"), ("b", "s1"), ("b", "s2")])


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def random_link_graph(n, m, rng_seed):
    """Random connected simple graph as a LinkGraph (retries until the full
    edge set is one component)."""
    if not n - 1 <= m <= n * (n - 1) // 2:
        raise ValueError(f"no connected simple graph with n={n}, m={m}")
    rng = np.random.default_rng(rng_seed)
    for _ in range(500):
        pairs = set()
        while len(pairs) < m:
            u, v = rng.integers(0, n, size=2)
            if u == v:
                continue
            pairs.add((min(int(u), int(v)), max(int(u), int(v))))
        g = LinkGraph(sorted(pairs))
        if g.full_link_set().is_connected():
            return g
    raise RuntimeError("no connected sample found")
