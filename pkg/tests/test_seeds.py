"""Ward clustering over co-citation views and seed extraction."""

import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linktopics.graph import BipartiteCitationGraph, cocitation_projection
from linktopics.seeds import (Dendrogram, select_long_branch_clusters,
                              seed_links_for_sources, view_distance_matrix,
                              ward_dendrogram, ward_seeds)


def toy_projection():
    pairs = []
    # two tight co-citation blocks linked by one shared citer
    for i in range(5):
        pairs += [(f"a{i}", "s1"), (f"a{i}", "s2"), (f"a{i}", "s3")]
    for i in range(5):
        pairs += [(f"b{i}", "s4"), (f"b{i}", "s5"), (f"b{i}", "s6")]
    pairs += [("mix", "s3"), ("mix", "s4")]
    g = BipartiteCitationGraph(pairs)
    return g, cocitation_projection(g)


def test_view_distance_matrix_shape_and_bounds():
    g, proj = toy_projection()
    dist = view_distance_matrix(proj)
    n = proj.n_sources
    assert dist.shape == (n, n)
    assert np.allclose(dist, dist.T)
    assert np.all(np.diag(dist) == 0)
    assert np.all(dist >= 0) and np.all(dist <= 1)


def test_view_distance_close_within_block():
    g, proj = toy_projection()
    dist = view_distance_matrix(proj)
    lab = {s: i for i, s in enumerate(proj.source_labels)}
    within = dist[lab["s1"], lab["s2"]]
    across = dist[lab["s1"], lab["s5"]]
    assert within < across


def test_view_distance_warns_on_zero_view():
    g = BipartiteCitationGraph([
        ("p1", "s1"), ("p1", "s2"),
        ("p2", "s3"), ("p2", "s4"),
        ("q", "s5"), ("q2", "s5"),  # s5 never co-cited
    ])
    # make s5 a real source node but with an empty co-citation row
    proj = cocitation_projection(g)
    if "s5" in proj.source_labels:
        with pytest.warns(UserWarning):
            dist = view_distance_matrix(proj)
        i = proj.source_labels.index("s5")
        off_diag = np.delete(dist[i], i)
        assert np.all(off_diag == 1.0)


def test_ward_matches_scipy_reference():
    from scipy.cluster.hierarchy import linkage
    from scipy.spatial.distance import squareform
    rng = np.random.default_rng(4)
    for trial in range(6):
        pts = rng.normal(size=(12, 3))
        dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
        dendro = ward_dendrogram(dist)
        ref = linkage(squareform(dist, checks=False), method="ward")
        n = dist.shape[0]
        # merge heights agree
        ours = [dendro.height(n + k) for k in range(n - 1)]
        assert np.allclose(ours, ref[:, 2], atol=1e-9)
        # member sets agree step by step
        ref_members = {i: {i} for i in range(n)}
        for k in range(n - 1):
            a, b = int(ref[k, 0]), int(ref[k, 1])
            ref_members[n + k] = ref_members[a] | ref_members[b]
            assert set(dendro.members(n + k)) == ref_members[n + k]


def test_ward_dendrogram_monotone_heights():
    rng = np.random.default_rng(7)
    pts = rng.normal(size=(10, 2))
    dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    dendro = ward_dendrogram(dist)
    heights = [dendro.height(cid) for cid in dendro.internal_clusters()]
    assert all(b >= a - 1e-12 for a, b in zip(heights, heights[1:]))


def test_ward_rejects_bad_matrix():
    with pytest.raises(ValueError):
        ward_dendrogram(np.zeros((3, 4)))
    asym = np.array([[0.0, 1.0], [2.0, 0.0]])
    with pytest.raises(ValueError):
        ward_dendrogram(asym)
    with pytest.raises(ValueError):
        ward_dendrogram(np.zeros((1, 1)))


def test_dendrogram_json_roundtrip():
    d = Dendrogram(["a", "b", "c"], [(0, 1, 1.0), (3, 2, 2.5)])
    back = Dendrogram.from_json(json.dumps(d.to_json()))
    assert back.num_leaves == 3
    assert back.member_ids(4) == ["a", "b", "c"]
    assert back.height(4) == 2.5


def test_dendrogram_branch_length():
    d = Dendrogram(["a", "b", "c"], [(0, 1, 1.0), (3, 2, 2.5)])
    assert d.branch_length(3) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        d.branch_length(d.root)


def test_dendrogram_rejects_malformed_merges():
    with pytest.raises(ValueError):
        Dendrogram(["a", "b", "c"], [(0, 1, 1.0)])        # too few merges
    with pytest.raises(ValueError):
        Dendrogram(["a", "b"], [(0, 0, 1.0)])             # same child twice


def test_long_branch_selection_class_maxima_first():
    # heights chosen so a small cluster has the longest branch
    d = Dendrogram(["a", "b", "c", "d", "e", "f"], [
        (0, 1, 0.1),    # 6: pair, parent at 5.0 -> branch 4.9
        (2, 3, 0.2),    # 7
        (4, 5, 0.3),    # 8
        (6, 7, 5.0),    # 9: size 4
        (9, 8, 6.0),    # 10: root
    ])
    sel = select_long_branch_clusters(d, 3)
    ids = [e.cluster_id for e in sel.entries]
    assert 6 in ids
    assert d.root not in ids
    # class maxima are flagged and listed before rank fill-ins
    flags = [e.class_maximum for e in sel.entries]
    assert flags == sorted(flags, reverse=True)


def test_long_branch_selection_warns_when_short():
    d = Dendrogram(["a", "b", "c"], [(0, 1, 1.0), (3, 2, 2.5)])
    with pytest.warns(UserWarning):
        sel = select_long_branch_clusters(d, 10)
    assert len(sel) >= 1


def test_seed_links_for_sources_union_and_errors():
    g, proj = toy_projection()
    ls = seed_links_for_sources(["s1", "s2"], g)
    # 5 citers x 2 sources
    assert ls.size == 10
    with pytest.raises(ValueError):
        seed_links_for_sources(["nope"], g)
    with pytest.raises(ValueError):
        seed_links_for_sources([], g)


def test_seed_links_disconnected_keeps_largest(recwarn):
    g = BipartiteCitationGraph([
        ("p1", "s1"), ("p1", "s2"), ("p2", "s1"),
        ("q1", "s9"),
    ])
    with pytest.warns(UserWarning):
        ls = seed_links_for_sources(["s1", "s9"], g)
    assert ls.size == 2
    assert ls.is_connected()


def test_ward_seeds_end_to_end():
    g, proj = toy_projection()
    seeds = ward_seeds(g, proj, count=4, min_links=2)
    assert seeds
    for name, ls in seeds:
        assert name.startswith("ward")
        assert ls.is_connected()
        assert ls.size >= 2


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 1000))
def test_property_ward_heights_match_scipy(seed):
    from scipy.cluster.hierarchy import linkage
    from scipy.spatial.distance import squareform
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 14))
    pts = rng.normal(size=(n, 2))
    dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    dendro = ward_dendrogram(dist)
    ref = linkage(squareform(dist, checks=False), method="ward")
    ours = [dendro.height(n + k) for k in range(n - 1)]
    assert np.allclose(ours, ref[:, 2], atol=1e-8)
