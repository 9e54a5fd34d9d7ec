"""Compiled inner loops: connectivity, components, bridge-safe removals.

Everything here works on the flat arrays owned by LinkGraph (edge endpoint
arrays plus the CSR incidence index) and a boolean edge-membership mask, so
the kernels stay allocation-light and reusable across modules.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def connected_edges(mask, indptr, inc, edge_u, edge_v):
    """True iff the edges selected by mask form one connected subgraph."""
    m = mask.size
    n = indptr.size - 1
    total = 0
    start = -1
    for e in range(m):
        if mask[e]:
            total += 1
            if start < 0:
                start = e
    if total == 0:
        return False
    visited_e = np.zeros(m, np.bool_)
    visited_n = np.zeros(n, np.bool_)
    stack = np.empty(total, np.int64)
    visited_e[start] = True
    stack[0] = start
    top = 1
    seen = 1
    while top > 0:
        top -= 1
        e = stack[top]
        for x in (edge_u[e], edge_v[e]):
            if not visited_n[x]:
                visited_n[x] = True
                for j in range(indptr[x], indptr[x + 1]):
                    f = inc[j]
                    if mask[f] and not visited_e[f]:
                        visited_e[f] = True
                        stack[top] = f
                        top += 1
                        seen += 1
    return seen == total


@njit(cache=True)
def edge_component_labels(mask, indptr, inc, edge_u, edge_v):
    """Connected-component label per member edge (-1 outside the mask).

    Labels are assigned in ascending order of each component's smallest
    edge id. Returns (labels, component_count).
    """
    m = mask.size
    n = indptr.size - 1
    labels = np.full(m, -1, np.int32)
    visited_n = np.zeros(n, np.bool_)
    stack = np.empty(m, np.int64)
    comp = 0
    for e0 in range(m):
        if not mask[e0] or labels[e0] >= 0:
            continue
        labels[e0] = comp
        stack[0] = e0
        top = 1
        while top > 0:
            top -= 1
            e = stack[top]
            for x in (edge_u[e], edge_v[e]):
                if not visited_n[x]:
                    visited_n[x] = True
                    for j in range(indptr[x], indptr[x + 1]):
                        f = inc[j]
                        if mask[f] and labels[f] < 0:
                            labels[f] = comp
                            stack[top] = f
                            top += 1
        comp += 1
    return labels, comp


@njit(cache=True)
def addition_candidates(mask, kin, edge_u, edge_v):
    """Edges outside the mask sharing at least one node with it, ascending."""
    m = mask.size
    out = np.empty(m, np.int64)
    c = 0
    for e in range(m):
        if not mask[e] and (kin[edge_u[e]] > 0 or kin[edge_v[e]] > 0):
            out[c] = e
            c += 1
    return out[:c]


@njit(cache=True)
def removable_members(mask, kin, degree, indptr, inc, edge_u, edge_v):
    """Member edges that touch a boundary node and whose removal keeps the
    set connected, ascending.

    A boundary node has both internal and external links. Removal keeps the
    set connected iff the edge is not a bridge of the induced subgraph, or it
    is pendant (one endpoint has internal degree 1, so only that node drops
    off).
    """
    m = mask.size
    n = indptr.size - 1
    members = np.empty(m, np.int64)
    ne = 0
    for e in range(m):
        if mask[e]:
            members[ne] = e
            ne += 1
    members = members[:ne]
    out = np.empty(ne, np.int64)
    if ne <= 1:
        return out[:0]

    # local node ids for the induced subgraph
    local = np.full(n, -1, np.int32)
    nodes = np.empty(2 * ne, np.int64)
    nl = 0
    for i in range(ne):
        e = members[i]
        for x in (edge_u[e], edge_v[e]):
            if local[x] < 0:
                local[x] = nl
                nodes[nl] = x
                nl += 1

    # local CSR adjacency: (member position, other endpoint)
    ldeg = np.zeros(nl, np.int64)
    for i in range(ne):
        e = members[i]
        ldeg[local[edge_u[e]]] += 1
        ldeg[local[edge_v[e]]] += 1
    lptr = np.zeros(nl + 1, np.int64)
    for x in range(nl):
        lptr[x + 1] = lptr[x] + ldeg[x]
    fill = lptr[:nl].copy()
    adj_pos = np.empty(2 * ne, np.int64)
    adj_oth = np.empty(2 * ne, np.int64)
    for i in range(ne):
        e = members[i]
        lu = local[edge_u[e]]
        lv = local[edge_v[e]]
        adj_pos[fill[lu]] = i
        adj_oth[fill[lu]] = lv
        fill[lu] += 1
        adj_pos[fill[lv]] = i
        adj_oth[fill[lv]] = lu
        fill[lv] += 1

    # iterative bridge finding on the induced subgraph
    disc = np.full(nl, -1, np.int64)
    low = np.empty(nl, np.int64)
    ptr = np.empty(nl, np.int64)
    parent_pos = np.full(nl, -1, np.int64)
    stack = np.empty(nl, np.int64)
    is_bridge = np.zeros(ne, np.bool_)
    t = 0
    for root in range(nl):
        if disc[root] >= 0:
            continue
        disc[root] = t
        low[root] = t
        t += 1
        ptr[root] = lptr[root]
        stack[0] = root
        top = 1
        while top > 0:
            v = stack[top - 1]
            if ptr[v] < lptr[v + 1]:
                j = ptr[v]
                ptr[v] += 1
                i = adj_pos[j]
                w = adj_oth[j]
                if i == parent_pos[v]:
                    continue
                if disc[w] < 0:
                    parent_pos[w] = i
                    disc[w] = t
                    low[w] = t
                    t += 1
                    ptr[w] = lptr[w]
                    stack[top] = w
                    top += 1
                elif disc[w] < low[v]:
                    low[v] = disc[w]
            else:
                top -= 1
                if top > 0:
                    u = stack[top - 1]
                    if low[v] < low[u]:
                        low[u] = low[v]
                    if low[v] > disc[u]:
                        is_bridge[parent_pos[v]] = True

    c = 0
    for i in range(ne):
        e = members[i]
        u = edge_u[e]
        v = edge_v[e]
        boundary = ((0 < kin[u] < degree[u]) or (0 < kin[v] < degree[v]))
        if not boundary:
            continue
        pendant = kin[u] == 1 or kin[v] == 1
        if pendant or not is_bridge[i]:
            out[c] = e
            c += 1
    return out[:c]


@njit(cache=True)
def subset_connectivity_flags(adj_bits, m):
    """Connectivity of every edge subset of an at-most-64-edge graph.

    adj_bits[e] is the bitmask of edges sharing a node with edge e
    (including e itself). Returns a bool array over all 2**m masks.
    """
    total = 1 << m
    out = np.zeros(total, np.bool_)
    for mask in range(1, total):
        low = mask & (-mask)
        reach = low
        frontier = low
        while frontier != 0:
            nxt = 0
            for e in range(m):
                if (frontier >> e) & 1:
                    nxt |= adj_bits[e]
            frontier = nxt & mask & ~reach
            reach |= frontier
        out[mask] = reach == mask
    return out
