"""
Transportation network simplex (numba kernels).

Nodes ``0..m-1`` are sources (rows), ``m..m+n-1`` are sinks (columns). A basis
is a spanning tree of ``m+n-1`` cells stored as parallel arrays
``(erow, ecol)``. After every pivot the tree is rebuilt by BFS from node 0,
which also yields the duals and the (unique) tree flows. Rebuilding costs
O(m+n), far below the O(mn) worst case of pricing, and removes any drift in
the flows.
"""

import numpy as np
from numba import njit

OPTIMAL = 0
ITERATION_LIMIT = 1
BAD_TREE = 2


@njit(cache=True, nogil=True)
def vogel_basis(a, b, C, erow, ecol):
    """Vogel's approximation; fills ``m+n-1`` basic cells forming a tree."""
    m, n = C.shape
    sup = a.copy()
    dem = b.copy()
    row_on = np.ones(m, np.bool_)
    col_on = np.ones(n, np.bool_)
    nr = m
    nc = n
    k = 0
    inf = np.inf
    while k < m + n - 1:
        best_pen = -inf
        best_line = -1
        best_is_row = True
        for i in range(m):
            if not row_on[i]:
                continue
            c1 = inf
            c2 = inf
            for j in range(n):
                if col_on[j]:
                    c = C[i, j]
                    if c < c1:
                        c2 = c1
                        c1 = c
                    elif c < c2:
                        c2 = c
            pen = c2 - c1 if c2 < inf else c1
            if pen > best_pen:
                best_pen = pen
                best_line = i
                best_is_row = True
        for j in range(n):
            if not col_on[j]:
                continue
            c1 = inf
            c2 = inf
            for i in range(m):
                if row_on[i]:
                    c = C[i, j]
                    if c < c1:
                        c2 = c1
                        c1 = c
                    elif c < c2:
                        c2 = c
            pen = c2 - c1 if c2 < inf else c1
            if pen > best_pen:
                best_pen = pen
                best_line = j
                best_is_row = False
        if best_is_row:
            i = best_line
            j = -1
            cmin = inf
            for jj in range(n):
                if col_on[jj] and C[i, jj] < cmin:
                    cmin = C[i, jj]
                    j = jj
        else:
            j = best_line
            i = -1
            cmin = inf
            for ii in range(m):
                if row_on[ii] and C[ii, j] < cmin:
                    cmin = C[ii, j]
                    i = ii
        x = min(sup[i], dem[j])
        erow[k] = i
        ecol[k] = j
        k += 1
        sup[i] -= x
        dem[j] -= x
        # exactly one line leaves per allocation, so the cells form a tree
        if nr == 1 and nc == 1:
            break
        if nr == 1:
            col_on[j] = False
            nc -= 1
        elif nc == 1:
            row_on[i] = False
            nr -= 1
        elif sup[i] <= dem[j]:
            row_on[i] = False
            nr -= 1
            dem[j] = max(dem[j], 0.0)
        else:
            col_on[j] = False
            nc -= 1
    return k


@njit(cache=True, nogil=True)
def build_tree(m, n, a, b, C, erow, ecol, parent, pedge, depth, order,
               u, v, eflow):
    """BFS the basis tree from node 0; fill parents, duals and flows.

    Returns the number of nodes reached (``m+n`` for a spanning tree).
    """
    nn = m + n
    ne = nn - 1
    ptr = np.zeros(nn + 1, np.int64)
    for e in range(ne):
        ptr[erow[e] + 1] += 1
        ptr[m + ecol[e] + 1] += 1
    for x in range(nn):
        ptr[x + 1] += ptr[x]
    fill = ptr[:-1].copy()
    adj = np.empty(2 * ne, np.int64)
    for e in range(ne):
        r = erow[e]
        c = m + ecol[e]
        adj[fill[r]] = e
        fill[r] += 1
        adj[fill[c]] = e
        fill[c] += 1

    for x in range(nn):
        parent[x] = -2
    parent[0] = -1
    pedge[0] = -1
    depth[0] = 0
    u[0] = 0.0
    order[0] = 0
    head = 0
    tail = 1
    while head < tail:
        x = order[head]
        head += 1
        for t in range(ptr[x], ptr[x + 1]):
            e = adj[t]
            if x < m:
                y = m + ecol[e]
            else:
                y = erow[e]
            if parent[y] != -2:
                continue
            parent[y] = x
            pedge[y] = e
            depth[y] = depth[x] + 1
            if y < m:
                u[y] = C[y, ecol[e]] - v[ecol[e]]
            else:
                v[y - m] = C[erow[e], y - m] - u[erow[e]]
            order[tail] = y
            tail += 1
    if tail < nn:
        return tail

    net = np.empty(nn)
    for i in range(m):
        net[i] = a[i]
    for j in range(n):
        net[m + j] = -b[j]
    for t in range(nn - 1, 0, -1):
        x = order[t]
        e = pedge[x]
        if x < m:
            eflow[e] = net[x]
        else:
            eflow[e] = -net[x]
        net[parent[x]] += net[x]
    return tail


@njit(cache=True, nogil=True)
def network_simplex(a, b, C, max_iter, bland_after, eps):
    """Solve min <C, X> over transport plans with marginals ``a``, ``b``.

    Returns ``(erow, ecol, eflow, u, v, n_iter, status)``.
    """
    m, n = C.shape
    nn = m + n
    ne = nn - 1
    erow = np.empty(ne, np.int64)
    ecol = np.empty(ne, np.int64)
    eflow = np.zeros(ne)
    vogel_basis(a, b, C, erow, ecol)

    parent = np.empty(nn, np.int64)
    pedge = np.empty(nn, np.int64)
    depth = np.empty(nn, np.int64)
    order = np.empty(nn, np.int64)
    u = np.zeros(m)
    v = np.zeros(n)
    path_a = np.empty(nn, np.int64)
    path_b = np.empty(nn, np.int64)

    total = m * n
    block = max(int(np.sqrt(total)), min(total, 64))
    pos = 0
    degenerate_run = 0
    bland = False
    it = 0
    status = OPTIMAL
    while True:
        if build_tree(m, n, a, b, C, erow, ecol, parent, pedge, depth, order,
                      u, v, eflow) < nn:
            status = BAD_TREE
            break
        if it >= max_iter:
            status = ITERATION_LIMIT
            break

        # pricing
        enter = -1
        if bland:
            for idx in range(total):
                i = idx // n
                j = idx - i * n
                if C[i, j] - u[i] - v[j] < -eps:
                    enter = idx
                    break
        else:
            best = -eps
            cnt = 0
            idx = pos
            for t in range(total):
                i = idx // n
                j = idx - i * n
                rc = C[i, j] - u[i] - v[j]
                if rc < best:
                    best = rc
                    enter = idx
                cnt += 1
                idx += 1
                if idx == total:
                    idx = 0
                if cnt == block:
                    if enter >= 0:
                        break
                    cnt = 0
            pos = idx
        if enter < 0:
            break
        ei = enter // n
        ej = enter - ei * n

        # cycle: tree path from column node back to row node
        x = ei
        y = m + ej
        na = 0
        nb = 0
        while depth[y] > depth[x]:
            path_a[na] = pedge[y]
            na += 1
            y = parent[y]
        while depth[x] > depth[y]:
            path_b[nb] = pedge[x]
            nb += 1
            x = parent[x]
        while x != y:
            path_a[na] = pedge[y]
            na += 1
            y = parent[y]
            path_b[nb] = pedge[x]
            nb += 1
            x = parent[x]

        # edges at odd positions along the path lose flow
        theta = np.inf
        leave = -1
        leave_key = -1
        for t in range(na):
            if t % 2 == 0:
                e = path_a[t]
                f = eflow[e]
                key = erow[e] * n + ecol[e]
                if f < theta - 1e-15 or (bland and f <= theta + 1e-15
                                          and key < leave_key):
                    theta = f
                    leave = e
                    leave_key = key
        for k in range(nb):
            position = na + nb - k
            if position % 2 == 1:
                e = path_b[k]
                f = eflow[e]
                key = erow[e] * n + ecol[e]
                if f < theta - 1e-15 or (bland and f <= theta + 1e-15
                                          and key < leave_key):
                    theta = f
                    leave = e
                    leave_key = key
        if theta <= 1e-15:
            degenerate_run += 1
            if degenerate_run >= bland_after:
                bland = True
        else:
            degenerate_run = 0
            bland = False
        erow[leave] = ei
        ecol[leave] = ej
        it += 1

    return erow, ecol, eflow, u, v, it, status
