"""Transportation simplex on dense cost matrices.

The solver keeps a spanning-tree basis of n + m - 1 cells, prices with
dual potentials recomputed from the tree each iteration (u_i + v_j =
c_ij on basic cells), enters the most negative reduced cost with
lexicographic tie-breaking, and falls back to Bland's rule after a run
of degenerate pivots so it can never cycle.  Bland mode ends at the
next strictly improving pivot; a pure-Bland tail is kept only while
the degeneracy persists, which is all that termination needs.

Two interchangeable cores: a numba-compiled one and a python/numpy one
(vectorized pricing, python tree bookkeeping).  Both follow identical
pivot rules, so they visit the same bases.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .backend import USE_NUMBA, njit
from .errors import SolverError

STALL_LIMIT = 64


@njit(cache=True)
def _solve_core_nb(C, bi, bj, f, u, v, tol, theta_tol, max_iter):
    n, m = C.shape
    nn = n + m
    nb = nn - 1
    head = np.zeros(nn + 1, np.int64)
    cursor = np.zeros(nn + 1, np.int64)
    adj_edge = np.zeros(2 * nb, np.int64)
    order = np.zeros(nn, np.int64)
    parent_node = np.zeros(nn, np.int64)
    parent_edge = np.zeros(nn, np.int64)
    depth = np.zeros(nn, np.int64)
    visited = np.zeros(nn, np.uint8)
    path1 = np.zeros(nn, np.int64)
    path2 = np.zeros(nn, np.int64)
    bland = False
    degen = 0
    it = 0
    while True:
        it += 1
        if it > max_iter:
            return 1, it
        # adjacency of the basis tree in CSR form
        for x in range(nn + 1):
            head[x] = 0
        for e in range(nb):
            head[bi[e] + 1] += 1
            head[n + bj[e] + 1] += 1
        for x in range(nn):
            head[x + 1] += head[x]
            cursor[x] = head[x]
        for e in range(nb):
            x = bi[e]
            adj_edge[cursor[x]] = e
            cursor[x] += 1
            y = n + bj[e]
            adj_edge[cursor[y]] = e
            cursor[y] += 1
        # BFS from node 0, duals in traversal order
        for x in range(nn):
            visited[x] = 0
        order[0] = 0
        visited[0] = 1
        parent_node[0] = -1
        parent_edge[0] = -1
        depth[0] = 0
        qlen = 1
        qpos = 0
        while qpos < qlen:
            x = order[qpos]
            qpos += 1
            for idx in range(head[x], head[x + 1]):
                e = adj_edge[idx]
                y = bj[e] + n if x < n else bi[e]
                if visited[y] == 0:
                    visited[y] = 1
                    parent_node[y] = x
                    parent_edge[y] = e
                    depth[y] = depth[x] + 1
                    order[qlen] = y
                    qlen += 1
        if qlen != nn:
            return 2, it  # basis lost connectivity; cannot happen
        u[0] = 0.0
        for q in range(1, qlen):
            x = order[q]
            e = parent_edge[x]
            if x < n:
                u[x] = C[bi[e], bj[e]] - v[bj[e]]
            else:
                v[x - n] = C[bi[e], bj[e]] - u[bi[e]]
        # pricing
        be_i = -1
        be_j = -1
        if bland:
            done = False
            for i in range(n):
                ui = u[i]
                for j in range(m):
                    if C[i, j] - ui - v[j] < -tol:
                        be_i = i
                        be_j = j
                        done = True
                        break
                if done:
                    break
        else:
            best = -tol
            for i in range(n):
                ui = u[i]
                for j in range(m):
                    r = C[i, j] - ui - v[j]
                    if r < best:
                        best = r
                        be_i = i
                        be_j = j
        if be_i < 0:
            return 0, it
        # cycle: tree path between source be_i and target node n + be_j
        x = be_i
        y = n + be_j
        n1 = 0
        n2 = 0
        while depth[x] > depth[y]:
            path1[n1] = parent_edge[x]
            n1 += 1
            x = parent_node[x]
        while depth[y] > depth[x]:
            path2[n2] = parent_edge[y]
            n2 += 1
            y = parent_node[y]
        while x != y:
            path1[n1] = parent_edge[x]
            n1 += 1
            x = parent_node[x]
            path2[n2] = parent_edge[y]
            n2 += 1
            y = parent_node[y]
        # cycle order: entering edge, then path2 edges (from the target
        # up), then path1 edges reversed; signs alternate starting +
        theta = np.inf
        leave = -1
        lbi = -1
        lbj = -1
        for k in range(n2):
            if k % 2 == 0:  # positions 1, 3, ... are minus edges
                e = path2[k]
                fe = f[e]
                if fe < theta or (
                    fe == theta
                    and (bi[e] < lbi or (bi[e] == lbi and bj[e] < lbj))
                ):
                    theta = fe
                    leave = e
                    lbi = bi[e]
                    lbj = bj[e]
        for k in range(n1):
            pos = 1 + n2 + (n1 - 1 - k)
            if pos % 2 == 1:
                e = path1[k]
                fe = f[e]
                if fe < theta or (
                    fe == theta
                    and (bi[e] < lbi or (bi[e] == lbi and bj[e] < lbj))
                ):
                    theta = fe
                    leave = e
                    lbi = bi[e]
                    lbj = bj[e]
        if leave < 0:
            return 3, it  # unbounded; cannot happen on balanced instances
        for k in range(n2):
            e = path2[k]
            if k % 2 == 0:
                f[e] -= theta
            else:
                f[e] += theta
        for k in range(n1):
            pos = 1 + n2 + (n1 - 1 - k)
            e = path1[k]
            if pos % 2 == 1:
                f[e] -= theta
            else:
                f[e] += theta
        bi[leave] = be_i
        bj[leave] = be_j
        f[leave] = theta
        if theta <= theta_tol:
            degen += 1
            if degen > STALL_LIMIT:
                bland = True
        else:
            # leave Bland mode on strict improvement; any infinite run
            # of pivots must end in an all-degenerate tail where Bland
            # stays on, so termination is preserved
            degen = 0
            bland = False


def _solve_core_np(C, bi, bj, f, u, v, tol, theta_tol, max_iter):
    n, m = C.shape
    nn = n + m
    nb = nn - 1
    bland = False
    degen = 0
    it = 0
    while True:
        it += 1
        if it > max_iter:
            return 1, it
        adj = [[] for _ in range(nn)]
        for e in range(nb):
            adj[bi[e]].append(e)
            adj[n + bj[e]].append(e)
        parent_node = np.full(nn, -1)
        parent_edge = np.full(nn, -1)
        depth = np.zeros(nn, dtype=np.int64)
        seen = np.zeros(nn, dtype=bool)
        seen[0] = True
        order = [0]
        queue = deque([0])
        while queue:
            x = queue.popleft()
            for e in adj[x]:
                y = bj[e] + n if x < n else bi[e]
                if not seen[y]:
                    seen[y] = True
                    parent_node[y] = x
                    parent_edge[y] = e
                    depth[y] = depth[x] + 1
                    order.append(y)
                    queue.append(y)
        if len(order) != nn:
            return 2, it
        u[0] = 0.0
        for x in order[1:]:
            e = parent_edge[x]
            if x < n:
                u[x] = C[bi[e], bj[e]] - v[bj[e]]
            else:
                v[x - n] = C[bi[e], bj[e]] - u[bi[e]]
        reduced = C - u[:, None] - v[None, :]
        if bland:
            mask = reduced.ravel() < -tol
            if not mask.any():
                return 0, it
            flat = int(np.argmax(mask))
        else:
            flat = int(np.argmin(reduced.ravel()))
            if reduced.ravel()[flat] >= -tol:
                return 0, it
        be_i, be_j = divmod(flat, m)
        x, y = be_i, n + be_j
        path1, path2 = [], []
        while depth[x] > depth[y]:
            path1.append(parent_edge[x])
            x = parent_node[x]
        while depth[y] > depth[x]:
            path2.append(parent_edge[y])
            y = parent_node[y]
        while x != y:
            path1.append(parent_edge[x])
            x = parent_node[x]
            path2.append(parent_edge[y])
            y = parent_node[y]
        n1, n2 = len(path1), len(path2)
        theta = np.inf
        leave = -1
        lkey = (np.inf, np.inf)
        minus = [(k % 2 == 0, e) for k, e in enumerate(path2)]
        minus += [
            ((1 + n2 + (n1 - 1 - k)) % 2 == 1, e) for k, e in enumerate(path1)
        ]
        for is_minus, e in minus:
            if is_minus:
                key = (bi[e], bj[e])
                if f[e] < theta or (f[e] == theta and key < lkey):
                    theta = f[e]
                    leave = e
                    lkey = key
        if leave < 0:
            return 3, it
        for is_minus, e in minus:
            f[e] += -theta if is_minus else theta
        bi[leave] = be_i
        bj[leave] = be_j
        f[leave] = theta
        if theta <= theta_tol:
            degen += 1
            if degen > STALL_LIMIT:
                bland = True
        else:
            degen = 0
            bland = False


def northwest_basis(a, b):
    """Northwest-corner starting basis: n + m - 1 cells, staircase tree."""
    n, m = len(a), len(b)
    nb = n + m - 1
    bi = np.zeros(nb, dtype=np.int64)
    bj = np.zeros(nb, dtype=np.int64)
    f = np.zeros(nb)
    ar = np.array(a, dtype=float)
    br = np.array(b, dtype=float)
    i = j = 0
    for e in range(nb):
        bi[e] = i
        bj[e] = j
        t = min(ar[i], br[j])
        f[e] = t
        ar[i] -= t
        br[j] -= t
        if ar[i] <= 0.0 and i < n - 1:
            i += 1
        elif br[j] <= 0.0 and j < m - 1:
            j += 1
        elif i < n - 1:
            i += 1
        elif j < m - 1:
            j += 1
    return bi, bj, f


def boundary_stack_basis(a, b, s_a, s_b):
    """Non-crossing greedy matching by boundary position, as a basis.

    Walks the boundary once; opposite-kind atoms match last-in-first-out,
    which can never produce crossing chords.  The resulting forest is
    joined into a spanning tree with zero-flow connector cells.
    """
    n, m = len(a), len(b)
    events = sorted(
        [(s_a[i], 0, i) for i in range(n)] + [(s_b[j], 1, j) for j in range(m)]
    )
    stack = []  # (kind, idx, remaining)
    entries = []
    for _, kind, idx in events:
        rem = float(a[idx] if kind == 0 else b[idx])
        while rem > 0 and stack and stack[-1][0] != kind:
            tk, ti, tr = stack[-1]
            c = min(rem, tr)
            pair = (idx, ti) if kind == 0 else (ti, idx)
            entries.append((pair[0], pair[1], c))
            rem -= c
            if tr - c <= 0:
                stack.pop()
                rem = max(rem, 0.0)
            else:
                stack[-1] = (tk, ti, tr - c)
                rem = 0.0
        if rem > 0:
            stack.append((kind, idx, rem))
    # leftover stack dust from float imbalance is dropped here; it is
    # bounded by the balance tolerance enforced before solving
    parent = list(range(n + m))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    kept = []
    for i, j, c in entries:
        ri, rj = find(i), find(n + j)
        if ri == rj:
            raise SolverError("boundary matching produced a cycle")
        parent[ri] = rj
        kept.append((i, j, c))
    comps = {}
    for x in range(n + m):
        comps.setdefault(find(x), []).append(x)
    groups = sorted(comps.values(), key=min)
    first = groups[0]
    j0 = min(x for x in first if x >= n) - n
    for g in groups[1:]:
        i0 = min(x for x in g if x < n)
        kept.append((i0, j0, 0.0))
        parent[find(i0)] = find(n + j0)
    if len(kept) != n + m - 1:
        raise SolverError("boundary matching basis has wrong size")
    bi = np.array([e[0] for e in kept], dtype=np.int64)
    bj = np.array([e[1] for e in kept], dtype=np.int64)
    f = np.array([e[2] for e in kept], dtype=float)
    return bi, bj, f


def solve_transport(C, a, b, init="boundary", s_a=None, s_b=None):
    """Run the simplex; returns (bi, bj, f, u, v, iterations)."""
    C = np.ascontiguousarray(C, dtype=np.float64)
    n, m = C.shape
    if init == "northwest" or s_a is None or s_b is None:
        bi, bj, f = northwest_basis(a, b)
    else:
        try:
            bi, bj, f = boundary_stack_basis(a, b, s_a, s_b)
        except SolverError:
            bi, bj, f = northwest_basis(a, b)
    u = np.zeros(n)
    v = np.zeros(m)
    tol = 1e-12 * (1.0 + float(np.abs(C).max(initial=0.0)))
    theta_tol = 1e-14 * (1.0 + float(max(np.max(a), np.max(b))))
    max_iter = 400 * (n + m) + 200000
    core = _solve_core_nb if USE_NUMBA else _solve_core_np
    status, iters = core(C, bi, bj, f, u, v, tol, theta_tol, max_iter)
    if status == 1:
        raise SolverError(f"simplex hit the iteration cap after {iters} pivots")
    if status != 0:
        raise SolverError(f"simplex failed with internal status {status}")
    return bi, bj, f, u, v, iters
