"""Inner loops shared by the ranking, coloring and finite-field code.

Every kernel exists twice: a loop-style version that numba compiles, and a
numpy version used when numba is disabled.  Both take and return plain
``int64``/``bool`` arrays so they can be swapped freely; the test-suite
checks them against each other.
"""

from __future__ import annotations

import numpy as np

from ._accel import jit, select

# sentinel "never known" timestamp for dynamic side information
NEVER = np.iinfo(np.int64).max


# ---------------------------------------------------------------------------
# inversion counting


def _count_inversions_loop(seq):
    n = seq.shape[0]
    src = seq.copy()
    dst = np.empty_like(src)
    total = 0
    width = 1
    while width < n:
        lo = 0
        while lo < n:
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i = lo
            j = mid
            k = lo
            while i < mid and j < hi:
                if src[j] < src[i]:
                    dst[k] = src[j]
                    total += mid - i
                    j += 1
                else:
                    dst[k] = src[i]
                    i += 1
                k += 1
            while i < mid:
                dst[k] = src[i]
                i += 1
                k += 1
            while j < hi:
                dst[k] = src[j]
                j += 1
                k += 1
            lo = hi
        src, dst = dst, src
        width *= 2
    return total


def _count_inversions_numpy(seq):
    """Bottom-up merge count; each level is one vectorized searchsorted."""
    seq = np.asarray(seq, dtype=np.int64)
    n = seq.shape[0]
    if n < 2:
        return 0
    # shift to 0..n-1 ranks so block offsets of n keep blocks separated
    arr = np.argsort(np.argsort(seq, kind="stable"), kind="stable").astype(np.int64)
    idx = np.arange(n)
    total = 0
    width = 1
    while width < n:
        pair = idx // (2 * width)
        is_left = (idx % (2 * width)) < width
        keyed = arr + pair * n
        lefts = keyed[is_left]
        rights = keyed[~is_left]
        if rights.size:
            left_end = np.searchsorted(lefts, (pair[~is_left] + 1) * n, side="left")
            total += int((left_end - np.searchsorted(lefts, rights, side="right")).sum())
        arr = np.sort(keyed) - pair * n
        width *= 2
    return total


count_inversions_jit = jit(_count_inversions_loop)
count_inversions = select(count_inversions_jit, _count_inversions_numpy)


# ---------------------------------------------------------------------------
# conflict graph


def _conflict_adjacency_loop(vw, vf, has):
    nv = vw.shape[0]
    adj = np.zeros((nv, nv), dtype=np.bool_)
    for a in range(nv):
        for b in range(a + 1, nv):
            if vf[a] != vf[b] and (not has[vw[b], vf[a]] or not has[vw[a], vf[b]]):
                adj[a, b] = True
                adj[b, a] = True
    return adj


def _conflict_adjacency_numpy(vw, vf, has):
    a_knows_b = has[vw[:, None], vf[None, :]]
    return (vf[:, None] != vf[None, :]) & ~(a_knows_b & a_knows_b.T)


conflict_adjacency_jit = jit(_conflict_adjacency_loop)
conflict_adjacency = select(conflict_adjacency_jit, _conflict_adjacency_numpy)


# ---------------------------------------------------------------------------
# orderings


def _degeneracy_removal_loop(adj):
    nv = adj.shape[0]
    deg = np.zeros(nv, dtype=np.int64)
    for v in range(nv):
        for u in range(nv):
            if adj[v, u]:
                deg[v] += 1
    removed = np.zeros(nv, dtype=np.bool_)
    out = np.empty(nv, dtype=np.int64)
    for step in range(nv):
        best = -1
        for v in range(nv):
            if not removed[v] and (best < 0 or deg[v] < deg[best]):
                best = v
        out[step] = best
        removed[best] = True
        for u in range(nv):
            if adj[best, u] and not removed[u]:
                deg[u] -= 1
    return out


def _degeneracy_removal_numpy(adj):
    nv = adj.shape[0]
    deg = adj.sum(axis=1).astype(np.int64)
    out = np.empty(nv, dtype=np.int64)
    for step in range(nv):
        best = int(np.argmin(deg))
        out[step] = best
        deg[adj[best]] -= 1
        deg[best] = NEVER
    return out


degeneracy_removal_jit = jit(_degeneracy_removal_loop)
degeneracy_removal = select(degeneracy_removal_jit, _degeneracy_removal_numpy)


def _back_degrees_loop(adj, order):
    nv = order.shape[0]
    pos = np.empty(nv, dtype=np.int64)
    for k in range(nv):
        pos[order[k]] = k
    out = np.zeros(nv, dtype=np.int64)
    for v in range(nv):
        for u in range(nv):
            if adj[v, u] and pos[u] < pos[v]:
                out[v] += 1
    return out


def _back_degrees_numpy(adj, order):
    nv = order.shape[0]
    pos = np.empty(nv, dtype=np.int64)
    pos[order] = np.arange(nv)
    return (adj & (pos[None, :] < pos[:, None])).sum(axis=1).astype(np.int64)


back_degrees_jit = jit(_back_degrees_loop)
back_degrees = select(back_degrees_jit, _back_degrees_numpy)


# ---------------------------------------------------------------------------
# greedy coloring (colors are 1-based; 0 = uncolored)


def _greedy_static_loop(adj, order):
    nv = order.shape[0]
    colors = np.zeros(nv, dtype=np.int64)
    used = np.zeros(nv + 2, dtype=np.bool_)
    for v in order:
        used[:] = False
        for u in range(nv):
            if adj[v, u] and colors[u] > 0:
                used[colors[u]] = True
        c = 1
        while used[c]:
            c += 1
        colors[v] = c
    return colors


def _greedy_static_numpy(adj, order):
    nv = order.shape[0]
    colors = np.zeros(nv, dtype=np.int64)
    for v in order:
        used = np.zeros(nv + 2, dtype=np.bool_)
        used[colors[adj[v]]] = True
        used[0] = True
        colors[v] = int(np.argmin(used))
    return colors


greedy_static_jit = jit(_greedy_static_loop)
greedy_static = select(greedy_static_jit, _greedy_static_numpy)


def _greedy_dynamic_loop(order, vw, vf, known):
    """Decode-aware greedy coloring.

    ``known[i, j]`` is the transmission index after which WCS ``i`` holds file
    ``j``: 0 for cached files, NEVER for unknown ones.  It is updated in place
    as vertices receive colors.
    """
    nv = order.shape[0]
    colors = np.zeros(nv, dtype=np.int64)
    blocked = np.zeros(nv + 2, dtype=np.bool_)
    for v in order:
        i = vw[v]
        j = vf[v]
        blocked[:] = False
        for u in range(nv):
            k = colors[u]
            if k == 0 or vf[u] == j:
                continue
            if not (known[i, vf[u]] < k and known[vw[u], j] < k):
                blocked[k] = True
        c = 1
        while blocked[c]:
            c += 1
        colors[v] = c
        if c < known[i, j]:
            known[i, j] = c
    return colors


def _greedy_dynamic_numpy(order, vw, vf, known):
    nv = order.shape[0]
    colors = np.zeros(nv, dtype=np.int64)
    for v in order:
        i = vw[v]
        j = vf[v]
        k = colors
        ok = (known[i, vf] < k) & (known[vw, j] < k)
        clash = (k > 0) & (vf != j) & ~ok
        blocked = np.zeros(nv + 2, dtype=np.bool_)
        blocked[k[clash]] = True
        blocked[0] = True
        c = int(np.argmin(blocked))
        colors[v] = c
        known[i, j] = min(known[i, j], c)
    return colors


greedy_dynamic_jit = jit(_greedy_dynamic_loop)
greedy_dynamic = select(greedy_dynamic_jit, _greedy_dynamic_numpy)


# ---------------------------------------------------------------------------
# GF(2^w) linear algebra over log/exp tables
#
# exp has length 2*(q-1) so exp[log a + log b] needs no modulo.


def _gf_matmul_loop(a, b, exp, log):
    rows, inner = a.shape
    width = b.shape[1]
    out = np.zeros((rows, width), dtype=np.int64)
    for r in range(rows):
        for t in range(inner):
            coef = a[r, t]
            if coef == 0:
                continue
            lc = log[coef]
            for x in range(width):
                sym = b[t, x]
                if sym != 0:
                    out[r, x] ^= exp[lc + log[sym]]
    return out


def _gf_scale_numpy(coef, vec, exp, log):
    if coef == 0:
        return np.zeros_like(vec)
    return np.where(vec == 0, 0, exp[log[coef] + log[vec]])


def _gf_matmul_numpy(a, b, exp, log):
    rows, inner = a.shape
    out = np.zeros((rows, b.shape[1]), dtype=np.int64)
    for r in range(rows):
        for t in range(inner):
            if a[r, t]:
                out[r] ^= _gf_scale_numpy(a[r, t], b[t], exp, log)
    return out


gf_matmul_jit = jit(_gf_matmul_loop)
gf_matmul = select(gf_matmul_jit, _gf_matmul_numpy)


def _gf_solve_loop(a, y, exp, log, order):
    """Solve ``a @ x = y`` (a: rows x cols, full column rank expected).

    Returns ``(x, rank)``; ``rank < cols`` signals a singular system.
    """
    a = a.copy()
    y = y.copy()
    rows, cols = a.shape
    width = y.shape[1]
    rank = 0
    for col in range(cols):
        piv = -1
        for r in range(rank, rows):
            if a[r, col] != 0:
                piv = r
                break
        if piv < 0:
            continue
        if piv != rank:
            for c in range(cols):
                tmp = a[piv, c]
                a[piv, c] = a[rank, c]
                a[rank, c] = tmp
            for x in range(width):
                tmp = y[piv, x]
                y[piv, x] = y[rank, x]
                y[rank, x] = tmp
        # normalise pivot row
        inv_log = (order - log[a[rank, col]]) % order
        for c in range(cols):
            if a[rank, c] != 0:
                a[rank, c] = exp[log[a[rank, c]] + inv_log]
        for x in range(width):
            if y[rank, x] != 0:
                y[rank, x] = exp[log[y[rank, x]] + inv_log]
        for r in range(rows):
            f = a[r, col]
            if r == rank or f == 0:
                continue
            lf = log[f]
            for c in range(cols):
                if a[rank, c] != 0:
                    a[r, c] ^= exp[lf + log[a[rank, c]]]
            for x in range(width):
                if y[rank, x] != 0:
                    y[r, x] ^= exp[lf + log[y[rank, x]]]
        rank += 1
    return y[:cols].copy(), rank


def _gf_solve_numpy(a, y, exp, log, order):
    a = a.copy()
    y = y.copy()
    rows, cols = a.shape
    rank = 0
    for col in range(cols):
        nz = np.nonzero(a[rank:, col])[0]
        if nz.size == 0:
            continue
        piv = rank + int(nz[0])
        if piv != rank:
            a[[rank, piv]] = a[[piv, rank]]
            y[[rank, piv]] = y[[piv, rank]]
        inv = exp[(order - log[a[rank, col]]) % order]
        a[rank] = _gf_scale_numpy(inv, a[rank], exp, log)
        y[rank] = _gf_scale_numpy(inv, y[rank], exp, log)
        for r in np.nonzero(a[:, col])[0]:
            if r == rank:
                continue
            f = a[r, col]
            a[r] ^= _gf_scale_numpy(f, a[rank], exp, log)
            y[r] ^= _gf_scale_numpy(f, y[rank], exp, log)
        rank += 1
    return y[:cols].copy(), rank


gf_solve_jit = jit(_gf_solve_loop)
gf_solve = select(gf_solve_jit, _gf_solve_numpy)


NUMBA_KERNELS = {
    "count_inversions": count_inversions_jit,
    "conflict_adjacency": conflict_adjacency_jit,
    "degeneracy_removal": degeneracy_removal_jit,
    "back_degrees": back_degrees_jit,
    "greedy_static": greedy_static_jit,
    "greedy_dynamic": greedy_dynamic_jit,
    "gf_matmul": gf_matmul_jit,
    "gf_solve": gf_solve_jit,
}

NUMPY_KERNELS = {
    "count_inversions": _count_inversions_numpy,
    "conflict_adjacency": _conflict_adjacency_numpy,
    "degeneracy_removal": _degeneracy_removal_numpy,
    "back_degrees": _back_degrees_numpy,
    "greedy_static": _greedy_static_numpy,
    "greedy_dynamic": _greedy_dynamic_numpy,
    "gf_matmul": _gf_matmul_numpy,
    "gf_solve": _gf_solve_numpy,
}
