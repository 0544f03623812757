"""Hot loops: sorted-set operations, plan interpretation, sampling and DFS.

Every kernel takes the graph as ``(beg, end, nbr)`` so that ``N(u) =
nbr[beg[u]:end[u]]``; this covers compact CSR graphs and same-color prefix
views alike.  Plans arrive as plain arrays (see ``ExecutionPlan``):

``adj[j, i]``   1 if depth ``j`` and depth ``i`` are adjacent in the pattern
``ub[j, i]``    1 if the vertex at depth ``j`` must have a smaller id than the
                one at depth ``i``, -1 for larger, 0 for no constraint
``parent[j]``   first bound pattern-neighbor of depth ``j`` (lazy tree edge)

``work`` is a one-element int64 array counting element comparisons plus
binary-search probes.
"""

import numpy as np

from ._accel import njit

GALLOP_RATIO = 32
_NO_BOUND = np.iinfo(np.int64).max


@njit
def lower_bound(a, lo, hi, x, work):
    """First index in ``[lo, hi)`` with ``a[idx] >= x``."""
    while lo < hi:
        mid = (lo + hi) >> 1
        work[0] += 1
        if a[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit
def contains(a, lo, hi, x, work):
    i = lower_bound(a, lo, hi, x, work)
    return i < hi and a[i] == x


@njit
def intersect_into(buf, n, b, blo, bhi, work):
    """Replace ``buf[:n]`` by ``buf[:n] & b[blo:bhi]``; returns the new size."""
    nb = bhi - blo
    if n == 0 or nb == 0:
        return 0
    r = 0
    if nb > GALLOP_RATIO * n:
        lo = blo
        for i in range(n):
            x = buf[i]
            lo = lower_bound(b, lo, bhi, x, work)
            if lo == bhi:
                break
            if b[lo] == x:
                buf[r] = x
                r += 1
                lo += 1
        return r
    if n > GALLOP_RATIO * nb:
        lo = 0
        for t in range(blo, bhi):
            x = b[t]
            lo = lower_bound(buf, lo, n, x, work)
            if lo == n:
                break
            if buf[lo] == x:
                buf[r] = x
                r += 1
                lo += 1
        return r
    i = 0
    t = blo
    while i < n and t < bhi:
        work[0] += 1
        x = buf[i]
        y = b[t]
        if x < y:
            i += 1
        elif x > y:
            t += 1
        else:
            buf[r] = x
            r += 1
            i += 1
            t += 1
    return r


@njit
def difference_into(buf, n, b, blo, bhi, work):
    """Replace ``buf[:n]`` by ``buf[:n] - b[blo:bhi]``."""
    nb = bhi - blo
    if n == 0 or nb == 0:
        return n
    r = 0
    if nb > GALLOP_RATIO * n:
        lo = blo
        for i in range(n):
            x = buf[i]
            lo = lower_bound(b, lo, bhi, x, work)
            if lo == bhi or b[lo] != x:
                buf[r] = x
                r += 1
        return r
    i = 0
    t = blo
    while i < n:
        if t == bhi:
            buf[r] = buf[i]
            r += 1
            i += 1
            continue
        work[0] += 1
        x = buf[i]
        y = b[t]
        if x < y:
            buf[r] = x
            r += 1
            i += 1
        elif x > y:
            t += 1
        else:
            i += 1
            t += 1
    return r


@njit
def union_into(buf, n, b, blo, bhi, tmp, work):
    """Replace ``buf[:n]`` by ``buf[:n] | b[blo:bhi]`` using ``tmp`` as scratch."""
    i = 0
    t = blo
    r = 0
    while i < n and t < bhi:
        work[0] += 1
        x = buf[i]
        y = b[t]
        if x < y:
            tmp[r] = x
            i += 1
        elif x > y:
            tmp[r] = y
            t += 1
        else:
            tmp[r] = x
            i += 1
            t += 1
        r += 1
    while i < n:
        tmp[r] = buf[i]
        r += 1
        i += 1
    while t < bhi:
        tmp[r] = b[t]
        r += 1
        t += 1
    for s in range(r):
        buf[s] = tmp[s]
    return r


@njit
def remove_value(buf, n, x, work):
    i = lower_bound(buf, 0, n, x, work)
    if i == n or buf[i] != x:
        return n
    for s in range(i, n - 1):
        buf[s] = buf[s + 1]
    return n - 1


# ---------------------------------------------------------------- plan steps


@njit
def eager_candidates(j, bound, beg, end, nbr, adj, ub, induced, out, work):
    """Refined candidate set for depth ``j`` into ``out``; returns its size."""
    hi = _NO_BOUND
    lo = -1
    best = -1
    best_deg = _NO_BOUND
    for i in range(j):
        if ub[j, i] == 1:
            if bound[i] < hi:
                hi = bound[i]
        elif ub[j, i] == -1:
            if bound[i] > lo:
                lo = bound[i]
        if adj[j, i] != 0:
            d = end[bound[i]] - beg[bound[i]]
            if d < best_deg:
                best = i
                best_deg = d
    u = bound[best]
    s = beg[u]
    e = end[u]
    if hi != _NO_BOUND:
        e = lower_bound(nbr, s, e, hi, work)
    if lo >= 0:
        s = lower_bound(nbr, s, e, lo + 1, work)
    n = e - s
    for t in range(n):
        out[t] = nbr[s + t]
    for i in range(j):
        if n == 0:
            return 0
        if i == best:
            continue
        v = bound[i]
        if adj[j, i] != 0:
            n = intersect_into(out, n, nbr, beg[v], end[v], work)
        elif induced:
            n = difference_into(out, n, nbr, beg[v], end[v], work)
    # bound pattern-neighbors cannot appear in their own neighborhood
    for i in range(j):
        if adj[j, i] == 0 and n > 0:
            n = remove_value(out, n, bound[i], work)
    return n


@njit
def lazy_candidates(j, bound, beg, end, nbr, out, tmp, work):
    """Neighborhood of the bound subgraph minus the bound vertices."""
    u = bound[0]
    n = end[u] - beg[u]
    for t in range(n):
        out[t] = nbr[beg[u] + t]
    for i in range(1, j):
        v = bound[i]
        n = union_into(out, n, nbr, beg[v], end[v], tmp, work)
    for i in range(j):
        if n > 0:
            n = remove_value(out, n, bound[i], work)
    return n


@njit
def lazy_closure_ok(bound, beg, end, nbr, adj, ub, parent, induced, work):
    k = adj.shape[0]
    for j in range(2, k):
        for i in range(j):
            if ub[j, i] == 1 and bound[j] >= bound[i]:
                return False
            if ub[j, i] == -1 and bound[j] <= bound[i]:
                return False
    for j in range(2, k):
        for i in range(j):
            if i == parent[j]:
                continue
            if adj[j, i] == 0 and not induced:
                continue
            v = bound[i]
            has = contains(nbr, beg[v], end[v], bound[j], work)
            if adj[j, i] != 0 and not has:
                return False
            if adj[j, i] == 0 and has:
                return False
    return True


@njit
def _arc_source(end, r):
    """Vertex owning arc index ``r`` in a compact graph."""
    lo = 0
    hi = end.shape[0]
    while lo < hi:
        mid = (lo + hi) >> 1
        if end[mid] <= r:
            lo = mid + 1
        else:
            hi = mid
    return lo


# ------------------------------------------------------------------ sampling


@njit
def sample_one(rng, beg, end, nbr, arc_total, adj, ub, parent, induced, eager,
               seed_ordered, bound, out, tmp, work):
    """One neighbor-sampling trial; returns the scaled value (0.0 on a miss)."""
    k = adj.shape[0]
    r = int(rng.random() * arc_total)
    if r >= arc_total:
        r = arc_total - 1
    u = _arc_source(end, r)
    v = nbr[r]
    if seed_ordered:
        if u < v:
            u, v = v, u
        alpha = arc_total / 2.0
    else:
        alpha = float(arc_total)
    bound[0] = u
    bound[1] = v
    for j in range(2, k):
        if eager:
            n = eager_candidates(j, bound, beg, end, nbr, adj, ub, induced, out, work)
        else:
            n = lazy_candidates(j, bound, beg, end, nbr, out, tmp, work)
        if n == 0:
            return 0.0
        t = int(rng.random() * n)
        if t >= n:
            t = n - 1
        w = out[t]
        alpha *= n
        bound[j] = w
        if not eager:
            p = bound[parent[j]]
            if not contains(nbr, beg[p], end[p], w, work):
                return 0.0
    if not eager:
        if not lazy_closure_ok(bound, beg, end, nbr, adj, ub, parent, induced, work):
            return 0.0
    return alpha


@njit
def sample_batch(rng, count, beg, end, nbr, max_degree, adj, ub, parent, induced,
                 eager, seed_ordered, values):
    """Draw ``count`` samples; returns ``(sum, squared_sum, hits, work)``.

    When ``values`` is non-empty the raw values are written into it.
    """
    k = adj.shape[0]
    arc_total = end[end.shape[0] - 1]
    cap = k * max_degree + 1
    out = np.empty(cap, dtype=np.int64)
    tmp = np.empty(cap, dtype=np.int64)
    bound = np.empty(k, dtype=np.int64)
    work = np.zeros(1, dtype=np.int64)
    keep = values.shape[0] > 0
    total = 0.0
    squares = 0.0
    hits = 0
    for s in range(count):
        x = sample_one(rng, beg, end, nbr, arc_total, adj, ub, parent, induced,
                       eager, seed_ordered, bound, out, tmp, work)
        if x > 0.0:
            hits += 1
            total += x
            squares += x * x
        if keep:
            values[s] = x
    return total, squares, hits, work[0]


# --------------------------------------------------------------- exact search


@njit
def _count_from_seed(v0, v1, beg, end, nbr, adj, ub, induced, cand, cnt, pos, bound, work):
    k = adj.shape[0]
    if k == 2:
        return 1
    bound[0] = v0
    bound[1] = v1
    total = 0
    depth = 2
    cnt[2] = eager_candidates(2, bound, beg, end, nbr, adj, ub, induced, cand[2], work)
    pos[2] = 0
    while depth >= 2:
        if depth == k - 1:
            total += cnt[depth]
            depth -= 1
            continue
        if pos[depth] < cnt[depth]:
            bound[depth] = cand[depth, pos[depth]]
            pos[depth] += 1
            depth += 1
            cnt[depth] = eager_candidates(depth, bound, beg, end, nbr, adj, ub,
                                          induced, cand[depth], work)
            pos[depth] = 0
        else:
            depth -= 1
    return total


@njit
def count_range(lo, hi, beg, end, nbr, max_degree, adj, ub, induced, seed_ordered):
    """Matches whose seed arc starts at a vertex in ``[lo, hi)``."""
    k = adj.shape[0]
    cand = np.empty((k, max_degree + 1), dtype=np.int64)
    cnt = np.zeros(k, dtype=np.int64)
    pos = np.zeros(k, dtype=np.int64)
    bound = np.empty(k, dtype=np.int64)
    work = np.zeros(1, dtype=np.int64)
    total = 0
    for u in range(lo, hi):
        for t in range(beg[u], end[u]):
            v = nbr[t]
            if seed_ordered and v >= u:
                break
            total += _count_from_seed(u, v, beg, end, nbr, adj, ub, induced,
                                      cand, cnt, pos, bound, work)
    return total, work[0]


@njit
def count_rooted(v0, v1, beg, end, nbr, max_degree, adj, ub, induced):
    """Completions of the plan with depth 0 bound to ``v0`` and depth 1 to ``v1``."""
    k = adj.shape[0]
    cand = np.empty((k, max_degree + 1), dtype=np.int64)
    cnt = np.zeros(k, dtype=np.int64)
    pos = np.zeros(k, dtype=np.int64)
    bound = np.empty(k, dtype=np.int64)
    work = np.zeros(1, dtype=np.int64)
    return _count_from_seed(v0, v1, beg, end, nbr, adj, ub, induced,
                            cand, cnt, pos, bound, work)


# ------------------------------------------------- exhaustive path enumeration


@njit
def path_expectation(beg, end, nbr, max_degree, adj, ub, parent, induced, eager, seed_ordered):
    """Sum over every sampler decision path of ``Pr * X``, ``Pr * X**2`` and ``Pr * [hit]``."""
    k = adj.shape[0]
    arc_total = end[end.shape[0] - 1]
    cap = k * max_degree + 1
    cand = np.empty((k, cap), dtype=np.int64)
    tmp = np.empty(cap, dtype=np.int64)
    cnt = np.zeros(k, dtype=np.int64)
    pos = np.zeros(k, dtype=np.int64)
    prob = np.zeros(k)
    scale = np.zeros(k)
    bound = np.empty(k, dtype=np.int64)
    work = np.zeros(1, dtype=np.int64)
    e1 = 0.0
    e2 = 0.0
    hit = 0.0
    for r in range(arc_total):
        u = _arc_source(end, r)
        v = nbr[r]
        alpha = float(arc_total)
        if seed_ordered:
            if u < v:
                u, v = v, u
            alpha = arc_total / 2.0
        p0 = 1.0 / arc_total
        bound[0] = u
        bound[1] = v
        if k == 2:
            e1 += p0 * alpha
            e2 += p0 * alpha * alpha
            hit += p0
            continue
        depth = 2
        prob[2] = p0
        scale[2] = alpha
        pos[2] = 0
        if eager:
            cnt[2] = eager_candidates(2, bound, beg, end, nbr, adj, ub, induced, cand[2], work)
        else:
            cnt[2] = lazy_candidates(2, bound, beg, end, nbr, cand[2], tmp, work)
        while depth >= 2:
            if pos[depth] >= cnt[depth]:
                depth -= 1
                continue
            w = cand[depth, pos[depth]]
            pos[depth] += 1
            bound[depth] = w
            p = prob[depth] / cnt[depth]
            a = scale[depth] * cnt[depth]
            if not eager:
                q = bound[parent[depth]]
                if not contains(nbr, beg[q], end[q], w, work):
                    continue
            if depth == k - 1:
                if eager or lazy_closure_ok(bound, beg, end, nbr, adj, ub, parent, induced, work):
                    e1 += p * a
                    e2 += p * a * a
                    hit += p
                continue
            depth += 1
            prob[depth] = p
            scale[depth] = a
            pos[depth] = 0
            if eager:
                cnt[depth] = eager_candidates(depth, bound, beg, end, nbr, adj, ub,
                                              induced, cand[depth], work)
            else:
                cnt[depth] = lazy_candidates(depth, bound, beg, end, nbr, cand[depth], tmp, work)
    return e1, e2, hit


# -------------------------------------------------------------- calibration


@njit
def intersect_benchmark(a, b, reps, buf):
    """Repeat ``a & b`` ``reps`` times; returns ``(work, matches)``."""
    work = np.zeros(1, dtype=np.int64)
    found = 0
    n = a.shape[0]
    for _ in range(reps):
        for t in range(n):
            buf[t] = a[t]
        found += intersect_into(buf, n, b, 0, b.shape[0], work)
    return work[0], found
