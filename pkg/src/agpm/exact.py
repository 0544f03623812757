"""Exact counting by interpreting a plan as nested loops over candidate sets."""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import OracleRefusal, ParameterError
from .graph import CsrGraph
from .pattern import ExecutionPlan, Induced, Pattern

BRUTE_FORCE_LIMIT = 14


@dataclass(frozen=True)
class ExactCountResult:
    count: int
    work_units: int


def default_threads() -> int:
    env = os.environ.get("AGPM_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _plan_arrays(g: CsrGraph, plan: ExecutionPlan):
    if g.oriented:
        if not plan.pattern.is_clique():
            raise ParameterError("oriented graphs only support clique plans")
        # each clique has exactly one topological order, so no id bounds are needed
        return plan.adjacency, np.zeros_like(plan.bounds), False
    return plan.adjacency, plan.bounds, plan.seed_ordered


def _chunks(g: CsrGraph, parts: int):
    """Split the vertex range into ``parts`` pieces of roughly equal arc mass."""
    n = g.vertex_count
    if parts <= 1 or n == 0:
        return [(0, n)]
    mass = np.cumsum(g.degrees)
    targets = mass[-1] * np.arange(1, parts) / parts
    cuts = np.unique(np.concatenate(([0], np.searchsorted(mass, targets), [n])))
    return list(zip(cuts[:-1].tolist(), cuts[1:].tolist()))


def exact_count(g: CsrGraph, plan: ExecutionPlan, threads: int | None = None) -> ExactCountResult:
    if not isinstance(plan, ExecutionPlan):
        raise ParameterError("exact_count needs a compiled ExecutionPlan")
    adj, ub, seed_ordered = _plan_arrays(g, plan)
    if not g.sorted_adjacency:
        g = g.compact()
    if g.vertex_count == 0 or g.arc_count == 0:
        return ExactCountResult(0, 0)
    threads = default_threads() if threads is None else max(1, int(threads))
    beg, end, nbr = g.begins, g.stops, g.neighbors
    maxd = g.max_degree
    induced = plan.induced

    def run(rng):
        c, w = kernels.count_range(rng[0], rng[1], beg, end, nbr, maxd, adj, ub,
                                   induced, seed_ordered)
        return int(c), int(w)

    # more chunks than threads keeps skewed graphs balanced
    chunks = _chunks(g, 1 if threads == 1 else 4 * threads)
    if threads == 1:
        parts = [run(c) for c in chunks]
    else:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(run, chunks))
    return ExactCountResult(sum(p[0] for p in parts), sum(p[1] for p in parts))


def rooted_count(g: CsrGraph, plan: ExecutionPlan, u: int, v: int) -> int:
    """Completions of ``plan`` with its seed edge bound to the arc ``(u, v)``."""
    return int(kernels.count_rooted(int(u), int(v), g.begins, g.stops, g.neighbors,
                                    g.max_degree, plan.adjacency, plan.bounds, plan.induced))


def _embeddings_into(pat, k, order, host_adj, hosts, induced, find_one):
    """Injective maps of the pattern into ``hosts`` respecting (non-)adjacency."""
    image = [-1] * k
    used = set()

    def extend(i):
        if i == k:
            return 1
        pv = order[i]
        total = 0
        for x in hosts:
            if x in used:
                continue
            ok = True
            for t in range(i):
                q = order[t]
                linked = image[q] in host_adj[x]
                if pat[pv][q] != linked and (pat[pv][q] or induced):
                    ok = False
                    break
            if ok:
                image[pv] = x
                used.add(x)
                total += extend(i + 1)
                used.discard(x)
                if find_one and total:
                    break
        image[pv] = -1
        return total

    return extend(0)


def brute_force_count(g: CsrGraph, p: Pattern) -> int:
    """Count matches by checking every ``k``-vertex subset of ``g``.

    A subset with exactly ``l`` internal edges holds a match iff it is
    isomorphic to the pattern; a subset with more edges (edge-induced only)
    holds (embeddings into it) / |Aut| matches.  Deliberately shares no code
    with the plan machinery.
    """
    n = g.vertex_count
    if n > BRUTE_FORCE_LIMIT:
        raise OracleRefusal(f"brute force is limited to {BRUTE_FORCE_LIMIT} vertices, got {n}")
    k, l = p.vertex_count, len(p.edges)
    adj = [set(g.neighbors_of(u).tolist()) for u in range(n)]
    pat = [[False] * k for _ in range(k)]
    for a, b in p.edges:
        pat[a][b] = pat[b][a] = True
    induced = p.induced is Induced.VERTEX
    # BFS order so each placed vertex is checked against an earlier neighbor early
    order = [0]
    for v in order:
        order += [w for w in range(k) if pat[v][w] and w not in order]
    order += [w for w in range(k) if w not in order]
    pattern_degrees = sorted(sum(row) for row in pat)
    aut = None
    total = 0
    for subset in itertools.combinations(range(n), k):
        inside = set(subset)
        degrees = sorted(len(adj[u] & inside) for u in subset)
        e = sum(degrees) // 2
        if e < l or (induced and e != l):
            continue
        if e == l:
            if degrees == pattern_degrees:
                total += _embeddings_into(pat, k, order, adj, subset, True, True)
            continue
        if aut is None:
            own = [set(w for w in range(k) if pat[v][w]) for v in range(k)]
            aut = _embeddings_into(pat, k, order, own, range(k), True, False)
        total += _embeddings_into(pat, k, order, adj, subset, False, False) // aut
    return total
