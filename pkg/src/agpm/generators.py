"""Small graph families used by the tests, benchmarks and calibration."""

import numpy as np

from .graph import CsrGraph, from_edges


def erdos_renyi(n: int, p: float, seed: int) -> CsrGraph:
    """G(n, p) drawn from numpy's default generator."""
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    return from_edges(np.stack([iu[keep], ju[keep]], axis=1), vertex_count=n)


def complete(n: int) -> CsrGraph:
    iu, ju = np.triu_indices(n, k=1)
    return from_edges(np.stack([iu, ju], axis=1), vertex_count=n)


def cycle(n: int) -> CsrGraph:
    a = np.arange(n)
    return from_edges(np.stack([a, (a + 1) % n], axis=1), vertex_count=n)


def path(n: int) -> CsrGraph:
    a = np.arange(n - 1)
    return from_edges(np.stack([a, a + 1], axis=1), vertex_count=n)


def star(leaves: int) -> CsrGraph:
    """Center 0 joined to ``leaves`` leaves."""
    a = np.arange(1, leaves + 1)
    return from_edges(np.stack([np.zeros_like(a), a], axis=1), vertex_count=leaves + 1)


def planted_cliques(n: int, p: float, clique: int, count: int, seed: int) -> CsrGraph:
    """Sparse G(n, p) with ``count`` disjoint planted cliques (needle-in-the-hay inputs)."""
    rng = np.random.default_rng(seed)
    base = erdos_renyi(n, p, seed)
    edges = [base.edges()]
    members = rng.permutation(n)[: clique * count].reshape(count, clique)
    for group in members:
        iu, ju = np.triu_indices(clique, k=1)
        edges.append(np.stack([group[iu], group[ju]], axis=1))
    return from_edges(np.concatenate(edges), vertex_count=n)
