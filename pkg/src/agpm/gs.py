"""Graph sparsification: thin the graph, count exactly, scale back up."""

from __future__ import annotations

import enum
import itertools
import math
import time
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import OracleRefusal, ParameterError, UnsupportedError
from .exact import exact_count, rooted_count
from .graph import CsrGraph, bernoulli_sparsify, color_vertices, sparsified_view
from .pattern import ExecutionPlan, Induced, Pattern, _embeddings, compile_plan
from .rng import keyed_bits

GAMMA_PROBES = 1000
GAMMA_SAFETY = 2.0


class Scheme(str, enum.Enum):
    BERNOULLI = "bernoulli"
    COLOR = "color"


@dataclass(frozen=True)
class SparsifyParams:
    scheme: Scheme
    keep_probability: float
    color_count: int | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.scheme is Scheme.COLOR:
            if self.color_count is None or int(self.color_count) < 1:
                raise ParameterError(f"color count must be >= 1, got {self.color_count}")
            object.__setattr__(self, "color_count", int(self.color_count))
            object.__setattr__(self, "keep_probability", 1.0 / self.color_count)
        elif not 0.0 < self.keep_probability <= 1.0:
            raise ParameterError(f"keep probability must lie in (0, 1], got {self.keep_probability}")

    @classmethod
    def bernoulli(cls, p: float, seed: int = 0) -> SparsifyParams:
        return cls(Scheme.BERNOULLI, float(p), None, seed)

    @classmethod
    def color(cls, c: int, seed: int = 0) -> SparsifyParams:
        return cls(Scheme.COLOR, 1.0, c, seed)

    def with_seed(self, seed: int) -> SparsifyParams:
        return SparsifyParams(self.scheme, self.keep_probability, self.color_count, seed)

    def scale(self, p: Pattern) -> float:
        if self.scheme is Scheme.COLOR:
            return float(self.color_count) ** (p.vertex_count - 1)
        return self.keep_probability ** (-p.edge_count)

    def to_dict(self) -> dict:
        d = {"scheme": self.scheme.value, "keep_probability": self.keep_probability,
             "seed": self.seed}
        if self.color_count is not None:
            d["color_count"] = self.color_count
        return d


@dataclass(frozen=True)
class GsEstimate:
    estimate: float
    raw_count: float
    scale: float
    params: SparsifyParams
    preprocess_seconds: float = 0.0
    search_seconds: float = 0.0
    estimates: tuple = field(default=(), repr=False)


def sparsify(g: CsrGraph, params: SparsifyParams) -> CsrGraph:
    """The sparsified graph (a same-color view for the color scheme)."""
    if params.scheme is Scheme.COLOR:
        return sparsified_view(color_vertices(g, params.color_count, params.seed))
    return bernoulli_sparsify(g, params.keep_probability, params.seed)


def _repeat_seed(seed: int, i: int) -> int:
    return seed if i == 0 else int(keyed_bits(seed, i, 0x726570))


def gs_estimate(g: CsrGraph, plan: ExecutionPlan, params: SparsifyParams,
                repeats: int = 1, threads: int | None = None) -> GsEstimate:
    if params.scheme is Scheme.BERNOULLI and plan.pattern.induced is Induced.VERTEX:
        raise UnsupportedError("edge sparsification only supports edge-induced counting")
    if repeats < 1:
        raise ParameterError("repeats must be >= 1")
    scale = params.scale(plan.pattern)
    raws = []
    prep = search = 0.0
    for i in range(repeats):
        t0 = time.perf_counter()
        h = sparsify(g, params.with_seed(_repeat_seed(params.seed, i)))
        t1 = time.perf_counter()
        raws.append(exact_count(h, plan, threads).count)
        prep += t1 - t0
        search += time.perf_counter() - t1
    raw = raws[0] if repeats == 1 else sum(raws) / repeats
    return GsEstimate(raw * scale, raw, scale, params, prep, search,
                      tuple(r * scale for r in raws))


# ------------------------------------------------------------- read-k choice


@dataclass(frozen=True)
class ReadKBoundInputs:
    epsilon: float
    delta: float
    count_estimate: float
    gamma_estimate: float

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0 or not 0.0 < self.delta < 1.0:
            raise ParameterError("epsilon and delta must lie in (0, 1)")
        if self.count_estimate < 0:
            raise ParameterError("count estimate must be non-negative")
        if self.count_estimate > 0 and self.gamma_estimate <= 0:
            raise ParameterError("gamma must be positive when matches exist")


@dataclass(frozen=True)
class KeepProbability:
    p: float
    color_count: int
    unbounded: float
    no_matches: bool = False

    def __float__(self):
        return self.p


def choose_keep_probability(inputs: ReadKBoundInputs) -> KeepProbability:
    """Smallest keep probability the read-k Chernoff bound allows.

    ``unbounded`` is the value before clamping to 1; ``no_matches`` flags a
    zero count estimate, which disables sparsification.
    """
    if inputs.count_estimate == 0:
        return KeepProbability(1.0, 1, math.inf, True)
    raw = (-3.0 * math.log(inputs.delta / 2.0) * inputs.gamma_estimate
           / (inputs.epsilon ** 2 * inputs.count_estimate))
    p = min(1.0, raw)
    return KeepProbability(p, max(1, math.floor(1.0 / p)), raw)


def _rooted_plans(p: Pattern):
    """One unbroken plan per automorphism orbit of ordered pattern edges, with orbit size.

    Ordered edges in one orbit give the same rooted count, so each orbit is
    searched once and weighted.
    """
    autos = list(p.automorphisms())
    seen = set()
    plans = []
    for a, b in sorted(p.edges):
        for seed in ((a, b), (b, a)):
            if seed in seen:
                continue
            orbit = {(perm[seed[0]], perm[seed[1]]) for perm in autos}
            seen |= orbit
            plans.append((compile_plan(p, symmetry_breaking=False, seed_edge=seed), len(orbit)))
    return plans


def matches_through_edge(g: CsrGraph, plan: ExecutionPlan, u: int, v: int, _plans=None) -> int:
    """Number of matches whose edge set contains ``{u, v}``."""
    p = plan.pattern
    plans = _plans if _plans is not None else _rooted_plans(p)
    total = sum(w * rooted_count(g, rp, u, v) for rp, w in plans)
    return total // p.automorphism_count


def edge_match_counts(g: CsrGraph, plan: ExecutionPlan) -> np.ndarray:
    """Matches through every edge of ``g.edges()`` (the exhaustive gamma oracle)."""
    plans = _rooted_plans(plan.pattern)
    return np.array([matches_through_edge(g, plan, u, v, plans) for u, v in g.edges()],
                    dtype=np.int64)


def estimate_gamma(g: CsrGraph, plan: ExecutionPlan, probe_edges: int = GAMMA_PROBES,
                   seed: int = 0) -> int:
    """Largest per-edge match count over ``probe_edges`` uniformly drawn edges.

    This is a lower bound on the true maximum; callers add a safety factor.
    """
    if probe_edges < 1:
        raise ParameterError("probe_edges must be >= 1")
    edges = g.edges()
    if len(edges) == 0:
        return 0
    rng = np.random.default_rng(seed)
    picks = edges[rng.integers(0, len(edges), size=probe_edges)]
    plans = _rooted_plans(plan.pattern)
    return max(matches_through_edge(g, plan, u, v, plans) for u, v in picks)


# -------------------------------------------------------------- variance


@dataclass(frozen=True)
class VarianceDiagnostic:
    analytic_var: float
    count: int
    shared_vertices: dict
    shared_edges: dict


def gs_variance_diagnostic(g: CsrGraph, p: Pattern, params: SparsifyParams) -> VarianceDiagnostic:
    """Exact variance of the scaled estimator from brute-force match pairs.

    Bernoulli: two matches covary through their shared edges, so
    ``Var = C (p^-l - 1) + sum_{i != j} (p^-s_ij - 1)`` over ordered pairs.
    Color: they covary through shared vertices, ``(c^(z_ij - 1) - 1)`` for
    ``z_ij >= 1``.  The profiles count unordered pairs by overlap size.
    """
    if g.vertex_count > 12:
        raise OracleRefusal("variance diagnostic is limited to 12 vertices")
    nbrs = [set(g.neighbors_of(u).tolist()) for u in range(g.vertex_count)]
    matches = {}
    for image in _embeddings(nbrs, p):
        key = frozenset((min(image[a], image[b]), max(image[a], image[b])) for a, b in p.edges)
        matches.setdefault(key if p.induced is Induced.EDGE else frozenset(image), key)
    edge_sets = list(matches.values())
    vertex_sets = [frozenset(x for e in es for x in e) for es in edge_sets]
    count = len(edge_sets)
    by_vertices, by_edges = Counter(), Counter()
    for i, j in itertools.combinations(range(count), 2):
        by_vertices[len(vertex_sets[i] & vertex_sets[j])] += 1
        by_edges[len(edge_sets[i] & edge_sets[j])] += 1
    if params.scheme is Scheme.COLOR:
        c = float(params.color_count)
        var = count * (c ** (p.vertex_count - 1) - 1)
        var += 2 * sum(t * (c ** (z - 1) - 1) for z, t in by_vertices.items() if z >= 1)
    else:
        if p.induced is Induced.VERTEX:
            raise UnsupportedError("edge sparsification only supports edge-induced counting")
        q = params.keep_probability
        var = count * (q ** (-p.edge_count) - 1)
        var += 2 * sum(t * (q ** (-s) - 1) for s, t in by_edges.items())
    return VarianceDiagnostic(float(var), count, dict(sorted(by_vertices.items())),
                              dict(sorted(by_edges.items())))
