"""Patterns and interpreted execution plans.

A plan fixes a matching order (pattern vertex ``order[i]`` is bound at depth
``i``), the candidate-set expression of every depth and the symmetry-breaking
bounds that make each match reachable by exactly one root-to-leaf path.
Depths 0 and 1 always come from a single seed edge.
"""

from __future__ import annotations

import enum
import itertools
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ParameterError, PatternLookupError, UnsupportedError

MAX_PATTERN_VERTICES = 9


class Induced(str, enum.Enum):
    EDGE = "edge"
    VERTEX = "vertex"


class VerifyMode(str, enum.Enum):
    EAGER = "eager"
    LAZY = "lazy"


@dataclass(frozen=True)
class Pattern:
    name: str
    vertex_count: int
    edges: frozenset
    induced: Induced = Induced.EDGE

    def __post_init__(self):
        k = self.vertex_count
        if k < 2:
            raise ParameterError("a pattern needs at least 2 vertices")
        if k > MAX_PATTERN_VERTICES:
            raise ParameterError(f"patterns are limited to {MAX_PATTERN_VERTICES} vertices")
        norm = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise ParameterError(f"self-loop on pattern vertex {a}")
            if not (0 <= a < k and 0 <= b < k):
                raise ParameterError(f"edge ({a}, {b}) outside [0, {k})")
            norm.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(norm))
        object.__setattr__(self, "induced", Induced(self.induced))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.vertex_count, self.vertex_count), dtype=np.int64)
        for u, v in self.edges:
            a[u, v] = a[v, u] = 1
        a.setflags(write=False)
        return a

    def degree(self, v: int) -> int:
        return int(self.adjacency[v].sum())

    def is_connected(self) -> bool:
        seen = {0}
        stack = [0]
        adj = self.adjacency
        while stack:
            u = stack.pop()
            for w in np.flatnonzero(adj[u]):
                if int(w) not in seen:
                    seen.add(int(w))
                    stack.append(int(w))
        return len(seen) == self.vertex_count

    def is_clique(self) -> bool:
        k = self.vertex_count
        return self.edge_count == k * (k - 1) // 2

    def with_induced(self, induced) -> Pattern:
        return Pattern(self.name, self.vertex_count, self.edges, Induced(induced))

    def automorphisms(self):
        """Yield every automorphism as a tuple ``perm`` with ``perm[v]`` the image of ``v``."""
        yield from _extend_automorphisms(self.adjacency, {}, find_one=False)

    @cached_property
    def automorphism_count(self) -> int:
        count = 1
        for orbit in _stabilizer_chain(self.adjacency)[1]:
            count *= len(orbit)
        return count


def _extend_automorphisms(adj, fixed, find_one):
    """Backtracking search over vertex maps consistent with ``fixed``."""
    k = len(adj)
    deg = adj.sum(axis=1)
    perm = [-1] * k
    used = [False] * k
    if len(set(fixed.values())) != len(fixed):
        return
    for v, w in fixed.items():
        perm[v] = w
        used[w] = True

    def consistent(v, w):
        if deg[v] != deg[w]:
            return False
        for u in range(k):
            if perm[u] >= 0 and u != v and adj[u, v] != adj[perm[u], w]:
                return False
        return True

    for v, w in fixed.items():
        perm[v] = -1
        ok = consistent(v, w)
        perm[v] = w
        if not ok:
            return

    free = [v for v in range(k) if v not in fixed]

    def rec(i):
        if i == len(free):
            yield tuple(perm)
            return
        v = free[i]
        for w in range(k):
            if not used[w] and consistent(v, w):
                perm[v] = w
                used[w] = True
                yield from rec(i + 1)
                used[w] = False
                perm[v] = -1

    for p in rec(0):
        yield p
        if find_one:
            return


def _stabilizer_chain(adj):
    """Symmetry-breaking constraints and the orbit sizes of the stabilizer chain.

    Returns ``(constraints, orbits)`` where each constraint ``(a, b)`` requires
    the data vertex bound to ``a`` to have a larger id than the one bound to
    ``b``.  The product of orbit sizes is the automorphism group order.
    """
    k = len(adj)
    fixed: dict[int, int] = {}
    constraints = []
    orbits = []
    for v in range(k):
        orbit = [w for w in range(k)
                 if next(_extend_automorphisms(adj, {**fixed, v: w}, True), None) is not None]
        if len(orbit) > 1:
            orbits.append(orbit)
            constraints.extend((v, w) for w in orbit if w != v)
        fixed[v] = v
    return constraints, orbits


# --------------------------------------------------------------------------
# builtin catalogue


def _clique(k):
    return frozenset(itertools.combinations(range(k), 2))


_EDGE_INDUCED = {
    "triangle": (3, _clique(3)),
    **{f"{k}clique": (k, _clique(k)) for k in range(4, 10)},
    "4cycle": (4, {(0, 1), (1, 2), (2, 3), (0, 3)}),
    "5path": (5, {(0, 1), (1, 2), (2, 3), (3, 4)}),
    "house": (5, {(0, 1), (1, 2), (2, 3), (0, 3), (2, 4), (3, 4)}),
    "dumbbell": (6, {(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5)}),
}

_MOTIFS = {
    "3motif-wedge": (3, {(0, 1), (1, 2)}),
    "3motif-triangle": (3, _clique(3)),
    "4motif-path": (4, {(0, 1), (1, 2), (2, 3)}),
    "4motif-star": (4, {(0, 1), (0, 2), (0, 3)}),
    "4motif-cycle": (4, {(0, 1), (1, 2), (2, 3), (0, 3)}),
    "4motif-tailedtriangle": (4, {(0, 1), (1, 2), (0, 2), (2, 3)}),
    "4motif-diamond": (4, {(0, 1), (1, 2), (2, 3), (0, 3), (0, 2)}),
    "4motif-clique": (4, _clique(4)),
}

BUILTIN_NAMES = tuple(_EDGE_INDUCED) + tuple(_MOTIFS)


def builtin_pattern(name: str, induced=None) -> Pattern:
    """Look up a catalogue pattern; motifs default to vertex-induced."""
    if name in _EDGE_INDUCED:
        k, edges = _EDGE_INDUCED[name]
        default = Induced.EDGE
    elif name in _MOTIFS:
        k, edges = _MOTIFS[name]
        default = Induced.VERTEX
    else:
        raise PatternLookupError(
            f"unknown pattern {name!r}; valid names: {', '.join(BUILTIN_NAMES)}")
    return Pattern(name, k, frozenset(edges), Induced(induced) if induced else default)


def parse_pattern(spec: str, induced=None) -> Pattern:
    """Parse a builtin name or ``custom:k:a-b,c-d,...``."""
    if not spec.startswith("custom:"):
        return builtin_pattern(spec, induced)
    try:
        _, k_text, edge_text = spec.split(":", 2)
        k = int(k_text)
        edges = []
        for tok in filter(None, edge_text.split(",")):
            a, b = tok.split("-")
            edges.append((int(a), int(b)))
    except ValueError:
        raise ParameterError(f"malformed custom pattern {spec!r}") from None
    if len(set(map(lambda e: (min(e), max(e)), edges))) != len(edges):
        raise ParameterError(f"duplicate edge in {spec!r}")
    p = Pattern(spec, k, frozenset(edges), Induced(induced) if induced else Induced.EDGE)
    if not p.is_connected():
        raise UnsupportedError(f"pattern {spec!r} is disconnected")
    return p


# --------------------------------------------------------------------------
# plans


@dataclass(frozen=True)
class PlanStep:
    """How depth ``depth`` draws its candidates.

    ``op`` is ``"intersect"`` (eager: common neighbors of ``sources``) or
    ``"union"`` (lazy: neighborhood of the bound subgraph).  ``subtract``
    lists bound vertices whose neighborhoods are removed (vertex-induced).
    ``upper``/``lower`` are bound depths the candidate id must stay
    below/above.  Bound vertices themselves are always excluded.
    """

    depth: int
    op: str
    sources: tuple
    subtract: tuple = ()
    upper: tuple = ()
    lower: tuple = ()
    verify_edges: tuple = ()


@dataclass(frozen=True)
class ExecutionPlan:
    pattern: Pattern
    order: tuple
    steps: tuple
    verify_mode: VerifyMode
    seed_ordered: bool
    symmetry: tuple
    closure_edges: tuple = ()
    closure_non_edges: tuple = ()
    closure_bounds: tuple = ()
    tree_parent: tuple = ()
    automorphism_count: int = 1
    symmetry_breaking: bool = True

    @property
    def k(self) -> int:
        return self.pattern.vertex_count

    @property
    def induced(self) -> bool:
        return self.pattern.induced is Induced.VERTEX

    @property
    def eager(self) -> bool:
        return self.verify_mode is VerifyMode.EAGER

    @cached_property
    def adjacency(self) -> np.ndarray:
        """Pattern adjacency permuted into matching order."""
        o = np.asarray(self.order)
        a = np.ascontiguousarray(self.pattern.adjacency[np.ix_(o, o)])
        a.setflags(write=False)
        return a

    @cached_property
    def bounds(self) -> np.ndarray:
        """``bounds[j, i] = 1`` requires id(v_j) < id(v_i); ``-1`` requires >."""
        b = np.zeros((self.k, self.k), dtype=np.int64)
        for a, c in self.symmetry:
            b[c, a] = 1
            b[a, c] = -1
        b.setflags(write=False)
        return b

    @cached_property
    def parent_array(self) -> np.ndarray:
        p = np.full(self.k, -1, dtype=np.int64)
        for j, par in enumerate(self.tree_parent):
            p[j] = par
        p.setflags(write=False)
        return p

    def verified_edges(self) -> Counter:
        """How often each pattern edge (in depth labels) is checked by the plan."""
        c = Counter({(0, 1): 1})
        for s in self.steps:
            c.update(s.verify_edges)
        c.update(self.closure_edges)
        return c

    @property
    def scaling_rule(self) -> str:
        seed = "m" if self.seed_ordered else "2m"
        if self.eager:
            return "*".join([seed] + [f"|S{s.depth}|" for s in self.steps])
        rule = "*".join([seed] + [f"c{s.depth}" for s in self.steps])
        return f"{rule} if closure({len(self.closure_edges)} edges)"

    def describe(self) -> str:
        lines = [f"plan {self.pattern.name} ({self.verify_mode.value}, "
                 f"{self.pattern.induced.value}-induced), order {list(self.order)}",
                 f"  v0,v1 <- seed edge" + (" with v1 < v0" if self.seed_ordered else "")]
        for s in self.steps:
            if s.op == "intersect":
                expr = " & ".join(f"N(v{i})" for i in s.sources)
            else:
                expr = " | ".join(f"N(v{i})" for i in s.sources)
            if s.subtract:
                expr += " - (" + " | ".join(f"N(v{i})" for i in s.subtract) + ")"
            bound = "".join(f", < v{i}" for i in s.upper) + "".join(f", > v{i}" for i in s.lower)
            lines.append(f"  v{s.depth} <- {expr}{bound}")
        if self.closure_edges or self.closure_non_edges or self.closure_bounds:
            lines.append(f"  closure: edges {list(self.closure_edges)}, "
                         f"non-edges {list(self.closure_non_edges)}, "
                         f"order {list(self.closure_bounds)}")
        lines.append(f"  scale: {self.scaling_rule}")
        return "\n".join(lines)


def matching_order(p: Pattern, seed_edge=None) -> tuple:
    adj = p.adjacency
    deg = adj.sum(axis=1)
    if seed_edge is None:
        a, b = min(p.edges, key=lambda e: (-(deg[e[0]] + deg[e[1]]), e))
    else:
        a, b = seed_edge
        if (min(a, b), max(a, b)) not in p.edges:
            raise ParameterError(f"seed edge {seed_edge} is not a pattern edge")
    order = [int(a), int(b)]
    rest = set(range(p.vertex_count)) - set(order)
    while rest:
        nxt = min(rest, key=lambda v: (-int(adj[v, order].sum()), v))
        order.append(nxt)
        rest.remove(nxt)
    return tuple(order)


def _transitive_reduction(pairs):
    pairs = set(pairs)
    greater = {}
    for a, b in pairs:
        greater.setdefault(a, set()).add(b)

    def reach(a, seen=None):
        seen = set() if seen is None else seen
        for b in greater.get(a, ()):
            if b not in seen:
                seen.add(b)
                reach(b, seen)
        return seen

    return tuple(sorted((a, c) for a, c in pairs
                        if not any(c in reach(b) for b in greater.get(a, ()) if b != c)))


def compile_plan(p: Pattern, verify_mode=VerifyMode.EAGER, *,
                 symmetry_breaking: bool = True, seed_edge=None) -> ExecutionPlan:
    """Compile ``p`` into an interpreted plan.

    ``seed_edge`` pins the pattern edge bound to the seed (used by rooted
    counting); ``symmetry_breaking=False`` drops all id-order bounds, so every
    match is then reached once per automorphism.
    """
    mode = VerifyMode(verify_mode)
    if not p.is_connected():
        raise UnsupportedError(f"pattern {p.name!r} is disconnected")
    order = matching_order(p, seed_edge)
    k = p.vertex_count
    adj = p.adjacency[np.ix_(order, order)]

    if symmetry_breaking:
        constraints, orbits = _stabilizer_chain(adj)
        symmetry = _transitive_reduction(constraints)
    else:
        symmetry = ()
    seed_ordered = (0, 1) in symmetry
    induced = p.induced is Induced.VERTEX
    upper = {j: tuple(sorted(a for a, c in symmetry if c == j)) for j in range(k)}

    steps = []
    closure_edges, closure_non_edges, closure_bounds = [], [], []
    parents = [-1, 0]
    for j in range(2, k):
        nbrs = tuple(i for i in range(j) if adj[j, i])
        non = tuple(i for i in range(j) if not adj[j, i]) if induced else ()
        parents.append(nbrs[0])
        if mode is VerifyMode.EAGER:
            steps.append(PlanStep(j, "intersect", nbrs, non, upper[j], (),
                                  tuple((i, j) for i in nbrs)))
        else:
            steps.append(PlanStep(j, "union", tuple(range(j)), (), (), (), ((nbrs[0], j),)))
            closure_edges.extend((i, j) for i in nbrs[1:])
            closure_non_edges.extend((i, j) for i in non)
            closure_bounds.extend((a, j) for a in upper[j])

    return ExecutionPlan(
        pattern=p, order=order, steps=tuple(steps), verify_mode=mode,
        seed_ordered=seed_ordered, symmetry=symmetry,
        closure_edges=tuple(closure_edges), closure_non_edges=tuple(closure_non_edges),
        closure_bounds=tuple(closure_bounds), tree_parent=tuple(parents),
        automorphism_count=p.automorphism_count, symmetry_breaking=symmetry_breaking,
    )


# --------------------------------------------------------------------------
# diagnostics


def _embeddings(nbrs, p: Pattern):
    """Every injective map of ``p`` into the graph, as tuples indexed by pattern vertex."""
    k = p.vertex_count
    adj = p.adjacency
    induced = p.induced is Induced.VERTEX
    image = [-1] * k

    def rec(v):
        if v == k:
            yield tuple(image)
            return
        for x in range(len(nbrs)):
            if x in image[:v]:
                continue
            if all((x in nbrs[image[u]]) == bool(adj[v, u]) for u in range(v)
                   if adj[v, u] or induced):
                image[v] = x
                yield from rec(v + 1)
        image[v] = -1

    yield from rec(0)


def _match_key(p: Pattern, image):
    if p.induced is Induced.VERTEX:
        return frozenset(image)
    return frozenset((min(image[a], image[b]), max(image[a], image[b])) for a, b in p.edges)


def plan_leaf_bijection_check(plan: ExecutionPlan, g) -> bool:
    """Walk every root-to-leaf path of ``plan`` on ``g`` and check each match is hit once.

    Uses plain Python sets; shares nothing with the compiled kernels.
    """
    from .errors import OracleRefusal

    if g.vertex_count > 12:
        raise OracleRefusal("leaf enumeration is limited to 12 vertices")
    p = plan.pattern
    nbrs = [set(g.neighbors_of(u).tolist()) for u in range(g.vertex_count)]
    k = plan.k
    leaves = Counter()
    ok = True

    def candidates(step, bound):
        sets = [nbrs[bound[i]] for i in step.sources]
        cand = set.intersection(*sets) if step.op == "intersect" else set.union(*sets)
        for i in step.subtract:
            cand -= nbrs[bound[i]]
        cand -= set(bound)
        cand = {x for x in cand if all(x < bound[i] for i in step.upper)
                and all(x > bound[i] for i in step.lower)}
        return sorted(cand)

    def leaf(bound):
        nonlocal ok
        for a, b in plan.closure_edges:
            if bound[b] not in nbrs[bound[a]]:
                return
        for a, b in plan.closure_non_edges:
            if bound[b] in nbrs[bound[a]]:
                return
        for a, b in plan.closure_bounds:
            if not bound[a] > bound[b]:
                return
        image = [0] * k
        for depth, v in enumerate(plan.order):
            image[v] = bound[depth]
        valid = all(image[b] in nbrs[image[a]] for a, b in p.edges)
        if p.induced is Induced.VERTEX:
            valid = valid and all(image[b] not in nbrs[image[a]]
                                  for a, b in itertools.combinations(range(k), 2)
                                  if (a, b) not in p.edges)
        if not valid:
            ok = False
            return
        leaves[_match_key(p, image)] += 1

    def walk(bound):
        j = len(bound)
        if j == k:
            leaf(bound)
            return
        step = plan.steps[j - 2]
        for x in candidates(step, bound):
            if all(x in nbrs[bound[a]] for a, _ in step.verify_edges):
                walk(bound + [x])

    for u in range(g.vertex_count):
        for v in nbrs[u]:
            if plan.seed_ordered and v > u:
                continue
            walk([u, v])

    expected = {_match_key(p, e) for e in _embeddings(nbrs, p)}
    return ok and set(leaves) == expected and all(c == 1 for c in leaves.values())
