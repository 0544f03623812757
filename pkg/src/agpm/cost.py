"""Cost models, hardware calibration, the fast profiler and loose-mode selection.

All model quantities are in *work units* (set-operation comparisons plus
binary-search probes, the same unit the kernels count) and converted to
seconds by a calibrated per-machine constant.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
import os
import platform
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import kernels
from ._accel import NUMBA_ENABLED
from .errors import ParameterError
from .exact import exact_count
from .generators import cycle, erdos_renyi
from .graph import (CsrGraph, bernoulli_sparsify, color_vertices, from_edges, orient_by_degree,
                    sparsified_view)
from .gs import (GAMMA_PROBES, GAMMA_SAFETY, ReadKBoundInputs, SparsifyParams,
                 choose_keep_probability, estimate_gamma, gs_estimate)
from .pattern import ExecutionPlan, builtin_pattern, compile_plan, parse_pattern
from .rng import worker_generator
from .sampling import NeighborSampler, WindowPolicy, run_ns_online

PROFILE_EPSILON = 0.5
PROFILE_DELTA = 0.01
PROFILE_MAX_SAMPLES = 2_000_000
CALIBRATION_WORK = 10**8 if NUMBA_ENABLED else 10**6
MIN_TIMED_SECONDS = 0.01


# ------------------------------------------------------------- calibration


@dataclass(frozen=True)
class HardwareProfile:
    seconds_per_unit: float
    op_overhead: float = 0.0
    sample_overhead: float = 0.0
    step_overhead: float = 0.0
    sampler_unit_scale: float = 1.0
    preprocess_per_edge: float = 0.0
    preprocess_per_kept_edge: float = 0.0
    numba: bool = NUMBA_ENABLED


def cache_dir() -> Path:
    root = os.environ.get("AGPM_CACHE_DIR")
    if root:
        return Path(root)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "agpm"


def _cache_file() -> Path:
    tag = f"{platform.node()}-{platform.machine()}-{'jit' if NUMBA_ENABLED else 'py'}"
    return cache_dir() / f"hardware-{tag}.json"


def time_intersections(total_work: int, length: int = 1000, seed: int = 0):
    """Run merge intersections totalling about ``total_work`` comparisons.

    Returns ``(seconds, work_units)``.
    """
    rng = np.random.default_rng(seed)
    universe = 4 * length
    a = np.sort(rng.choice(universe, length, replace=False)).astype(np.int64)
    b = np.sort(rng.choice(universe, length, replace=False)).astype(np.int64)
    buf = np.empty(length, dtype=np.int64)
    per_rep, _ = kernels.intersect_benchmark(a, b, 1, buf)  # also warms the JIT
    reps = max(1, int(total_work // max(per_rep, 1)))
    t0 = time.perf_counter()
    work, _ = kernels.intersect_benchmark(a, b, reps, buf)
    return time.perf_counter() - t0, int(work)


def _measure_unit(total_work: int, chunks: int = 20) -> float:
    """Fastest per-comparison time over ``chunks`` short runs sharing ``total_work``.

    Many short runs dodge load spikes better than a few long ones.  Chunks
    grow if the timer is too coarse.
    """
    chunk = max(total_work // chunks, 1)
    while True:
        runs = [time_intersections(chunk) for _ in range(chunks)]
        if min(r[0] for r in runs) >= MIN_TIMED_SECONDS:
            return min(sec / work for sec, work in runs)
        chunk *= 10


def _measure_op_overhead(unit: float) -> float:
    a = np.array([1, 5], dtype=np.int64)
    b = np.array([2, 5], dtype=np.int64)
    buf = np.empty(2, dtype=np.int64)
    reps = 2_000_000 if NUMBA_ENABLED else 20_000
    kernels.intersect_benchmark(a, b, 1, buf)
    t0 = time.perf_counter()
    work, _ = kernels.intersect_benchmark(a, b, reps, buf)
    elapsed = time.perf_counter() - t0
    return max(elapsed / unit / reps - work / reps, 0.0)


def _per_sample_seconds(g, plan, n, repeats=5):
    """Best-of-``repeats`` seconds per sample and mean work per sample."""
    sampler = NeighborSampler(g, plan)
    sampler.batch(worker_generator(0, 0), 10)
    best = math.inf
    for r in range(repeats):
        t0 = time.perf_counter()
        acc = sampler.batch(worker_generator(1, r), n)
        best = min(best, time.perf_counter() - t0)
    return best / n, acc.work_units / n


def _measure_sample_overheads(unit: float):
    """Sampling constants in work units.

    Returns the fixed cost of the cheapest sample that breaks (a first step
    with one source list that comes up empty), the fixed cost of each further
    step (including its random draw), and the time of one counted unit inside
    the sampler relative to the merge benchmark.  On a perfect matching every
    path extension is empty; on a long cycle unconstrained path plans never
    break; unconstrained triangles on two random graphs of different density
    give the per-unit slope.
    """
    ring = cycle(1001)
    matching = from_edges([(2 * i, 2 * i + 1) for i in range(500)])
    n = 200_000 if NUMBA_ENABLED else 5_000
    wedge = compile_plan(parse_pattern("custom:3:0-1,1-2"), symmetry_breaking=False)
    t_break, w_break = _per_sample_seconds(matching, wedge, n // 4, repeats=20)
    runs = []
    for k in (3, 5):
        edges = ",".join(f"{i}-{i + 1}" for i in range(k - 1))
        plan = compile_plan(parse_pattern(f"custom:{k}:{edges}"), symmetry_breaking=False)
        runs.append(_per_sample_seconds(ring, plan, n))
    (t3, w3), (t5, w5) = runs
    step = max((t5 - t3) / unit - (w5 - w3), 0.0) / 2.0
    base = max(t_break / unit - w_break, 0.0)
    free = compile_plan(builtin_pattern("triangle"), symmetry_breaking=False)
    (ta, wa), (tb, wb) = (_per_sample_seconds(erdos_renyi(400, p, 3), free, n // 4)
                          for p in (0.05, 0.2))
    scale = max((tb - ta) / unit / max(wb - wa, 1e-9), 1.0)
    return base, step, scale


def _measure_preprocess(unit: float):
    g = erdos_renyi(2000, 0.05, 11)
    m = g.edge_count

    def run(c):
        t0 = time.perf_counter()
        sparsified_view(color_vertices(g, c, 5)).compact()
        return time.perf_counter() - t0

    run(2)
    full = min(run(1) for _ in range(3))
    thin = min(run(1000) for _ in range(3))
    per_edge = thin / unit / m
    per_kept = max(full - thin, 0.0) / unit / m
    return per_edge, per_kept


def calibrate_hardware(force: bool = False, total_work: int = CALIBRATION_WORK) -> HardwareProfile:
    """Measure (or load from the per-machine cache) the work-to-time constants."""
    path = _cache_file()
    if not force and path.exists():
        try:
            return HardwareProfile(**json.loads(path.read_text()))
        except (ValueError, TypeError):
            pass
    unit = _measure_unit(total_work)
    per_edge, per_kept = _measure_preprocess(unit)
    base, step, scale = _measure_sample_overheads(unit)
    hw = HardwareProfile(unit, _measure_op_overhead(unit), base, step, scale,
                         per_edge, per_kept)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(asdict(hw), indent=2))
    except OSError:
        pass
    return hw


def calibrate_hardware_constant(force: bool = False) -> float:
    return calibrate_hardware(force).seconds_per_unit


# ---------------------------------------------------------------- NS cone


@dataclass(frozen=True)
class CostCone:
    lower_slope: float
    upper_slope: float
    n_samples: float
    lower_time: float
    upper_time: float

    def contains(self, seconds_per_sample: float) -> bool:
        return self.lower_slope <= seconds_per_sample <= self.upper_slope


def _log2(x: float) -> float:
    return math.log2(max(x, 2.0))


def _step_work(plan: ExecutionPlan, depth: int, deg: float, hw: HardwareProfile) -> float:
    """Counted work of one candidate set built from full lists of length ``deg``."""
    step = plan.steps[depth - 2]
    if step.op == "intersect":
        merges = len(step.sources) - 1 + len(step.subtract)
        work = deg  # copying the first list into the candidate buffer
        work += merges * (2.0 * deg + hw.op_overhead)
        work += (len(step.upper) + len(step.lower)) * _log2(deg)
        work += (depth - len(step.sources)) * _log2(deg)
        return work
    # union of every bound neighborhood, growing by ``deg`` per merge plus copy-back
    work = deg + sum(2.0 * (i + 1) * deg + hw.op_overhead for i in range(1, depth))
    return work + depth * _log2(depth * deg) + _log2(deg)


def _closure_work(plan: ExecutionPlan, deg: float) -> float:
    checks = len(plan.closure_edges) + len(plan.closure_non_edges)
    return checks * _log2(deg)


def ns_sample_work(g: CsrGraph, plan: ExecutionPlan, hw: HardwareProfile):
    """``(lower, upper)`` work per sample, in merge-benchmark units.

    The lower bound is a sample that breaks at its first step on the
    shortest lists, which is what the calibrated base cost measures.  The
    upper bound runs every step and the closure on full-length lists at the
    in-sampler rate.  Lists are sized by the degree of an endpoint of a
    uniform edge, sum(d^2)/2m.
    """
    deg = g.degrees.astype(np.float64)
    arcs = deg.sum()
    if arcs == 0:
        raise ParameterError("cost model needs a graph with edges")
    d_edge = float((deg * deg).sum() / arcs)
    lower = hw.sample_overhead  # seed draw, arc lookup and one empty step
    if plan.k == 2:
        return lower, lower
    upper = lower + (plan.k - 2) * hw.step_overhead
    upper += hw.sampler_unit_scale * sum(_step_work(plan, j, d_edge, hw)
                                         for j in range(2, plan.k))
    if not plan.eager:
        upper += hw.sampler_unit_scale * _closure_work(plan, d_edge)
    return lower, max(upper, lower)


def ns_cost_cone(g: CsrGraph, plan: ExecutionPlan, n_samples: float, hw) -> CostCone:
    if n_samples < 1:
        raise ParameterError("n_samples must be >= 1")
    if not isinstance(hw, HardwareProfile):
        hw = HardwareProfile(float(hw))
    lo, hi = ns_sample_work(g, plan, hw)
    ls, us = lo * hw.seconds_per_unit, hi * hw.seconds_per_unit
    return CostCone(ls, us, float(n_samples), ls * n_samples, us * n_samples)


# ---------------------------------------------------------------- GS model

_TRIANGLES: dict[str, int] = {}


def _graph_key(g: CsrGraph) -> str:
    h = hashlib.blake2b(digest_size=16)
    h.update(np.ascontiguousarray(g.begins).tobytes())
    h.update(np.ascontiguousarray(g.stops).tobytes())
    h.update(np.ascontiguousarray(g.neighbors).tobytes())
    return h.hexdigest()


def triangle_count(g: CsrGraph, sidecar: str | os.PathLike | None = None) -> int:
    """Exact triangle count, memoised per graph and optionally in a sidecar file."""
    key = _graph_key(g)
    if key in _TRIANGLES:
        return _TRIANGLES[key]
    side = Path(f"{sidecar}.triangles.json") if sidecar else None
    if side is not None and side.exists():
        try:
            data = json.loads(side.read_text())
            if data.get("key") == key:
                _TRIANGLES[key] = int(data["triangles"])
                return _TRIANGLES[key]
        except (ValueError, KeyError):
            pass
    t = exact_count(orient_by_degree(g.compact()), compile_plan(builtin_pattern("triangle"))).count
    _TRIANGLES[key] = t
    if side is not None:
        try:
            side.write_text(json.dumps({"key": key, "triangles": t}))
        except OSError:
            pass
    return t


@dataclass(frozen=True)
class GsCostEstimate:
    preprocess_work: float
    search_work: float
    total_seconds: float
    color_count: int
    keep_probability: float
    level_sizes: tuple = ()


def gs_cost_estimate(g: CsrGraph, plan: ExecutionPlan, c: int, hw, triangles: int | None = None) -> GsCostEstimate:
    """Predicted work of color-sparsifying with ``c`` colors and exact-counting the rest.

    Candidate cardinalities follow the random-graph estimate
    ``|V| p1 p2^(n-1)`` for an ``n``-way intersection, with ``p1`` the edge
    density and ``p2`` the triangle-closure ratio of the sparsified graph.
    Levels drawn from a single neighbor list use the sparsified average
    degree.  Each level charges one merge per extra set operation over lists
    of average sparsified degree, times the iterations of enclosing levels.
    """
    if c < 1:
        raise ParameterError(f"color count must be >= 1, got {c}")
    if not isinstance(hw, HardwareProfile):
        hw = HardwareProfile(float(hw))
    n = g.vertex_count
    m = g.edge_count
    if m == 0:
        return GsCostEstimate(0.0, 0.0, 0.0, c, 1.0 / c)
    t = triangle_count(g) if triangles is None else triangles
    p = 1.0 / c
    m_s = m * p
    p1 = 2.0 * m_s / (n * n)
    t_s = t * p * p
    p2 = t_s * n / (2.0 * m_s * m_s)
    avg_deg = 2.0 * m_s / n
    iterations = m_s if plan.seed_ordered else 2.0 * m_s
    search = 0.0
    sizes = []
    for step in plan.steps:
        if step.op == "intersect":
            ways = len(step.sources)
            merges = ways - 1 + len(step.subtract)
        else:
            ways = 1
            merges = step.depth - 1
        size = avg_deg if ways == 1 else n * p1 * p2 ** (ways - 1)
        size *= 0.5 ** len(step.upper)
        cost = merges * (2.0 * avg_deg + hw.op_overhead) + _log2(avg_deg) * (1 + len(step.upper))
        search += iterations * cost
        sizes.append(size)
        iterations *= size
    prep = m * (hw.preprocess_per_edge + p * hw.preprocess_per_kept_edge)
    total = (prep + search) * hw.seconds_per_unit
    return GsCostEstimate(prep, search, total, c, p, tuple(sizes))


# ---------------------------------------------------------------- profiler


def sampling_probability(g: CsrGraph, k: int) -> float:
    """1 / (m * Delta^(k-2)): the shape of a neighbor-sampling path probability."""
    m = max(g.edge_count, 1)
    delta = max(g.max_degree, 1)
    return 1.0 / (m * float(delta) ** (k - 2))


@dataclass(frozen=True)
class ProfileResult:
    n_samples_estimate: float
    mu_prime: float
    scaled_count: float
    epsilon_hat_final: float
    n_converged: int
    fraction: float
    reliable: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def samples_needed(n_converged: float, epsilon_hat: float, mu: float, scaled: float,
                   epsilon: float, rho_full: float, rho_sparse: float) -> float:
    return n_converged * epsilon_hat * mu * rho_full / (scaled * epsilon ** 2 * rho_sparse)


def fast_profile(g: CsrGraph, plan: ExecutionPlan, profile_fraction: float = 0.1,
                 seed: int = 0, epsilon: float = 0.1,
                 max_samples: int = PROFILE_MAX_SAMPLES) -> ProfileResult:
    """Estimate the NS sample count from a quick run on a thinned copy of ``g``."""
    if not 0.0 < profile_fraction < 1.0:
        raise ParameterError(f"profile fraction must lie in (0, 1), got {profile_fraction}")
    sparse = bernoulli_sparsify(g, profile_fraction, seed)
    if sparse.edge_count == 0:
        return ProfileResult(math.inf, 0.0, 0.0, math.inf, 0, profile_fraction, False)
    report = run_ns_online(sparse, plan, PROFILE_EPSILON, PROFILE_DELTA, seed=seed,
                           max_samples=max_samples)
    mu = report.mu
    scaled = mu * profile_fraction ** (-plan.pattern.edge_count)
    if not report.converged or mu <= 0:
        return ProfileResult(math.inf, mu, scaled, report.epsilon_hat, report.n,
                             profile_fraction, False)
    k = plan.k
    n_s = samples_needed(report.n, report.epsilon_hat, mu, scaled, epsilon,
                         sampling_probability(g, k), sampling_probability(sparse, k))
    return ProfileResult(n_s, mu, scaled, report.epsilon_hat, report.n, profile_fraction)


# ---------------------------------------------------------------- selection


class Decision(str, enum.Enum):
    NS = "ns"
    GS = "gs"


def select_scheme(cone: CostCone, gs_est: GsCostEstimate) -> Decision:
    """GS only when it is predicted faster than even the cheapest NS run."""
    if gs_est.total_seconds < cone.lower_time:
        return Decision.GS
    return Decision.NS


@dataclass
class LooseRun:
    decision: Decision
    profile: ProfileResult
    cone: CostCone | None
    gs_model: GsCostEstimate | None
    color_count: int
    gamma: float
    result: object
    profile_seconds: float
    run_seconds: float


def run_loose(g: CsrGraph, plan: ExecutionPlan, epsilon: float, delta: float, seed: int = 0,
              workers: int = 1, hw: HardwareProfile | None = None,
              profile_fraction: float = 0.1, max_samples: int | None = None) -> LooseRun:
    """Profile, evaluate both cost models, pick a scheme and run it."""
    hw = hw or calibrate_hardware()
    t0 = time.perf_counter()
    prof = fast_profile(g, plan, profile_fraction, seed, epsilon)
    cone = gs_model = None
    gamma = 0.0
    c = 2
    decision = Decision.NS
    if prof.reliable:
        gamma = GAMMA_SAFETY * estimate_gamma(g, plan, GAMMA_PROBES, seed)
        choice = choose_keep_probability(
            ReadKBoundInputs(epsilon, delta, prof.scaled_count, max(gamma, 1.0)))
        c = max(2, choice.color_count)
        cone = ns_cost_cone(g, plan, prof.n_samples_estimate, hw)
        gs_model = gs_cost_estimate(g, plan, c, hw)
        decision = select_scheme(cone, gs_model)
    t1 = time.perf_counter()
    if decision is Decision.GS:
        result = gs_estimate(g, plan, SparsifyParams.color(c, seed), threads=workers)
    else:
        policy = WindowPolicy(profile_samples=prof.n_samples_estimate) if prof.reliable else None
        kw = {} if max_samples is None else {"max_samples": max_samples}
        result = run_ns_online(g, plan, epsilon, delta, policy, seed, workers, **kw)
    return LooseRun(decision, prof, cone, gs_model, c, gamma, result, t1 - t0,
                    time.perf_counter() - t1)
