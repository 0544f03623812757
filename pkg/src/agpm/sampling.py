"""Neighbor sampling with online convergence detection."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from . import kernels
from .errors import ParameterError
from .graph import CsrGraph
from .pattern import ExecutionPlan
from .rng import worker_generator

DEFAULT_MAX_SAMPLES = 10**9


def inv_norm_cdf(q: float) -> float:
    """Standard normal quantile."""
    q = float(q)
    if not 0.0 < q < 1.0:
        raise ParameterError(f"quantile level must lie in (0, 1), got {q}")
    return float(ndtri(q))


def z_score(delta: float) -> float:
    """Two-sided critical value for confidence ``1 - delta``."""
    return inv_norm_cdf(1.0 - delta / 2.0)


@dataclass(frozen=True)
class SampledCount:
    value: float
    hit: bool
    work_units: int


@dataclass
class SampleAccumulator:
    n: int = 0
    sum: float = 0.0
    squared_sum: float = 0.0
    hits: int = 0
    work_units: int = 0

    def add(self, x: float, work: int = 0) -> None:
        self.n += 1
        self.work_units += work
        if x > 0:
            self.hits += 1
            self.sum += x
            self.squared_sum += x * x

    def merge(self, other: SampleAccumulator) -> SampleAccumulator:
        return SampleAccumulator(self.n + other.n, self.sum + other.sum,
                                 self.squared_sum + other.squared_sum,
                                 self.hits + other.hits, self.work_units + other.work_units)

    __add__ = merge

    @classmethod
    def from_values(cls, values) -> SampleAccumulator:
        v = np.asarray(values, dtype=np.float64)
        return cls(int(v.size), float(v.sum()), float((v * v).sum()), int((v > 0).sum()))


@dataclass(frozen=True)
class ConvergenceReport:
    mu: float
    sigma: float
    epsilon_hat: float
    n: int
    converged: bool
    hit_rate: float
    hits: int = 0
    work_units: int = 0
    windows: int = 0
    capped: bool = False
    values: np.ndarray | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "mu": self.mu, "sigma": self.sigma, "epsilon_hat": self.epsilon_hat,
            "n": self.n, "converged": self.converged, "hit_rate": self.hit_rate,
            "hits": self.hits, "work_units": self.work_units, "windows": self.windows,
            "capped": self.capped,
        }


def predicted_error(acc: SampleAccumulator, delta: float, epsilon: float | None = None,
                    **extra) -> ConvergenceReport:
    """Mean, standard error and predicted relative error of the accumulated samples.

    With no hits (or fewer than two samples) the predicted error is infinite.
    """
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta must lie in (0, 1), got {delta}")
    n = acc.n
    hit_rate = acc.hits / n if n else 0.0
    if n < 2 or acc.sum <= 0.0:
        mu = acc.sum / n if n else 0.0
        return ConvergenceReport(mu, math.inf, math.inf, n, False, hit_rate, acc.hits,
                                 acc.work_units, **extra)
    mu = acc.sum / n
    var = max(acc.squared_sum / n - mu * mu, 0.0)
    sigma = math.sqrt(var / n)
    eps_hat = z_score(delta) * sigma / mu
    converged = epsilon is not None and eps_hat <= epsilon
    return ConvergenceReport(mu, sigma, eps_hat, n, converged, hit_rate, acc.hits,
                             acc.work_units, **extra)


class NeighborSampler:
    """Binds a graph and plan to the sampling kernel."""

    def __init__(self, g: CsrGraph, plan: ExecutionPlan):
        if g.oriented:
            raise ParameterError("neighbor sampling needs a symmetric graph")
        g = g.compact()
        if g.arc_count == 0:
            raise ParameterError("cannot sample from a graph without edges")
        self.graph = g
        self.plan = plan
        self._args = (g.begins, g.stops, g.neighbors, g.max_degree, plan.adjacency,
                      plan.bounds, plan.parent_array, plan.induced, plan.eager,
                      plan.seed_ordered)

    def batch(self, rng, count: int, values: np.ndarray | None = None) -> SampleAccumulator:
        if values is None:
            values = np.empty(0)
        s, sq, hits, work = kernels.sample_batch(rng, int(count), *self._args, values)
        return SampleAccumulator(int(count), float(s), float(sq), int(hits), int(work))

    def expectation(self):
        """Exhaustive ``(E[X], E[X^2], Pr[hit])`` over all decision paths."""
        return tuple(float(x) for x in kernels.path_expectation(*self._args))


def draw_sample(g: CsrGraph, plan: ExecutionPlan, rng) -> SampledCount:
    values = np.zeros(1)
    acc = NeighborSampler(g, plan).batch(rng, 1, values)
    return SampledCount(float(values[0]), acc.hits == 1, acc.work_units)


def exhaustive_expectation(g: CsrGraph, plan: ExecutionPlan):
    return NeighborSampler(g, plan).expectation()


@dataclass(frozen=True)
class WindowPolicy:
    min_window: int = 1000
    per_worker: int = 10
    profile_samples: float | None = None
    profile_share: float = 0.1

    def size(self, workers: int) -> int:
        if self.profile_samples is not None and self.profile_samples > 0:
            return max(1, int(math.ceil(self.profile_share * self.profile_samples)))
        return max(self.min_window, self.per_worker * workers)


def _split(total: int, parts: int):
    base, extra = divmod(total, parts)
    return [base + (1 if w < extra else 0) for w in range(parts)]


def run_ns_online(g: CsrGraph, plan: ExecutionPlan, epsilon: float, delta: float,
                  window_policy: WindowPolicy | None = None, seed: int = 0,
                  workers: int = 1, max_samples: int = DEFAULT_MAX_SAMPLES,
                  keep_values: bool = False) -> ConvergenceReport:
    """Sample in windows until the predicted relative error drops to ``epsilon``.

    Each worker owns one counter-based stream; accumulators are merged at every
    window barrier, so a fixed ``(seed, workers)`` pair is reproducible.
    """
    if not 0.0 < epsilon < 1.0:
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta must lie in (0, 1), got {delta}")
    workers = max(1, int(workers))
    sampler = NeighborSampler(g, plan)
    policy = window_policy or WindowPolicy()
    window = policy.size(workers)
    rngs = [worker_generator(seed, w) for w in range(workers)]
    total = SampleAccumulator()
    kept = []
    windows = 0
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        while True:
            size = min(window, max_samples - total.n)
            shares = _split(size, workers)
            bufs = [np.zeros(s) if keep_values else None for s in shares]
            jobs = list(zip(rngs, shares, bufs))
            if pool is None:
                parts = [sampler.batch(*job) for job in jobs]
            else:
                parts = list(pool.map(lambda job: sampler.batch(*job), jobs))
            for part in parts:
                total = total.merge(part)
            if keep_values:
                kept.extend(bufs)
            windows += 1
            capped = total.n >= max_samples
            report = predicted_error(total, delta, epsilon)
            if report.converged or capped:
                break
    finally:
        if pool is not None:
            pool.shutdown()
    values = np.concatenate(kept) if keep_values else None
    return predicted_error(total, delta, epsilon, windows=windows,
                           capped=capped and not report.converged, values=values)


def hit_rate_report(g: CsrGraph, plan: ExecutionPlan, sample_budget: int, seed: int = 0) -> float:
    if sample_budget < 1:
        raise ParameterError("sample budget must be >= 1")
    acc = NeighborSampler(g, plan).batch(worker_generator(seed, 0), sample_budget)
    return acc.hits / acc.n


def fixed_budget_report(g: CsrGraph, plan: ExecutionPlan, samples: int, delta: float,
                        seed: int = 0) -> ConvergenceReport:
    """Statistics after exactly ``samples`` draws on one stream."""
    acc = NeighborSampler(g, plan).batch(worker_generator(seed, 0), samples)
    return predicted_error(acc, delta)
