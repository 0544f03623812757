"""Set kernels against Python sets, and compiled-vs-fallback parity."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from agpm import kernels
from agpm._accel import NUMBA_ENABLED, py_func
from agpm.exact import _plan_arrays
from agpm.generators import erdos_renyi
from agpm.pattern import VerifyMode, builtin_pattern, compile_plan
from agpm.rng import worker_generator
from agpm.sampling import NeighborSampler

sorted_sets = st.sets(st.integers(0, 400), max_size=80).map(lambda s: np.array(sorted(s), dtype=np.int64))


def _run(op, a, b, *extra):
    buf = np.empty(len(a) + len(b) + 1, dtype=np.int64)
    buf[:len(a)] = a
    work = np.zeros(1, dtype=np.int64)
    n = op(buf, len(a), b, 0, len(b), *extra, work)
    return buf[:n].tolist(), int(work[0])


@given(sorted_sets, sorted_sets)
def test_intersection(a, b):
    out, work = _run(kernels.intersect_into, a, b)
    assert out == sorted(set(a.tolist()) & set(b.tolist()))
    assert work <= len(a) + len(b) or min(len(a), len(b)) * 32 < max(len(a), len(b))


@given(sorted_sets, sorted_sets)
def test_difference(a, b):
    out, _ = _run(kernels.difference_into, a, b)
    assert out == sorted(set(a.tolist()) - set(b.tolist()))


@given(sorted_sets, sorted_sets)
def test_union(a, b):
    tmp = np.empty(len(a) + len(b) + 1, dtype=np.int64)
    out, _ = _run(kernels.union_into, a, b, tmp)
    assert out == sorted(set(a.tolist()) | set(b.tolist()))


@given(st.sets(st.integers(0, 10_000), min_size=1, max_size=3), sorted_sets)
def test_galloping_branch(small, big):
    a = np.array(sorted(small), dtype=np.int64)
    b = np.unique(np.concatenate([big, np.arange(0, 10_000, 7)]))
    out, _ = _run(kernels.intersect_into, a, b)
    assert out == sorted(set(a.tolist()) & set(b.tolist()))
    out, _ = _run(kernels.intersect_into, b, a)
    assert out == sorted(set(a.tolist()) & set(b.tolist()))


@given(sorted_sets, st.integers(-5, 405))
def test_lower_bound_and_contains(a, x):
    work = np.zeros(1, dtype=np.int64)
    assert kernels.lower_bound(a, 0, len(a), x, work) == int(np.searchsorted(a, x))
    assert kernels.contains(a, 0, len(a), x, work) == (x in set(a.tolist()))


@pytest.mark.skipif(not NUMBA_ENABLED, reason="compiled path disabled")
@pytest.mark.parametrize("name", ["triangle", "4cycle", "house", "4clique"])
@pytest.mark.parametrize("mode", list(VerifyMode))
def test_sampler_parity(name, mode):
    g = erdos_renyi(60, 0.2, 1)
    s = NeighborSampler(g, compile_plan(builtin_pattern(name), mode))
    jit = kernels.sample_batch(worker_generator(3, 0), 3000, *s._args, np.empty(0))
    py = py_func(kernels.sample_batch)(worker_generator(3, 0), 3000, *s._args, np.empty(0))
    assert tuple(map(float, jit)) == tuple(map(float, py))


@pytest.mark.skipif(not NUMBA_ENABLED, reason="compiled path disabled")
@pytest.mark.parametrize("name", ["triangle", "4cycle", "dumbbell"])
def test_exact_parity(name):
    g = erdos_renyi(40, 0.3, 2)
    adj, ub, seed_ordered = _plan_arrays(g, compile_plan(builtin_pattern(name)))
    args = (0, g.vertex_count, g.begins, g.stops, g.neighbors, g.max_degree, adj, ub,
            compile_plan(builtin_pattern(name)).induced, seed_ordered)
    assert tuple(kernels.count_range(*args)) == tuple(int(x) for x in py_func(kernels.count_range)(*args))
