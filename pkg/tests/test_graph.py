import io
import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from agpm.errors import GraphFormatError, ParameterError
from agpm.generators import complete, erdos_renyi, star
from agpm.graph import (bernoulli_sparsify, color_vertices, colored_csr, dumps_binary,
                        from_edges, load_binary, load_edge_list, load_graph, merge_colors,
                        orient_by_degree, save_binary, sparsified_view, write_edge_list)

edge_lists = st.lists(st.tuples(st.integers(0, 30), st.integers(0, 30)), max_size=120)


def check_csr(g):
    off, nbr = g.offsets, g.neighbors
    assert np.all(np.diff(off) >= 0)
    for u in range(g.vertex_count):
        row = g.neighbors_of(u)
        assert np.all(np.diff(row) > 0)
        assert u not in row
    if not g.oriented:
        assert off[-1] == 2 * g.edge_count
        arcs = set(zip(*map(np.ndarray.tolist, g.arcs())))
        assert all((v, u) in arcs for u, v in arcs)


def test_load_triangle():
    g = load_edge_list(b"0 1\n0 2\n1 2\n")
    assert (g.vertex_count, g.edge_count) == (3, 3)
    assert g.neighbors_of(0).tolist() == [1, 2]


def test_duplicates_and_loops_dropped():
    g = load_edge_list(b"0 1\n1 0\n2 2\n")
    assert (g.vertex_count, g.edge_count) == (3, 1)


def test_comments_blank_and_empty():
    g = load_edge_list(b"# header\n% other\n\n3 1\n")
    assert g.vertex_count == 4 and g.edge_set() == {(1, 3)}
    assert load_edge_list(b"").vertex_count == 0


@pytest.mark.parametrize("text,line", [(b"0 1\n1 x\n", 2), (b"0 1 2\n", 1), (b"-1 2\n", 1)])
def test_malformed_reports_line(text, line):
    with pytest.raises(GraphFormatError) as err:
        load_edge_list(text)
    assert err.value.line == line


def test_random_list_matches_pair_oracle():
    rng = np.random.default_rng(7)
    pairs = rng.integers(0, 40, size=(100, 2))
    oracle = {(min(a, b), max(a, b)) for a, b in pairs.tolist() if a != b}
    g = load_edge_list("\n".join(f"{a} {b}" for a, b in pairs).encode())
    assert g.edge_count == len(oracle) and g.edge_set() == oracle


@given(edge_lists)
def test_csr_invariants_and_text_round_trip(edges):
    g = from_edges(edges) if edges else from_edges(np.zeros((0, 2)))
    check_csr(g)
    buf = io.StringIO()
    write_edge_list(g, buf)
    assert load_edge_list(buf.getvalue().encode()).edge_set() == g.edge_set()


@given(edge_lists)
def test_binary_round_trip(edges):
    g = from_edges(edges) if edges else from_edges(np.zeros((0, 2)))
    h = load_binary(dumps_binary(g))
    assert h.vertex_count == g.vertex_count
    assert np.array_equal(h.offsets, g.offsets) and np.array_equal(h.neighbors, g.neighbors)


def test_binary_layout(tmp_path):
    g = from_edges([(0, 1), (1, 2)])
    blob = dumps_binary(g)
    assert blob[:4] == b"AGPM"
    assert int.from_bytes(blob[4:8], "little") == 1
    assert int.from_bytes(blob[8:16], "little") == 3
    assert int.from_bytes(blob[16:24], "little") == 2
    assert len(blob) == 24 + 8 * 4 + 4 * 4
    path = tmp_path / "g.agpm"
    save_binary(g, path)
    assert load_graph(path).edge_set() == g.edge_set()


def test_binary_rejects_garbage():
    with pytest.raises(GraphFormatError):
        load_binary(b"NOPE" + bytes(20))
    with pytest.raises(GraphFormatError):
        load_binary(dumps_binary(complete(4))[:-3])


def test_orient_triangle_and_star():
    o = orient_by_degree(from_edges([(0, 1), (1, 2), (2, 0)]))
    assert o.arc_count == 3 and sorted(o.degrees.tolist()) == [0, 1, 2]
    s = orient_by_degree(star(4))
    assert s.edge_set() == {(0, i) for i in range(1, 5)}
    assert all(s.neighbors_of(i).tolist() == [0] for i in range(1, 5))


def _acyclic(o):
    indeg = np.zeros(o.vertex_count, dtype=int)
    for v in o.neighbors:
        indeg[v] += 1
    stack = [u for u in range(o.vertex_count) if indeg[u] == 0]
    seen = 0
    while stack:
        u = stack.pop()
        seen += 1
        for v in o.neighbors_of(u):
            indeg[v] -= 1
            if indeg[v] == 0:
                stack.append(v)
    return seen == o.vertex_count


@given(st.integers(5, 60), st.floats(0.05, 0.6), st.integers(0, 10**6))
def test_orientation_is_acyclic_and_covers_each_edge_once(n, p, seed):
    g = erdos_renyi(n, p, seed)
    o = orient_by_degree(g)
    assert o.arc_count == g.edge_count and o.edge_set() == g.edge_set()
    deg = g.degrees
    src, dst = o.arcs()
    assert np.all((deg[src] < deg[dst]) | ((deg[src] == deg[dst]) & (src < dst)))
    assert _acyclic(o)


def test_bernoulli_identity_and_determinism():
    g = erdos_renyi(80, 0.2, 1)
    assert bernoulli_sparsify(g, 1.0, 3).edge_set() == g.edge_set()
    assert bernoulli_sparsify(g, 0.4, 9).edge_set() == bernoulli_sparsify(g, 0.4, 9).edge_set()
    with pytest.raises(ParameterError):
        bernoulli_sparsify(g, 0.0, 1)


def _thousand_edge_graph():
    rng = np.random.default_rng(5)
    pairs = set()
    while len(pairs) < 1000:
        a, b = sorted(rng.integers(0, 200, 2).tolist())
        if a != b:
            pairs.add((a, b))
    return from_edges(sorted(pairs))


def test_bernoulli_kept_count_concentrates():
    g = _thousand_edge_graph()
    m, p = g.edge_count, 0.5
    kept = np.array([bernoulli_sparsify(g, p, s).edge_count for s in range(10_000)])
    assert np.all((kept >= 400) & (kept <= 600))
    assert abs(kept.mean() - m * p) <= 3 * np.sqrt(m * p * (1 - p))


@given(st.integers(0, 10**9))
def test_bernoulli_output_is_symmetric_subgraph(seed):
    g = erdos_renyi(40, 0.3, 2)
    h = bernoulli_sparsify(g, 0.3, seed)
    check_csr(h)
    assert h.edge_set() <= g.edge_set()


def test_single_color_keeps_everything():
    g = erdos_renyi(50, 0.2, 3)
    cg = color_vertices(g, 1, 0)
    assert np.array_equal(cg.split_end, g.offsets[1:])
    assert sparsified_view(cg).edge_set() == g.edge_set()


def test_two_colors_on_triangle_never_two_edges():
    t = from_edges([(0, 1), (1, 2), (2, 0)])
    sizes = {sparsified_view(colored_csr(t, cols, 2)).edge_count
             for cols in itertools.product(range(2), repeat=3)}
    assert sizes == {1, 3}
    assert all(sparsified_view(color_vertices(t, 2, s)).edge_count in (0, 1, 3)
               for s in range(200))


def test_explicit_coloring_view():
    t = from_edges([(0, 1), (1, 2), (2, 0)])
    assert sparsified_view(colored_csr(t, [0, 0, 1], 2)).edge_set() == {(0, 1)}


def test_same_color_fraction():
    g = erdos_renyi(60, 0.3, 4)
    frac = np.mean([sparsified_view(color_vertices(g, 4, s)).edge_count / g.edge_count
                    for s in range(10_000)])
    assert abs(frac - 0.25) <= 0.02


@given(st.integers(1, 5), st.integers(0, 10**9))
def test_colored_csr_invariants(c, seed):
    g = erdos_renyi(35, 0.25, 6)
    cg = color_vertices(g, c, seed)
    b, col = cg.base, cg.colors
    for u in range(g.vertex_count):
        lo, mid, hi = b.offsets[u], cg.split_end[u], b.offsets[u + 1]
        assert np.all(col[b.neighbors[lo:mid]] == col[u])
        assert np.all(col[b.neighbors[mid:hi]] != col[u])
        assert np.all(np.diff(b.neighbors[lo:mid]) > 0)
    assert cg.same_color_arc_count() % 2 == 0
    oracle = {(u, v) for u, v in g.edge_set() if col[u] == col[v]}
    assert sparsified_view(cg).edge_set() == oracle


def test_merge_colors():
    g = erdos_renyi(60, 0.2, 8)
    cg = color_vertices(g, 4, 1)
    same = merge_colors(cg, [0, 1, 2, 3])
    assert np.array_equal(same.colors, cg.colors)
    assert sparsified_view(same).edge_set() == sparsified_view(cg).edge_set()
    assert sparsified_view(merge_colors(cg, [0, 0, 0, 0])).edge_set() == g.edge_set()
    coarse = merge_colors(cg, [0, 1, 0, 1])
    col = np.array([0, 1, 0, 1])[cg.colors]
    assert sparsified_view(coarse).edge_set() == {(u, v) for u, v in g.edge_set()
                                                  if col[u] == col[v]}
    with pytest.raises(ParameterError):
        merge_colors(cg, [0, 2, 2, 2])
