"""Compressed sparse row graphs and sparsification.

All adjacency arrays are int64 and read-only once a graph is built.  A graph
may be a *view*: ``ends`` then overrides ``offsets[u + 1]`` as the end of the
adjacency range of ``u``, which is how color-sparsified subgraphs avoid
copying neighbor data.
"""

from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import GraphFormatError, ParameterError
from .rng import keyed_uniform

MAGIC = b"AGPM"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQQ")
_COLOR_SALT = 0x636F6C6F72  # separates vertex-color keys from edge keys


def _frozen(a, dtype=np.int64):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CsrGraph:
    offsets: np.ndarray
    neighbors: np.ndarray
    oriented: bool = False
    ends: np.ndarray | None = None
    sorted_adjacency: bool = True

    def __post_init__(self):
        object.__setattr__(self, "offsets", _frozen(self.offsets))
        object.__setattr__(self, "neighbors", _frozen(self.neighbors))
        if self.ends is not None:
            object.__setattr__(self, "ends", _frozen(self.ends))

    @property
    def vertex_count(self) -> int:
        return len(self.offsets) - 1

    @cached_property
    def begins(self) -> np.ndarray:
        return self.offsets[:-1]

    @cached_property
    def stops(self) -> np.ndarray:
        return self.offsets[1:] if self.ends is None else self.ends

    @cached_property
    def degrees(self) -> np.ndarray:
        return _frozen(self.stops - self.begins)

    @cached_property
    def arc_count(self) -> int:
        return int(self.degrees.sum())

    @property
    def edge_count(self) -> int:
        return self.arc_count if self.oriented else self.arc_count // 2

    @property
    def is_view(self) -> bool:
        return self.ends is not None

    @cached_property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.vertex_count else 0

    def neighbors_of(self, u: int) -> np.ndarray:
        return self.neighbors[self.begins[u]:self.stops[u]]

    def arcs(self):
        """Stored arcs as ``(src, dst)`` arrays in adjacency order."""
        deg = self.degrees
        src = np.repeat(np.arange(self.vertex_count, dtype=np.int64), deg)
        if self.ends is None:
            return src, self.neighbors.copy()
        starts = np.repeat(self.begins, deg)
        local = np.arange(len(src), dtype=np.int64) - np.repeat(np.cumsum(deg) - deg, deg)
        return src, self.neighbors[starts + local]

    def edges(self) -> np.ndarray:
        """Undirected edges as an ``(m, 2)`` array with ``u < v``, lexicographic."""
        src, dst = self.arcs()
        if not self.oriented:
            keep = src < dst
            src, dst = src[keep], dst[keep]
        lo, hi = np.minimum(src, dst), np.maximum(src, dst)
        order = np.lexsort((hi, lo))
        return np.stack([lo[order], hi[order]], axis=1)

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(a), int(b)) for a, b in self.edges()}

    def compact(self) -> CsrGraph:
        """Materialise a view into a plain CSR with sorted adjacency."""
        if self.ends is None and self.sorted_adjacency:
            return self
        src, dst = self.arcs()
        return _from_arcs(src, dst, self.vertex_count, oriented=self.oriented)

    def __repr__(self):
        kind = "oriented" if self.oriented else "symmetric"
        view = ", view" if self.is_view else ""
        return f"CsrGraph(n={self.vertex_count}, m={self.edge_count}, {kind}{view})"


def _from_arcs(src, dst, n, oriented=False) -> CsrGraph:
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    order = np.lexsort((dst, src))
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=offsets[1:])
    return CsrGraph(offsets, dst[order], oriented=oriented)


def from_edges(edges, vertex_count: int | None = None) -> CsrGraph:
    """Symmetric CSR from an iterable of ``(u, v)`` pairs.

    Self-loops and duplicate edges (in either direction) are dropped.
    ``vertex_count`` defaults to ``max id + 1``.
    """
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if e.size and e.min() < 0:
        raise ParameterError("vertex ids must be non-negative")
    n = int(e.max()) + 1 if e.size else 0
    if vertex_count is not None:
        if vertex_count < n:
            raise ParameterError(f"vertex_count {vertex_count} < max id + 1 = {n}")
        n = vertex_count
    e = e[e[:, 0] != e[:, 1]]
    lo, hi = np.minimum(e[:, 0], e[:, 1]), np.maximum(e[:, 0], e[:, 1])
    pairs = np.unique(np.stack([lo, hi], axis=1), axis=0) if len(lo) else np.zeros((0, 2), np.int64)
    src = np.concatenate([pairs[:, 0], pairs[:, 1]])
    dst = np.concatenate([pairs[:, 1], pairs[:, 0]])
    return _from_arcs(src, dst, n)


# --------------------------------------------------------------------------
# I/O


def _read_bytes(source) -> bytes:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return fh.read()
    if isinstance(source, (bytes, bytearray)):
        return bytes(source)
    data = source.read()
    return data.encode() if isinstance(data, str) else data


def load_edge_list(source) -> CsrGraph:
    """Parse a whitespace-separated text edge list.

    ``source`` is a path, a bytes object or a binary/text file object.  Lines
    starting with ``#`` or ``%`` are comments; blank lines are ignored.
    """
    text = _read_bytes(source).decode("ascii", errors="replace")
    us: list[int] = []
    vs: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#%":
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(f"expected 2 vertex ids, got {len(parts)} tokens", lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(f"malformed vertex id in {line!r}", lineno) from None
        if u < 0 or v < 0:
            raise GraphFormatError(f"negative vertex id in {line!r}", lineno)
        us.append(u)
        vs.append(v)
    return from_edges(np.column_stack([us, vs]) if us else np.zeros((0, 2), np.int64))


def write_edge_list(g: CsrGraph, dest) -> None:
    lines = "".join(f"{u} {v}\n" for u, v in g.edges())
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w") as fh:
            fh.write(lines)
    else:
        dest.write(lines)


def save_binary(g: CsrGraph, dest) -> None:
    """Write the ``AGPM`` binary CSR format (little-endian)."""
    g = g.compact()
    if g.vertex_count and g.neighbors.size and g.neighbors.max() >= 2**32:
        raise ParameterError("vertex ids exceed the u32 neighbor encoding")
    blob = b"".join([
        _HEADER.pack(MAGIC, FORMAT_VERSION, g.vertex_count, g.edge_count),
        g.offsets.astype("<u8").tobytes(),
        g.neighbors.astype("<u4").tobytes(),
    ])
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "wb") as fh:
            fh.write(blob)
    else:
        dest.write(blob)


def load_binary(source) -> CsrGraph:
    data = _read_bytes(source)
    if len(data) < _HEADER.size:
        raise GraphFormatError("truncated header")
    magic, version, n, m = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise GraphFormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise GraphFormatError(f"unsupported format version {version}")
    pos = _HEADER.size
    off_bytes = 8 * (n + 1)
    if len(data) < pos + off_bytes:
        raise GraphFormatError("truncated offsets")
    offsets = np.frombuffer(data, dtype="<u8", count=n + 1, offset=pos).astype(np.int64)
    pos += off_bytes
    arcs = int(offsets[-1])
    if len(data) != pos + 4 * arcs:
        raise GraphFormatError("neighbor array length does not match offsets")
    neighbors = np.frombuffer(data, dtype="<u4", count=arcs, offset=pos).astype(np.int64)
    if arcs not in (m, 2 * m):
        raise GraphFormatError(f"offsets end {arcs} inconsistent with edge_count {m}")
    oriented = arcs == m and m > 0
    return CsrGraph(offsets, neighbors, oriented=oriented)


def load_graph(path) -> CsrGraph:
    """Load a graph file, detecting binary CSR by its magic bytes."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    return load_binary(path) if head == MAGIC else load_edge_list(path)


def dumps_binary(g: CsrGraph) -> bytes:
    buf = io.BytesIO()
    save_binary(g, buf)
    return buf.getvalue()


# --------------------------------------------------------------------------
# transformations


def orient_by_degree(g: CsrGraph) -> CsrGraph:
    """Keep arc (u, v) iff (deg u, u) < (deg v, v); the result is a DAG."""
    if g.oriented:
        raise ParameterError("graph is already oriented")
    src, dst = g.arcs()
    deg = g.degrees
    keep = (deg[src] < deg[dst]) | ((deg[src] == deg[dst]) & (src < dst))
    return _from_arcs(src[keep], dst[keep], g.vertex_count, oriented=True)


def bernoulli_sparsify(g: CsrGraph, p: float, seed: int) -> CsrGraph:
    """Keep each undirected edge independently with probability ``p``.

    The decision for edge {u, v} depends only on ``(seed, min, max)``.
    """
    if not (0.0 < p <= 1.0):
        raise ParameterError(f"keep probability must be in (0, 1], got {p}")
    src, dst = g.arcs()
    if p < 1.0:
        keep = keyed_uniform(seed, np.minimum(src, dst), np.maximum(src, dst)) < p
        src, dst = src[keep], dst[keep]
    return _from_arcs(src, dst, g.vertex_count, oriented=g.oriented)


@dataclass(frozen=True, eq=False)
class ColoredCsr:
    base: CsrGraph
    colors: np.ndarray
    split_end: np.ndarray
    color_count: int

    def same_color_arc_count(self) -> int:
        return int((self.split_end - self.base.begins).sum())


def colored_csr(g: CsrGraph, colors, color_count: int) -> ColoredCsr:
    """Reorder every adjacency list so same-color neighbors form a sorted prefix."""
    if color_count < 1:
        raise ParameterError("color count must be >= 1")
    colors = np.asarray(colors, dtype=np.int64)
    if colors.shape != (g.vertex_count,):
        raise ParameterError("need one color per vertex")
    if colors.size and (colors.min() < 0 or colors.max() >= color_count):
        raise ParameterError("colors must lie in [0, color_count)")
    src, dst = g.arcs()
    same = colors[src] == colors[dst]
    order = np.lexsort((dst, ~same, src))
    n = g.vertex_count
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=offsets[1:])
    base = CsrGraph(offsets, dst[order], oriented=g.oriented, sorted_adjacency=color_count == 1)
    split_end = offsets[:-1] + np.bincount(src[same], minlength=n)
    return ColoredCsr(base, _frozen(colors), _frozen(split_end), int(color_count))


def color_vertices(g: CsrGraph, c: int, seed: int) -> ColoredCsr:
    """Assign each vertex an independent uniform color in ``[0, c)``."""
    if c < 1:
        raise ParameterError(f"color count must be >= 1, got {c}")
    u = keyed_uniform(seed, np.arange(g.vertex_count), _COLOR_SALT)
    colors = np.minimum((u * c).astype(np.int64), c - 1)
    return colored_csr(g, colors, c)


def sparsified_view(cg: ColoredCsr) -> CsrGraph:
    """The same-color subgraph, sharing neighbor storage with ``cg``."""
    b = cg.base
    return CsrGraph(b.offsets, b.neighbors, oriented=b.oriented, ends=cg.split_end)


def merge_colors(cg: ColoredCsr, group_map) -> ColoredCsr:
    """Recolor by ``group_map`` (old color -> coarser color).

    Merging only grows each same-color prefix; the grown prefix is re-sorted
    so candidate lists stay valid for merge intersection.
    """
    gm = np.asarray(group_map, dtype=np.int64)
    if gm.shape != (cg.color_count,):
        raise ParameterError(f"group_map must have {cg.color_count} entries")
    groups = np.unique(gm)
    if groups.size == 0 or groups[0] != 0 or groups[-1] != groups.size - 1:
        raise ParameterError("group_map must be surjective onto 0..c'-1")
    return colored_csr(_canonical(cg.base), gm[cg.colors], int(groups.size))


def _canonical(g: CsrGraph) -> CsrGraph:
    if g.sorted_adjacency and g.ends is None:
        return g
    src, dst = g.arcs()
    return _from_arcs(src, dst, g.vertex_count, oriented=g.oriented)
