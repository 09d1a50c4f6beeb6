"""Directed simple graphs, closed neighbourhoods and graph surgery.

Vertices are dense integer ids ``0 .. n-1``.  A :class:`Digraph` never
changes after construction, so derived data (dense adjacency, bit masks,
degree arrays) is cached on first use and the object can be shared freely
between workers.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .errors import GraphFormatError, SelfLoopError, ValidationError, VertexRangeError

__all__ = [
    "Digraph",
    "Subgraph",
    "Neighbourhood",
    "load_edge_list",
    "write_edge_list",
    "closed_neighbourhood",
    "induced_subgraph",
    "degrees",
    "largest_scc",
    "fake_neighbourhood_rewire",
    "neighbourhood_union",
    "greedy_cover_count",
    "complete_digraph",
]


def _as_edge_array(edges) -> np.ndarray:
    arr = np.asarray(edges if len(edges) else np.empty((0, 2)), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("edges must be a sequence of (src, dst) pairs")
    return arr


def _csr(n: int, src: np.ndarray, dst: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # src is assumed sorted with dst sorted inside each src block
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=ptr[1:])
    return ptr, dst.copy()


class Digraph:
    """Immutable finite directed simple graph.

    Reciprocal pairs ``(u, v), (v, u)`` are allowed; self-loops are not.
    Duplicate edges passed to the constructor are collapsed.

    Parameters
    ----------
    n_vertices : int
        Number of vertices.
    edges : sequence of (int, int)
        Directed edges ``(src, dst)``.
    """

    __slots__ = ("_n", "_edges", "_out_ptr", "_out_idx", "_in_ptr", "_in_idx", "_cache")

    def __init__(self, n_vertices: int, edges: Iterable[Sequence[int]] | np.ndarray = ()):
        n = int(n_vertices)
        if n < 0:
            raise ValueError("n_vertices must be non-negative")
        if not isinstance(edges, np.ndarray):
            edges = list(edges)
        arr = _as_edge_array(edges)
        if arr.size:
            lo, hi = arr.min(), arr.max()
            if lo < 0 or hi >= n:
                raise VertexRangeError(f"edge endpoint out of range [0, {n})")
            loops = arr[:, 0] == arr[:, 1]
            if loops.any():
                v = int(arr[loops][0, 0])
                raise SelfLoopError(f"self-loop at vertex {v}")
            arr = np.unique(arr, axis=0)
        else:
            arr = np.empty((0, 2), dtype=np.int64)
        self._init_from_sorted(n, arr)

    def _init_from_sorted(self, n: int, arr: np.ndarray) -> None:
        self._n = n
        arr.setflags(write=False)
        self._edges = arr
        self._out_ptr, self._out_idx = _csr(n, arr[:, 0], arr[:, 1])
        order = np.lexsort((arr[:, 0], arr[:, 1]))
        self._in_ptr, self._in_idx = _csr(n, arr[order, 1], arr[order, 0])
        for a in (self._out_ptr, self._out_idx, self._in_ptr, self._in_idx):
            a.setflags(write=False)
        self._cache = {}

    @classmethod
    def _trusted(cls, n: int, edges: np.ndarray) -> "Digraph":
        """Build from an already validated, deduplicated, lexsorted edge array."""
        g = cls.__new__(cls)
        g._init_from_sorted(n, np.ascontiguousarray(edges, dtype=np.int64))
        return g

    @classmethod
    def from_dense(cls, adjacency) -> "Digraph":
        """Build from a square 0/1 matrix; the diagonal must be zero."""
        a = np.asarray(adjacency)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be square")
        if a.shape[0] and np.any(np.diagonal(a)):
            raise SelfLoopError("adjacency matrix has a nonzero diagonal")
        src, dst = np.nonzero(a)
        return cls._trusted(a.shape[0], np.column_stack((src, dst)))

    # basic accessors -------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return self._n

    @property
    def n_edges(self) -> int:
        return len(self._edges)

    @property
    def edges(self) -> np.ndarray:
        """``(m, 2)`` read-only array of edges sorted by ``(src, dst)``."""
        return self._edges

    def out_neighbours(self, v: int) -> np.ndarray:
        return self._out_idx[self._out_ptr[v]:self._out_ptr[v + 1]]

    def in_neighbours(self, v: int) -> np.ndarray:
        return self._in_idx[self._in_ptr[v]:self._in_ptr[v + 1]]

    @property
    def out_degrees(self) -> np.ndarray:
        return np.diff(self._out_ptr)

    @property
    def in_degrees(self) -> np.ndarray:
        return np.diff(self._in_ptr)

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.out_neighbours(u)
        i = np.searchsorted(nb, v)
        return bool(i < len(nb) and nb[i] == v)

    def check_vertex(self, v) -> int:
        v = int(v)
        if not 0 <= v < self._n:
            raise VertexRangeError(f"vertex {v} out of range [0, {self._n})")
        return v

    # cached derived views --------------------------------------------------

    def dense(self) -> np.ndarray:
        """Boolean adjacency matrix (read-only, cached)."""
        if "dense" not in self._cache:
            a = np.zeros((self._n, self._n), dtype=bool)
            a[self._edges[:, 0], self._edges[:, 1]] = True
            a.setflags(write=False)
            self._cache["dense"] = a
        return self._cache["dense"]

    def csr(self) -> sparse.csr_matrix:
        if "csr" not in self._cache:
            data = np.ones(self.n_edges, dtype=np.float64)
            self._cache["csr"] = sparse.csr_matrix(
                (data, self._out_idx, self._out_ptr), shape=(self._n, self._n))
        return self._cache["csr"]

    def out_masks(self) -> list[int]:
        """Out-neighbourhoods as Python integer bit sets."""
        if "out_masks" not in self._cache:
            self._cache["out_masks"] = self._masks(self._out_ptr, self._out_idx)
        return self._cache["out_masks"]

    def in_masks(self) -> list[int]:
        if "in_masks" not in self._cache:
            self._cache["in_masks"] = self._masks(self._in_ptr, self._in_idx)
        return self._cache["in_masks"]

    def _masks(self, ptr, idx) -> list[int]:
        masks = []
        for v in range(self._n):
            m = 0
            for u in idx[ptr[v]:ptr[v + 1]].tolist():
                m |= 1 << u
            masks.append(m)
        return masks

    def reversed(self) -> "Digraph":
        """The graph with every edge turned around."""
        return Digraph(self._n, self._edges[:, ::-1])

    # dunder ----------------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, Digraph):
            return NotImplemented
        return self._n == other._n and np.array_equal(self._edges, other._edges)

    def __hash__(self):
        return hash((self._n, self._edges.tobytes()))

    def __repr__(self) -> str:
        return f"Digraph(n_vertices={self._n}, n_edges={self.n_edges})"

    def __reduce__(self):
        return (Digraph._trusted, (self._n, np.array(self._edges)))


def complete_digraph(n: int) -> Digraph:
    """All ``n (n - 1)`` ordered pairs of distinct vertices."""
    return Digraph.from_dense(~np.eye(n, dtype=bool))


@dataclass(frozen=True, eq=False)
class Subgraph:
    """An induced (or union) subgraph together with its vertex labels.

    ``graph`` uses local ids ``0 .. len(members) - 1``; local id ``i``
    stands for ambient vertex ``members[i]``.
    """

    members: np.ndarray
    graph: Digraph

    def local_index(self, v: int) -> int | None:
        i = int(np.searchsorted(self.members, v))
        if i < len(self.members) and self.members[i] == v:
            return i
        return None

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True, eq=False)
class Neighbourhood(Subgraph):
    """Closed neighbourhood: ``centre`` plus every vertex adjacent to it."""

    centre: int = -1

    @property
    def local_centre(self) -> int | None:
        return self.local_index(self.centre)


# I/O -----------------------------------------------------------------------

_SPLIT = re.compile(r"[\s,]+")


def load_edge_list(path, n_vertices: int | None = None) -> Digraph:
    """Read a ``src dst`` edge list.

    Fields may be separated by whitespace or commas.  Blank lines and
    ``#`` comments are skipped and repeated edges are collapsed.  Without
    ``n_vertices`` the vertex count is one more than the largest id.
    """
    src: list[int] = []
    dst: list[int] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = [f for f in _SPLIT.split(line) if f]
            if len(fields) != 2:
                raise GraphFormatError(f"expected 2 fields, got {len(fields)}", lineno)
            try:
                u, v = int(fields[0]), int(fields[1])
            except ValueError:
                raise GraphFormatError(f"non-integer vertex id in {line!r}", lineno) from None
            if u < 0 or v < 0:
                raise GraphFormatError("negative vertex id", lineno)
            if u == v:
                raise SelfLoopError(f"line {lineno}: self-loop at vertex {u}")
            if n_vertices is not None and max(u, v) >= n_vertices:
                raise VertexRangeError(
                    f"line {lineno}: vertex {max(u, v)} >= n_vertices={n_vertices}")
            src.append(u)
            dst.append(v)
    if n_vertices is None:
        n_vertices = max(max(src), max(dst)) + 1 if src else 0
    return Digraph(n_vertices, np.column_stack((src, dst)) if src else ())


def write_edge_list(g: Digraph, path) -> None:
    """Write edges one per line, sorted by ``(src, dst)``.

    The vertex count goes into a leading comment so isolated trailing
    vertices survive a round trip through :func:`read_vertex_count`.
    """
    with open(path, "w") as fh:
        fh.write(f"# n_vertices {g.n_vertices}\n")
        for u, v in g.edges.tolist():
            fh.write(f"{u} {v}\n")


def read_vertex_count(path) -> int | None:
    """Vertex count recorded by :func:`write_edge_list`, if present."""
    with open(path) as fh:
        first = fh.readline()
    m = re.match(r"#\s*n_vertices\s+(\d+)", first)
    return int(m.group(1)) if m else None


def load_graph(path) -> Digraph:
    """Edge list reader honouring a recorded vertex count."""
    return load_edge_list(path, read_vertex_count(path))


# neighbourhoods and subgraphs ---------------------------------------------

def induced_subgraph(g: Digraph, s) -> Digraph:
    """Subgraph induced on ``s``, relabelled ``0 .. len(s) - 1`` in ``s``-order."""
    s = np.asarray(s, dtype=np.int64).reshape(-1)
    if s.size == 0:
        return Digraph(0)
    if s.min() < 0 or s.max() >= g.n_vertices:
        raise VertexRangeError(f"subgraph vertex out of range [0, {g.n_vertices})")
    pos = np.full(g.n_vertices, -1, dtype=np.int64)
    pos[s] = np.arange(len(s))
    if np.count_nonzero(pos >= 0) != len(s):
        raise ValidationError("subgraph vertex set has repeated ids")
    ptr, idx = g._out_ptr, g._out_idx
    starts, lengths = ptr[s], ptr[s + 1] - ptr[s]
    total = int(lengths.sum())
    if total == 0:
        return Digraph(len(s))
    offsets = np.repeat(starts - np.concatenate(([0], np.cumsum(lengths)[:-1])), lengths)
    flat = idx[np.arange(total) + offsets]
    local_src = np.repeat(np.arange(len(s)), lengths)
    local_dst = pos[flat]
    keep = local_dst >= 0
    e = np.column_stack((local_src[keep], local_dst[keep]))
    if len(e):
        e = e[np.lexsort((e[:, 1], e[:, 0]))]
    return Digraph._trusted(len(s), e)


def neighbour_set(g: Digraph, v: int) -> np.ndarray:
    """Sorted ids adjacent to ``v`` in either direction, excluding ``v``."""
    return np.union1d(g.out_neighbours(v), g.in_neighbours(v))


def closed_neighbourhood(g: Digraph, v: int) -> Neighbourhood:
    v = g.check_vertex(v)
    members = np.union1d(neighbour_set(g, v), [v])
    members.setflags(write=False)
    return Neighbourhood(members=members, graph=induced_subgraph(g, members), centre=v)


def degrees(g: Digraph, v: int) -> tuple[int, int, int, int]:
    """``(in_degree, out_degree, total_degree, reciprocal_count)`` of ``v``.

    ``total_degree`` is ``in + out``, so a reciprocal neighbour counts twice.
    """
    v = g.check_vertex(v)
    ins, outs = g.in_neighbours(v), g.out_neighbours(v)
    rec = len(np.intersect1d(ins, outs, assume_unique=True))
    return len(ins), len(outs), len(ins) + len(outs), rec


def largest_scc(g: Digraph) -> np.ndarray:
    """Vertex set of a largest strongly connected component.

    Among components of equal size the one holding the smallest vertex id wins.
    """
    n = g.n_vertices
    if n == 0:
        return np.empty(0, dtype=np.int64)
    _, labels = connected_components(g.csr(), directed=True, connection="strong")
    sizes = np.bincount(labels)
    best = sizes.max()
    # first vertex (lowest id) whose component has the maximal size
    first = int(np.flatnonzero(sizes[labels] == best)[0])
    return np.flatnonzero(labels == labels[first]).astype(np.int64)


# graph surgery -------------------------------------------------------------

def fake_neighbourhood_rewire(g: Digraph, centres, seed) -> Digraph:
    """Scramble the neighbours of each centre, keeping its in/out degree.

    Centres are processed in ascending order from one RNG stream.  For
    each centre a random permutation of the non-centre vertices is applied
    to the centre's row and column of the adjacency matrix; entries
    between two centres stay in place, so every centre keeps its
    in-degree and out-degree.
    """
    centres = np.unique(np.asarray(centres, dtype=np.int64))
    if centres.size == 0:
        return g
    for c in centres:
        g.check_vertex(c)
    n = g.n_vertices
    rng = np.random.default_rng(seed)
    is_centre = np.zeros(n, dtype=bool)
    is_centre[centres] = True
    others = np.flatnonzero(~is_centre)
    out_sets = [set(g.out_neighbours(v).tolist()) for v in range(n)]
    in_sets = [set(g.in_neighbours(v).tolist()) for v in range(n)]
    for c in centres.tolist():
        perm = np.arange(n)
        perm[others] = others[rng.permutation(len(others))]
        old_out = [u for u in out_sets[c] if not is_centre[u]]
        old_in = [u for u in in_sets[c] if not is_centre[u]]
        for u in old_out:
            out_sets[c].discard(u)
            in_sets[u].discard(c)
        for u in old_in:
            in_sets[c].discard(u)
            out_sets[u].discard(c)
        for u in old_out:
            w = int(perm[u])
            out_sets[c].add(w)
            in_sets[w].add(c)
        for u in old_in:
            w = int(perm[u])
            in_sets[c].add(w)
            out_sets[w].add(c)
    edges = [(u, w) for u in range(n) for w in sorted(out_sets[u])]
    return Digraph._trusted(n, np.array(edges, dtype=np.int64).reshape(-1, 2))


def neighbourhood_union(g: Digraph, centres) -> Subgraph:
    """Union of the closed neighbourhoods of ``centres``.

    The union is taken as subgraphs: an edge is kept only if some closed
    neighbourhood contains it, that is, if one endpoint is a centre or
    both endpoints lie in the neighbourhood of a common centre.
    """
    centres = [g.check_vertex(c) for c in np.asarray(centres, dtype=np.int64).reshape(-1)]
    if not centres:
        return Subgraph(members=np.empty(0, dtype=np.int64), graph=Digraph(0))
    nbhd_sets = [np.union1d(neighbour_set(g, c), [c]) for c in centres]
    members = np.unique(np.concatenate(nbhd_sets))
    pos = np.full(g.n_vertices, -1, dtype=np.int64)
    pos[members] = np.arange(len(members))
    keep = np.zeros((len(members), len(members)), dtype=bool)
    for s in nbhd_sets:
        loc = pos[s]
        keep[np.ix_(loc, loc)] = True
    sub = induced_subgraph(g, members)
    e = sub.edges
    e = e[keep[e[:, 0], e[:, 1]]] if len(e) else e
    members.setflags(write=False)
    return Subgraph(members=members, graph=Digraph._trusted(len(members), e))


def greedy_cover_count(g: Digraph, order, fraction: float) -> int:
    """Length of the shortest ranking prefix whose neighbourhoods cover enough.

    Returns the smallest ``p`` such that the closed neighbourhoods of
    ``order[:p]`` contain at least ``fraction * n_vertices`` vertices, or
    ``n_vertices + 1`` if even the whole ranking falls short.
    """
    n = g.n_vertices
    order = np.asarray(order, dtype=np.int64).reshape(-1)
    if len(order) != n or not np.array_equal(np.sort(order), np.arange(n)):
        raise ValidationError("order must be a permutation of all vertices")
    if not 0 < fraction <= 1:
        raise ValidationError("fraction must lie in (0, 1]")
    target = fraction * n
    if n == 0:
        return 0
    covered = np.zeros(n, dtype=bool)
    count = 0
    for p, v in enumerate(order.tolist(), start=1):
        nb = neighbour_set(g, v)
        fresh = nb[~covered[nb]]
        covered[fresh] = True
        count += len(fresh)
        if not covered[v]:
            covered[v] = True
            count += 1
        # tolerance absorbs products like 0.9 * 10 == 9.000000000000002
        if count >= target - 1e-9 * max(1.0, target):
            return p
    return n + 1
