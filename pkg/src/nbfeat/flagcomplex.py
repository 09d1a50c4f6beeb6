"""Directed flag complexes.

The ``d``-simplices of the directed flag complex of a digraph are its
directed ``(d + 1)``-cliques: vertex tuples ``(v_0, ..., v_d)`` with an
edge ``v_i -> v_j`` for every ``i < j``.  Cliques are enumerated by
extending a simplex with the common out-neighbours of all its vertices,
so each clique is produced exactly once (its source vertex first).
Neighbour sets are Python integer bit sets; intersection is a single
``&`` and the last level of a count-only pass is a popcount.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .digraph import Digraph

DEFAULT_MAX_DIM = 6

__all__ = [
    "DirectedFlagComplex",
    "build_flag_complex",
    "simplex_counts",
    "euler_characteristic",
    "simplex_count_containing",
    "containing_counts",
    "dump_simplices",
]


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(frozen=True)
class DirectedFlagComplex:
    """Simplices of a directed flag complex, by dimension.

    Attributes
    ----------
    simplices : list of ndarray
        ``simplices[d]`` has shape ``(s_d, d + 1)``; rows are in
        lexicographic order.
    max_dim : int or None
        Dimension cap the complex was built with (``None``: no cap).
    truncated : bool
        True if simplices above ``max_dim`` exist but were not built.
    """

    simplices: list[np.ndarray]
    max_dim: int | None = None
    truncated: bool = False
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def counts(self) -> list[int]:
        return [len(s) for s in self.simplices]

    @property
    def dimension(self) -> int:
        """Top dimension holding at least one simplex (``-1`` if empty)."""
        return len(self.simplices) - 1

    def built_through(self, dim: int) -> bool:
        """True if every simplex of dimension ``<= dim`` is present."""
        return not self.truncated or (self.max_dim is not None and self.max_dim >= dim)

    def index_of(self, dim: int) -> dict[tuple, int]:
        """Map simplex tuple -> row index within ``simplices[dim]``."""
        if dim not in self._index:
            rows = self.simplices[dim] if dim < len(self.simplices) else np.empty((0, dim + 1))
            self._index[dim] = {tuple(r): i for i, r in enumerate(rows.tolist())}
        return self._index[dim]


def build_flag_complex(g: Digraph, max_dim: int | None = DEFAULT_MAX_DIM) -> DirectedFlagComplex:
    """Enumerate all directed cliques of ``g`` up to dimension ``max_dim``."""
    if max_dim is not None and max_dim < 0:
        raise ValueError("max_dim must be >= 0")
    out = g.out_masks()
    levels: list[list[tuple[int, ...]]] = [[] for _ in range((max_dim or 0) + 1)]
    truncated = False

    def extend(prefix: tuple[int, ...], candidates: int) -> None:
        nonlocal truncated
        d = len(prefix) - 1
        if d >= len(levels):
            levels.append([])
        levels[d].append(prefix)
        if max_dim is not None and d == max_dim:
            truncated = truncated or candidates != 0
            return
        for w in _bits(candidates):
            extend(prefix + (w,), candidates & out[w])

    for v in range(g.n_vertices):
        extend((v,), out[v])

    # DFS yields prefixes in lexicographic order inside every dimension
    simplices = [np.array(level, dtype=np.int64).reshape(len(level), d + 1)
                 for d, level in enumerate(levels)]
    while simplices and len(simplices[-1]) == 0:
        simplices.pop()
    return DirectedFlagComplex(simplices=simplices, max_dim=max_dim, truncated=truncated)


def simplex_counts(g: Digraph, max_dim: int | None = None) -> list[int]:
    """Simplex counts ``[s_0, s_1, ...]`` without storing simplices."""
    out = g.out_masks()
    counts = [0] * ((max_dim if max_dim is not None else 0) + 1)

    def walk(depth: int, candidates: int) -> None:
        # a simplex of dimension `depth` with the given common out-neighbours
        if depth + 1 >= len(counts):
            if max_dim is not None:
                return
            counts.append(0)
        if max_dim is not None and depth + 1 == max_dim:
            counts[depth + 1] += candidates.bit_count()
            return
        for w in _bits(candidates):
            counts[depth + 1] += 1
            walk(depth + 1, candidates & out[w])

    if g.n_vertices == 0:
        return []
    counts[0] = g.n_vertices
    if max_dim == 0:
        return counts
    for v in range(g.n_vertices):
        walk(0, out[v])
    while len(counts) > 1 and counts[-1] == 0:
        counts.pop()
    return counts


def euler_characteristic(x) -> int:
    """Alternating sum of simplex counts.

    Accepts a :class:`DirectedFlagComplex` or a plain list of counts.
    """
    counts = x.counts if isinstance(x, DirectedFlagComplex) else list(x)
    return int(sum(c if d % 2 == 0 else -c for d, c in enumerate(counts)))


def containing_counts(g: Digraph, v: int, k_max: int) -> list[int]:
    """``[S_1(v), ..., S_kmax(v)]``: numbers of directed (k+1)-cliques containing ``v``.

    A clique contains ``v`` iff every vertex before ``v`` is an
    in-neighbour and every vertex after it an out-neighbour, so the
    search only visits ``v``'s neighbours and prunes prefixes that can no
    longer reach ``v``.
    """
    v = g.check_vertex(v)
    if k_max < 1:
        return []
    out = g.out_masks()
    vbit = 1 << v
    before = g.in_masks()[v] | vbit
    counts = [0] * (k_max + 1)

    def walk(size: int, candidates: int, has_v: bool) -> None:
        # `size` vertices in the current clique
        if has_v:
            counts[size - 1] += 1
            if size - 1 == k_max:
                return
            if size == k_max:
                counts[k_max] += candidates.bit_count()
                return
        elif size - 1 == k_max:
            return
        choices = candidates if has_v else candidates & before
        for w in _bits(choices):
            walk(size + 1, candidates & out[w], has_v or w == v)

    for r in _bits(before):
        walk(1, out[r], r == v)
    return counts[1:]


def simplex_count_containing(g: Digraph, v: int, k: int) -> int:
    """Number of directed ``(k + 1)``-cliques of ``g`` that contain ``v``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return containing_counts(g, v, k)[k - 1]


def dump_simplices(x: DirectedFlagComplex, path) -> None:
    """Write one simplex per line as space-separated vertex ids."""
    with open(path, "w") as fh:
        for level in x.simplices:
            for row in level.tolist():
                fh.write(" ".join(map(str, row)) + "\n")
