"""Mod-2 Betti numbers of directed flag complexes.

Working over the two-element field removes all sign bookkeeping: the
boundary of a simplex is the plain sum of its order-preserving facets.
``betti[d] = s_d - rank(boundary_d) - rank(boundary_{d+1})``.
"""
from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .flagcomplex import DirectedFlagComplex

DEFAULT_BETTI_DIM = 5
DENSE_COLUMN_LIMIT = 512

__all__ = [
    "boundary_columns",
    "gf2_rank",
    "gf2_rank_dense",
    "gf2_rank_reduce",
    "betti_numbers",
    "normalised_betti_coefficient",
]


def boundary_columns(x: DirectedFlagComplex, dim: int) -> list[list[int]]:
    """Row indices of the nonzero entries of each column of ``boundary_dim``.

    Columns follow the lexicographic order of the ``dim``-simplices and
    rows index the ``(dim - 1)``-simplices.
    """
    if dim <= 0 or dim >= len(x.simplices):
        return []
    faces = x.index_of(dim - 1)
    cols = []
    for simplex in x.simplices[dim].tolist():
        cols.append(sorted(faces[tuple(simplex[:i] + simplex[i + 1:])]
                           for i in range(dim + 1)))
    return cols


def gf2_rank_dense(columns: list[list[int]], n_rows: int) -> int:
    """Rank by Gaussian elimination on a dense 0/1 array."""
    if not columns or n_rows == 0:
        return 0
    m = np.zeros((len(columns), n_rows), dtype=np.uint8)
    for j, rows in enumerate(columns):
        m[j, rows] = 1
    # eliminate on the transpose: rows of `m` are columns of the matrix
    rank = 0
    n_vec = m.shape[0]
    for c in range(n_rows):
        if rank == n_vec:
            break
        hits = np.flatnonzero(m[rank:, c]) + rank
        if hits.size == 0:
            continue
        p = hits[0]
        if p != rank:
            m[[rank, p]] = m[[p, rank]]
        below = np.flatnonzero(m[rank + 1:, c]) + rank + 1
        if below.size:
            m[below] ^= m[rank]
        rank += 1
    return rank


def gf2_rank_reduce(columns: list[list[int]]) -> int:
    """Rank by column reduction against a pivot table.

    Each column is held as an integer bit set; its pivot is the highest
    set row.  A column is reduced by xor-ing in the stored column that
    owns its current pivot until the pivot is free or the column vanishes.
    """
    owner: dict[int, int] = {}
    rank = 0
    for rows in columns:
        col = 0
        for r in rows:
            col ^= 1 << r
        while col:
            p = col.bit_length() - 1
            other = owner.get(p)
            if other is None:
                owner[p] = col
                rank += 1
                break
            col ^= other
    return rank


def gf2_rank(columns: list[list[int]], n_rows: int) -> int:
    """GF(2) rank of a 0/1 matrix given by its columns' nonzero rows."""
    if len(columns) < DENSE_COLUMN_LIMIT:
        return gf2_rank_dense(columns, n_rows)
    return gf2_rank_reduce(columns)


def betti_numbers(x: DirectedFlagComplex, max_dim: int = DEFAULT_BETTI_DIM) -> tuple[int, ...]:
    """Mod-2 Betti numbers ``(b_0, ..., b_max_dim)``.

    Raises
    ------
    ValidationError
        If ``x`` was truncated below ``max_dim + 1``; the top Betti number
        needs the boundary map out of dimension ``max_dim + 1``.
    """
    if not x.built_through(max_dim + 1):
        raise ValidationError(
            f"complex built to dimension {x.max_dim}; Betti numbers through "
            f"{max_dim} need dimension {max_dim + 1}")
    counts = x.counts + [0] * (max_dim + 2)
    ranks = [0] * (max_dim + 3)
    for d in range(1, max_dim + 2):
        if counts[d] and counts[d - 1]:
            ranks[d] = gf2_rank(boundary_columns(x, d), counts[d - 1])
    return tuple(counts[d] - ranks[d] - ranks[d + 1] for d in range(max_dim + 1))


def normalised_betti_coefficient(x: DirectedFlagComplex, betti) -> float:
    """Sum of ``(i + 1) * b_i / s_i`` over dimensions with ``s_i > 0``.

    The sum stops at the last Betti number supplied.
    """
    counts = x.counts
    total = 0.0
    for i, b in enumerate(betti):
        if i < len(counts) and counts[i] > 0:
            total += (i + 1) * b / counts[i]
    return total
