"""Control experiments for the neighbourhood pipeline.

Each mode replaces one ingredient of the standard run with a
randomised or degenerate stand-in:

``random_selection``
    uniformly random centres instead of the top/bottom ranked ones;
``centres_only``
    the firing pattern of the centres alone instead of a graph parameter;
``degree_matched_subgraphs``
    random vertex sets of the same size as each neighbourhood;
``fake_neighbourhoods``
    the graph rewired around the selected centres, degrees preserved;
``shuffled_activity``
    vertex ids of all spikes permuted before featurisation.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .digraph import (Digraph, Neighbourhood, closed_neighbourhood, fake_neighbourhood_rewire,
                      induced_subgraph, neighbour_set)
from .errors import ValidationError
from .pipeline import BinaryDynamicsSet

VALIDATION_MODES = ("random_selection", "centres_only", "degree_matched_subgraphs",
                    "fake_neighbourhoods", "shuffled_activity")
RANDOM_SELECTION_ITERATIONS = 20

__all__ = [
    "VALIDATION_MODES",
    "random_selection",
    "degree_matched_subgraphs",
    "fake_neighbourhoods",
    "shuffled_activity",
    "invert_permutation",
]


def random_selection(g: Digraph, m: int, seed, iterations: int = RANDOM_SELECTION_ITERATIONS
                     ) -> list[np.ndarray]:
    """``iterations`` independent draws of ``m`` distinct centres."""
    if not 0 <= m <= g.n_vertices:
        raise ValidationError(f"cannot draw {m} of {g.n_vertices} vertices")
    rng = np.random.default_rng(seed)
    return [rng.choice(g.n_vertices, size=m, replace=False) for _ in range(iterations)]


def degree_matched_subgraphs(g: Digraph, centres: Sequence[int], seed) -> list[Neighbourhood]:
    """For each centre, itself plus as many random vertices as it has neighbours.

    The result has the same vertex count as the centre's closed
    neighbourhood but random content; the subgraph is induced.
    """
    rng = np.random.default_rng(seed)
    n = g.n_vertices
    out = []
    for c in centres:
        c = g.check_vertex(c)
        d = len(neighbour_set(g, c))
        others = np.delete(np.arange(n), c)
        pick = rng.choice(others, size=d, replace=False)
        members = np.sort(np.append(pick, c))
        members.setflags(write=False)
        out.append(Neighbourhood(members=members, graph=induced_subgraph(g, members), centre=c))
    return out


def fake_neighbourhoods(g: Digraph, centres: Sequence[int], seed) -> tuple[Digraph, list[Neighbourhood]]:
    """Rewire ``g`` around ``centres`` and return the new closed neighbourhoods."""
    fake = fake_neighbourhood_rewire(g, centres, seed)
    return fake, [closed_neighbourhood(fake, int(c)) for c in centres]


def invert_permutation(sigma) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=np.int64)
    inv = np.empty_like(sigma)
    inv[sigma] = np.arange(len(sigma))
    return inv


def shuffled_activity(ds: BinaryDynamicsSet, n_vertices: int, seed=None, sigma=None
                      ) -> tuple[BinaryDynamicsSet, np.ndarray, np.ndarray]:
    """Rename every spiking vertex ``v`` to ``sigma[v]``.

    ``sigma`` is drawn from ``seed`` unless given.  Returns the shuffled
    dynamics together with ``sigma`` and its inverse; applying the
    inverse to the result restores the original spikes exactly.
    """
    if sigma is None:
        if seed is None:
            raise ValidationError("shuffled activity needs a seed or an explicit permutation")
        sigma = np.random.default_rng(seed).permutation(n_vertices)
    sigma = np.asarray(sigma, dtype=np.int64)
    if len(sigma) != n_vertices or not np.array_equal(np.sort(sigma), np.arange(n_vertices)):
        raise ValidationError("sigma must be a permutation of the vertex ids")
    return ds.relabelled(sigma), sigma, invert_permutation(sigma)
