"""Registry of real-valued digraph parameters.

The same functions serve as *selection* parameters (evaluated on the
closed neighbourhood of every vertex) and as *feature* parameters
(evaluated on active subgraphs).  Codes that depend on a distinguished
centre vertex read it from the neighbourhood; on an active subgraph
whose centre did not fire they return 0.

Spectral gap codes accept a ``_high`` or ``_low`` suffix.  Without a
suffix a gap is the difference of the two largest moduli, except ``clsg``
which is the smallest nonzero Chung Laplacian eigenvalue.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .digraph import Digraph, Neighbourhood, Subgraph, degrees, induced_subgraph, neighbour_set
from .errors import NumericalError, UnknownParameterError, ValidationError
from .flagcomplex import build_flag_complex, containing_counts, euler_characteristic, simplex_counts
from .homology import DEFAULT_BETTI_DIM, betti_numbers, normalised_betti_coefficient
from . import spectral

__all__ = [
    "Parameter",
    "REGISTRY",
    "TABLE1_CODES",
    "parse_code",
    "fagiolo_cc",
    "transitive_cc",
    "tcc_denominator",
    "density_coefficient",
    "reciprocal_sum",
    "evaluate",
    "evaluate_many",
    "describe",
]

TABLE1_CODES = ("fcc", "tcc", "ec", "nbc", "size", "asg", "asr",
                "blsg", "blsr", "clsg", "clsr", "tpsg", "tpsr")


# centre-based coefficients -------------------------------------------------

def _local_symmetric(g: Digraph, v: int) -> tuple[np.ndarray, np.ndarray]:
    """``A + A^T`` on the open neighbourhood of ``v``, and ``v``'s row of it."""
    nb = neighbour_set(g, v)
    members = np.concatenate(([v], nb))
    a = induced_subgraph(g, members).dense().astype(np.int64)
    s = a + a.T
    return s[1:, 1:], s[0, 1:]


def fagiolo_cc(g: Digraph, centre: int) -> float:
    """Fagiolo's directed clustering coefficient at ``centre``.

    Zero when the denominator vanishes.
    """
    v = g.check_vertex(centre)
    sub, w = _local_symmetric(g, v)
    t = int(w @ sub @ w) // 2
    ind, oud, deg, rec = degrees(g, v)
    denom = deg * (deg - 1) - 2 * rec
    return t / denom if denom else 0.0


def tcc_denominator(g: Digraph, v: int) -> int:
    """Number of directed 3-cliques ``v`` could be part of given its edges."""
    ind, oud, deg, rec = degrees(g, v)
    return deg * (deg - 1) - (ind * oud + rec)


def transitive_cc(g: Digraph, centre: int) -> float:
    """Directed 3-cliques at ``centre`` over the number possible (0 if none possible)."""
    v = g.check_vertex(centre)
    denom = tcc_denominator(g, v)
    if denom == 0:
        return 0.0
    return containing_counts(g, v, 2)[1] / denom


def density_coefficient(g: Digraph, centre: int, k: int) -> float:
    """``k / ((k+1)(n-k)) * S_k / S_{k-1}`` with ``n`` the vertex count of ``g``.

    Equals 1 exactly on complete digraphs and is at most 1 otherwise.
    Returns 0 when ``S_{k-1}`` is 0.
    """
    n = g.n_vertices
    v = g.check_vertex(centre)
    if k < 2:
        raise ValidationError("density coefficient order must be >= 2")
    if k >= n:
        raise ValidationError(f"density coefficient order {k} needs more than {k} vertices")
    s = containing_counts(g, v, k)
    if s[k - 2] == 0:
        return 0.0
    return k * s[k - 1] / ((k + 1) * (n - k) * s[k - 2])


def reciprocal_sum(g: Digraph) -> int:
    """Sum of reciprocal degrees, i.e. twice the number of reciprocal pairs."""
    e = g.edges
    if len(e) == 0:
        return 0
    n = g.n_vertices
    fwd = e[:, 0] * n + e[:, 1]
    back = e[:, 1] * n + e[:, 0]
    return int(np.isin(back, fwd, assume_unique=True).sum())


# evaluation context --------------------------------------------------------

class _Context:
    """Lazily computed quantities shared by all codes on one graph."""

    def __init__(self, g: Digraph, centre: int | None):
        self.g = g
        self.centre = centre

    @cached_property
    def counts(self) -> list[int]:
        return simplex_counts(self.g)

    @cached_property
    def betti(self):
        x = build_flag_complex(self.g, DEFAULT_BETTI_DIM + 1)
        return x, betti_numbers(x, DEFAULT_BETTI_DIM)

    @cached_property
    def degrees(self):
        return degrees(self.g, self.centre)

    def summary(self, family: str) -> spectral.SpectralSummary:
        key = "_spec_" + family
        if key not in self.__dict__:
            g = self.g
            fn = {
                "as": lambda: spectral.adjacency_spectrum(g),
                "tps": lambda: spectral.transition_spectrum(g),
                "rtps": lambda: spectral.transition_spectrum(g, reversed=True),
                "bls": lambda: spectral.bauer_spectrum(g),
                "rbls": lambda: spectral.bauer_spectrum(g, reversed=True),
                "cls": lambda: spectral.chung_laplacian_summary(g),
            }[family]
            self.__dict__[key] = fn()
        return self.__dict__[key]


@dataclass(frozen=True)
class Parameter:
    code: str
    description: str
    func: Callable[[_Context], float]
    centred: bool = False
    gap: bool = False


def _nbc(ctx: _Context) -> float:
    x, b = ctx.betti
    return normalised_betti_coefficient(x, b)


def _dc(k: int):
    def f(ctx: _Context) -> float:
        if k >= ctx.g.n_vertices:
            return 0.0
        return density_coefficient(ctx.g, ctx.centre, k)
    return f


def _radius(family: str):
    return lambda ctx: ctx.summary(family).radius


def _build_registry() -> dict[str, Parameter]:
    p: list[Parameter] = [
        Parameter("fcc", "Clustering coefficient (Fagiolo)",
                  lambda c: fagiolo_cc(c.g, c.centre), centred=True),
        Parameter("tcc", "Transitive clustering coefficient",
                  lambda c: transitive_cc(c.g, c.centre), centred=True),
        Parameter("ec", "Euler characteristic", lambda c: float(euler_characteristic(c.counts))),
        Parameter("nbc", "Normalised Betti coefficient", _nbc),
        Parameter("size", "Number of vertices in the graph", lambda c: float(c.g.n_vertices)),
        Parameter("asg", "Adjacency spectral gap", None, gap=True),
        Parameter("asr", "Adjacency spectral radius", _radius("as")),
        Parameter("blsg", "Bauer Laplacian spectral gap", None, gap=True),
        Parameter("blsr", "Bauer Laplacian spectral radius", _radius("bls")),
        Parameter("clsg", "Chung Laplacian spectral gap", None, gap=True),
        Parameter("clsr", "Chung Laplacian spectral radius", _radius("cls")),
        Parameter("tpsg", "Transition probability spectral gap", None, gap=True),
        Parameter("tpsr", "Transition probability spectral radius", _radius("tps")),
        Parameter("rtpsg", "Reversed transition probability spectral gap", None, gap=True),
        Parameter("rtpsr", "Reversed transition probability spectral radius", _radius("rtps")),
        Parameter("rblsg", "Reversed Bauer Laplacian spectral gap", None, gap=True),
        Parameter("rblsr", "Reversed Bauer Laplacian spectral radius", _radius("rbls")),
        Parameter("deg", "Total degree of the centre (in + out)",
                  lambda c: float(c.degrees[2]), centred=True),
        Parameter("ind", "In-degree of the centre", lambda c: float(c.degrees[0]), centred=True),
        Parameter("oud", "Out-degree of the centre", lambda c: float(c.degrees[1]), centred=True),
        Parameter("rc", "Sum of reciprocal degrees over the graph",
                  lambda c: float(reciprocal_sum(c.g))),
        Parameter("rc_centre", "Reciprocal degree of the centre",
                  lambda c: float(c.degrees[3]), centred=True),
    ]
    for k in (2, 3, 4):
        p.append(Parameter(f"dc{k}", f"Density coefficient of order {k} at the centre",
                           _dc(k), centred=True))
    return {q.code: q for q in p}


REGISTRY: dict[str, Parameter] = _build_registry()

_DEFAULT_GAP = {"clsg": "low"}


def parse_code(code: str) -> tuple[str, str | None]:
    """Split ``"blsg_low"`` into ``("blsg", "low")``; validate against the registry."""
    base, variant = code, None
    for suffix in ("_high", "_low"):
        if code.endswith(suffix):
            base, variant = code[: -len(suffix)], suffix[1:]
            break
    if base not in REGISTRY:
        raise UnknownParameterError(f"unknown parameter code {code!r}")
    if variant is not None and not REGISTRY[base].gap:
        raise UnknownParameterError(f"{base!r} is not a spectral gap; no {variant!r} variant")
    return base, variant


def _run(code: str, ctx: _Context) -> float:
    base, variant = parse_code(code)
    param = REGISTRY[base]
    if param.centred and ctx.centre is None:
        return 0.0
    if param.gap:
        family = base[:-1]
        which = variant or _DEFAULT_GAP.get(base, "high")
        value = ctx.summary(family).get(which)
    else:
        value = param.func(ctx)
    value = float(value)
    if not math.isfinite(value):
        raise NumericalError(f"parameter {code!r} produced a non-finite value")
    return value


def _target(target: Subgraph | Digraph, centre: int | None) -> tuple[Digraph, int | None]:
    if isinstance(target, Neighbourhood):
        return target.graph, target.local_centre
    if isinstance(target, Subgraph):
        return target.graph, centre
    return target, centre


def evaluate(code: str, target: Subgraph | Digraph, centre: int | None = None) -> float:
    """Value of parameter ``code`` on a neighbourhood or graph.

    Parameters
    ----------
    code : str
        Registry code, optionally with a ``_high``/``_low`` suffix.
    target : Neighbourhood, Subgraph or Digraph
        A neighbourhood carries its own centre.
    centre : int, optional
        Local id of the centre in a bare graph; ``None`` means no centre
        is present, and centre-based codes then give 0.
    """
    g, c = _target(target, centre)
    return _run(code, _Context(g, c))


def evaluate_many(codes: Sequence[str], target: Subgraph | Digraph,
                  centre: int | None = None) -> list[float]:
    """Several codes on one graph, sharing flag complexes and spectra."""
    g, c = _target(target, centre)
    ctx = _Context(g, c)
    return [_run(code, ctx) for code in codes]


def describe() -> list[tuple[str, str]]:
    """``(code, description)`` pairs in registry order."""
    return [(p.code, p.description) for p in REGISTRY.values()]
