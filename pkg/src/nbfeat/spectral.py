"""Spectra of adjacency, transition and Laplacian matrices of digraphs.

Every family is reduced to a :class:`SpectralSummary` of three numbers:
the spectral radius, the gap between the two largest eigenvalue moduli
(``gap_high``) and the smallest nonzero modulus (``gap_low``).

"Reversed" variants are the same construction applied to the graph with
all edges turned around, i.e. in-degrees and out-degrees swap roles.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .digraph import Digraph, induced_subgraph, largest_scc
from .errors import NumericalError

ZERO_TOL = 1e-9
PERRON_TOL = 1e-12
PERRON_MAX_ITER = 10_000
SYMMETRY_TOL = 1e-12

__all__ = [
    "Spectrum",
    "SpectralSummary",
    "adjacency_matrix",
    "transition_probability_matrix",
    "bauer_laplacian",
    "perron_vector",
    "chung_laplacian",
    "spectrum",
    "summarize",
    "adjacency_spectrum",
    "transition_spectrum",
    "bauer_spectrum",
    "chung_laplacian_summary",
]


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of a square matrix, with moduli sorted descending."""

    eigenvalues: np.ndarray
    moduli: np.ndarray

    def __len__(self):
        return len(self.moduli)


@dataclass(frozen=True)
class SpectralSummary:
    radius: float = 0.0
    gap_high: float = 0.0
    gap_low: float = 0.0

    def get(self, which: str) -> float:
        return {"radius": self.radius, "high": self.gap_high, "low": self.gap_low}[which]


ZERO_SUMMARY = SpectralSummary()


# matrices ------------------------------------------------------------------

def adjacency_matrix(g: Digraph) -> np.ndarray:
    return g.dense().astype(np.float64)


def _inverse_or_zero(d: np.ndarray) -> np.ndarray:
    out = np.zeros(len(d), dtype=np.float64)
    nz = d != 0
    out[nz] = 1.0 / d[nz]
    return out


def transition_probability_matrix(g: Digraph, reversed: bool = False) -> np.ndarray:
    """Out-degree normalised adjacency matrix.

    Row ``u`` is the indicator of ``u``'s out-neighbours divided by its
    out-degree, and is all zero when the out-degree is zero.  With
    ``reversed=True`` in-neighbours and in-degrees are used instead.
    """
    a = adjacency_matrix(g)
    if reversed:
        a = a.T
    return _inverse_or_zero(a.sum(axis=1))[:, None] * a


def bauer_laplacian(g: Digraph, reversed: bool = False) -> np.ndarray:
    """Identity minus the in-neighbour averaging operator.

    Row ``v`` is ``e_v - (1/ind(v)) * sum of e_u over in-neighbours u``
    and the zero row when ``ind(v) == 0``.  ``reversed=True`` averages
    over out-neighbours with out-degrees.
    """
    a = adjacency_matrix(g)
    if not reversed:
        a = a.T
    deg = a.sum(axis=1)
    lap = np.diag((deg != 0).astype(np.float64)) - _inverse_or_zero(deg)[:, None] * a
    return lap


def perron_vector(p: np.ndarray, tol: float = PERRON_TOL,
                  max_iter: int = PERRON_MAX_ITER) -> np.ndarray:
    """Stationary distribution of an irreducible row-stochastic matrix.

    Power iteration on the transposed lazy chain ``(I + P) / 2`` from the
    uniform vector.  The lazy chain has the same stationary vector but is
    aperiodic, so the iteration also converges for periodic graphs such
    as directed cycles of even length.  Entries sum to one.
    """
    n = p.shape[0]
    lazy_t = 0.5 * (np.eye(n) + p).T
    phi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = lazy_t @ phi
        nxt /= nxt.sum()
        if np.abs(nxt - phi).sum() <= tol * np.abs(nxt).sum():
            return nxt
        phi = nxt
    raise NumericalError(
        f"Perron vector power iteration did not converge in {max_iter} "
        f"iterations (matrix size {n})")


def chung_laplacian(g: Digraph) -> np.ndarray:
    """Chung's symmetric Laplacian of a strongly connected digraph.

    ``L = I - (S + S*) / 2`` with ``S = Phi^(1/2) P Phi^(-1/2)``, where
    ``P`` is the transition matrix and ``Phi`` the diagonal of its Perron
    vector.
    """
    p = transition_probability_matrix(g)
    phi = perron_vector(p)
    root = np.sqrt(phi)
    s = root[:, None] * p / root[None, :]
    s_star = (1.0 / root)[:, None] * p.T * root[None, :]
    lap = np.eye(len(phi)) - 0.5 * (s + s_star)
    defect = np.abs(lap - lap.T).max() if lap.size else 0.0
    if defect > SYMMETRY_TOL:
        raise NumericalError(f"Chung Laplacian not symmetric (defect {defect:.3g})")
    return 0.5 * (lap + lap.T)


# spectra -------------------------------------------------------------------

def spectrum(m: np.ndarray, hermitian: bool = False) -> Spectrum:
    try:
        ev = np.linalg.eigvalsh(m) if hermitian else np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed on {m.shape[0]}x{m.shape[0]} matrix") from exc
    ev = np.asarray(ev, dtype=np.complex128)
    moduli = np.sort(np.abs(ev))[::-1]
    return Spectrum(eigenvalues=ev, moduli=moduli)


def summarize(spec: Spectrum) -> SpectralSummary:
    """Radius, high gap and low gap of a spectrum."""
    mod = spec.moduli
    if len(mod) == 0:
        return ZERO_SUMMARY
    radius = float(mod[0])
    gap_high = float(mod[0] - mod[1]) if len(mod) >= 2 else 0.0
    nonzero = mod[mod > ZERO_TOL * max(1.0, radius)]
    gap_low = float(nonzero[-1]) if len(nonzero) else 0.0
    return SpectralSummary(radius=radius, gap_high=gap_high, gap_low=gap_low)


def adjacency_spectrum(g: Digraph) -> SpectralSummary:
    if g.n_vertices < 2:
        return ZERO_SUMMARY
    return summarize(spectrum(adjacency_matrix(g)))


def transition_spectrum(g: Digraph, reversed: bool = False) -> SpectralSummary:
    if g.n_vertices < 2:
        return ZERO_SUMMARY
    return summarize(spectrum(transition_probability_matrix(g, reversed)))


def bauer_spectrum(g: Digraph, reversed: bool = False) -> SpectralSummary:
    if g.n_vertices < 2:
        return ZERO_SUMMARY
    return summarize(spectrum(bauer_laplacian(g, reversed)))


def chung_laplacian_summary(g: Digraph) -> SpectralSummary:
    """Chung Laplacian summary on the largest strongly connected component.

    Components with fewer than two vertices give the all-zero summary.
    ``gap_low`` is the Chung spectral gap (smallest nonzero eigenvalue).
    """
    scc = largest_scc(g)
    if len(scc) < 2:
        return ZERO_SUMMARY
    sub = g if len(scc) == g.n_vertices else induced_subgraph(g, scc)
    lap = chung_laplacian(sub)
    spec = spectrum(lap, hermitian=True)
    if spec.eigenvalues.real.min() < -ZERO_TOL:
        raise NumericalError("Chung Laplacian has a negative eigenvalue")
    return summarize(spec)
