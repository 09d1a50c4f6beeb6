"""Binary dynamics, time binning and vector summaries.

A trial is a list of ``(vertex, time)`` spikes on a shared ambient graph.
Its vector summary with respect to a list of ``M`` neighbourhoods and
``K`` time bins is the ``M x K`` matrix whose ``(m, k)`` entry is a
feature parameter of the subgraph of neighbourhood ``m`` induced by the
vertices that fired during bin ``k``, flattened column by column.
"""
from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .digraph import (Digraph, Neighbourhood, Subgraph, closed_neighbourhood, induced_subgraph,
                      neighbourhood_union)
from .errors import GraphFormatError, ValidationError
from .params import evaluate, evaluate_many, parse_code

DEFAULT_M = 50
SPIKE_HEADER = ("trial", "label", "vertex", "time_ms")

__all__ = [
    "BinSpec",
    "Trial",
    "BinaryDynamicsSet",
    "FeatureMatrix",
    "read_spikes",
    "write_spikes",
    "read_features",
    "write_features",
    "parameter_table",
    "rank_vertices",
    "select_neighbourhoods",
    "active_states",
    "featurise",
    "featurise_many",
    "centre_firing_matrix",
    "build_filtration_layer",
]


# binary dynamics -----------------------------------------------------------

@dataclass(frozen=True)
class BinSpec:
    """``n_bins`` equal bins covering ``[start, stop]``.

    Bins are half open, ``[a + (k-1) d, a + k d)``, except the last which
    also contains ``stop``; every time in range falls in exactly one bin.
    """

    start: float = 10.0
    stop: float = 60.0
    n_bins: int = 2

    def __post_init__(self):
        if not self.start < self.stop:
            raise ValidationError(f"bin interval [{self.start}, {self.stop}] is empty")
        if self.n_bins < 1:
            raise ValidationError("need at least one bin")

    @property
    def width(self) -> float:
        return (self.stop - self.start) / self.n_bins

    def edges(self) -> np.ndarray:
        e = self.start + self.width * np.arange(self.n_bins + 1)
        e[-1] = self.stop
        return e

    def assign(self, times) -> np.ndarray:
        """Bin index of every time, ``-1`` outside ``[start, stop]``."""
        t = np.asarray(times, dtype=np.float64)
        k = np.searchsorted(self.edges(), t, side="right") - 1
        k[t == self.stop] = self.n_bins - 1
        k[(t < self.start) | (t > self.stop)] = -1
        return k

    @classmethod
    def parse(cls, text: str) -> "BinSpec":
        """``"10:60:2"`` -> ``BinSpec(10, 60, 2)``."""
        try:
            a, b, k = text.split(":")
            return cls(float(a), float(b), int(k))
        except ValueError as exc:
            raise ValidationError(f"bad bin spec {text!r}; expected START:STOP:K") from exc


@dataclass(frozen=True)
class Trial:
    """Spikes of one stimulus presentation, on the trial's local clock."""

    label: int
    vertices: np.ndarray
    times: np.ndarray
    trial_id: int = 0

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.int64).reshape(-1)
        t = np.asarray(self.times, dtype=np.float64).reshape(-1)
        if len(v) != len(t):
            raise ValidationError("spike vertex and time arrays differ in length")
        if len(t) and (t.min() < 0 or not np.isfinite(t).all()):
            raise ValidationError(f"trial {self.trial_id}: spike times must be finite and >= 0")
        if len(v) and v.min() < 0:
            raise ValidationError(f"trial {self.trial_id}: negative vertex id")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "times", t)

    @property
    def n_spikes(self) -> int:
        return len(self.times)

    def relabelled(self, sigma: np.ndarray) -> "Trial":
        """Same spikes with vertex ``v`` renamed ``sigma[v]``."""
        return Trial(self.label, np.asarray(sigma)[self.vertices], self.times, self.trial_id)


@dataclass
class BinaryDynamicsSet:
    trials: list[Trial] = field(default_factory=list)
    n_vertices: int | None = None

    def __post_init__(self):
        if self.n_vertices is not None:
            for tr in self.trials:
                if tr.n_spikes and tr.vertices.max() >= self.n_vertices:
                    raise ValidationError(
                        f"trial {tr.trial_id}: vertex id {tr.vertices.max()} out of range "
                        f"[0, {self.n_vertices})")

    def __len__(self):
        return len(self.trials)

    def __iter__(self):
        return iter(self.trials)

    @property
    def labels(self) -> np.ndarray:
        return np.array([t.label for t in self.trials], dtype=np.int64)

    def relabelled(self, sigma) -> "BinaryDynamicsSet":
        sigma = np.asarray(sigma, dtype=np.int64)
        return BinaryDynamicsSet([t.relabelled(sigma) for t in self.trials], self.n_vertices)


def read_spikes(path, n_vertices: int | None = None) -> BinaryDynamicsSet:
    """Read a spike CSV (``trial,label,vertex,time_ms``).

    Rows of a trial need not be contiguous.  A row with empty ``vertex``
    and ``time_ms`` declares a trial (and its label) without spikes.
    Trials are returned in ascending trial id.
    """
    groups: dict[int, tuple[int, list[int], list[float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != SPIKE_HEADER:
            raise GraphFormatError(f"expected header {','.join(SPIKE_HEADER)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 4:
                raise GraphFormatError(f"expected 4 fields, got {len(row)}", line=lineno)
            try:
                trial, label = int(row[0]), int(row[1])
                vtx = row[2].strip()
                tms = row[3].strip()
                entry = groups.setdefault(trial, (label, [], []))
                if entry[0] != label:
                    raise GraphFormatError(f"trial {trial} has two labels", line=lineno)
                if vtx or tms:
                    entry[1].append(int(vtx))
                    entry[2].append(float(tms))
            except ValueError as exc:
                if isinstance(exc, GraphFormatError):
                    raise
                raise GraphFormatError(f"cannot parse {row!r}", line=lineno) from exc
    trials = []
    for tid in sorted(groups):
        label, vs, ts = groups[tid]
        try:
            trials.append(Trial(label, np.array(vs, dtype=np.int64),
                                np.array(ts, dtype=np.float64), tid))
        except ValidationError as exc:
            raise GraphFormatError(str(exc)) from exc
    return BinaryDynamicsSet(trials, n_vertices)


def write_spikes(ds: BinaryDynamicsSet, path) -> None:
    """Write a spike CSV; spikes are ordered by time then vertex."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SPIKE_HEADER)
        for tr in ds.trials:
            if tr.n_spikes == 0:
                w.writerow([tr.trial_id, tr.label, "", ""])
                continue
            order = np.lexsort((tr.vertices, tr.times))
            for v, t in zip(tr.vertices[order].tolist(), tr.times[order].tolist()):
                w.writerow([tr.trial_id, tr.label, v, repr(t)])


def active_states(trial: Trial, bins: BinSpec) -> list[np.ndarray]:
    """Sorted vertices firing at least once in each bin."""
    k = bins.assign(trial.times)
    return [np.unique(trial.vertices[k == b]) for b in range(bins.n_bins)]


# selection -----------------------------------------------------------------

def _table_rows(args) -> np.ndarray:
    g, codes, vertices = args
    out = np.empty((len(vertices), len(codes)), dtype=np.float64)
    for i, v in enumerate(vertices):
        out[i] = evaluate_many(codes, closed_neighbourhood(g, int(v)))
    return out


def _chunks(items: np.ndarray, n_chunks: int) -> list[np.ndarray]:
    n_chunks = max(1, min(n_chunks, len(items)))
    return [c for c in np.array_split(items, n_chunks) if len(c)]


def parameter_table(g: Digraph, codes: Sequence[str], vertices=None, threads: int = 1) -> np.ndarray:
    """Values of ``codes`` on the closed neighbourhood of each vertex.

    Returns an array of shape ``(len(vertices), len(codes))``.  With
    ``threads > 1`` vertices are split over a process pool; the result
    does not depend on the split.
    """
    codes = list(codes)
    for c in codes:
        parse_code(c)
    vertices = np.arange(g.n_vertices) if vertices is None else np.asarray(vertices, dtype=np.int64)
    if len(vertices) == 0:
        return np.empty((0, len(codes)))
    if threads <= 1 or len(vertices) < 2:
        return _table_rows((g, codes, vertices))
    jobs = [(g, codes, c) for c in _chunks(vertices, 4 * threads)]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return np.vstack(list(pool.map(_table_rows, jobs)))


def rank_vertices(values, end: str = "top") -> np.ndarray:
    """Vertex ids sorted by value (descending for ``top``), ties by ascending id."""
    values = np.asarray(values, dtype=np.float64)
    ids = np.arange(len(values))
    if end == "top":
        return np.lexsort((ids, -values))
    if end == "bottom":
        return np.lexsort((ids, values))
    raise ValidationError(f"end must be 'top' or 'bottom', not {end!r}")


def select_neighbourhoods(g: Digraph, code: str, m: int = DEFAULT_M, end: str = "top",
                          values=None, threads: int = 1) -> list[Neighbourhood]:
    """The ``m`` closed neighbourhoods with the highest (or lowest) ``code`` value.

    ``values`` may carry a precomputed per-vertex column of ``code``.
    """
    parse_code(code)
    if not 0 <= m <= g.n_vertices:
        raise ValidationError(f"cannot select {m} of {g.n_vertices} vertices")
    if values is None:
        values = parameter_table(g, [code], threads=threads)[:, 0]
    order = rank_vertices(values, end)[:m]
    return [closed_neighbourhood(g, int(v)) for v in order]


# featurisation -------------------------------------------------------------

@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray   # M x K
    label: int

    @property
    def flattened(self) -> np.ndarray:
        """Columns (bins) concatenated: all of bin 1, then all of bin 2, ..."""
        return self.values.flatten(order="F")


def _active_value(nb: Subgraph, centre: int | None, local: np.ndarray, code: str) -> float:
    if code == "size":
        return float(len(local))
    sub = induced_subgraph(nb.graph, local)
    c = None
    if centre is not None:
        i = int(np.searchsorted(local, centre))
        if i < len(local) and local[i] == centre:
            c = i
    return evaluate(code, sub, c)


def _local_centre(nb: Subgraph) -> int | None:
    return nb.local_centre if isinstance(nb, Neighbourhood) else None


def featurise(trial: Trial, neighbourhoods: Sequence[Subgraph], bins: BinSpec,
              feature_code: str) -> FeatureMatrix:
    """Vector summary of one trial.

    Entry ``(m, k)`` is ``feature_code`` on the subgraph of neighbourhood
    ``m`` induced by its members active in bin ``k``.  Centre-based codes
    see the centre only if it fired in that bin.
    """
    if not neighbourhoods:
        raise ValidationError("need at least one neighbourhood")
    parse_code(feature_code)
    states = active_states(trial, bins)
    out = np.zeros((len(neighbourhoods), bins.n_bins), dtype=np.float64)
    for m, nb in enumerate(neighbourhoods):
        centre = _local_centre(nb)
        for k, active in enumerate(states):
            # members is sorted, so the local ids come out sorted too
            local = np.flatnonzero(np.isin(nb.members, active, assume_unique=True))
            out[m, k] = _active_value(nb, centre, local, feature_code)
    return FeatureMatrix(out, trial.label)


def centre_firing_matrix(trial: Trial, centres: Sequence[int], bins: BinSpec) -> FeatureMatrix:
    """``M x K`` indicator: did centre ``m`` fire during bin ``k``."""
    states = active_states(trial, bins)
    centres = np.asarray(centres, dtype=np.int64)
    out = np.column_stack([np.isin(centres, s) for s in states]).astype(np.float64)
    return FeatureMatrix(out.reshape(len(centres), bins.n_bins), trial.label)


def _featurise_chunk(args):
    trials, neighbourhoods, bins, code = args
    return [featurise(t, neighbourhoods, bins, code).flattened for t in trials]


def featurise_many(ds: BinaryDynamicsSet | Iterable[Trial], neighbourhoods: Sequence[Subgraph],
                   bins: BinSpec, feature_code: str, threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Flattened vector summaries of every trial, and their labels.

    Returns ``(X, y)`` with ``X`` of shape ``(n_trials, M * K)``.
    """
    trials = list(ds)
    width = len(neighbourhoods) * bins.n_bins
    if not trials:
        return np.empty((0, width)), np.empty(0, dtype=np.int64)
    if threads <= 1:
        rows = _featurise_chunk((trials, neighbourhoods, bins, feature_code))
    else:
        idx = _chunks(np.arange(len(trials)), 4 * threads)
        jobs = [([trials[i] for i in c], neighbourhoods, bins, feature_code) for c in idx]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = [r for part in pool.map(_featurise_chunk, jobs) for r in part]
    y = np.array([t.label for t in trials], dtype=np.int64)
    return np.vstack(rows), y


def write_features(x: np.ndarray, y: np.ndarray, path) -> None:
    """One row per trial: ``label,v_1,...,v_F``; floats written with ``repr``."""
    x = np.asarray(x, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label"] + [f"v_{i}" for i in range(1, x.shape[1] + 1)])
        for label, row in zip(np.asarray(y).tolist(), x.tolist()):
            w.writerow([label] + [repr(v) for v in row])


def read_features(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "label":
            raise GraphFormatError("feature file must start with a 'label' column", line=1)
        labels, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise GraphFormatError(f"expected {len(header)} fields, got {len(row)}", line=lineno)
            try:
                labels.append(int(row[0]))
                rows.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise GraphFormatError(f"cannot parse row {lineno}", line=lineno) from exc
    x = np.array(rows, dtype=np.float64).reshape(len(rows), len(header) - 1)
    return x, np.array(labels, dtype=np.int64)


# filtration ----------------------------------------------------------------

def build_filtration_layer(g: Digraph, order, n: int) -> Subgraph:
    """Union of the closed neighbourhoods of the ``n + 1`` highest-ranked vertices.

    ``order`` lists every vertex from lowest to highest rank, so layer 0 is
    the neighbourhood of ``order[-1]`` and layer ``|V| - 1`` uses all
    vertices.  Layers are nested in ``n``.
    """
    order = np.asarray(order, dtype=np.int64).reshape(-1)
    nv = g.n_vertices
    if len(order) != nv or not np.array_equal(np.sort(order), np.arange(nv)):
        raise ValidationError("order must be a permutation of all vertices")
    if not 0 <= n < nv:
        raise ValidationError(f"layer index {n} outside [0, {nv})")
    return neighbourhood_union(g, order[nv - 1 - n:])


def default_threads() -> int:
    return max(1, (os.cpu_count() or 1))
