"""Random digraphs and a leaky integrate-and-fire network driven by stimuli.

The simulator produces labelled binary dynamics on a desk-sized graph:
a sequence of stimulus windows, each belonging to one of several
classes.  A class is a fixed set of receptor vertices; during a window
the receptors of its class get a brief current pulse on top of the
background noise that every vertex receives.

Neuron model (per time step ``dt``, ``decay = exp(-dt / tau)``)::

    V <- V * decay + w * (#presynaptic spikes in the previous step)
                   + (I_stim + noise) * (1 - decay)
    spike if V >= threshold, then V <- reset

``(1 - decay)`` is the exact integration factor of a constant current
over one step, so a constant current ``I`` drives ``V`` towards ``I``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .digraph import Digraph
from .errors import ValidationError
from .pipeline import BinaryDynamicsSet, Trial

ER_CHUNK_ROWS = 1024

__all__ = ["erdos_renyi", "StimulusProtocol", "LifConfig", "simulate", "lif_period_steps"]


def erdos_renyi(n: int, p: float, seed) -> Digraph:
    """Each ordered pair ``(u, v)``, ``u != v``, is an edge with probability ``p``.

    Rows are drawn in fixed-size blocks from one generator, so the result
    depends only on ``(n, p, seed)``.
    """
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"edge probability {p} outside [0, 1]")
    if n < 0:
        raise ValidationError("vertex count must be >= 0")
    rng = np.random.default_rng(seed)
    parts = []
    for lo in range(0, n, ER_CHUNK_ROWS):
        hi = min(n, lo + ER_CHUNK_ROWS)
        block = rng.random((hi - lo, n)) < p
        block[np.arange(hi - lo), np.arange(lo, hi)] = False
        src, dst = np.nonzero(block)
        parts.append(np.column_stack((src + lo, dst)))
    edges = np.concatenate(parts) if parts else np.empty((0, 2), dtype=np.int64)
    return Digraph._trusted(n, edges.astype(np.int64))


@dataclass(frozen=True)
class LifConfig:
    tau_ms: float = 10.0
    threshold: float = 1.0
    reset: float = 0.0
    dt_ms: float = 0.1
    weight: float | None = None   # None: 0.5 / (n * p) from the graph's density

    def __post_init__(self):
        if self.tau_ms <= 0 or self.threshold <= 0 or self.dt_ms <= 0:
            raise ValidationError("time constant, threshold and step must be positive")
        if self.dt_ms > 1.0:
            raise ValidationError("simulation step must be at most 1 ms")
        if self.reset >= self.threshold:
            raise ValidationError("reset must lie below threshold")

    def synaptic_weight(self, g: Digraph) -> float:
        if self.weight is not None:
            return self.weight
        n = g.n_vertices
        if n < 2 or g.n_edges == 0:
            return 0.0
        p = g.n_edges / (n * (n - 1))
        return 0.5 / (n * p)


@dataclass(frozen=True)
class StimulusProtocol:
    """Which vertices each stimulus class drives, and how windows are laid out.

    Attributes
    ----------
    receptors : tuple of ndarray
        ``receptors[c]`` are the vertices receiving class ``c``'s pulse.
    repeats : int
        Presentations per class.
    window_ms, stim_duration_ms, onset_jitter_ms, exclusion_ms : float
        Window length; pulse length; pulse onset is uniform on
        ``[0, onset_jitter_ms]``; spikes in the first ``exclusion_ms`` of
        every window are dropped from the trial data.
    strength_range : (float, float)
        Each pulse is scaled by a uniform factor from this range.
    stim_amplitude : float
        Pulse current before scaling.
    noise_strength : float
        Standard deviation of the per-step Gaussian background current.
    """

    receptors: tuple = ()
    repeats: int = 500
    window_ms: float = 200.0
    stim_duration_ms: float = 5.0
    onset_jitter_ms: float = 10.0
    strength_range: tuple = (1.0, 2.0)
    stim_amplitude: float = 10.0
    noise_strength: float = 3.0
    exclusion_ms: float = 10.0

    def __post_init__(self):
        recs = tuple(np.unique(np.asarray(r, dtype=np.int64)) for r in self.receptors)
        object.__setattr__(self, "receptors", recs)
        if self.repeats < 0:
            raise ValidationError("repeats must be >= 0")
        if not 0 <= self.onset_jitter_ms < self.window_ms:
            raise ValidationError("onset jitter must be shorter than the window")
        if self.stim_duration_ms + self.onset_jitter_ms > self.window_ms:
            raise ValidationError("stimulus duration plus jitter exceeds the window")
        lo, hi = self.strength_range
        if not 0 <= lo <= hi:
            raise ValidationError("strength range must satisfy 0 <= low <= high")
        if self.noise_strength < 0 or self.exclusion_ms < 0:
            raise ValidationError("noise strength and exclusion must be >= 0")

    @property
    def n_classes(self) -> int:
        return len(self.receptors)

    @classmethod
    def random(cls, n_vertices: int, seed, n_classes: int = 8, receptor_count: int = 100,
               **kwargs) -> "StimulusProtocol":
        """Protocol whose classes each drive ``receptor_count`` random vertices."""
        if not 0 <= receptor_count <= n_vertices:
            raise ValidationError(f"cannot pick {receptor_count} receptors from {n_vertices} vertices")
        rng = np.random.default_rng(seed)
        recs = tuple(np.sort(rng.choice(n_vertices, size=receptor_count, replace=False))
                     for _ in range(n_classes))
        return cls(receptors=recs, **kwargs)

    def check(self, n_vertices: int) -> None:
        for c, r in enumerate(self.receptors):
            if len(r) and (r.min() < 0 or r.max() >= n_vertices):
                raise ValidationError(f"class {c} receptor outside [0, {n_vertices})")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["receptors"] = [r.tolist() for r in self.receptors]
        d["strength_range"] = list(self.strength_range)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StimulusProtocol":
        d = dict(d)
        d["receptors"] = tuple(np.asarray(r, dtype=np.int64) for r in d.get("receptors", ()))
        d["strength_range"] = tuple(d.get("strength_range", (1.0, 2.0)))
        return cls(**d)


def _steps(ms: float, dt: float) -> int:
    return int(round(ms / dt))


def lif_period_steps(current: float, lif: LifConfig = LifConfig()) -> int | None:
    """Steps between spikes of an isolated neuron under constant ``current``.

    Starting from ``reset`` the potential after ``k`` steps is
    ``I + (reset - I) * decay**k``; the period is the first ``k`` at which
    this reaches the threshold.  ``None`` if it never does.
    """
    if current <= lif.threshold:
        return None
    decay = math.exp(-lif.dt_ms / lif.tau_ms)
    ratio = (current - lif.threshold) / (current - lif.reset)
    k = math.ceil(math.log(ratio) / math.log(decay) - 1e-12)
    return max(k, 1)


@dataclass
class _Network:
    ptr: np.ndarray
    idx: np.ndarray
    n: int

    def synaptic_counts(self, spiking: np.ndarray) -> np.ndarray:
        starts, ends = self.ptr[spiking], self.ptr[spiking + 1]
        targets = np.concatenate([self.idx[a:b] for a, b in zip(starts.tolist(), ends.tolist())])
        return np.bincount(targets, minlength=self.n)


def simulate(g: Digraph, proto: StimulusProtocol, lif: LifConfig = LifConfig(), seed=0,
             constant_current=None) -> BinaryDynamicsSet:
    """Run the stimulus protocol on ``g`` and return one trial per window.

    The class sequence is a random permutation containing every class
    exactly ``proto.repeats`` times.  Windows follow each other without
    reset, so activity can carry over.  Spike times are local to their
    window; spikes in the first ``proto.exclusion_ms`` are discarded.

    ``constant_current`` (array of length ``n``) adds a fixed current to
    every step; it exists for closed-form checks of the neuron model.
    """
    n = g.n_vertices
    proto.check(n)
    if proto.n_classes == 0:
        raise ValidationError("protocol has no stimulus classes")
    setup_seq, noise_seq = np.random.SeedSequence(seed).spawn(2)
    setup_rng = np.random.default_rng(setup_seq)
    noise_rng = np.random.default_rng(noise_seq)

    labels = setup_rng.permutation(np.repeat(np.arange(proto.n_classes), proto.repeats))
    n_trials = len(labels)
    onsets = setup_rng.uniform(0.0, proto.onset_jitter_ms, n_trials)
    strengths = setup_rng.uniform(*proto.strength_range, n_trials)

    dt = lif.dt_ms
    decay = math.exp(-dt / lif.tau_ms)
    gain = 1.0 - decay
    w = lif.synaptic_weight(g)
    spw = _steps(proto.window_ms, dt)
    excl = _steps(proto.exclusion_ms, dt)
    dur = _steps(proto.stim_duration_ms, dt)
    noise_scale = proto.noise_strength * gain
    bias = None if constant_current is None else np.asarray(constant_current, dtype=np.float64) * gain

    net = _Network(g._out_ptr, g._out_idx, n)
    v = np.full(n, lif.reset, dtype=np.float64)
    spiking = np.empty(0, dtype=np.int64)
    trials = []
    for i in range(n_trials):
        label = int(labels[i])
        rec = proto.receptors[label]
        on = _steps(onsets[i], dt)
        pulse = strengths[i] * proto.stim_amplitude * gain
        if noise_scale > 0:
            noise = noise_rng.standard_normal((spw, n)) * noise_scale
        else:
            noise = None
        rec_v: list[np.ndarray] = []
        rec_t: list[np.ndarray] = []
        for s in range(spw):
            v *= decay
            if noise is not None:
                v += noise[s]
            if bias is not None:
                v += bias
            if spiking.size and w:
                v += w * net.synaptic_counts(spiking)
            if on <= s < on + dur and rec.size:
                v[rec] += pulse
            spiking = np.flatnonzero(v >= lif.threshold)
            if spiking.size:
                v[spiking] = lif.reset
                if s >= excl:
                    rec_v.append(spiking)
                    rec_t.append(np.full(spiking.size, s))
        if rec_v:
            vs = np.concatenate(rec_v)
            ts = np.round(np.concatenate(rec_t) * dt, 6)
        else:
            vs, ts = np.empty(0, dtype=np.int64), np.empty(0)
        trials.append(Trial(label, vs, ts, i))
    return BinaryDynamicsSet(trials, n)
