import math

import numpy as np
import pytest

from nbfeat.digraph import Digraph
from nbfeat.errors import ValidationError
from nbfeat.simdyn import LifConfig, StimulusProtocol, erdos_renyi, lif_period_steps, simulate


def brute_period(current, lif):
    decay = math.exp(-lif.dt_ms / lif.tau_ms)
    v, k = lif.reset, 0
    while True:
        k += 1
        v = v * decay + current * (1 - decay)
        if v >= lif.threshold:
            return k
        if k > 10**6:
            return None


@pytest.fixture(scope="module")
def run():
    g = erdos_renyi(200, 0.05, 2)
    proto = StimulusProtocol.random(200, seed=3, n_classes=4, receptor_count=30, repeats=5)
    return g, proto, simulate(g, proto, seed=9)


class TestErdosRenyi:
    def test_empty(self):
        assert erdos_renyi(50, 0.0, 1).n_edges == 0

    def test_complete(self):
        assert erdos_renyi(30, 1.0, 1).n_edges == 30 * 29

    def test_edge_count_binomial(self):
        n, p = 1000, 0.01
        m = n * (n - 1)
        sd = math.sqrt(m * p * (1 - p))
        assert abs(erdos_renyi(n, p, 7).n_edges - m * p) <= 4 * sd

    def test_seeded(self):
        assert erdos_renyi(100, 0.05, 3) == erdos_renyi(100, 0.05, 3)
        assert erdos_renyi(100, 0.05, 3) != erdos_renyi(100, 0.05, 4)

    def test_bad_p(self):
        with pytest.raises(ValidationError):
            erdos_renyi(5, 1.5, 0)


class TestNeuron:
    @pytest.mark.parametrize("current", [1.01, 1.5, 2.0, 5.0, 40.0])
    def test_closed_form_period(self, current):
        lif = LifConfig()
        assert lif_period_steps(current, lif) == brute_period(current, lif)

    def test_subthreshold_never_fires(self):
        assert lif_period_steps(1.0) is None

    @pytest.mark.parametrize("current", [1.2, 2.0, 3.5])
    def test_simulated_single_neuron_is_periodic(self, current):
        lif = LifConfig()
        proto = StimulusProtocol(receptors=(np.array([], dtype=int),), repeats=1,
                                 noise_strength=0.0, exclusion_ms=0.0)
        ds = simulate(Digraph(1), proto, lif, seed=0, constant_current=[current])
        times = ds.trials[0].times
        k = lif_period_steps(current, lif)
        assert len(times) == int(2000 // k)
        assert np.allclose(np.diff(times), k * lif.dt_ms)
        assert times[0] == pytest.approx((k - 1) * lif.dt_ms)

    def test_config_checks(self):
        with pytest.raises(ValidationError):
            LifConfig(dt_ms=2.0)
        with pytest.raises(ValidationError):
            LifConfig(reset=1.0)

    def test_default_weight(self):
        g = erdos_renyi(200, 0.05, 0)
        p = g.n_edges / (200 * 199)
        assert LifConfig().synaptic_weight(g) == pytest.approx(0.5 / (200 * p))


class TestProtocol:
    def test_defaults(self):
        p = StimulusProtocol.random(1000, seed=0)
        assert p.n_classes == 8 and all(len(r) == 100 for r in p.receptors)
        assert (p.repeats, p.window_ms, p.stim_duration_ms, p.onset_jitter_ms) == (500, 200, 5, 10)
        assert p.strength_range == (1.0, 2.0) and p.noise_strength == 3 and p.exclusion_ms == 10

    def test_invariants(self):
        with pytest.raises(ValidationError):
            StimulusProtocol(onset_jitter_ms=200)
        with pytest.raises(ValidationError):
            StimulusProtocol(stim_duration_ms=195)
        with pytest.raises(ValidationError):
            StimulusProtocol(receptors=([0, 12],), repeats=1).check(10)

    def test_dict_round_trip(self):
        p = StimulusProtocol.random(50, seed=1, n_classes=3, receptor_count=5, repeats=4)
        q = StimulusProtocol.from_dict(p.to_dict())
        assert q.to_dict() == p.to_dict()


class TestSimulate:
    def test_silent_without_input(self):
        g = erdos_renyi(50, 0.1, 0)
        proto = StimulusProtocol(receptors=(np.array([], dtype=int),) * 2, repeats=3,
                                 noise_strength=0.0)
        ds = simulate(g, proto, seed=1)
        assert len(ds) == 6 and all(t.n_spikes == 0 for t in ds)

    def test_label_counts(self, run):
        _, _, ds = run
        assert np.bincount(ds.labels).tolist() == [5, 5, 5, 5]

    def test_deterministic(self, run):
        g, proto, ds = run
        again = simulate(g, proto, seed=9)
        for a, b in zip(ds, again):
            assert np.array_equal(a.vertices, b.vertices) and np.array_equal(a.times, b.times)
        other = simulate(g, proto, seed=10)
        assert any(a.n_spikes != b.n_spikes or not np.array_equal(a.vertices, b.vertices)
                   for a, b in zip(ds, other))

    def test_exclusion_and_window(self, run):
        _, proto, ds = run
        assert sum(t.n_spikes for t in ds) > 0
        for t in ds:
            assert (t.times >= proto.exclusion_ms).all() and (t.times < proto.window_ms).all()

    def test_receptors_respond(self, run):
        g, proto, ds = run
        # receptors of the presented class fire more in the stimulus period than others
        hits = []
        for t in ds:
            rec = set(proto.receptors[t.label].tolist())
            early = t.vertices[t.times < 25]
            hits.append(np.mean([v in rec for v in early.tolist()]) if len(early) else 0)
        assert np.mean(hits) > 30 / 200

    def test_rate_monotone_in_strength(self):
        g = erdos_renyi(150, 0.03, 5)
        recs = StimulusProtocol.random(150, seed=6, n_classes=2, receptor_count=40).receptors
        counts = []
        for scale in (0.5, 1.0, 2.0):
            proto = StimulusProtocol(receptors=recs, repeats=6, strength_range=(scale, scale))
            counts.append(sum(t.n_spikes for t in simulate(g, proto, seed=8)))
        assert counts[0] <= counts[1] <= counts[2]
