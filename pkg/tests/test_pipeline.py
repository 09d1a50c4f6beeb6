import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import random_dense
from nbfeat.digraph import Digraph, closed_neighbourhood, complete_digraph, induced_subgraph
from nbfeat.errors import GraphFormatError, UnknownParameterError, ValidationError
from nbfeat.params import evaluate
from nbfeat.pipeline import (DEFAULT_M, BinaryDynamicsSet, BinSpec, FeatureMatrix, Trial,
                             active_states, build_filtration_layer, centre_firing_matrix, featurise,
                             featurise_many, parameter_table, rank_vertices, read_features,
                             read_spikes, select_neighbourhoods, write_features, write_spikes)


def trial(spikes, label=0, tid=0):
    v = [s[0] for s in spikes]
    t = [s[1] for s in spikes]
    return Trial(label, v, t, tid)


class TestBins:
    def test_default_interval(self):
        b = BinSpec()
        assert (b.start, b.stop, b.n_bins, b.width) == (10, 60, 2, 25)

    def test_first_bin(self):
        s = active_states(trial([(7, 12.3)]), BinSpec())
        assert s[0].tolist() == [7] and s[1].tolist() == []

    def test_half_open_boundary(self):
        s = active_states(trial([(7, 35.0)]), BinSpec())
        assert s[0].tolist() == [] and s[1].tolist() == [7]

    def test_last_bin_closed_and_outside_ignored(self):
        b = BinSpec()
        assert b.assign([10, 60, 9.99, 60.01]).tolist() == [0, 1, -1, -1]

    @given(st.lists(st.floats(0, 100, allow_nan=False), max_size=40),
           st.integers(1, 7))
    def test_partition(self, times, k):
        b = BinSpec(5, 80, k)
        idx = b.assign(times)
        for t, i in zip(times, idx.tolist()):
            if 5 <= t <= 80:
                lo, hi = b.edges()[i], b.edges()[i + 1]
                assert lo <= t and (t < hi or (i == k - 1 and t == hi))
            else:
                assert i == -1

    def test_parse(self):
        assert BinSpec.parse("10:200:4") == BinSpec(10, 200, 4)
        with pytest.raises(ValidationError):
            BinSpec.parse("10-200")
        with pytest.raises(ValidationError):
            BinSpec(5, 5, 1)


class TestSelection:
    def test_default_m(self):
        assert DEFAULT_M == 50

    def test_ties_by_id(self):
        nbs = select_neighbourhoods(complete_digraph(5), "size", 2, "top")
        assert [nb.centre for nb in nbs] == [0, 1]

    def test_star_hub(self, star):
        assert select_neighbourhoods(star, "size", 1, "top")[0].centre == 0

    def test_bottom(self, star):
        assert [nb.centre for nb in select_neighbourhoods(star, "size", 2, "bottom")] == [1, 2]

    def test_errors(self, star):
        with pytest.raises(UnknownParameterError):
            select_neighbourhoods(star, "nope", 1)
        with pytest.raises(ValidationError):
            select_neighbourhoods(star, "size", 5)

    def test_top_and_bottom_complement(self, rng):
        values = rng.permutation(20).astype(float)
        top = set(rank_vertices(values, "top")[:7].tolist())
        bottom = set(rank_vertices(values, "bottom")[:13].tolist())
        assert top | bottom == set(range(20)) and not top & bottom

    def test_parallel_table_matches_serial(self, rng):
        g = Digraph.from_dense(random_dense(rng, 30, 0.15))
        codes = ["tcc", "fcc", "nbc", "asg"]
        assert np.array_equal(parameter_table(g, codes), parameter_table(g, codes, threads=3))


class TestFeaturise:
    def test_silent_trial(self, star):
        nbs = select_neighbourhoods(star, "size", 4)
        f = featurise(trial([]), nbs, BinSpec(), "size")
        assert f.values.shape == (4, 2) and not f.values.any()

    def test_all_members_fire(self, star):
        nb = closed_neighbourhood(star, 0)
        f = featurise(trial([(v, 11.0) for v in range(4)]), [nb], BinSpec(), "size")
        assert f.values.tolist() == [[4, 0]]

    def test_flatten_concatenates_columns(self):
        f = FeatureMatrix(np.array([[1, 2], [3, 4], [5, 6]]), 0)
        assert f.flattened.tolist() == [1, 3, 5, 2, 4, 6]

    def test_flattened_length(self, rng):
        g = Digraph.from_dense(random_dense(rng, 60, 0.05))
        nbs = select_neighbourhoods(g, "size", 50)
        assert len(featurise(trial([(1, 20.0)]), nbs, BinSpec(), "size").flattened) == 100

    def test_active_subgraph_is_induced(self, transitive_triangle):
        # 0->1, 1->2, 0->2; vertices 0 and 2 fire in bin 1
        nb = closed_neighbourhood(transitive_triangle, 0)
        t = trial([(0, 12), (2, 13)])
        assert featurise(t, [nb], BinSpec(), "tcc").values[0, 0] == 0.0
        assert featurise(t, [nb], BinSpec(), "ec").values[0, 0] == 1.0   # 2 vertices - 1 edge

    def test_centre_codes_need_active_centre(self, star):
        nb = closed_neighbourhood(star, 0)
        quiet_centre = trial([(1, 12), (2, 12)])
        assert featurise(quiet_centre, [nb], BinSpec(), "deg").values[0, 0] == 0
        loud_centre = trial([(0, 12), (1, 12), (2, 12)])
        assert featurise(loud_centre, [nb], BinSpec(), "deg").values[0, 0] == 2

    def test_matches_direct_evaluation(self, rng):
        g = Digraph.from_dense(random_dense(rng, 25, 0.2))
        nbs = select_neighbourhoods(g, "size", 5)
        active = rng.choice(25, 12, replace=False)
        t = trial([(int(v), 20.0) for v in active])
        f = featurise(t, nbs, BinSpec(), "nbc")
        for m, nb in enumerate(nbs):
            keep = [i for i, v in enumerate(nb.members) if v in set(active.tolist())]
            assert f.values[m, 0] == evaluate("nbc", induced_subgraph(nb.graph, keep))

    @settings(max_examples=30, deadline=None)
    @given(st.data())
    def test_order_invariant_monotone_bounded(self, data):
        rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
        g = Digraph.from_dense(random_dense(rng, 15, 0.25))
        nbs = select_neighbourhoods(g, "size", 4)
        n = data.draw(st.integers(0, 30))
        v = rng.integers(0, 15, n)
        t = rng.uniform(0, 70, n)
        base = featurise(Trial(0, v, t), nbs, BinSpec(), "size").values
        perm = rng.permutation(n)
        assert np.array_equal(featurise(Trial(0, v[perm], t[perm]), nbs, BinSpec(), "size").values, base)
        more = featurise(Trial(0, np.append(v, rng.integers(0, 15, 5)),
                               np.append(t, rng.uniform(0, 70, 5))), nbs, BinSpec(), "size").values
        assert (more >= base).all()
        sizes = np.array([nb.size for nb in nbs])
        assert (base <= sizes[:, None]).all()

    def test_featurise_many_parallel(self, rng):
        g = Digraph.from_dense(random_dense(rng, 20, 0.2))
        nbs = select_neighbourhoods(g, "tcc", 3)
        ds = BinaryDynamicsSet([Trial(i % 2, rng.integers(0, 20, 10), rng.uniform(0, 60, 10), i)
                                for i in range(12)], 20)
        x1, y1 = featurise_many(ds, nbs, BinSpec(), "fcc")
        x2, y2 = featurise_many(ds, nbs, BinSpec(), "fcc", threads=3)
        assert np.array_equal(x1, x2) and np.array_equal(y1, y2)
        assert x1.shape == (12, 6)

    def test_centre_firing_matrix(self):
        t = trial([(3, 12), (5, 40), (5, 11)])
        f = centre_firing_matrix(t, [5, 3, 9], BinSpec())
        assert f.values.tolist() == [[1, 1], [1, 0], [0, 0]]


class TestFiles:
    def test_spike_round_trip(self, tmp_path):
        ds = BinaryDynamicsSet([Trial(2, [1, 0], [15.5, 0.1], 0), Trial(1, [], [], 1),
                                Trial(0, [3], [1 / 3], 5)], 4)
        write_spikes(ds, tmp_path / "s.csv")
        back = read_spikes(tmp_path / "s.csv", 4)
        assert [t.trial_id for t in back] == [0, 1, 5]
        assert back.labels.tolist() == [2, 1, 0]
        assert back.trials[2].times.tolist() == [1 / 3]
        assert back.trials[1].n_spikes == 0

    def test_non_contiguous_trials(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("trial,label,vertex,time_ms\n1,0,2,5\n0,1,3,4\n1,0,4,6\n")
        ds = read_spikes(p)
        assert [t.trial_id for t in ds] == [0, 1]
        assert ds.trials[1].vertices.tolist() == [2, 4]

    @pytest.mark.parametrize("body, line", [
        ("0,1,2\n", 2), ("0,1,x,3\n", 2), ("0,1,2,3\n0,2,1,1\n", 3)])
    def test_bad_rows(self, tmp_path, body, line):
        p = tmp_path / "s.csv"
        p.write_text("trial,label,vertex,time_ms\n" + body)
        with pytest.raises(GraphFormatError, match=f"line {line}"):
            read_spikes(p)

    def test_out_of_range_vertex(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("trial,label,vertex,time_ms\n0,0,9,1\n")
        with pytest.raises(ValidationError):
            read_spikes(p, 5)

    def test_feature_round_trip(self, tmp_path, rng):
        x = rng.normal(size=(5, 4))
        y = np.array([0, 1, 0, 2, 1])
        write_features(x, y, tmp_path / "f.csv")
        x2, y2 = read_features(tmp_path / "f.csv")
        assert np.array_equal(x, x2) and np.array_equal(y, y2)
        assert (tmp_path / "f.csv").read_text().splitlines()[0] == "label,v_1,v_2,v_3,v_4"


class TestFiltration:
    def test_last_layer_is_whole_graph(self, rng):
        g = Digraph.from_dense(random_dense(rng, 9, 0.3))
        layer = build_filtration_layer(g, rng.permutation(9), 8)
        assert layer.members.tolist() == list(range(9))
        assert layer.graph == g

    def test_star_hub_highest(self, star):
        layer = build_filtration_layer(star, [1, 2, 3, 0], 0)
        assert layer.graph == star

    def test_edgeless_first_layer(self):
        layer = build_filtration_layer(Digraph(5), [0, 1, 2, 3, 4], 0)
        assert layer.members.tolist() == [4] and layer.graph.n_vertices == 1

    def test_range(self, star):
        with pytest.raises(ValidationError):
            build_filtration_layer(star, [0, 1, 2, 3], 4)
        with pytest.raises(ValidationError):
            build_filtration_layer(star, [0, 1, 2, 2], 0)

    def test_nested(self, rng):
        g = Digraph.from_dense(random_dense(rng, 12, 0.2))
        order = rng.permutation(12)
        prev = None
        for n in range(12):
            layer = build_filtration_layer(g, order, n)
            edges = {(int(layer.members[a]), int(layer.members[b])) for a, b in layer.graph.edges}
            verts = set(layer.members.tolist())
            if prev is not None:
                assert prev[0] <= verts and prev[1] <= edges
            prev = (verts, edges)
