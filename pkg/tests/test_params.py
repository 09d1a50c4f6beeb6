import math

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import digraphs
from oracles import (containing_count, cycles_through, fagiolo_numerator, possible_three_cliques,
                     random_dense)
from nbfeat.digraph import Digraph, closed_neighbourhood, complete_digraph, induced_subgraph
from nbfeat.errors import UnknownParameterError, ValidationError
from nbfeat.params import (REGISTRY, TABLE1_CODES, density_coefficient, describe, evaluate,
                           evaluate_many, fagiolo_cc, parse_code, reciprocal_sum, tcc_denominator,
                           transitive_cc)

ALL_CODES = list(REGISTRY) + [c + s for c, p in REGISTRY.items() if p.gap for s in ("_high", "_low")]


class TestFagiolo:
    def test_complete_three(self):
        assert fagiolo_cc(complete_digraph(3), 0) == 1.0

    def test_transitive_middle(self, transitive_triangle):
        assert fagiolo_cc(transitive_triangle, 1) == 0.5

    def test_single_edge(self):
        g = Digraph(2, [(0, 1)])
        assert fagiolo_cc(g, 0) == fagiolo_cc(g, 1) == 0.0

    @settings(max_examples=60, deadline=None)
    @given(digraphs(min_n=1, max_n=8))
    def test_matches_formula(self, g):
        a = g.dense()
        for v in range(g.n_vertices):
            deg = int(a[v].sum() + a[:, v].sum())
            rec = int((a[v] & a[:, v]).sum())
            denom = deg * (deg - 1) - 2 * rec
            expected = fagiolo_numerator(a, v) / denom if denom else 0.0
            assert fagiolo_cc(g, v) == pytest.approx(expected)


class TestTransitive:
    def test_complete_three(self):
        assert transitive_cc(complete_digraph(3), 0) == 1.0

    def test_path(self, path3):
        assert tcc_denominator(path3, 1) == 1
        assert transitive_cc(path3, 1) == 0.0

    def test_transitive_middle(self, transitive_triangle):
        assert transitive_cc(transitive_triangle, 1) == 1.0

    @settings(max_examples=80, deadline=None)
    @given(digraphs(min_n=1, max_n=8))
    def test_denominator_counts_possible_cliques(self, g):
        a = g.dense()
        for v in range(g.n_vertices):
            assert tcc_denominator(g, v) == possible_three_cliques(a, v)

    @settings(max_examples=60, deadline=None)
    @given(digraphs(min_n=1, max_n=7))
    def test_numerator_identity(self, g):
        # S_2(v) = t(v) - sum_{j,k} a_vj a_jk a_kv
        a = g.dense()
        for v in range(g.n_vertices):
            s2 = containing_count(a, v, 2)
            assert s2 == fagiolo_numerator(a, v) - cycles_through(a, v)


class TestDensity:
    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_complete_is_one(self, k):
        assert density_coefficient(complete_digraph(5), 0, k) == pytest.approx(1.0)

    def test_path(self, path3):
        assert density_coefficient(path3, 1, 2) == 0.0

    def test_domain(self, path3):
        with pytest.raises(ValidationError):
            density_coefficient(path3, 0, 3)

    @settings(max_examples=60, deadline=None)
    @given(digraphs(min_n=3, max_n=7))
    def test_bounded(self, g):
        for v in range(g.n_vertices):
            for k in range(2, g.n_vertices):
                assert 0.0 <= density_coefficient(g, v, k) <= 1.0 + 1e-12


class TestRegistry:
    def test_table1_codes_registered(self):
        assert all(c in REGISTRY for c in TABLE1_CODES)
        assert len(TABLE1_CODES) == 13

    def test_describe(self):
        assert [c for c, _ in describe()] == list(REGISTRY)

    def test_parse(self):
        assert parse_code("blsg_low") == ("blsg", "low")
        assert parse_code("size") == ("size", None)
        with pytest.raises(UnknownParameterError):
            parse_code("nope")
        with pytest.raises(UnknownParameterError):
            parse_code("size_low")

    def test_examples(self, three_cycle, path3):
        assert evaluate("size", closed_neighbourhood(complete_digraph(4), 2)) == 4
        assert evaluate("ec", three_cycle) == 0
        assert evaluate("clsg", path3) == 0.0

    def test_default_gaps(self, three_cycle):
        assert evaluate("clsg", three_cycle) == evaluate("clsg_low", three_cycle)
        assert evaluate("asg", three_cycle) == evaluate("asg_high", three_cycle)

    def test_centre_codes_without_centre(self, transitive_triangle):
        for code in ("fcc", "tcc", "dc2", "deg", "ind", "oud", "rc_centre"):
            assert evaluate(code, transitive_triangle) == 0.0
            assert evaluate(code, transitive_triangle, centre=1) >= 0.0

    def test_rc(self):
        g = Digraph(3, [(0, 1), (1, 0), (1, 2)])
        assert reciprocal_sum(g) == 2
        assert evaluate("rc_centre", closed_neighbourhood(g, 0)) == 1

    def test_dc_small_graph_defaults_to_zero(self):
        assert evaluate("dc4", closed_neighbourhood(complete_digraph(3), 0)) == 0.0

    @pytest.mark.parametrize("n", [0, 1, 2, 5])
    def test_totality_small(self, n, rng):
        g = Digraph.from_dense(random_dense(rng, n, 0.5)) if n else Digraph(0)
        centre = 0 if n else None
        vals = evaluate_many(ALL_CODES, g, centre)
        assert all(math.isfinite(v) for v in vals)

    @settings(max_examples=40, deadline=None)
    @given(digraphs(max_n=8))
    def test_totality_random(self, g):
        centre = 0 if g.n_vertices else None
        assert all(math.isfinite(v) for v in evaluate_many(ALL_CODES, g, centre))

    def test_totality_large_sparse(self):
        rng = np.random.default_rng(3)
        g = Digraph.from_dense(random_dense(rng, 300, 0.01))
        assert all(math.isfinite(v) for v in evaluate_many(ALL_CODES, g, 0))

    def test_cc_in_unit_interval(self, rng):
        for _ in range(30):
            n = int(rng.integers(2, 31))
            g = Digraph.from_dense(random_dense(rng, n))
            for v in range(n):
                assert 0 <= fagiolo_cc(g, v) <= 1
                assert 0 <= transitive_cc(g, v) <= 1

    def test_isomorphism_invariance(self, rng):
        a = random_dense(rng, 8, 0.45)
        perm = rng.permutation(8)
        inv = np.argsort(perm)
        ga = Digraph.from_dense(a)
        gb = Digraph.from_dense(a[np.ix_(perm, perm)])   # vertex i of gb is vertex perm[i] of ga
        for v in range(8):
            va = evaluate_many(ALL_CODES, ga, v)
            vb = evaluate_many(ALL_CODES, gb, int(inv[v]))
            for code, x, y in zip(ALL_CODES, va, vb):
                assert x == pytest.approx(y, abs=1e-9), code

    def test_pure(self, rng):
        g = Digraph.from_dense(random_dense(rng, 9, 0.4))
        assert evaluate_many(ALL_CODES, g, 2) == evaluate_many(ALL_CODES, g, 2)

    def test_feature_context_uses_local_centre(self, transitive_triangle):
        nb = closed_neighbourhood(transitive_triangle, 1)
        sub = induced_subgraph(nb.graph, [1, 2])
        assert evaluate("oud", sub, centre=0) == 1.0
