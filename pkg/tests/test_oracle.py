import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hgperfect.hypergraph import Hypergraph, is_independent
from hgperfect.oracle import (
    GuardExceeded,
    LabelledTree,
    chi_square,
    enumerate_independent_sets,
    enumerate_trees,
    estimate_percolation_prob,
    exact_percolation_prob,
    exact_sample,
    gw_sample,
    gw_tree_prob,
    gw_tree_prob_direct,
    tv_distance,
    wilson_interval,
)

from conftest import hypergraphs


class TestEnumeration:
    def test_counts(self, single_edge, path3):
        assert enumerate_independent_sets(single_edge).size == 7
        assert enumerate_independent_sets(Hypergraph.from_one_based(4, [(1, 2), (3, 4)])).size == 9
        assert enumerate_independent_sets(path3).size == 5

    @given(hypergraphs(max_n=10, max_m=6))
    def test_matches_filter(self, H):
        dist = enumerate_independent_sets(H)
        brute = ["".join(map(str, c)) for c in itertools.product((0, 1), repeat=H.n) if is_independent(H, c)]
        assert list(dist.support) == brute
        assert dist.prob(brute[0]) == pytest.approx(1 / len(brute))

    def test_guard(self):
        with pytest.raises(GuardExceeded):
            enumerate_independent_sets(Hypergraph(23, ((0, 1),)))

    def test_exact_sample(self, single_edge):
        dist = enumerate_independent_sets(single_edge)
        a = exact_sample(dist, np.random.default_rng(4))
        b = exact_sample(dist, np.random.default_rng(4))
        assert a.tolist() == b.tolist() and is_independent(single_edge, a)

    def test_exact_sample_unique(self):
        H = Hypergraph(2, ((0, 1),))
        dist = enumerate_independent_sets(H)
        assert dist.size == 3
        one = type(dist)(("00",), 2)
        assert exact_sample(one, np.random.default_rng(0)).tolist() == [0, 0]

    def test_exact_sample_chi_square(self, single_edge):
        dist = enumerate_independent_sets(single_edge)
        rng = np.random.default_rng(8)
        counts = Counter("".join(map(str, exact_sample(dist, rng))) for _ in range(100_000))
        assert chi_square(dict(counts), dist).pvalue > 1e-4


class TestDistances:
    def test_tv_examples(self, single_edge):
        dist = enumerate_independent_sets(single_edge)
        assert tv_distance([10] * 7, dist).distance == pytest.approx(0)
        assert tv_distance({"000": 5}, dist).distance == pytest.approx(6 / 7)
        res = tv_distance({"000": 6, "111": 1}, dist)
        assert res.out_of_support == {"111": 1} and res.out_of_support_mass == pytest.approx(1 / 7)

    def test_zero_total(self, single_edge):
        dist = enumerate_independent_sets(single_edge)
        with pytest.raises(ValueError):
            tv_distance({}, dist)
        with pytest.raises(ValueError):
            chi_square([0] * 7, dist)

    def test_chi_square_examples(self, single_edge):
        dist = enumerate_independent_sets(single_edge)
        res = chi_square([100] * 7, dist)
        assert res.statistic == 0 and res.pvalue == 1 and res.df == 6
        assert math.isinf(chi_square({"111": 1, "000": 5}, dist).statistic)

    def test_single_cell(self):
        one = enumerate_independent_sets(Hypergraph(2, ((0, 1),)))
        sub = type(one)(("00",), 2)
        res = chi_square([40], sub)
        assert res.statistic == 0 and res.pvalue == 1

    def test_pooling(self, single_edge):
        dist = enumerate_independent_sets(single_edge)
        res = chi_square([1, 2, 0, 1, 3, 0, 1], dist)
        assert res.merged and res.cells < 7

    def test_verdicts_agree(self):
        H = Hypergraph(6, ((0, 1, 2), (3, 4, 5)))
        dist = enumerate_independent_sets(H)
        rng = np.random.default_rng(2)
        fair = np.bincount(rng.integers(dist.size, size=10**5), minlength=dist.size)
        w = np.ones(dist.size)
        w[0] = 3.0
        biased = np.bincount(rng.choice(dist.size, size=10**5, p=w / w.sum()), minlength=dist.size)
        assert tv_distance(fair, dist).distance <= 0.02 and chi_square(fair, dist).pvalue >= 1e-4
        assert tv_distance(biased, dist).distance > 0.02 and chi_square(biased, dist).pvalue < 1e-4


class TestPercolation:
    def test_single_edge_exact(self):
        for n in (2, 3, 4):
            H = Hypergraph(n, (tuple(range(n)),))
            assert exact_percolation_prob(H, 1) == pytest.approx((n + 1) / 2 ** (n + 1))

    def test_monte_carlo_matches_exact(self, single_edge):
        est = estimate_percolation_prob(single_edge, 1, 10_000, 3)
        assert est.lower <= 0.25 <= est.upper
        assert est.upper - est.lower <= 0.02

    def test_exact_guard(self, single_edge):
        with pytest.raises(GuardExceeded):
            exact_percolation_prob(single_edge, 8)

    def test_long_paths_rare(self):
        H = Hypergraph(8, (tuple(range(8)),))
        assert estimate_percolation_prob(H, 12, 500, 1).successes == 0

    def test_zero_trials(self, single_edge):
        with pytest.raises(ValueError):
            estimate_percolation_prob(single_edge, 1, 0, 1)

    def test_wilson(self):
        lo, hi = wilson_interval(0, 10_000)
        assert lo == 0 and hi == pytest.approx(3.84e-4, rel=0.01)


@pytest.fixture
def chain3():
    return Hypergraph.from_one_based(4, [(1, 2), (2, 3), (3, 4)])


class TestGaltonWatson:
    def test_tiny_weights_give_root(self, chain3):
        rng = np.random.default_rng(0)
        assert all(gw_sample(chain3, 0, 1e-6, rng).size == 1 for _ in range(200))

    def test_single_edge_is_geometric(self, single_edge):
        rng = np.random.default_rng(5)
        sizes = [gw_sample(single_edge, 0, 0.3, rng).size for _ in range(20_000)]
        assert np.mean(sizes) == pytest.approx(1 / 0.7, rel=0.02)
        tree = gw_sample(single_edge, 0, 0.3, rng)
        assert all(len(node.children) <= 1 for node in tree.nodes())

    def test_depth_cap(self, single_edge):
        rng = np.random.default_rng(1)
        trees = [gw_sample(single_edge, 0, 0.5, rng, depth_cap=1) for _ in range(400)]
        assert all(t.size == 1 for t in trees)
        flagged = sum(t.truncated for t in trees)
        assert 150 < flagged < 250

    def test_node_cap_stops_supercritical(self, chain3):
        tree = gw_sample(chain3, 0, 0.95, np.random.default_rng(0), node_cap=500)
        assert tree.truncated and tree.size <= 500

    def test_weight_range(self, chain3):
        with pytest.raises(ValueError):
            gw_sample(chain3, 0, 1.0, np.random.default_rng(0))

    def test_root_only_probability(self, single_edge, chain3):
        assert gw_tree_prob(single_edge, 0, LabelledTree(0), 0.3) == pytest.approx(0.7)
        # chain3: edge 0 has both others within distance 2
        assert gw_tree_prob(chain3, 0, LabelledTree(0), 0.2) == pytest.approx(0.8**3)

    def test_invalid_tree(self, chain3):
        with pytest.raises(ValueError):
            gw_tree_prob(chain3, 1, LabelledTree(0), 0.2)
        twins = LabelledTree.make(0, [LabelledTree(1), LabelledTree(1)])
        with pytest.raises(ValueError):
            gw_tree_prob(chain3, 0, twins, 0.2)
        far = Hypergraph.from_one_based(6, [(1, 2), (3, 4), (5, 6)])
        with pytest.raises(ValueError):
            gw_tree_prob(far, 0, LabelledTree.make(0, [LabelledTree(1)]), 0.2)

    @given(hypergraphs(max_n=6, max_m=3), st.floats(0.05, 0.5))
    def test_closed_form_matches_direct(self, H, x):
        if H.m == 0:
            return
        for tree in enumerate_trees(H, 0, 4):
            assert gw_tree_prob(H, 0, tree, x) == pytest.approx(gw_tree_prob_direct(H, 0, tree, x))

    def test_mass_at_most_one(self, chain3):
        trees = enumerate_trees(chain3, 0, 5)
        assert len({t.canonical() for t in trees}) == len(trees)
        total = sum(gw_tree_prob(chain3, 0, t, 0.2) for t in trees)
        assert 0.9 < total <= 1.0

    def test_canonical_ignores_child_order(self):
        a = LabelledTree.make(0, [LabelledTree(2), LabelledTree.make(1, [LabelledTree(0)])])
        b = LabelledTree.make(0, [LabelledTree.make(1, [LabelledTree(0)]), LabelledTree(2)])
        assert a == b and a.canonical() == b.canonical()
        assert LabelledTree.from_canonical(a.canonical()) == a
