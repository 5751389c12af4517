import numpy as np
import pytest
from hypothesis import given, strategies as st

from hgperfect.hypergraph import Hypergraph
from hgperfect.scan import run_all_starts
from hgperfect.verify import branching_counts
from hgperfect.witness import (
    WitnessVertex,
    build_witness_graph,
    detect,
    horizon,
    is_open,
    open_component_census,
    open_vertices,
    witness_vertex,
)

from conftest import hypergraphs


@st.composite
def block(draw, max_n=6, max_L=4):
    H = draw(hypergraphs(max_n=max_n, max_m=4))
    L = draw(st.integers(1, max_L))
    T = horizon(H.n, L)
    density = draw(st.sampled_from([0.5, 0.8, 0.95]))
    seed = draw(st.integers(0, 2**32))
    bits = (np.random.default_rng(seed).random(T) < density).astype(np.uint8)
    return H, L, bits


class TestWitnessVertex:
    def test_examples(self):
        H4 = Hypergraph.from_one_based(4, [(1, 2)])
        assert witness_vertex(H4, 0, 5).stamps == (4, 5)
        with pytest.raises(ValueError):
            witness_vertex(H4, 0, 6)
        H3 = Hypergraph.from_one_based(3, [(1, 2, 3)])
        assert witness_vertex(H3, 0, 6).stamps == (4, 5, 6)

    def test_requires_full_period(self):
        H = Hypergraph.from_one_based(4, [(1, 2)])
        with pytest.raises(ValueError):
            witness_vertex(H, 0, 1)
        with pytest.raises(IndexError):
            witness_vertex(H, 3, 5)

    @given(hypergraphs(max_n=7), st.integers(1, 4))
    def test_invariants(self, H, L):
        G = build_witness_graph(H, L)
        for e in G.vertices:
            assert len(e.stamps) == len(H.edges[e.label])
            assert all(e.anchor - H.n < s <= e.anchor for s in e.stamps)
            assert max(e.stamps) == e.anchor
            assert e.anchor % H.n in H.edges[e.label]
        assert len(G.index) == len(G.vertices)
        T = horizon(H.n, L)
        assert len(G.vertices) == sum(H.degrees[t % H.n] for t in range(H.n, T + 1))

    @given(hypergraphs(max_n=7), st.integers(1, 4))
    def test_edges_go_back_in_time(self, H, L):
        G = build_witness_graph(H, L)
        for a, outs in enumerate(G.succ):
            for b in outs:
                assert G.vertices[b].anchor < G.vertices[a].anchor


class TestOpen:
    def test_examples(self):
        e = WitnessVertex(0, 5, (4, 5))
        assert is_open(e, np.ones(8, np.uint8))
        b = np.ones(8, np.uint8)
        b[3] = 0
        assert not is_open(e, b)
        with pytest.raises(ValueError):
            is_open(e, np.ones(4, np.uint8))

    @pytest.mark.parametrize("size", [2, 3, 5])
    def test_probability(self, size):
        H = Hypergraph(size, (tuple(range(size)),))
        e = witness_vertex(H, 0, 2 * size - 1)
        rng = np.random.default_rng(size)
        trials = 20_000
        hits = sum(is_open(e, rng.integers(0, 2, 3 * size)) for _ in range(trials))
        p = 2.0**-size
        assert abs(hits / trials - p) <= 3 * np.sqrt(p * (1 - p) / trials)

    @given(block())
    def test_vectorized_matches_definition(self, hlb):
        H, L, bits = hlb
        G = build_witness_graph(H, L)
        expected = sorted((e.anchor, e.label) for e, ok in zip(G.vertices, G.open_mask(bits)) if ok)
        labels, anchors = open_vertices(H, bits, L)
        assert sorted(zip(anchors.tolist(), labels.tolist())) == expected


class TestDetect:
    def test_all_zero(self, path3):
        assert not detect(path3, np.zeros(horizon(3, 3), np.uint8), 3)

    @pytest.mark.parametrize("L", [1, 2, 3, 5])
    def test_single_full_edge_all_ones(self, L):
        H = Hypergraph(4, ((0, 1, 2, 3),))
        assert detect(H, np.ones(horizon(4, L), np.uint8), L)

    def test_length_mismatch(self, path3):
        with pytest.raises(ValueError):
            detect(path3, np.zeros(5, np.uint8), 1)
        with pytest.raises(ValueError):
            detect(path3, np.zeros(3, np.uint8), 0)

    def test_no_edges(self):
        H = Hypergraph(3, ())
        assert not detect(H, np.ones(horizon(3, 2), np.uint8), 2)

    @given(block())
    def test_matches_explicit_bfs(self, hlb):
        H, L, bits = hlb
        G = build_witness_graph(H, L)
        assert detect(H, bits, L) == (G.bfs_depth(bits) >= L)

    @given(block())
    def test_verdict_implies_induced_open_path(self, hlb):
        H, L, bits = hlb
        if detect(H, bits, L):
            assert build_witness_graph(H, L).has_induced_open_path(bits, L)

    @given(block(max_n=5, max_L=3))
    def test_soundness(self, hlb):
        H, L, bits = hlb
        if not detect(H, bits, L):
            assert len(run_all_starts(H, bits)) == 1


class TestCensus:
    def test_all_zero(self, path3):
        c = open_component_census(path3, np.zeros(horizon(3, 2), np.uint8), 2)
        assert c.open_vertex_count == 0 and c.max_depth == 0 and not c.verdict

    def test_all_ones_single_edge(self, single_edge):
        c = open_component_census(single_edge, np.ones(horizon(3, 4), np.uint8), 4)
        assert c.max_depth >= 4 and all(h >= 1 for h in c.depth_histogram[:4])
        d = c.to_dict()
        assert {"open_vertex_count", "max_depth", "depth_histogram", "verdict"} <= d.keys()

    @given(block())
    def test_consistent_with_detect(self, hlb):
        H, L, bits = hlb
        c = open_component_census(H, bits, L)
        assert c.verdict == detect(H, bits, L)
        assert c.max_depth == build_witness_graph(H, L).bfs_depth(bits)

    @given(block())
    def test_shortest_path_is_induced_and_open(self, hlb):
        H, L, bits = hlb
        c = open_component_census(H, bits, L, with_path=True)
        if not c.path:
            return
        G = build_witness_graph(H, L)
        idx = [G.index[(label, anchor)] for label, anchor in c.path]
        assert len(idx) == c.max_depth
        assert G.vertices[idx[0]].anchor > G.T - H.n
        assert all(G.open_mask(bits)[i] for i in idx)
        adj = {(a, b) for a, outs in enumerate(G.succ) for b in outs}
        for i in range(len(idx)):
            for j in range(i + 1, len(idx)):
                linked = (idx[i], idx[j]) in adj or (idx[j], idx[i]) in adj
                assert linked == (j == i + 1)


class TestBranching:
    @given(hypergraphs(max_n=6, max_m=5), st.integers(1, 3))
    def test_distance_two_cap(self, H, L):
        _, violations, _ = branching_counts(H, L)
        assert violations == 0
