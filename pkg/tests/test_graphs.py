import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from deltacolor.errors import GraphFormatError, IllegalSpec
from deltacolor.graphs import (
    GeneratorSpec,
    Graph,
    check_proper_coloring,
    count_non_edges,
    generate,
    max_bipartite_matching,
    read_coloring,
    read_graph,
    validate_delta_colorable,
    write_coloring,
    write_graph,
)

from oracles import brute_max_matching, edge_set, ref_non_edges


def small_graph_strategy(max_n=12):
    @st.composite
    def build(draw):
        n = draw(st.integers(2, max_n))
        pairs = draw(st.sets(
            st.tuples(st.integers(0, n - 1), st.integers(0, n - 1))
            .map(lambda t: (min(t), max(t)))
            .filter(lambda t: t[0] != t[1]),
            max_size=n * (n - 1) // 2))
        return n, sorted(pairs)
    return build()


# -- container ---------------------------------------------------------------


def test_from_edges_basic():
    g = Graph.from_edges(4, [0, 1, 2], [1, 2, 3])
    assert g.n == 4
    assert g.num_edges == 3
    assert g.max_degree == 2
    assert g.degrees.tolist() == [1, 2, 2, 1]
    assert g.neighbors(1).tolist() == [0, 2]
    assert g.has_edge(2, 3) and g.has_edge(3, 2)
    assert not g.has_edge(0, 3)


def test_from_edges_rejects_loops_and_dups():
    with pytest.raises(IllegalSpec):
        Graph.from_edges(3, [0], [0])
    with pytest.raises(IllegalSpec):
        Graph.from_edges(3, [0, 1], [1, 0])
    with pytest.raises(IllegalSpec):
        Graph.from_edges(3, [0], [5])


@given(small_graph_strategy())
@settings(max_examples=60, deadline=None)
def test_csr_matches_edge_list(ng):
    n, pairs = ng
    g = Graph.from_edges(n, [u for u, _ in pairs], [v for _, v in pairs])
    es = edge_set(pairs)
    for u in range(n):
        for v in range(n):
            assert g.has_edge(u, v) == ((min(u, v), max(u, v)) in es)
    u_arr, v_arr = g.edges()
    assert edge_set(zip(u_arr.tolist(), v_arr.tolist())) == es
    # packed rows agree with degrees
    from deltacolor._bits import popcount_rows
    assert popcount_rows(g.bit_rows()).tolist() == g.degrees.tolist()


@given(small_graph_strategy())
@settings(max_examples=60, deadline=None)
def test_count_non_edges_matches_reference(ng):
    n, pairs = ng
    g = Graph.from_edges(n, [u for u, _ in pairs], [v for _, v in pairs])
    ids = list(range(0, n, 2))
    assert count_non_edges(g, ids) == ref_non_edges(pairs, ids)


def test_count_non_edges_frozen_values():
    # empty graph on 5 chosen nodes: all 10 pairs are non-edges
    g = Graph.from_edges(6, [], [])
    assert count_non_edges(g, [0, 1, 2, 3, 5]) == 10
    # complete graph minus one edge: exactly that pair
    full = [(i, j) for i in range(6) for j in range(i + 1, 6) if (i, j) != (1, 4)]
    g2 = Graph.from_edges(6, [u for u, _ in full], [v for _, v in full])
    assert g2.num_edges == 14
    assert count_non_edges(g2, range(6)) == 1


def test_common_neighbor_count():
    # two triangles sharing an edge: 0-1 common neighbors are 2 and 3
    g = Graph.from_edges(4, [0, 0, 1, 1, 0], [1, 2, 2, 3, 3])
    assert g.common_neighbor_count(0, 1) == 2
    assert g.common_neighbor_count(2, 3) == 2  # via 0 and 1


# -- proper-coloring check ---------------------------------------------------


def test_check_proper_coloring():
    g = Graph.from_edges(3, [0, 1], [1, 2])
    assert check_proper_coloring(g, np.array([0, 1, 0]), 2) == []
    bad = check_proper_coloring(g, np.array([0, 0, 1]), 2)
    assert any("monochromatic" in msg for msg in bad)
    assert check_proper_coloring(g, np.array([0, -1, 0]), 2) != []
    assert check_proper_coloring(g, np.array([0, 1, 2]), 2) != []


# -- colorability verdicts ---------------------------------------------------


def test_validate_rejects_complete_component():
    spec = GeneratorSpec(kind="reject_case", delta=5, variant="clique")
    g = generate(spec)
    v = validate_delta_colorable(g)
    assert not v.ok
    assert "complete" in v.reason
    assert sorted(v.component.tolist()) == list(range(6))


def test_validate_rejects_odd_cycle():
    g = generate(GeneratorSpec(kind="reject_case", delta=2, n=9,
                               variant="odd_cycle"))
    v = validate_delta_colorable(g)
    assert not v.ok
    assert "odd cycle" in v.reason


def test_validate_rejects_low_degree_path():
    g = Graph.from_edges(5, [0, 1, 2, 3], [1, 2, 3, 4])
    v = validate_delta_colorable(g)
    assert not v.ok


def test_validate_accepts_petersen():
    outer = [(i, (i + 1) % 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    pairs = outer + inner + spokes
    g = Graph.from_edges(10, [u for u, _ in pairs], [v for _, v in pairs])
    assert g.max_degree == 3
    assert validate_delta_colorable(g).ok


def test_validate_accepts_clique_with_pendant():
    # K4 plus a pendant is fine: the component has 5 nodes, not 4
    pairs = [(i, j) for i in range(4) for j in range(i + 1, 4)] + [(0, 4)]
    g = Graph.from_edges(5, [u for u, _ in pairs], [v for _, v in pairs])
    assert validate_delta_colorable(g).ok


# -- maximum bipartite matching ---------------------------------------------


def test_matching_frozen_small():
    got = max_bipartite_matching([0, 1, 2], [10, 11],
                                 [(0, 10), (1, 10), (2, 11)])
    assert len(got) == 2
    got2 = max_bipartite_matching("abc", "xy",
                                  [("a", "x"), ("b", "x"), ("c", "x")])
    assert len(got2) == 1


def test_matching_is_a_matching():
    edges = [(i, 100 + ((i * 7) % 6)) for i in range(12)]
    got = max_bipartite_matching(range(12), range(100, 106), edges)
    ls = [l for l, _ in got]
    rs = [r for _, r in got]
    assert len(set(ls)) == len(ls)
    assert len(set(rs)) == len(rs)
    assert all((l, r) in set(edges) for l, r in got)


@given(st.data())
@settings(max_examples=80, deadline=None)
def test_matching_matches_brute_force(data):
    nl = data.draw(st.integers(1, 7))
    nr = data.draw(st.integers(1, 7))
    edges = data.draw(st.sets(
        st.tuples(st.integers(0, nl - 1), st.integers(100, 100 + nr - 1)),
        max_size=nl * nr))
    got = max_bipartite_matching(range(nl), range(100, 100 + nr), sorted(edges))
    assert len(got) == brute_max_matching(range(nl), range(100, 100 + nr),
                                          sorted(edges))


def test_matching_hall_violation():
    # three left nodes share one right node: matching capped at 1
    edges = [(0, 9), (1, 9), (2, 9)]
    assert len(max_bipartite_matching([0, 1, 2], [9], edges)) == 1


# -- file round trips --------------------------------------------------------


def test_graph_file_roundtrip(tmp_path):
    g = generate(GeneratorSpec(kind="nice_clique", delta=5))
    path = tmp_path / "g.txt"
    write_graph(g, path)
    g2 = read_graph(path)
    assert g2.n == g.n
    u1, v1 = g.edges()
    u2, v2 = g2.edges()
    assert u1.tolist() == u2.tolist() and v1.tolist() == v2.tolist()


def test_graph_file_header_mismatch(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("3 2\n0 1\n")
    with pytest.raises(GraphFormatError):
        read_graph(path)


def test_coloring_file_roundtrip(tmp_path):
    colors = np.array([2, 0, 1, -1], dtype=np.int32)
    path = tmp_path / "c.txt"
    write_coloring(colors, path)
    back = read_coloring(path, 4)
    assert back.tolist() == colors.tolist()
    path.write_text("0 1\n0 2\n")
    with pytest.raises(GraphFormatError):
        read_coloring(path, 4)


# -- generators --------------------------------------------------------------


def test_nice_clique_shape():
    g = generate(GeneratorSpec(kind="nice_clique", delta=5))
    assert g.n == 6
    assert g.num_edges == 14
    assert not g.has_edge(0, 1)
    assert g.max_degree == 5
    assert sorted(g.degrees.tolist()) == [4, 4, 5, 5, 5, 5]
    assert g.planted.meta["non_edge"] == (0, 1)


def test_random_regular_is_regular_and_deterministic():
    spec = GeneratorSpec(kind="random_regular", delta=4, n=10, seed=7)
    g1 = generate(spec)
    g2 = generate(GeneratorSpec(kind="random_regular", delta=4, n=10, seed=7))
    assert np.array_equal(g1.indices, g2.indices)
    assert np.all(g1.degrees == 4)
    g3 = generate(GeneratorSpec(kind="random_regular", delta=4, n=10, seed=8))
    assert not np.array_equal(g1.indices, g3.indices)


def test_random_regular_odd_degree():
    g = generate(GeneratorSpec(kind="random_regular", delta=5, n=20, seed=1))
    assert np.all(g.degrees == 5)
    with pytest.raises(IllegalSpec):
        generate(GeneratorSpec(kind="random_regular", delta=5, n=9, seed=1))


def test_random_regular_mixes():
    # after swap sweeps the graph should not still be the circulant
    g = generate(GeneratorSpec(kind="random_regular", delta=4, n=50, seed=3))
    circ = sum(1 for v in range(50) if g.has_edge(v, (v + 1) % 50))
    assert circ < 25


def test_planted_acd_structure():
    spec = GeneratorSpec(kind="planted_acd", delta=32, seed=5, n_acs=3,
                         ext_degree=2)
    g = generate(spec)
    p = g.planted
    assert len(p.parts) == 3
    members = np.concatenate(p.parts)
    assert np.all(g.degrees[members] == 32)
    assert np.all(g.degrees[p.sparse] < 32)
    for part in p.parts:
        assert len(part) == 31
        assert count_non_edges(g, part) == 0  # parts are true cliques
    # no outside node reaches 2 * ext_degree edges into a part
    for part in p.parts:
        mask_counts = g.count_neighbors_in_mask(
            __import__("deltacolor._bits", fromlist=["mask_from_ids"])
            .mask_from_ids(g.n, part))
        outside = np.setdiff1d(np.arange(g.n), part)
        assert mask_counts[outside].max() < 2 * 2


def test_ordinary_lattice_structure():
    spec = GeneratorSpec(kind="ordinary_lattice", delta=24, seed=2, n_acs=4,
                         ext_degree=2)
    g = generate(spec)
    p = g.planted
    members = np.concatenate(p.parts)
    assert len(p.parts) == 4
    assert np.all(g.degrees[members] == 24)
    assert len(p.sparse) == 0
    from deltacolor._bits import mask_from_ids
    for i, part in enumerate(p.parts):
        assert count_non_edges(g, part) == 0
        counts = g.count_neighbors_in_mask(mask_from_ids(g.n, part))
        outside = np.setdiff1d(np.arange(g.n), part)
        # nobody outside is intrusive (threshold 2 e = 4)
        assert counts[outside].max() <= 2
        # every member has exactly ext_degree cross edges
        assert np.all(counts[part] == len(part) - 1)


def test_ordinary_lattice_unimportant():
    spec = GeneratorSpec(kind="ordinary_lattice", delta=24, seed=2, n_acs=4,
                         ext_degree=2, unimportant_acs=2)
    g = generate(spec)
    p = g.planted
    assert p.meta["unimportant"] == [2, 3]
    assert len(p.sparse) > 0
    members = np.concatenate(p.parts)
    assert np.all(g.degrees[members] == 24)
    from deltacolor._bits import mask_from_ids
    sparse_mask = mask_from_ids(g.n, p.sparse)
    counts = g.count_neighbors_in_mask(sparse_mask)
    for i in p.meta["unimportant"]:
        # all cross edges of an unimportant part land in the sparse blob
        assert np.all(counts[p.parts[i]] == 2)
    for i in range(2):
        assert np.all(counts[p.parts[i]] == 0)


def test_difficult_chain_structure():
    spec = GeneratorSpec(kind="difficult_chain", delta=24, seed=3, layers=3)
    g = generate(spec)
    p = g.planted
    assert [len(b) for b in p.parts] == [24, 23, 21]
    members = np.concatenate(p.parts)
    assert np.all(g.degrees[members] == 24)
    assert int(g.degrees.max()) == 24
    from deltacolor._bits import mask_from_ids
    for l, part in enumerate(p.parts):
        e = 2 ** l
        counts = g.count_neighbors_in_mask(mask_from_ids(g.n, part))
        outside = np.setdiff1d(np.arange(g.n), part)
        s = p.specials[l]
        # the designated heavy neighbor is intrusive, everyone else is not
        assert counts[s] == 2 * e
        rest = outside[outside != s]
        assert counts[rest].max() < 2 * e
        assert count_non_edges(g, part) == 0
    # heavy neighbors of layers 0..last-1 sit at the head of the next layer
    assert p.specials[0] == p.parts[1][0]
    assert p.specials[1] == p.parts[2][0]
    assert p.specials[2] == int(p.sparse[0])
    # every top-layer node keeps a link into the layer below
    low_mask = mask_from_ids(g.n, p.parts[1])
    low_counts = g.count_neighbors_in_mask(low_mask)
    assert np.all(low_counts[p.parts[2]] >= 1)


def test_difficult_chain_deterministic():
    a = generate(GeneratorSpec(kind="difficult_chain", delta=24, seed=9))
    b = generate(GeneratorSpec(kind="difficult_chain", delta=24, seed=9))
    assert np.array_equal(a.indices, b.indices)


def test_generator_rejects_bad_kind():
    with pytest.raises(IllegalSpec):
        generate(GeneratorSpec(kind="nope", delta=5))
    with pytest.raises(IllegalSpec):
        generate(GeneratorSpec(kind="nice_clique", delta=2))
