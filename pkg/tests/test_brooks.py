"""Fallback coloring oracle against brute-force colorability."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from deltacolor.brooks import (
    _articulation_point,
    _split_at_cut,
    brooks_coloring,
)
from deltacolor.errors import IllegalSpec, InvariantViolated
from deltacolor.graphs import Graph, check_proper_coloring

import oracles


def from_pairs(n, pairs):
    return Graph.from_edges(n, [p[0] for p in pairs], [p[1] for p in pairs])


def complete(n, skip=()):
    return from_pairs(n, [(i, j) for i in range(n) for j in range(i + 1, n)
                          if (i, j) not in skip])


def cycle(n):
    return from_pairs(n, [(i, (i + 1) % n) for i in range(n)])


def petersen():
    outer = [(i, (i + 1) % 5) for i in range(5)]
    inner = [(5, 7), (7, 9), (9, 6), (6, 8), (8, 5)]
    spokes = [(i, i + 5) for i in range(5)]
    return from_pairs(10, outer + inner + spokes)


def barbell_with_center():
    # two K5-minus-an-edge blocks tied through one shared center: the
    # graph is 4-regular and the center is its only articulation point
    pairs = [(i, j) for i in range(5) for j in range(i + 1, 5)
             if (i, j) != (0, 1)]
    pairs += [(i, j) for i in range(5, 10) for j in range(i + 1, 10)
              if (i, j) != (5, 6)]
    pairs += [(10, 0), (10, 1), (10, 5), (10, 6)]
    return from_pairs(11, pairs)


class TestBrooksColoring:
    def test_full_clique_component_rejected(self):
        with pytest.raises(InvariantViolated, match="complete"):
            brooks_coloring(complete(5))

    def test_near_clique_colored_within_degree(self):
        g = complete(5, skip=((0, 1),))
        colors = brooks_coloring(g)
        assert check_proper_coloring(g, colors, 4) == []

    def test_three_regular_needs_pair_trick(self):
        g = petersen()
        colors = brooks_coloring(g)
        assert check_proper_coloring(g, colors, 3) == []

    def test_even_cycle_two_colors(self):
        g = cycle(6)
        colors = brooks_coloring(g)
        assert check_proper_coloring(g, colors, 2) == []

    def test_odd_cycle_rejected(self):
        with pytest.raises(InvariantViolated, match="odd cycle"):
            brooks_coloring(cycle(7))

    def test_mixed_components(self):
        pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
        pairs = [p for p in pairs if p != (0, 1)]
        pairs += [(4 + i, 4 + (i + 1) % 6) for i in range(6)]
        g = from_pairs(11, pairs)  # node 10 isolated
        colors = brooks_coloring(g)
        assert check_proper_coloring(g, colors, g.max_degree) == []
        assert colors[10] == 0

    def test_palette_below_degree_rejected(self):
        g = from_pairs(4, [(0, 1), (0, 2), (0, 3)])
        with pytest.raises(IllegalSpec):
            brooks_coloring(g, num_colors=2)

    def test_regular_graph_with_cut_vertex(self):
        g = barbell_with_center()
        assert (g.degrees == 4).all()
        colors = brooks_coloring(g)
        assert check_proper_coloring(g, colors, 4) == []

    def test_articulation_found_and_split_colors(self):
        g = barbell_with_center()
        ids = np.arange(g.n, dtype=np.int64)
        assert _articulation_point(g, ids) == 10
        colors = np.full(g.n, -1, dtype=np.int32)
        _split_at_cut(g, ids, 10, 4, colors)
        assert colors[10] == 0
        assert check_proper_coloring(g, colors, 4) == []

    @settings(max_examples=60, deadline=None)
    @given(st.data())
    def test_matches_brute_force_existence(self, data):
        n = data.draw(st.integers(3, 8))
        all_pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        pairs = data.draw(st.sets(st.sampled_from(all_pairs)))
        pairs = sorted(pairs)
        g = from_pairs(n, pairs)
        P = max(g.max_degree, 1)
        feasible = oracles.can_list_color(
            n, pairs, [list(range(P)) for _ in range(n)])
        if feasible:
            colors = brooks_coloring(g)
            assert check_proper_coloring(g, colors, P) == []
        else:
            with pytest.raises(InvariantViolated):
                brooks_coloring(g)
