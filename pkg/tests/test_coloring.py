"""Coloring-state and trial-loop behavior on small hand-checked graphs."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from deltacolor.coloring import (
    ColoringState,
    build_pair_graph,
    graytone_color,
    graytone_split,
    instance_edges,
    pair_color_rounds,
    repair_rainbow,
    same_color_pair,
    slack_generation,
    solve_d1lc,
    trial_completion,
    disjoint_window_trial,
)
from deltacolor.errors import (
    DegreeBoundViolated,
    InvariantViolated,
    IterationCapExceeded,
    NotD1LC,
    NotGraytone,
    RelayUnavailable,
)
from deltacolor.graphs import Graph, check_proper_coloring
from deltacolor.simulator import Network

import oracles


def from_pairs(n, pairs):
    return Graph.from_edges(n, [p[0] for p in pairs], [p[1] for p in pairs])


def cycle(n):
    return from_pairs(n, [(i, (i + 1) % n) for i in range(n)])


def complete(n, skip=()):
    return from_pairs(n, [(i, j) for i in range(n) for j in range(i + 1, n)
                          if (i, j) not in skip])


def all_nodes(g):
    return np.arange(g.n, dtype=np.int64)


class TestState:
    def test_assign_tracks_used_and_degrees(self):
        g = cycle(5)
        st_ = ColoringState(g, 3)
        st_.assign(np.array([0]), np.array([2]))
        assert st_.colors[0] == 2
        assert st_.used[1, 2] and st_.used[4, 2]
        assert not st_.used[2, 2]
        assert st_.uncolored_deg[1] == 1 and st_.uncolored_deg[2] == 2

    def test_double_color_raises(self):
        g = cycle(4)
        st_ = ColoringState(g, 2)
        st_.assign(np.array([0]), np.array([0]))
        with pytest.raises(InvariantViolated):
            st_.assign(np.array([0]), np.array([1]))

    def test_conflicting_assign_raises(self):
        g = cycle(4)
        st_ = ColoringState(g, 2)
        st_.assign(np.array([0]), np.array([0]))
        with pytest.raises(InvariantViolated):
            st_.assign(np.array([1]), np.array([0]))

    def test_unassign_rebuilds_neighbor_rows(self):
        g = complete(4)
        st_ = ColoringState(g, 4)
        st_.assign(np.array([0, 1]), np.array([0, 1]))
        st_.unassign(0)
        assert st_.colors[0] == -1
        # color 0 is free again everywhere, color 1 still burned around 1
        assert not st_.used[2, 0] and not st_.used[3, 0]
        assert st_.used[2, 1] and st_.used[0, 1]
        assert st_.uncolored_deg[2] == 2

    def test_check_partial_catches_planted_clash(self):
        g = cycle(4)
        st_ = ColoringState(g, 2)
        st_.colors[0] = 1
        st_.colors[1] = 1
        assert st_.check_partial() != []

    def test_snapshot_restore(self):
        g = cycle(6)
        st_ = ColoringState(g, 3)
        snap = st_.snapshot()
        st_.assign(np.array([2]), np.array([1]))
        st_.restore(snap)
        assert st_.colors[2] == -1
        assert not st_.used[1, 1]

    def test_instance_edges_filters(self):
        g = cycle(6)
        eu, ev = instance_edges(g, np.array([0, 1, 2, 4]))
        got = oracles.edge_set(zip(eu.tolist(), ev.tolist()))
        assert got == {(0, 1), (1, 2)}


class TestSlackGeneration:
    def test_zero_rate_keeps_nothing(self):
        g = cycle(8)
        st_ = ColoringState(g, 2)
        net = Network(g, seed=1)
        kept = slack_generation(g, st_, net, all_nodes(g), chi=2,
                                rate=0.0, tag=7)
        assert len(kept) == 0
        assert net.rounds >= 1

    def test_full_rate_single_color_clique_keeps_nothing(self):
        # everyone tries color 0, so all trials clash pairwise
        g = complete(4)
        st_ = ColoringState(g, 4)
        net = Network(g, seed=3)
        kept = slack_generation(g, st_, net, all_nodes(g), chi=1,
                                rate=1.0, tag=0)
        assert len(kept) == 0

    def test_kept_colors_are_proper_and_in_window(self):
        g = cycle(40)
        st_ = ColoringState(g, 3)
        net = Network(g, seed=11)
        kept = slack_generation(g, st_, net, all_nodes(g), chi=2,
                                rate=0.5, tag=1)
        assert len(kept) > 0
        assert st_.check_partial() == []
        assert st_.colors[kept].max() < 2

    def test_deterministic_given_seed_and_tag(self):
        g = cycle(40)
        runs = []
        for _ in range(2):
            st_ = ColoringState(g, 3)
            net = Network(g, seed=5)
            slack_generation(g, st_, net, all_nodes(g), chi=2,
                             rate=0.5, tag=9)
            runs.append(st_.colors.copy())
        assert np.array_equal(runs[0], runs[1])

    def test_respects_existing_colors(self):
        g = cycle(4)
        st_ = ColoringState(g, 2)
        st_.assign(np.array([0]), np.array([0]))
        net = Network(g, seed=2)
        for tag in range(6):
            slack_generation(g, st_, net, st_.uncolored(all_nodes(g)),
                             chi=1, rate=1.0, tag=tag)
        assert st_.check_partial() == []
        assert st_.colors[1] == -1 and st_.colors[3] == -1


class TestTwoSetSlack:
    def test_windows_are_disjoint(self):
        g = cycle(20)
        st_ = ColoringState(g, 4)
        net = Network(g, seed=4)
        s1 = np.arange(0, 20, 2)
        s2 = np.arange(1, 20, 2)
        kept = disjoint_window_trial(g, st_, net, s1, s2, chi=2, tag=0)
        assert len(kept) > 0
        c1 = st_.colors[s1]
        c2 = st_.colors[s2]
        assert c1[c1 >= 0].max(initial=-1) < 2
        assert c2[c2 >= 0].min(initial=99) >= 2
        assert st_.check_partial() == []

    def test_overlapping_sets_raise(self):
        g = cycle(6)
        st_ = ColoringState(g, 4)
        net = Network(g, seed=0)
        with pytest.raises(InvariantViolated):
            disjoint_window_trial(g, st_, net, np.array([0, 1]),
                                np.array([1, 2]), chi=2, tag=0)

    def test_window_overflow_raises(self):
        g = cycle(6)
        st_ = ColoringState(g, 3)
        net = Network(g, seed=0)
        with pytest.raises(InvariantViolated):
            disjoint_window_trial(g, st_, net, np.array([0]),
                                np.array([3]), chi=2, tag=0)


class TestGraytone:
    def test_split_on_flawed_clique(self):
        # K5 without edge (0,1), palette 4: the non-edge ends carry the
        # surplus, everyone else leans on them
        g = complete(5, skip=((0, 1),))
        st_ = ColoringState(g, 4)
        gray, grayish, leftover = graytone_split(g, st_, all_nodes(g))
        assert gray.tolist() == [0, 1]
        assert grayish.tolist() == [2, 3, 4]
        assert len(leftover) == 0

    def test_full_clique_is_not_graytone(self):
        g = complete(5)
        st_ = ColoringState(g, 4)
        net = Network(g, seed=1)
        with pytest.raises(NotGraytone):
            graytone_color(g, st_, net, all_nodes(g), tag=1)

    def test_deferred_neighbor_grants_gray(self):
        # whole 5-cycle has no surplus on 2 colors, but holding one node
        # out of the instance grays its neighbors
        g = cycle(5)
        st_ = ColoringState(g, 2)
        h = np.array([0, 1, 2, 3])
        gray, grayish, leftover = graytone_split(g, st_, h)
        assert gray.tolist() == [0, 3]
        assert grayish.tolist() == [1, 2]
        assert len(leftover) == 0
        net = Network(g, seed=6)
        out = graytone_color(g, st_, net, h, tag=2)
        assert out["gray"] == 2 and out["grayish"] == 2
        assert (st_.colors[h] >= 0).all()
        assert st_.colors[4] == -1
        assert st_.check_partial() == []

    def test_colors_flawed_clique_fully(self):
        g = complete(5, skip=((0, 1),))
        st_ = ColoringState(g, 4)
        net = Network(g, seed=9)
        graytone_color(g, st_, net, all_nodes(g), tag=3)
        assert (st_.colors >= 0).all()
        assert check_proper_coloring(g, st_.colors, 4) == []

    def test_duplicate_next_door_grants_gray(self):
        # node 2 has degree 3 on palette 3: it is gray exactly when its two
        # colored neighbors burned one color between them, not two
        g = from_pairs(5, [(0, 2), (1, 2), (2, 3), (3, 4)])
        st_ = ColoringState(g, 3)
        st_.assign(np.array([0, 1, 4]), np.array([1, 1, 0]))
        gray, _, leftover = graytone_split(g, st_, np.array([2, 3]))
        assert 2 in gray.tolist()
        assert len(leftover) == 0
        st2 = ColoringState(g, 3)
        st2.assign(np.array([0, 1, 4]), np.array([1, 2, 0]))
        gray2, grayish2, _ = graytone_split(g, st2, np.array([2, 3]))
        assert 2 not in gray2.tolist()
        assert 2 in grayish2.tolist()


class TestD1lc:
    def test_margin_violation_raises(self):
        g = complete(5)
        st_ = ColoringState(g, 4)
        net = Network(g, seed=1)
        with pytest.raises(NotD1LC):
            solve_d1lc(g, st_, net, all_nodes(g), tag=1)

    def test_colors_cycle_with_three_colors(self):
        g = cycle(7)
        st_ = ColoringState(g, 3)
        net = Network(g, seed=2)
        rounds = solve_d1lc(g, st_, net, all_nodes(g), tag=2)
        assert rounds >= 1
        assert (st_.colors >= 0).all()
        assert check_proper_coloring(g, st_.colors, 3) == []
        assert any(label.startswith("d1lc/") for label, _, _ in
                   net.report().phases)

    def test_round_cap_raises(self):
        g = cycle(7)
        st_ = ColoringState(g, 3)
        net = Network(g, seed=2)
        with pytest.raises(IterationCapExceeded):
            solve_d1lc(g, st_, net, all_nodes(g), tag=2, max_rounds=0)

    def test_window_restriction_is_honored(self):
        g = cycle(8)
        st_ = ColoringState(g, 6)
        net = Network(g, seed=3)
        solve_d1lc(g, st_, net, all_nodes(g), tag=4, lo=2, hi=5)
        assert st_.colors.min() >= 2 and st_.colors.max() < 5

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 14), st.integers(0, 10**6))
    def test_degree_plus_one_always_solves(self, n, seed):
        rng = np.random.default_rng(seed)
        edges = [(i, j) for i in range(n) for j in range(i + 1, n)
                 if rng.random() < 0.4]
        if not edges:
            edges = [(0, 1)]
        g = from_pairs(n, edges)
        st_ = ColoringState(g, g.max_degree + 1)
        net = Network(g, seed=seed)
        solve_d1lc(g, st_, net, all_nodes(g), tag=5)
        assert (st_.colors >= 0).all()
        assert check_proper_coloring(g, st_.colors, g.max_degree + 1) == []


class TestTrialCompletion:
    def test_odd_cycle_on_two_colors_reports_stuck(self):
        g = cycle(5)
        st_ = ColoringState(g, 2)
        net = Network(g, seed=8)
        stuck = trial_completion(g, st_, net, all_nodes(g), tag=1)
        assert len(stuck) >= 1
        assert st_.check_partial() == []
        colored = set(np.flatnonzero(st_.colors >= 0).tolist())
        assert colored.isdisjoint(stuck.tolist())

    def test_slack_everywhere_completes(self):
        g = cycle(6)
        st_ = ColoringState(g, 3)
        net = Network(g, seed=8)
        stuck = trial_completion(g, st_, net, all_nodes(g), tag=2)
        assert len(stuck) == 0
        assert (st_.colors >= 0).all()
        assert st_.check_partial() == []

    def test_repair_frees_a_color(self):
        # path 1 - 0 - 2 on two colors: neighbors die on both colors,
        # repair moves one onto the other's color
        g = from_pairs(3, [(0, 1), (0, 2)])
        st_ = ColoringState(g, 2)
        st_.assign(np.array([1, 2]), np.array([0, 1]))
        assert st_.avail_counts(np.array([0]))[0] == 0
        assert repair_rainbow(g, st_, 0)
        assert st_.avail_counts(np.array([0]))[0] == 1
        free = int(np.flatnonzero(~st_.used[0])[0])
        st_.assign(np.array([0]), np.array([free]))
        assert st_.check_partial() == []

    def test_repair_reports_failure_when_neighbors_clique(self):
        g = complete(3)
        st_ = ColoringState(g, 2)
        st_.assign(np.array([1, 2]), np.array([0, 1]))
        assert not repair_rainbow(g, st_, 0)


class TestSameColorPair:
    def test_pairs_get_one_color(self):
        g = complete(6, skip=((0, 1),))
        st_ = ColoringState(g, 5)
        net = Network(g, seed=1)
        c = same_color_pair(g, st_, net, 0, 1, tag=1, min_common=2.5,
                            max_burn=2.0)
        assert st_.colors[0] == c and st_.colors[1] == c
        assert st_.check_partial() == []
        assert any(label.startswith("pair/") for label, _, _ in
                   net.report().phases)

    def test_adjacent_pair_rejected(self):
        g = complete(4)
        st_ = ColoringState(g, 3)
        net = Network(g, seed=1)
        with pytest.raises(InvariantViolated):
            same_color_pair(g, st_, net, 0, 1, tag=1)

    def test_burned_joint_palette_rejected(self):
        g = from_pairs(3, [(0, 1), (0, 2)])
        st_ = ColoringState(g, 1)
        st_.assign(np.array([0]), np.array([0]))
        net = Network(g, seed=1)
        with pytest.raises(InvariantViolated):
            same_color_pair(g, st_, net, 1, 2, tag=1)

    def test_common_neighbor_floor_rejected(self):
        g = from_pairs(4, [(0, 1), (1, 2), (2, 3)])
        st_ = ColoringState(g, 2)
        net = Network(g, seed=1)
        with pytest.raises(InvariantViolated):
            same_color_pair(g, st_, net, 0, 2, tag=1, min_common=2.0)


def bridged_triangles():
    # two triangles joined so that (0, 4) and (1, 5) are non-adjacent
    # pairs with relays 3 and 4
    return from_pairs(6, [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5),
                                (4, 5), (2, 3), (0, 3), (1, 4)])


class TestPairGraph:
    def test_build_and_color(self):
        g = bridged_triangles()
        st_ = ColoringState(g, 5)
        net = Network(g, seed=21)
        pg = build_pair_graph(g, st_, [(0, 4), (1, 5)], degree_cap=1,
                              single_floor=4, joint_floor=3)
        assert pg.max_degree == 1
        assert pg.pairs[0].relay in (1, 3)
        history = pair_color_rounds(g, st_, net, pg, tag=1)
        assert st_.colors[0] == st_.colors[4]
        assert st_.colors[1] == st_.colors[5]
        assert st_.check_partial() == []
        attempts = sum(a for a, _ in history)
        wins = sum(w for _, w in history)
        assert wins == 2 and attempts >= 2

    def test_degree_cap_enforced(self):
        g = bridged_triangles()
        st_ = ColoringState(g, 5)
        with pytest.raises(DegreeBoundViolated):
            build_pair_graph(g, st_, [(0, 4), (1, 5)], degree_cap=0,
                             single_floor=1, joint_floor=1)

    def test_missing_relay_raises(self):
        g = from_pairs(4, [(0, 1), (1, 2), (2, 3)])
        st_ = ColoringState(g, 3)
        with pytest.raises(RelayUnavailable):
            build_pair_graph(g, st_, [(0, 3)], degree_cap=5,
                             single_floor=1, joint_floor=1)

    def test_list_floors_enforced(self):
        g = bridged_triangles()
        st_ = ColoringState(g, 5)
        with pytest.raises(NotD1LC):
            build_pair_graph(g, st_, [(0, 4)], degree_cap=5,
                             single_floor=6, joint_floor=1)

    def test_pair_rounds_deterministic(self):
        runs = []
        for _ in range(2):
            g = bridged_triangles()
            st_ = ColoringState(g, 5)
            net = Network(g, seed=33)
            pg = build_pair_graph(g, st_, [(0, 4), (1, 5)], degree_cap=1,
                                  single_floor=4, joint_floor=3)
            pair_color_rounds(g, st_, net, pg, tag=2)
            runs.append(st_.colors.copy())
        assert np.array_equal(runs[0], runs[1])
