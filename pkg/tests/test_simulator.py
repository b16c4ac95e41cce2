import numpy as np
import pytest

from deltacolor.errors import BudgetExceeded, IllegalSpec
from deltacolor.graphs import Graph
from deltacolor.simulator import (
    Network,
    bits_for_colors,
    bits_for_counts,
    bits_for_ids,
)


def path_graph(n):
    return Graph.from_edges(n, list(range(n - 1)), list(range(1, n)))


def test_bit_widths():
    assert bits_for_ids(16) == 4
    assert bits_for_ids(17) == 5
    assert bits_for_ids(2) == 1
    # palette plus blank marker
    assert bits_for_colors(30) == 5
    assert bits_for_colors(32) == 6
    assert bits_for_counts(32) == 6
    assert bits_for_counts(31) == 5


def test_budget_formula():
    net = Network(path_graph(16), seed=0, c_bits=4)
    assert net.budget == 16
    net2 = Network(path_graph(1000), seed=0, c_bits=4)
    assert net2.budget == 40


def test_run_round_delivers_and_counts():
    g = path_graph(3)
    net = Network(g, seed=0)
    inbox = net.run_round({0: [(1, "hi", 4)], 2: [(1, "ho", 4)]})
    assert sorted(inbox[1]) == [(0, "hi"), (2, "ho")]
    assert net.rounds == 1
    assert net.total_bits == 8
    # silence is a round too
    assert net.run_round({}) == {}
    assert net.rounds == 2


def test_run_round_rejects_non_neighbor():
    net = Network(path_graph(3), seed=0)
    with pytest.raises(IllegalSpec):
        net.run_round({0: [(2, "x", 1)]})


def test_run_round_budget_strict():
    net = Network(path_graph(4), seed=0, c_bits=4)   # budget 8
    with pytest.raises(BudgetExceeded):
        net.run_round({0: [(1, "big", 9)]})
    # several small messages on one edge add up
    with pytest.raises(BudgetExceeded):
        net.run_round({0: [(1, "a", 5), (1, "b", 5)]})


def test_run_round_budget_lenient():
    net = Network(path_graph(4), seed=0, c_bits=4, strict=False)
    net.run_round({0: [(1, "big", 9)]})
    rep = net.report()
    assert rep.violations
    assert rep.audit()


def test_charge_splits_rounds():
    net = Network(path_graph(2048), seed=0, c_bits=4)   # budget 44
    rounds = net.charge("lists", item_bits=11, items_per_edge=100)
    assert rounds == 25                                  # 4 items per round
    assert net.max_edge_bits_round == 44
    assert net.report().audit() == []


def test_charge_single_item_over_budget():
    net = Network(path_graph(4), seed=0, c_bits=1)      # budget 2
    with pytest.raises(BudgetExceeded):
        net.charge("fat", item_bits=3)


def test_charge_books_edges():
    g = path_graph(3)                                   # 2 edges, 4 directed
    net = Network(g, seed=0)
    net.charge("colors", item_bits=3, items_per_edge=1)
    assert net.total_bits == 3 * 4
    net.charge("few", item_bits=3, items_per_edge=1, directed_edges=2)
    assert net.total_bits == 3 * 4 + 3 * 2
    assert [p[0] for p in net.phases] == ["colors", "few"]


def test_charge_aggregate_pipelines():
    g = path_graph(10)
    net = Network(g, seed=0, c_bits=4)                  # budget 16
    # 100 id-sized items converge over 5 edges: 20 per edge, 4 per round
    rounds = net.charge_aggregate("collect", item_bits=4, total_items=100,
                                  fan_in=5)
    assert rounds == 5


def test_node_rng_deterministic_and_distinct():
    g = path_graph(8)
    a = Network(g, seed=42).node_rng(3, tag=7).integers(0, 1 << 30, 5)
    b = Network(g, seed=42).node_rng(3, tag=7).integers(0, 1 << 30, 5)
    c = Network(g, seed=42).node_rng(4, tag=7).integers(0, 1 << 30, 5)
    d = Network(g, seed=43).node_rng(3, tag=7).integers(0, 1 << 30, 5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_mailbox_round_trip_two_rounds():
    # round-delayed delivery: replies arrive one round later
    g = path_graph(2)
    net = Network(g, seed=0)
    inbox = net.run_round({0: [(1, "ping", 4)]})
    assert inbox == {1: [(0, "ping")]}
    inbox = net.run_round({1: [(0, "pong", 4)]})
    assert inbox == {0: [(1, "pong")]}
    assert net.rounds == 2
