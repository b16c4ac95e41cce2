"""Synchronous message-passing simulator with per-edge bit budgets.

Each round, every directed edge may carry at most `budget` bits, where
budget = c_bits * ceil(log2 n). Two usage styles share one ledger:

* `run_round` delivers explicit per-node messages with strict per-edge
  accounting (used by the handler-style reference implementations), and
* `charge` books the cost of a communication step performed by vectorized
  code: a payload of `items_per_edge` items of `item_bits` bits each on
  every (or `directed_edges` many) directed edges, split over as many
  rounds as the budget requires.

Both enforce that no single indivisible item outgrows one round's budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceeded, IllegalSpec
from .graphs import Graph


def bits_for_ids(n: int) -> int:
    return max(1, math.ceil(math.log2(max(2, n))))


def bits_for_colors(max_degree: int) -> int:
    # palette values up to max_degree + 1 plus a blank marker
    return max(1, math.ceil(math.log2(max_degree + 2)))


def bits_for_counts(max_degree: int) -> int:
    return max(1, math.ceil(math.log2(max(2, max_degree + 1))))


@dataclass
class BandwidthReport:
    n: int
    budget: int
    c_bits: int
    rounds: int
    total_bits: int
    max_edge_bits_round: int
    violations: list = field(default_factory=list)
    phases: list = field(default_factory=list)   # (label, rounds, total_bits)

    def audit(self) -> list[str]:
        out = list(self.violations)
        if self.max_edge_bits_round > self.budget:
            out.append(
                f"worst per-edge round load {self.max_edge_bits_round} bits"
                f" over budget {self.budget}")
        return out


class Network:
    """Bandwidth ledger plus mailbox delivery on a fixed graph."""

    def __init__(self, g: Graph, seed: int, c_bits: int = 4,
                 strict: bool = True):
        self.g = g
        self.seed = int(seed)
        self.c_bits = int(c_bits)
        self.strict = bool(strict)
        self.id_bits = bits_for_ids(g.n)
        self.budget = self.c_bits * self.id_bits
        self.color_bits = bits_for_colors(g.max_degree)
        self.count_bits = bits_for_counts(g.max_degree)
        self.rounds = 0
        self.total_bits = 0
        self.max_edge_bits_round = 0
        self.violations: list[str] = []
        self.phases: list[tuple[str, int, int]] = []

    # -- deterministic per-node randomness ---------------------------------

    def node_rng(self, v: int, tag: int) -> np.random.Generator:
        """Stream owned by node v for the step tagged `tag`."""
        return np.random.default_rng(
            np.random.SeedSequence([self.seed, int(tag), int(v)]))

    def nodes_rng(self, tag: int) -> np.random.Generator:
        """One stream for a whole vectorized step (still seed-determined)."""
        return np.random.default_rng(
            np.random.SeedSequence([self.seed, int(tag), 0x5EED]))

    # -- mailbox style -----------------------------------------------------

    def run_round(self, outbox: dict) -> dict:
        """Deliver messages; returns the inboxes seen at the next round.

        `outbox` maps sender -> list of (dst, payload, bits). Each (src, dst)
        edge may carry several messages; their bit total is checked against
        the budget. Sending to a non-neighbor raises.
        """
        load: dict[tuple[int, int], int] = {}
        inbox: dict[int, list] = {}
        for src, msgs in outbox.items():
            for dst, payload, bits in msgs:
                if not self.g.has_edge(src, dst):
                    raise IllegalSpec(f"{src} -> {dst} is not an edge")
                if bits <= 0:
                    raise IllegalSpec("message bits must be positive")
                load[(src, dst)] = load.get((src, dst), 0) + int(bits)
                inbox.setdefault(dst, []).append((src, payload))
        worst = max(load.values(), default=0)
        if worst > self.budget:
            msg = f"edge load {worst} bits exceeds budget {self.budget}"
            if self.strict:
                raise BudgetExceeded(msg)
            self.violations.append(f"round {self.rounds}: {msg}")
        self.rounds += 1
        self.total_bits += sum(load.values())
        self.max_edge_bits_round = max(self.max_edge_bits_round, worst)
        return inbox

    # -- collective style --------------------------------------------------

    def charge(self, label: str, item_bits: int, items_per_edge: int = 1,
               directed_edges: int | None = None) -> int:
        """Book a communication step; returns the rounds it costs.

        The step ships `items_per_edge` items of `item_bits` bits on each of
        `directed_edges` directed edges (default: all of them), split across
        rounds so no edge carries more than the budget per round.
        """
        if item_bits <= 0 or items_per_edge < 0:
            raise IllegalSpec("invalid charge")
        if items_per_edge == 0:
            return 0
        if item_bits > self.budget:
            msg = (f"{label}: item of {item_bits} bits exceeds per-round"
                   f" budget {self.budget}")
            if self.strict:
                raise BudgetExceeded(msg)
            self.violations.append(msg)
        cap = max(1, self.budget // item_bits)
        rounds = math.ceil(items_per_edge / cap)
        per_round = min(items_per_edge, cap) * item_bits
        edges = directed_edges if directed_edges is not None \
            else 2 * self.g.num_edges
        bits = items_per_edge * item_bits * edges
        self.rounds += rounds
        self.total_bits += bits
        self.max_edge_bits_round = max(self.max_edge_bits_round,
                                       min(per_round, self.budget)
                                       if item_bits <= self.budget else item_bits)
        self.phases.append((label, rounds, bits))
        return rounds

    def charge_aggregate(self, label: str, item_bits: int, total_items: int,
                         fan_in: int) -> int:
        """Book a convergecast: `total_items` items flow to one collector
        over `fan_in` incident edges, pipelined under the budget."""
        if fan_in <= 0:
            return 0
        per_edge = math.ceil(total_items / fan_in)
        return self.charge(label, item_bits, per_edge,
                           directed_edges=fan_in)

    def report(self) -> BandwidthReport:
        return BandwidthReport(
            n=self.g.n, budget=self.budget, c_bits=self.c_bits,
            rounds=self.rounds, total_bits=self.total_bits,
            max_edge_bits_round=self.max_edge_bits_round,
            violations=list(self.violations),
            phases=list(self.phases))
