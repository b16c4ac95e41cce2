"""Coloring state and the randomized coloring primitives.

All phases share one `ColoringState` over a fixed palette [0, P). The
work-horses are:

* `slack_generation`: one low-rate random color trial over a node set,
  keeping colors that no graph neighbor tried or holds.
* `solve_d1lc`: the list-coloring loop for instances where every node's
  list exceeds its uncolored instance degree; the margin is asserted, not
  assumed.
* `graytone_color`: two-stage completion of a node set H. A node is gray
  when its list already exceeds its uncolored H-degree (extra colors,
  duplicated neighbor colors, or neighbors outside H that stay uncolored
  all count); grayish nodes see a gray neighbor inside H and go first.
* `two_set_slack_color`: fully active trials on two disjoint sets with
  disjoint palette windows, used to seed same-color pairs at small degree.
* virtual pair graphs and their coloring rounds: two non-adjacent nodes
  bound to one shared color, talking through a relay neighbor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _bits
from .errors import (
    InvariantViolated,
    IterationCapExceeded,
    NotD1LC,
    NotGraytone,
    DegreeBoundViolated,
    RelayUnavailable,
)
from .graphs import Graph
from .simulator import Network


class ColoringState:
    """Colors plus per-node tracking of the palette burned by neighbors."""

    def __init__(self, g: Graph, palette_size: int | None = None):
        self.g = g
        self.P = int(palette_size) if palette_size is not None else g.max_degree
        if self.P < 1:
            raise InvariantViolated("palette must not be empty")
        self.colors = np.full(g.n, -1, dtype=np.int32)
        self.used = np.zeros((g.n, self.P), dtype=bool)
        self.uncolored_deg = g.degrees.astype(np.int64).copy()

    def assign(self, nodes: np.ndarray, cols: np.ndarray) -> None:
        """Color the given nodes; callers guarantee mutual properness."""
        nodes = np.asarray(nodes, dtype=np.int64)
        cols = np.asarray(cols)
        for v, c in zip(nodes.tolist(), cols.tolist()):
            if self.colors[v] >= 0:
                raise InvariantViolated(f"node {v} colored twice")
            if self.used[v, c]:
                raise InvariantViolated(
                    f"node {v} took color {c} already present next door")
            self.colors[v] = c
            nb = self.g.neighbors(v)
            self.used[nb, c] = True
            self.uncolored_deg[nb] -= 1

    def unassign(self, v: int) -> None:
        """Rare repair path: forget v's color and rebuild its neighbors."""
        c = int(self.colors[v])
        if c < 0:
            return
        self.colors[v] = -1
        nb = self.g.neighbors(v)
        self.uncolored_deg[nb] += 1
        for w in nb.tolist():
            wn = self.g.neighbors(w)
            wc = self.colors[wn]
            row = np.zeros(self.P, dtype=bool)
            row[wc[wc >= 0]] = True
            self.used[w] = row

    def avail_counts(self, nodes: np.ndarray, lo: int = 0,
                     hi: int | None = None) -> np.ndarray:
        hi = self.P if hi is None else hi
        return (~self.used[nodes, lo:hi]).sum(axis=1)

    def duplicate_surplus(self, nodes: np.ndarray) -> np.ndarray:
        """Colored neighbors minus distinct neighbor colors, per node.

        Positive exactly when some color shows up on two or more neighbors.
        """
        nodes = np.asarray(nodes, dtype=np.int64)
        colored = self.g.degrees[nodes].astype(np.int64) \
            - self.uncolored_deg[nodes]
        distinct = self.used[nodes].sum(axis=1)
        return colored - distinct

    def uncolored(self, nodes: np.ndarray) -> np.ndarray:
        nodes = np.asarray(nodes, dtype=np.int64)
        return nodes[self.colors[nodes] < 0]

    def snapshot(self) -> tuple:
        return (self.colors.copy(), self.used.copy(),
                self.uncolored_deg.copy())

    def restore(self, snap: tuple) -> None:
        self.colors, self.used, self.uncolored_deg = \
            snap[0].copy(), snap[1].copy(), snap[2].copy()

    def check_partial(self) -> list[str]:
        u, v = self.g.edges()
        both = (self.colors[u] >= 0) & (self.colors[v] >= 0)
        bad = both & (self.colors[u] == self.colors[v])
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            return [f"edge ({u[i]}, {v[i]}) is monochromatic"]
        return []


def instance_edges(g: Graph, nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Edges of the subgraph induced by `nodes` (global ids)."""
    inset = np.zeros(g.n, dtype=bool)
    inset[nodes] = True
    u, v = g.edges()
    keep = inset[u] & inset[v]
    return u[keep], v[keep]


# ---------------------------------------------------------------------------
# slack generation


def slack_generation(g: Graph, state: ColoringState, net: Network,
                     candidates: np.ndarray, chi: int, rate: float,
                     tag: int) -> np.ndarray:
    """One random trial round at the given activation rate; returns kept ids.

    Active nodes draw uniformly from the palette window [0, chi) and keep
    the color unless a neighbor tried the same color this round or already
    holds it.
    """
    if chi < 1 or chi > state.P:
        raise InvariantViolated(f"trial window {chi} outside palette")
    rng = net.nodes_rng(tag)
    candidates = np.asarray(candidates, dtype=np.int64)
    active_mask = rng.random(len(candidates)) < rate
    active = candidates[active_mask]
    trial = np.full(g.n, -1, dtype=np.int64)
    trial[active] = rng.integers(0, chi, size=len(active))
    u, v = g.edges()
    both = (trial[u] >= 0) & (trial[v] >= 0) & (trial[u] == trial[v])
    clash = np.zeros(g.n, dtype=bool)
    clash[u[both]] = True
    clash[v[both]] = True
    keep = active[~clash[active]
                  & ~state.used[active, trial[active]]]
    state.assign(keep, trial[keep])
    net.charge(f"slackgen/{tag}", net.color_bits + 1, items_per_edge=1)
    return keep


def disjoint_window_trial(g: Graph, state: ColoringState, net: Network,
                          s1: np.ndarray, s2: np.ndarray, chi: int,
                          tag: int) -> np.ndarray:
    """Fully active trials on two disjoint sets with disjoint windows.

    s1 draws from [0, chi), s2 from [chi, 2 chi); both run in the same
    round, which is sound because the windows cannot collide.
    """
    if 2 * chi > state.P:
        raise InvariantViolated("two trial windows must fit the palette")
    s1 = np.asarray(s1, dtype=np.int64)
    s2 = np.asarray(s2, dtype=np.int64)
    if np.intersect1d(s1, s2).size:
        raise InvariantViolated("trial sets overlap")
    rng = net.nodes_rng(tag)
    trial = np.full(g.n, -1, dtype=np.int64)
    trial[s1] = rng.integers(0, chi, size=len(s1))
    trial[s2] = rng.integers(chi, 2 * chi, size=len(s2))
    u, v = g.edges()
    both = (trial[u] >= 0) & (trial[v] >= 0) & (trial[u] == trial[v])
    clash = np.zeros(g.n, dtype=bool)
    clash[u[both]] = True
    clash[v[both]] = True
    allnodes = np.concatenate([s1, s2])
    keep = allnodes[~clash[allnodes]
                    & ~state.used[allnodes, trial[allnodes]]]
    state.assign(keep, trial[keep])
    net.charge(f"window-trial/{tag}", net.color_bits + 1, items_per_edge=1)
    return keep


# ---------------------------------------------------------------------------
# graytone split and completion


def uncolored_degree_within(g: Graph, state: ColoringState,
                            h_nodes: np.ndarray) -> np.ndarray:
    """Per-h_node count of uncolored neighbors inside the set."""
    h_nodes = np.asarray(h_nodes, dtype=np.int64)
    live = h_nodes[state.colors[h_nodes] < 0]
    mask = _bits.mask_from_ids(g.n, live)
    return _bits.popcount_rows(g.bit_rows()[h_nodes] & mask[None, :])


def graytone_split(g: Graph, state: ColoringState, h_nodes: np.ndarray
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split uncolored H into (gray, grayish, leftover).

    Gray: available colors exceed the uncolored H-degree (degree surplus,
    a duplicated color next door, or an uncolored neighbor outside H).
    Grayish: a gray neighbor inside H. Leftover nodes fit neither.
    """
    h_nodes = np.asarray(h_nodes, dtype=np.int64)
    h_nodes = h_nodes[state.colors[h_nodes] < 0]
    if len(h_nodes) == 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, empty
    avail = state.avail_counts(h_nodes)
    unc_h = uncolored_degree_within(g, state, h_nodes)
    gray = h_nodes[avail >= unc_h + 1]
    gray_mask = _bits.mask_from_ids(g.n, gray)
    rest = h_nodes[avail < unc_h + 1]
    touch = _bits.popcount_rows(g.bit_rows()[rest] & gray_mask[None, :])
    grayish = rest[touch > 0]
    leftover = rest[touch == 0]
    return gray, grayish, leftover


def solve_d1lc(g: Graph, state: ColoringState, net: Network,
               nodes: np.ndarray, tag: int, lo: int = 0,
               hi: int | None = None, max_rounds: int = 400,
               require_margin: bool = True) -> int:
    """Randomized list-coloring loop on one instance; returns rounds used.

    The instance consists of the uncolored `nodes`; lists are the unused
    palette window [lo, hi). With `require_margin`, every node's list must
    exceed its uncolored instance degree up front, which makes the loop a
    certified degree-plus-one instance.
    """
    hi = state.P if hi is None else hi
    nodes = state.uncolored(np.asarray(nodes, dtype=np.int64))
    if len(nodes) == 0:
        return 0
    if require_margin:
        avail = state.avail_counts(nodes, lo, hi)
        unc = uncolored_degree_within(g, state, nodes)
        short = nodes[avail < unc + 1]
        if len(short):
            raise NotD1LC(
                f"{len(short)} nodes miss the degree-plus-one margin,"
                f" first {short[:3].tolist()}")
    eu, ev = instance_edges(g, nodes)
    rounds = 0
    live = nodes
    while len(live):
        if rounds >= max_rounds:
            raise IterationCapExceeded(
                f"list coloring stalled with {len(live)} nodes after"
                f" {rounds} rounds")
        rng = net.nodes_rng((tag << 12) + rounds)
        av = ~state.used[live, lo:hi]
        cnt = av.sum(axis=1)
        if np.any(cnt == 0):
            raise NotD1LC("a node ran out of list colors mid-instance")
        t = (rng.random(len(live)) * cnt).astype(np.int64)
        cum = np.cumsum(av, axis=1)
        pick = (cum > t[:, None]).argmax(axis=1) + lo
        trial = np.full(g.n, -1, dtype=np.int64)
        trial[live] = pick
        both = (trial[eu] >= 0) & (trial[ev] >= 0) & (trial[eu] == trial[ev])
        clash = np.zeros(g.n, dtype=bool)
        clash[eu[both]] = True
        clash[ev[both]] = True
        winners = live[~clash[live]]
        state.assign(winners, trial[winners])
        live = live[clash[live]]
        rounds += 1
    if rounds:
        net.charge(f"d1lc/{tag}", net.color_bits + 1, items_per_edge=rounds)
    return rounds


def graytone_color(g: Graph, state: ColoringState, net: Network,
                   h_nodes: np.ndarray, tag: int,
                   max_rounds: int = 400) -> dict:
    """Color all of H grayish-first, gray-last; raises when H will not split."""
    gray, grayish, leftover = graytone_split(g, state, h_nodes)
    if len(leftover):
        raise NotGraytone(
            f"{len(leftover)} nodes have neither surplus nor a gray"
            f" neighbor, first {leftover[:5].tolist()}")
    r1 = solve_d1lc(g, state, net, grayish, tag=(tag << 1),
                    max_rounds=max_rounds)
    r2 = solve_d1lc(g, state, net, gray, tag=(tag << 1) | 1,
                    max_rounds=max_rounds)
    return {"gray": len(gray), "grayish": len(grayish),
            "rounds": r1 + r2}


# ---------------------------------------------------------------------------
# unguarded completion with local repair (small-degree leftovers)


def trial_completion(g: Graph, state: ColoringState, net: Network,
                     nodes: np.ndarray, tag: int,
                     max_rounds: int = 400) -> np.ndarray:
    """Color as much of `nodes` as luck allows; returns the stuck ones.

    Same loop as `solve_d1lc` but without the margin precondition: nodes
    whose lists empty out are set aside instead of failing the round.
    """
    nodes = state.uncolored(np.asarray(nodes, dtype=np.int64))
    eu, ev = instance_edges(g, nodes)
    live = nodes
    stuck: list[int] = []
    rounds = 0
    while len(live) and rounds < max_rounds:
        rng = net.nodes_rng((tag << 12) + rounds)
        av = ~state.used[live, : state.P]
        cnt = av.sum(axis=1)
        dead = cnt == 0
        if np.any(dead):
            stuck.extend(live[dead].tolist())
            live = live[~dead]
            if len(live) == 0:
                break
            av = av[~dead]
            cnt = cnt[~dead]
        t = (rng.random(len(live)) * cnt).astype(np.int64)
        cum = np.cumsum(av, axis=1)
        pick = (cum > t[:, None]).argmax(axis=1)
        trial = np.full(g.n, -1, dtype=np.int64)
        trial[live] = pick
        both = (trial[eu] >= 0) & (trial[ev] >= 0) & (trial[eu] == trial[ev])
        clash = np.zeros(g.n, dtype=bool)
        clash[eu[both]] = True
        clash[ev[both]] = True
        winners = live[~clash[live]]
        state.assign(winners, trial[winners])
        live = live[clash[live]]
        rounds += 1
    if rounds:
        net.charge(f"completion/{tag}", net.color_bits + 1,
                   items_per_edge=rounds)
    stuck.extend(live.tolist())
    return np.asarray(sorted(stuck), dtype=np.int64)


def repair_rainbow(g: Graph, state: ColoringState, v: int) -> bool:
    """Free a color for v by recoloring one neighbor onto a duplicate.

    Looks for neighbors u, w of v that are not adjacent to each other where
    u can switch to w's color; u's old color then becomes available for v.
    """
    nb = g.neighbors(v)
    colored = nb[state.colors[nb] >= 0]
    rows = g.bit_rows()
    for u in colored.tolist():
        for w in colored.tolist():
            if u == w or g.has_edge(u, w):
                continue
            cw = int(state.colors[w])
            if state.used[u, cw]:
                continue
            state.unassign(u)
            state.assign(np.array([u]), np.array([cw]))
            return True
    return False


# ---------------------------------------------------------------------------
# same-color pairs and virtual pair graphs


def same_color_pair(g: Graph, state: ColoringState, net: Network,
                    x: int, y: int, tag: int,
                    min_common: float | None = None,
                    max_burn: float | None = None) -> int:
    """Give the non-adjacent nodes x, y one shared color; returns it.

    Checks the structural preconditions: the two must share enough common
    neighbors to matter and their joint burned palette must stay under
    `max_burn` so a shared color certainly exists.
    """
    if x == y or g.has_edge(x, y):
        raise InvariantViolated(f"pair ({x}, {y}) must be non-adjacent")
    if state.colors[x] >= 0 or state.colors[y] >= 0:
        raise InvariantViolated(f"pair ({x}, {y}) already touched")
    if min_common is not None:
        if g.common_neighbor_count(x, y) < min_common:
            raise InvariantViolated(
                f"pair ({x}, {y}) shares {g.common_neighbor_count(x, y)}"
                f" neighbors, need {min_common:.0f}")
    joint = ~(state.used[x] | state.used[y])
    if max_burn is not None:
        burned = state.P - int(joint.sum())
        if burned > max_burn:
            raise InvariantViolated(
                f"pair ({x}, {y}) burned {burned} colors, cap"
                f" {max_burn:.0f}")
    free = np.flatnonzero(joint)
    if len(free) == 0:
        raise InvariantViolated(f"pair ({x}, {y}) has no joint color")
    rng = net.nodes_rng(tag)
    c = int(free[rng.integers(0, len(free))])
    state.assign(np.array([x, y]), np.array([c, c]))
    # the pair coordinates through a relay: two hops each way
    net.charge(f"pair/{tag}", net.color_bits, items_per_edge=2,
               directed_edges=4)
    return c


@dataclass
class VirtualPair:
    x: int
    y: int
    relay: int


@dataclass
class PairGraph:
    pairs: list
    adj: list                       # neighbor indices per pair
    max_degree: int
    lo: int = 0
    hi: int | None = None


def build_pair_graph(g: Graph, state: ColoringState, endpoint_pairs: list,
                     degree_cap: float, single_floor: float,
                     joint_floor: float, lo: int = 0,
                     hi: int | None = None) -> PairGraph:
    """Virtual graph over same-color pairs with the step-4 structural bars.

    Every pair must be non-adjacent with a live relay; list sizes are
    checked against the floors, and the virtual degree against the cap.
    These bars apply to this construction only.
    """
    hi = state.P if hi is None else hi
    rows = g.bit_rows()
    pairs: list[VirtualPair] = []
    for x, y in endpoint_pairs:
        x, y = int(x), int(y)
        if g.has_edge(x, y):
            raise InvariantViolated(f"pair ({x}, {y}) is an edge")
        common = rows[x] & rows[y]
        relays = _bits.ids_from_mask(common)
        if len(relays) == 0:
            raise RelayUnavailable(f"pair ({x}, {y}) has no common neighbor")
        pairs.append(VirtualPair(x=x, y=y, relay=int(relays[0])))
        for v in (x, y):
            if int(state.avail_counts(np.array([v]), lo, hi)[0]) \
                    < single_floor:
                raise NotD1LC(
                    f"endpoint {v} keeps fewer than {single_floor:.0f}"
                    f" colors")
        joint = int((~(state.used[x, lo:hi] | state.used[y, lo:hi])).sum())
        if joint < joint_floor:
            raise NotD1LC(
                f"pair ({x}, {y}) joint list {joint} under"
                f" {joint_floor:.0f}")
    # pairs interact when any endpoints coincide or touch
    masks = []
    for p in pairs:
        m = rows[p.x] | rows[p.y]
        for v in (p.x, p.y):
            m[v >> 6] |= np.uint64(1) << np.uint64(v & 63)
        masks.append(m)
    ends = [_bits.mask_from_ids(g.n, [p.x, p.y]) for p in pairs]
    adj: list[np.ndarray] = []
    for i, p in enumerate(pairs):
        links = [j for j in range(len(pairs)) if j != i
                 and int(np.bitwise_count(masks[i] & ends[j]).sum()) > 0]
        adj.append(np.asarray(links, dtype=np.int64))
    maxdeg = max((len(a) for a in adj), default=0)
    if maxdeg > degree_cap:
        raise DegreeBoundViolated(
            f"virtual pair graph degree {maxdeg} over cap {degree_cap:.0f}")
    return PairGraph(pairs=pairs, adj=adj, max_degree=maxdeg, lo=lo, hi=hi)


def pair_color_rounds(g: Graph, state: ColoringState, net: Network,
                      pg: PairGraph, tag: int, max_rounds: int = 200
                      ) -> list[tuple[int, int]]:
    """Color all pairs; returns per-round (attempts, successes) history.

    Each round, every uncolored pair draws from its joint list and keeps
    the draw unless an interacting pair drew the same color. Messages run
    through each pair's relay (two hops), which is booked accordingly.
    """
    hi = state.P if pg.hi is None else pg.hi
    live = [i for i, p in enumerate(pg.pairs)
            if state.colors[p.x] < 0]
    history: list[tuple[int, int]] = []
    rounds = 0
    while live:
        if rounds >= max_rounds:
            raise IterationCapExceeded(
                f"pair coloring stalled with {len(live)} pairs")
        rng = net.nodes_rng((tag << 12) + rounds)
        draw: dict[int, int] = {}
        for i in live:
            p = pg.pairs[i]
            joint = np.flatnonzero(~(state.used[p.x, pg.lo:hi]
                                     | state.used[p.y, pg.lo:hi]))
            if len(joint) == 0:
                raise NotD1LC(f"pair ({p.x}, {p.y}) ran out of joint colors")
            draw[i] = int(joint[rng.integers(0, len(joint))]) + pg.lo
        winners = []
        for i in live:
            ok = all(draw.get(j) != draw[i] for j in pg.adj[i].tolist())
            if ok:
                winners.append(i)
        for i in winners:
            p = pg.pairs[i]
            state.assign(np.array([p.x, p.y]),
                         np.array([draw[i], draw[i]]))
        history.append((len(live), len(winners)))
        live = [i for i in live if i not in set(winners)]
        rounds += 1
    if rounds:
        net.charge(f"paircolor/{tag}", net.color_bits + 1,
                   items_per_edge=2 * rounds,
                   directed_edges=4 * len(pg.pairs))
    return history
