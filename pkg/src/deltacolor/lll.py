"""Bad-event sampling model and a resampling solver.

Variables are independent Bernoulli coins; events are predicates over
declared variable subsets.  The solver redraws the variables of a
maximal shared-variable-free set of violated events each round until
nothing holds, then re-verifies.  On top of the generic machinery sit
the four concrete builders the pipeline uses: slack seed sets, the
hand-off tail pool, its unbiased split, and per-arc activation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _bits
from .coloring import ColoringState, disjoint_window_trial
from .errors import InvariantViolated, IterationCapExceeded, SlackFailed
from .graphs import Graph
from .simulator import Network

# Scale knobs left symbolic by the analysis; defaults give desk-scale
# instances measurable margin.  All three are recorded in run reports.
DEFAULT_MU_SCALE = 2.0     # seed-set intensity scale
DEFAULT_FLOOR_SCALE = 1.0  # non-edge floor scale
DEFAULT_KEEP_SCALE = 8.0   # kept-pair guarantee scale


def slack_seed_intensity(n: int, delta: int,
                         scale: float = DEFAULT_MU_SCALE) -> int:
    """Target neighborhood count for seed-set caps, desk-capped.

    The asymptotic form grows like log^4 log n * log delta; small
    instances clip it so seed sets stay a small fraction of a palette.
    """
    safe_n = max(n, 3)
    safe_d = max(delta, 2)
    asym = scale * math.log(math.log(safe_n)) ** 4 * math.log(safe_d)
    return max(4, min(int(round(asym)), delta // 40))


def seed_probability(mu: int, delta: int) -> float:
    """Membership probability giving mean mu sampled neighbors at full degree."""
    return min(1.0, mu / max(delta, 1))


def nonedge_floor_limit(n: int, delta: int,
                        scale: float = DEFAULT_FLOOR_SCALE) -> float:
    """Asymptotic form of the sampled-non-edge floor threshold."""
    safe_n = max(n, 3)
    safe_d = max(delta, 2)
    return scale * math.log(math.log(safe_n)) ** 5 * math.log(safe_d) ** 2


def kept_pair_floor(m_bar: float, chi: int,
                    scale: float = DEFAULT_KEEP_SCALE) -> float:
    """Guaranteed same-colored neighbor count for a slack target."""
    return math.exp(-3.0 / scale) * m_bar / (50.0 * max(chi, 1))


# ---------------------------------------------------------------------------
# instance model


@dataclass
class Event:
    """A bad event: holds(values) -> True means the event occurs.

    assoc, when set, is the relaxed companion predicate measured by the
    statistics harness; it never participates in solving.
    """

    name: str
    vbl: np.ndarray
    holds: Callable[[np.ndarray], bool]
    home: int = -1
    assoc: Optional[Callable[[np.ndarray], bool]] = None


class LllInstance:
    """Independent Bernoulli variables plus bad events over them."""

    def __init__(self, probs, events, var_homes=None):
        self.probs = np.asarray(probs, dtype=np.float64)
        if self.probs.ndim != 1:
            raise InvariantViolated("variable probabilities must be a flat array")
        if self.probs.size and (
                (self.probs < 0.0) | (self.probs > 1.0)).any():
            raise InvariantViolated("variable probabilities must lie in [0, 1]")
        self.num_vars = int(self.probs.size)
        self.events = list(events)
        for e in self.events:
            e.vbl = np.unique(np.asarray(e.vbl, dtype=np.int64))
            if e.vbl.size and (e.vbl[0] < 0 or e.vbl[-1] >= self.num_vars):
                raise InvariantViolated(
                    f"event {e.name} references unknown variables")
        if var_homes is None:
            self.var_homes = None
        else:
            self.var_homes = np.asarray(var_homes, dtype=np.int64)
            if self.var_homes.size != self.num_vars:
                raise InvariantViolated("one home node per variable expected")

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.random(self.num_vars) < self.probs

    def resample(self, values: np.ndarray, var_ids: np.ndarray,
                 rng: np.random.Generator) -> None:
        values[var_ids] = rng.random(var_ids.size) < self.probs[var_ids]

    def violated(self, values: np.ndarray) -> list:
        return [i for i, e in enumerate(self.events) if e.holds(values)]

    def verify(self, values: np.ndarray) -> list:
        """Names of events holding under the assignment; [] when clean."""
        return [e.name for e in self.events if e.holds(values)]


def dependency_degree(inst: LllInstance) -> int:
    """Exact maximum number of other events sharing a variable with one."""
    m = len(inst.events)
    if m == 0 or inst.num_vars == 0:
        return 0
    words = _bits.n_words(m)
    per_var = np.zeros((inst.num_vars, words), dtype=np.uint64)
    for i, e in enumerate(inst.events):
        if e.vbl.size:
            per_var[e.vbl, i >> 6] |= np.uint64(1) << np.uint64(i & 63)
    best = 0
    for e in inst.events:
        if e.vbl.size == 0:
            continue
        merged = np.bitwise_or.reduce(per_var[e.vbl], axis=0)
        best = max(best, int(_bits.popcount(merged)) - 1)
    return best


def locality(inst: LllInstance, g: Graph) -> int:
    """Max graph distance from an event's home to its variables' homes."""
    if inst.var_homes is None:
        raise InvariantViolated("instance has no variable homes")
    best = 0
    for e in inst.events:
        if e.home < 0 or e.vbl.size == 0:
            continue
        targets = set(int(t) for t in inst.var_homes[e.vbl])
        dist = np.full(g.n, -1, dtype=np.int64)
        dist[e.home] = 0
        frontier = [e.home]
        d = 0
        targets.discard(e.home)
        while targets and frontier:
            d += 1
            nxt = []
            for u in frontier:
                for w in g.neighbors(u):
                    w = int(w)
                    if dist[w] < 0:
                        dist[w] = d
                        nxt.append(w)
                        if w in targets:
                            targets.discard(w)
                            best = max(best, d)
            frontier = nxt
        if targets:
            raise InvariantViolated(
                f"event {e.name} has variables unreachable from its home")
    return best


def solve_resampling(inst: LllInstance, rng: np.random.Generator,
                     max_rounds: int = 200, prob_bound: float = None,
                     trace: list = None) -> tuple:
    """Drive all events false by resampling; returns (values, info).

    Each round resamples a greedily chosen set of violated events with
    pairwise-disjoint variables.  The returned assignment is re-checked;
    info carries rounds, resample count, and — when prob_bound is given —
    whether e * p * (d + 1) < 1 held for the instance.
    """
    values = inst.sample(rng)
    resamples = 0
    rounds = 0
    for rounds in range(max_rounds + 1):
        bad = inst.violated(values)
        if not bad:
            break
        fixed = [i for i in bad if inst.events[i].vbl.size == 0]
        if fixed:
            names = ", ".join(inst.events[i].name for i in fixed)
            raise IterationCapExceeded(
                f"events with no variables cannot be resampled: {names}")
        if rounds == max_rounds:
            names = [inst.events[i].name for i in bad]
            raise IterationCapExceeded(
                f"{len(names)} events still violated after {max_rounds} "
                "rounds: " + ", ".join(names[:8]))
        touched = np.zeros(inst.num_vars, dtype=bool)
        for i in bad:
            vbl = inst.events[i].vbl
            if touched[vbl].any():
                continue
            touched[vbl] = True
            inst.resample(values, vbl, rng)
            resamples += 1
            if trace is not None:
                trace.append(inst.events[i].name + " "
                             + " ".join(str(int(x)) for x in vbl))
    left = inst.verify(values)
    if left:
        raise InvariantViolated("solver returned a violating assignment: "
                                + ", ".join(left))
    info = {"rounds": rounds, "resamples": resamples}
    if prob_bound is not None:
        d = dependency_degree(inst)
        info["criterion_ok"] = bool(math.e * prob_bound * (d + 1) < 1.0)
    return values, info


def estimate_event_probabilities(inst: LllInstance, rng: np.random.Generator,
                                 trials: int, names=None,
                                 assoc: bool = False) -> dict:
    """Monte-Carlo frequency of each event holding on fresh samples.

    With assoc=True the relaxed companion predicates are measured
    instead; events without one are skipped.
    """
    sel = []
    for e in inst.events:
        if names is not None and e.name not in names:
            continue
        if assoc and e.assoc is None:
            continue
        sel.append(e)
    counts = np.zeros(len(sel), dtype=np.int64)
    for _ in range(trials):
        values = inst.sample(rng)
        for j, e in enumerate(sel):
            fn = e.assoc if assoc else e.holds
            if fn(values):
                counts[j] += 1
    return {e.name: counts[j] / trials for j, e in enumerate(sel)}


# ---------------------------------------------------------------------------
# event closures


def _at_least(vbl: np.ndarray, threshold: float):
    def holds(values):
        return int(np.count_nonzero(values[vbl])) >= threshold
    return holds


def _more_than(vbl: np.ndarray, threshold: float):
    def holds(values):
        return int(np.count_nonzero(values[vbl])) > threshold
    return holds


def _sampled_nonedge_floor(g: Graph, nbrs: np.ndarray, nbr_pos: np.ndarray,
                           threshold: float):
    def holds(values):
        picked = nbrs[values[nbr_pos]]
        k = picked.size
        f = k * (k - 1) // 2 - g.induced_edge_count(picked)
        return f < threshold
    return holds


def _useful_floor(head_pos: np.ndarray, tail_pos: np.ndarray,
                  threshold: float):
    def holds(values):
        useful = np.count_nonzero(~values[head_pos] & values[tail_pos])
        return int(useful) < threshold
    return holds


def _side_floor(tail_pos: np.ndarray, side: int, threshold: float):
    want = bool(side)
    def holds(values):
        return int(np.count_nonzero(values[tail_pos] == want)) < threshold
    return holds


# ---------------------------------------------------------------------------
# builder: slack seed sets


def build_slack_set_lll(g: Graph, pool: np.ndarray, floor_nodes, mu: int,
                        p: float, matchings: dict = None,
                        floor_limit: float = None) -> tuple:
    """Membership sampling for a slack seed set over the pool.

    Events: per pool node a cap (>= 4 mu sampled neighbors), per
    matching a cap (>= 4 mu sampled matched nodes), and for each floor
    node whose neighborhood lies entirely inside the pool, a sampled
    non-edge floor.  The floor threshold is the asymptotic limit capped
    at half the node's expected sampled non-edge count, so it stays
    attainable at any scale; per-node values land in meta.
    """
    pool = np.unique(np.asarray(pool, dtype=np.int64))
    pos = np.full(g.n, -1, dtype=np.int64)
    pos[pool] = np.arange(pool.size)
    probs = np.full(pool.size, float(p))
    cap = 4 * mu
    delta = max(g.max_degree, 2)
    if floor_limit is None:
        floor_limit = nonedge_floor_limit(g.n, delta)
    events = []
    meta = {"cap": cap, "alphas": {}, "floor_thresholds": {}, "skipped": []}
    for v in pool:
        nbp = pos[g.neighbors(int(v))]
        nbp = nbp[nbp >= 0]
        if nbp.size == 0:
            continue
        events.append(Event(f"cap/node/{int(v)}", nbp, _at_least(nbp, cap),
                            home=int(v)))
    for key in sorted((matchings or {})):
        nodes = np.asarray(matchings[key], dtype=np.int64)
        nbp = pos[nodes]
        if (nbp < 0).any():
            raise InvariantViolated(
                f"matching {key} has nodes outside the pool")
        events.append(Event(f"cap/matching/{key}", nbp, _at_least(nbp, cap),
                            home=int(nodes.min())))
    for v in np.unique(np.asarray(floor_nodes, dtype=np.int64)):
        nbrs = g.neighbors(int(v))
        nbp = pos[nbrs]
        if nbrs.size == 0 or (nbp < 0).any():
            meta["skipped"].append(int(v))
            continue
        m_bar = nbrs.size * (nbrs.size - 1) // 2 - g.induced_edge_count(nbrs)
        alpha = m_bar / float(delta * delta)
        thr = min(floor_limit, alpha * mu * mu / 2.0)
        meta["alphas"][int(v)] = alpha
        meta["floor_thresholds"][int(v)] = thr
        if m_bar == 0:
            meta["skipped"].append(int(v))
            continue
        events.append(Event(f"floor/node/{int(v)}", nbp,
                            _sampled_nonedge_floor(g, nbrs, nbp, thr),
                            home=int(v)))
    return LllInstance(probs, events, var_homes=pool), meta


def check_second_supply(g: Graph, pool: np.ndarray, removed: np.ndarray,
                        floor_nodes) -> dict:
    """Assert a second draw still has half the non-edge supply.

    removed is the first seed set; for every eligible floor node the
    non-edges among its remaining pool neighbors must be at least half
    of the original count.  Returns {node: (before, after)}.
    """
    pool = np.unique(np.asarray(pool, dtype=np.int64))
    in_pool = np.zeros(g.n, dtype=bool)
    in_pool[pool] = True
    gone = np.zeros(g.n, dtype=bool)
    gone[np.asarray(removed, dtype=np.int64)] = True
    out = {}
    for v in np.unique(np.asarray(floor_nodes, dtype=np.int64)):
        nbrs = g.neighbors(int(v))
        if nbrs.size == 0 or not in_pool[nbrs].all():
            continue
        before = nbrs.size * (nbrs.size - 1) // 2 - g.induced_edge_count(nbrs)
        left = nbrs[~gone[nbrs]]
        after = left.size * (left.size - 1) // 2 - g.induced_edge_count(left)
        if 2 * after < before:
            raise InvariantViolated(
                f"non-edge supply for a second draw fell below half at "
                f"node {int(v)}")
        out[int(v)] = (int(before), int(after))
    return out


# ---------------------------------------------------------------------------
# two-set slack coloring


def two_set_slack_color(g: Graph, state: ColoringState, net: Network,
                        first: np.ndarray, second: np.ndarray,
                        targets: np.ndarray, chi: int, tag: int,
                        seed_degree_cap: int = None, surplus_floor=None,
                        max_retries: int = 20) -> dict:
    """Color parts of two seed sets so every target sees a repeated color.

    first and second draw from disjoint chi-color windows in a joint
    trial round; afterwards every target node must have duplicate
    surplus at or above the floor (default 1).  Failed attempts are
    rolled back and retried on fresh randomness; past the cap the
    stubborn targets ride out on SlackFailed.
    """
    first = np.unique(np.asarray(first, dtype=np.int64))
    second = np.unique(np.asarray(second, dtype=np.int64))
    if np.intersect1d(first, second).size:
        raise InvariantViolated("seed sets overlap")
    targets = np.unique(np.asarray(targets, dtype=np.int64))
    if seed_degree_cap is not None:
        for part in (first, second):
            if part.size == 0:
                continue
            counts = g.count_neighbors_in_mask(
                _bits.mask_from_ids(g.n, part))
            if int(counts.max()) > seed_degree_cap:
                raise InvariantViolated(
                    "a node has more seed neighbors than the cap allows")
    # a target can only gain a duplicate from a nonadjacent pair inside
    # one window, so demand one up front
    for w in targets:
        ok = False
        for part in (first, second):
            nb = np.intersect1d(g.neighbors(int(w)), part)
            if nb.size >= 2 and (nb.size * (nb.size - 1) // 2
                                 > g.induced_edge_count(nb)):
                ok = True
                break
        if not ok:
            raise InvariantViolated(
                f"target {int(w)} has no nonadjacent pair inside a seed set")
    if surplus_floor is None:
        floors = np.ones(targets.size)
    else:
        floors = np.broadcast_to(np.asarray(surplus_floor, dtype=np.float64),
                                 targets.shape).copy()
        floors = np.maximum(floors, 1.0)
    base = state.snapshot()
    stubborn = targets
    for attempt in range(max_retries):
        kept = disjoint_window_trial(g, state, net, first, second, chi,
                                     (tag << 5) + attempt)
        if seed_degree_cap is not None and kept.size:
            gained = g.count_neighbors_in_mask(_bits.mask_from_ids(g.n, kept))
            if int(gained.max()) > 2 * seed_degree_cap:
                raise InvariantViolated(
                    "more than twice the seed cap colored next to one node")
        if targets.size == 0:
            return {"attempts": attempt + 1, "colored": kept}
        surplus = state.duplicate_surplus(targets)
        lacking = targets[surplus < floors]
        if lacking.size == 0:
            return {"attempts": attempt + 1, "colored": kept}
        stubborn = lacking
        state.restore(base)
    err = SlackFailed(f"{stubborn.size} targets still lack a duplicated "
                      f"color after {max_retries} attempts")
    err.nodes = stubborn
    raise err


# ---------------------------------------------------------------------------
# builder: hand-off tail pool


def build_tail_pool_sampling(g: Graph, candidates: np.ndarray, watch_nodes,
                             arc_groups: dict, q: float,
                             delta: int) -> tuple:
    """Membership sample over hand-off candidates.

    Per watch node a cap event (> 3 q delta sampled neighbors, relaxed
    companion at half that); per arc group a floor event (fewer than
    q^2 (1-q)^3 delta / 20 useful arcs, companion at twice).  An arc
    (head, tail) is useful when the head stays out of the sample and the
    tail falls in.  Groups with no arcs are degenerate: they get no
    event and are reported in meta for the caller to escalate.
    """
    candidates = np.unique(np.asarray(candidates, dtype=np.int64))
    pos = np.full(g.n, -1, dtype=np.int64)
    pos[candidates] = np.arange(candidates.size)
    probs = np.full(candidates.size, float(q))
    cap = 3.0 * q * delta
    floor = q * q * (1.0 - q) ** 3 * delta / 20.0
    events = []
    meta = {"cap": cap, "arc_floor": floor, "degenerate": []}
    for v in np.unique(np.asarray(watch_nodes, dtype=np.int64)):
        nbp = pos[g.neighbors(int(v))]
        nbp = nbp[nbp >= 0]
        if nbp.size == 0:
            continue
        events.append(Event(f"cap/node/{int(v)}", nbp, _more_than(nbp, cap),
                            home=int(v), assoc=_more_than(nbp, cap / 2.0)))
    for key in sorted(arc_groups):
        heads, tails = arc_groups[key]
        heads = np.asarray(heads, dtype=np.int64)
        tails = np.asarray(tails, dtype=np.int64)
        if heads.size == 0:
            meta["degenerate"].append(key)
            continue
        hp = pos[heads]
        tp = pos[tails]
        if (hp < 0).any() or (tp < 0).any():
            raise InvariantViolated(
                f"arc group {key} has endpoints outside the candidates")
        vbl = np.union1d(hp, tp)
        events.append(Event(f"arcs/group/{key}", vbl,
                            _useful_floor(hp, tp, floor),
                            home=int(heads.min()),
                            assoc=_useful_floor(hp, tp, 2.0 * floor)))
    return LllInstance(probs, events, var_homes=candidates), meta


def sampled_node_mask(n: int, nodes: np.ndarray,
                      values: np.ndarray) -> np.ndarray:
    """Bool mask over node ids marking sampled members."""
    nodes = np.asarray(nodes, dtype=np.int64)
    mask = np.zeros(n, dtype=bool)
    mask[nodes[values]] = True
    return mask


def useful_arcs(heads: np.ndarray, tails: np.ndarray,
                in_sample: np.ndarray) -> tuple:
    """Arcs whose head stayed out of the sample and tail fell in."""
    heads = np.asarray(heads, dtype=np.int64)
    tails = np.asarray(tails, dtype=np.int64)
    keep = ~in_sample[heads] & in_sample[tails]
    return heads[keep], tails[keep]


# ---------------------------------------------------------------------------
# builder: tail-pool split


def build_pool_split(g: Graph, pool: np.ndarray, arc_groups: dict,
                     per_side_floor: float) -> tuple:
    """Unbiased coin per pool node; per (group, side) a floor event.

    A group's arcs land on the side its tail's coin selects; each side
    must keep at least per_side_floor arcs.
    """
    pool = np.unique(np.asarray(pool, dtype=np.int64))
    pos = np.full(g.n, -1, dtype=np.int64)
    pos[pool] = np.arange(pool.size)
    probs = np.full(pool.size, 0.5)
    events = []
    meta = {"per_side_floor": per_side_floor, "degenerate": []}
    for key in sorted(arc_groups):
        heads, tails = arc_groups[key]
        tails = np.asarray(tails, dtype=np.int64)
        if tails.size == 0:
            meta["degenerate"].append(key)
            continue
        tp = pos[tails]
        if (tp < 0).any():
            raise InvariantViolated(
                f"arc group {key} has tails outside the pool")
        vbl = np.unique(tp)
        home = int(np.asarray(heads, dtype=np.int64).min())
        for side in (0, 1):
            events.append(Event(f"split/group/{key}/{side}", vbl,
                                _side_floor(tp, side, per_side_floor),
                                home=home))
    return LllInstance(probs, events, var_homes=pool), meta


def split_arc_groups(g: Graph, pool: np.ndarray, values: np.ndarray,
                     arc_groups: dict) -> tuple:
    """Partition each group's arcs by the side its tail's coin chose."""
    pool = np.asarray(pool, dtype=np.int64)
    pos = np.full(g.n, -1, dtype=np.int64)
    pos[pool] = np.arange(pool.size)
    low, high = {}, {}
    for key in sorted(arc_groups):
        heads, tails = arc_groups[key]
        heads = np.asarray(heads, dtype=np.int64)
        tails = np.asarray(tails, dtype=np.int64)
        side = values[pos[tails]]
        low[key] = (heads[~side], tails[~side])
        high[key] = (heads[side], tails[side])
    return low, high


# ---------------------------------------------------------------------------
# builder: arc activation


def build_arc_activation(heads: np.ndarray, tails: np.ndarray,
                         groups: np.ndarray, p3: float) -> tuple:
    """One activation coin per arc; per group, the event that none wins.

    An arc wins when activated and no activated arc of another group
    shares its tail, so each event's variables include the group's arcs
    plus every cross-group arc on the same tails.
    """
    heads = np.asarray(heads, dtype=np.int64)
    tails = np.asarray(tails, dtype=np.int64)
    groups = np.asarray(groups, dtype=np.int64)
    if not (heads.size == tails.size == groups.size):
        raise InvariantViolated("arc arrays must align")
    n_arcs = heads.size
    probs = np.full(n_arcs, float(p3))
    by_tail = {}
    for i in range(n_arcs):
        by_tail.setdefault(int(tails[i]), []).append(i)
    blockers = []
    for i in range(n_arcs):
        rivals = [j for j in by_tail[int(tails[i])] if groups[j] != groups[i]]
        blockers.append(np.asarray(rivals, dtype=np.int64))
    events = []
    for key in np.unique(groups):
        arc_ids = np.flatnonzero(groups == key)
        vbl = set(int(i) for i in arc_ids)
        for i in arc_ids:
            vbl.update(int(j) for j in blockers[i])
        ids = arc_ids
        bls = [blockers[i] for i in arc_ids]

        def holds(values, ids=ids, bls=bls):
            for i, bl in zip(ids, bls):
                if values[i] and not values[bl].any():
                    return False
            return True
        events.append(Event(f"activate/group/{int(key)}",
                            np.asarray(sorted(vbl), dtype=np.int64), holds,
                            home=int(heads[arc_ids].min())))
    meta = {"blockers": blockers}
    return LllInstance(probs, events, var_homes=tails), meta


def successful_arc_mask(tails: np.ndarray, groups: np.ndarray,
                        values: np.ndarray) -> np.ndarray:
    """Activated arcs whose tail saw no other group activate."""
    tails = np.asarray(tails, dtype=np.int64)
    groups = np.asarray(groups, dtype=np.int64)
    res = np.zeros(values.size, dtype=bool)
    by_tail = {}
    for i in np.flatnonzero(values):
        by_tail.setdefault(int(tails[i]), []).append(int(i))
    for idxs in by_tail.values():
        if len(set(int(groups[i]) for i in idxs)) == 1:
            res[idxs] = True
    return res


def pick_successful_arcs(heads: np.ndarray, tails: np.ndarray,
                         groups: np.ndarray, values: np.ndarray) -> dict:
    """Lowest (head, tail) winning arc per group; groups may be absent."""
    heads = np.asarray(heads, dtype=np.int64)
    tails = np.asarray(tails, dtype=np.int64)
    groups = np.asarray(groups, dtype=np.int64)
    mask = successful_arc_mask(tails, groups, values)
    out = {}
    for i in np.flatnonzero(mask):
        key = int(groups[i])
        cand = (int(heads[i]), int(tails[i]))
        if key not in out or cand < out[key]:
            out[key] = cand
    return out
