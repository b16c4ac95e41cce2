"""Driver that walks a graph through the five coloring phases.

Phase 1 decomposes the graph into almost-clique parts and classifies
them.  Phase 2 generates slack for sparse and ordinary nodes and colors
them, on one of two routes picked by the degree regime.  Phase 3 colors
parts holding a toehold of their own, phase 4 the difficult parts with
finite escalation level, and phase 5 the remaining difficult parts:
heavy neighbors pair up with in-part partners so every part keeps an
uncolored slack carrier until its turn.

Heavy neighbors are stalled: excluded from every earlier instance and
colored by the phase that settles the parts they serve.  Below a degree
floor the centralized fallback colorer takes the whole graph; that and
every local fallback taken en route is flagged in the report.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import _bits, lll
from .acd import compute_acd
from .brooks import brooks_coloring
from .classify import (
    KIND_DIFFICULT,
    KIND_EASY,
    KIND_NICE,
    KIND_ORDINARY,
    KIND_SPARSE,
    LEVEL_INF,
    KIND_NAMES,
    attach_matchings,
    classify_acs,
    mark_subtypes,
)
from .coloring import (
    ColoringState,
    build_pair_graph,
    graytone_color,
    graytone_split,
    pair_color_rounds,
    repair_rainbow,
    same_color_pair,
    slack_generation,
    solve_d1lc,
    trial_completion,
)
from .errors import (
    IllegalSpec,
    InvariantViolated,
    IterationCapExceeded,
    LevelOrderViolated,
    NoCandidate,
    NotGraytone,
    PairFormationFailed,
    SlackFailed,
)
from .graphs import Graph, check_proper_coloring, validate_delta_colorable
from .simulator import Network


@dataclass
class RunConfig:
    """All tunables of one pipeline run."""

    seed: int = 0
    eps: float = 1.0 / 172.0
    c_bits: int = 4
    strict_budget: bool = True
    fallback_degree: int = 8         # below this the centralized colorer runs
    regime_scale: int = 4            # large regime above regime_scale*ceil(log2 n)
    q_cap: float = 12.0              # cap on the subtype growth divisor
    q_sample: float = 1.0 / 30.0     # hand-off pool membership rate
    slack_rate: float = 1.0 / 20.0   # slack trial activation rate
    mu_scale: float = lll.DEFAULT_MU_SCALE
    floor_scale: float = lll.DEFAULT_FLOOR_SCALE
    keep_scale: float = lll.DEFAULT_KEEP_SCALE
    retries: int = 20
    lll_rounds: int = 200
    d1lc_rounds: int = 400
    acd_retries: int = 8
    sparse_slack_tolerance: float = 0.01

    def regime_bar(self, n: int) -> int:
        return self.regime_scale * max(1, math.ceil(math.log2(max(n, 2))))

    def subtype_divisor(self, n: int) -> float:
        grown = 10.0 * math.log(math.log(max(n, 3))) ** 3
        return float(max(2.0, min(self.q_cap, grown)))

    def check(self, n: int) -> None:
        if not 0.0 < self.eps < 1.0:
            raise InvariantViolated(f"eps {self.eps} out of range")
        if self.fallback_degree > self.regime_bar(n):
            raise InvariantViolated(
                f"degree thresholds out of order: fallback bar"
                f" {self.fallback_degree} above regime bar {self.regime_bar(n)}")

    def echo(self, n: int) -> dict:
        return {
            "seed": self.seed, "eps": self.eps, "c_bits": self.c_bits,
            "strict_budget": self.strict_budget,
            "fallback_degree": self.fallback_degree,
            "regime_scale": self.regime_scale,
            "regime_bar": self.regime_bar(n),
            "q_cap": self.q_cap, "q_sample": self.q_sample,
            "slack_rate": self.slack_rate,
            "mu_scale": self.mu_scale, "floor_scale": self.floor_scale,
            "keep_scale": self.keep_scale,
            "retries": self.retries, "lll_rounds": self.lll_rounds,
            "d1lc_rounds": self.d1lc_rounds, "acd_retries": self.acd_retries,
            "sparse_slack_tolerance": self.sparse_slack_tolerance,
        }


@dataclass
class Triple:
    """An in-part anchor, the pivot it serves, and an outside tail.

    The anchor and tail later receive one shared color; the pivot,
    adjacent to both, then holds a duplicated color in its neighborhood.
    """

    anchor: int
    pivot: int
    tail: int
    part: int


def validate_triples(g: Graph, state: ColoringState, triples: list) -> None:
    seen: set[int] = set()
    for t in triples:
        if not (g.has_edge(t.pivot, t.anchor) and g.has_edge(t.pivot, t.tail)):
            raise InvariantViolated(
                f"part {t.part}: pivot {t.pivot} not adjacent to both ends")
        if g.has_edge(t.anchor, t.tail):
            raise InvariantViolated(
                f"part {t.part}: anchor {t.anchor} adjacent to tail {t.tail}")
        for v in (t.anchor, t.pivot, t.tail):
            if state.colors[v] >= 0:
                raise InvariantViolated(f"part {t.part}: node {v} colored")
            if v in seen:
                raise InvariantViolated(
                    f"node {v} appears in two triples")
            seen.add(v)


def _tag(label: str, k: int = 0) -> int:
    return (zlib.crc32(label.encode("ascii")) << 6) + (int(k) & 63)


@dataclass
class RunContext:
    g: Graph
    cfg: RunConfig
    net: Network
    state: ColoringState
    dec: object = None
    cls: object = None
    q_eff: float = 0.0
    serving: dict = field(default_factory=dict)   # heavy node -> part indices
    pending: set = field(default_factory=set)     # difficult parts not done
    report: dict = field(default_factory=dict)

    def stalled_mask(self) -> np.ndarray:
        m = np.zeros(self.g.n, dtype=bool)
        for s, parts in self.serving.items():
            if any(p in self.pending for p in parts):
                m[s] = True
        return m

    def active(self, ids: np.ndarray) -> np.ndarray:
        """Uncolored ids not currently stalled."""
        ids = np.asarray(ids, dtype=np.int64)
        ids = self.state.uncolored(ids)
        if not self.serving:
            return ids
        return ids[~self.stalled_mask()[ids]]


def _force_complete(ctx: RunContext, nodes: np.ndarray, label: str) -> None:
    """Unguarded trial coloring with local repair; flags the escalation."""
    nodes = ctx.state.uncolored(np.asarray(nodes, dtype=np.int64))
    if nodes.size == 0:
        return
    ctx.report["fallbacks"].append(label)
    stuck = trial_completion(ctx.g, ctx.state, ctx.net, nodes,
                             _tag(label + "/trial"),
                             max_rounds=ctx.cfg.d1lc_rounds)
    guard = 0
    while stuck.size:
        repaired = 0
        for v in stuck.tolist():
            if repair_rainbow(ctx.g, ctx.state, v):
                repaired += 1
        stuck = trial_completion(ctx.g, ctx.state, ctx.net, stuck,
                                 _tag(label + "/retrial", guard),
                                 max_rounds=ctx.cfg.d1lc_rounds)
        guard += 1
        if stuck.size and (repaired == 0 or guard > ctx.cfg.retries):
            raise IterationCapExceeded(
                f"{label}: {stuck.size} nodes resist completion,"
                f" first {stuck[:5].tolist()}")


def _graytone_or_force(ctx: RunContext, nodes: np.ndarray, tag_label: str,
                       flag: str) -> dict:
    nodes = ctx.active(nodes)
    if nodes.size == 0:
        return {"gray": 0, "grayish": 0, "rounds": 0}
    try:
        return graytone_color(ctx.g, ctx.state, ctx.net, nodes,
                              _tag(tag_label), max_rounds=ctx.cfg.d1lc_rounds)
    except (NotGraytone, IterationCapExceeded):
        _force_complete(ctx, nodes, flag)
        return {"gray": 0, "grayish": 0, "rounds": 0, "forced": True}


def _charge_resampling(ctx: RunContext, label: str, info: dict) -> None:
    # each resampling round ships one id-sized token along every edge
    ctx.net.charge(f"lll/{label}", ctx.net.id_bits,
                   items_per_edge=1 + info.get("rounds", 0))


def _solve_instance(ctx: RunContext, inst, label: str) -> np.ndarray:
    rng = ctx.net.nodes_rng(_tag("lll/" + label))
    values, info = lll.solve_resampling(inst, rng,
                                        max_rounds=ctx.cfg.lll_rounds)
    _charge_resampling(ctx, label, info)
    ctx.report["lll"][label] = {"rounds": info["rounds"],
                                "resamples": info["resamples"],
                                "events": len(inst.events),
                                "variables": inst.num_vars}
    return values


# ---------------------------------------------------------------------------
# phase 1: decomposition and classification


def phase1_classify(ctx: RunContext) -> None:
    g, cfg, net = ctx.g, ctx.cfg, ctx.net
    ctx.dec = compute_acd(g, cfg.eps, net, max_retries=cfg.acd_retries)
    ctx.cls = classify_acs(g, ctx.dec, net)
    attach_matchings(g, ctx.dec, ctx.cls, net)
    ctx.q_eff = cfg.subtype_divisor(g.n)
    mark_subtypes(g, ctx.cls, ctx.q_eff)
    for ac in ctx.cls.acs:
        if ac.kind == KIND_DIFFICULT:
            ctx.serving.setdefault(ac.special, []).append(ac.index)
            ctx.pending.add(ac.index)
    overlap = []
    for s in sorted(ctx.serving):
        home = int(ctx.dec.labels[s])
        home_kind = "sparse" if home < 0 else ctx.cls.acs[home].kind_name
        if home_kind not in ("difficult",):
            overlap.append({"node": int(s), "home": home_kind})
    kinds = {name: 0 for name in KIND_NAMES.values()}
    for ac in ctx.cls.acs:
        kinds[ac.kind_name] += 1
    levels = sorted(ac.level for ac in ctx.cls.acs
                    if ac.kind == KIND_DIFFICULT)
    ctx.report["phases"]["phase1"] = {
        "parts": len(ctx.cls.acs),
        "kinds": kinds,
        "sparse_nodes": int(ctx.dec.sparse_nodes().size),
        "q_eff": ctx.q_eff,
        "matchings": {ac.index: len(ac.matching)
                      for ac in ctx.cls.ordinary()},
        "levels": ["inf" if l == LEVEL_INF else int(l) for l in levels],
        "heavy_overlap": overlap,
    }
    if overlap:
        ctx.report["flags"].append("heavy-neighbor-outside-difficult")


# ---------------------------------------------------------------------------
# phase 2, large regime


def _phase2_pool(ctx: RunContext) -> tuple[np.ndarray, list]:
    ords = ctx.cls.ordinary()
    parts_members = [ac.members for ac in ords]
    sparse = ctx.dec.sparse_nodes()
    if parts_members:
        pool = np.union1d(sparse, np.concatenate(parts_members))
    else:
        pool = sparse
    return ctx.active(pool), ords


def phase2_large(ctx: RunContext) -> None:
    g, cfg, net, state = ctx.g, ctx.cfg, ctx.net, ctx.state
    d = g.max_degree
    pool, ords = _phase2_pool(ctx)
    rec = {"route": "trial-slack", "attempts": 0, "toehold_parts": len(ords)}
    ctx.report["phases"]["phase2"] = rec
    if pool.size == 0 and not ords:
        rec["noop"] = True
        return
    chi = max(1, d // 8)
    sparse = ctx.active(ctx.dec.sparse_nodes())
    attempt = -1
    for attempt in range(cfg.retries):
        snap = state.snapshot()
        kept = slack_generation(g, state, net, pool, chi, cfg.slack_rate,
                                _tag("slack-large", attempt))
        net.charge("phase2/toehold-verify", net.count_bits)
        gray_pool, _, _ = graytone_split(g, state, ctx.active(pool))
        gray_lookup = np.zeros(g.n, dtype=bool)
        gray_lookup[gray_pool] = True
        missing = [ac.index for ac in ords
                   if ctx.active(ac.members).size
                   and not gray_lookup[ctx.active(ac.members)].any()]
        live_sparse = ctx.active(sparse)
        lacking = (int((~gray_lookup[live_sparse]).sum())
                   if live_sparse.size else 0)
        frac = lacking / live_sparse.size if live_sparse.size else 0.0
        if not missing and frac < cfg.sparse_slack_tolerance:
            rec["attempts"] = attempt + 1
            rec["colored_by_trial"] = int(kept.size)
            rec["sparse_lacking_fraction"] = frac
            rec["toehold_gray"] = {
                ac.index: int(gray_lookup[ctx.active(ac.members)].sum())
                for ac in ords}
            break
        state.restore(snap)
    else:
        raise SlackFailed(
            f"no joint toehold after {cfg.retries} slack trials:"
            f" parts {missing[:5]}, sparse lacking {frac:.3f}")
    rounds = 0
    for ac in ords:
        rounds += _graytone_or_force(ctx, ac.members,
                                     f"p2l/part/{ac.index}",
                                     f"part-completion/{ac.index}")["rounds"]
    rounds += _graytone_or_force(ctx, ctx.dec.sparse_nodes(),
                                 "p2l/sparse", "sparse-completion")["rounds"]
    rec["completion_rounds"] = rounds


# ---------------------------------------------------------------------------
# phase 2, small regime


def phase2_small(ctx: RunContext) -> None:
    g, cfg, net, state = ctx.g, ctx.cfg, ctx.net, ctx.state
    d = g.max_degree
    n = g.n
    pool, ords = _phase2_pool(ctx)
    larges = [ac for ac in ords if ac.large]
    smalls = [ac for ac in ords if not ac.large]
    imps = [ac for ac in larges if ac.important]
    unimps = [ac for ac in larges if not ac.important]
    rec = {"route": "seeded-slack",
           "subtypes": {"large": len(larges), "small": len(smalls),
                        "important": len(imps)}}
    ctx.report["phases"]["phase2"] = rec

    # step 1: seed two disjoint sets, color them in two palette windows,
    # and demand a duplicated color next to every small-part node
    mu = lll.slack_seed_intensity(n, d, cfg.mu_scale)
    p = lll.seed_probability(mu, d)
    rec["mu"] = mu
    rec["seed_probability"] = p
    targets = ctx.active(np.concatenate([ac.members for ac in smalls])
                         if smalls else np.empty(0, dtype=np.int64))
    if pool.size:
        pool_mask = _bits.mask_from_ids(n, pool)
        matchings = {}
        for ac in ords:
            nodes = np.array(sorted({x for arc in ac.matching for x in arc}),
                             dtype=np.int64)
            nodes = nodes[pool_mask[nodes]] if nodes.size else nodes
            if nodes.size:
                matchings[ac.index] = nodes
        inst, meta = lll.build_slack_set_lll(
            g, pool, targets, mu, p, matchings=matchings,
            floor_limit=lll.nonedge_floor_limit(n, d, cfg.floor_scale))
        first = pool[_solve_instance(ctx, inst, "seed-a")]
        second = pool[_solve_instance(ctx, inst, "seed-b")]
        second = np.setdiff1d(second, first)
        floors = None
        if targets.size:
            keyed = meta["alphas"]
            m_bars = np.array([keyed.get(int(w), 0.0) * d * d
                               for w in np.unique(targets)])
            floors = np.array([lll.kept_pair_floor(m, d // 2, cfg.keep_scale)
                               for m in m_bars])
        res = lll.two_set_slack_color(
            g, state, net, first, second, targets, max(1, d // 2),
            _tag("seed-windows"), seed_degree_cap=meta["cap"],
            surplus_floor=floors, max_retries=cfg.retries)
        kept_mask = np.zeros(n, dtype=bool)
        kept_mask[res["colored"]] = True
        for key, nodes in matchings.items():
            hit = int(kept_mask[nodes].sum())
            if hit > 2 * meta["cap"]:
                raise InvariantViolated(
                    f"part {key}: {hit} matching nodes colored in the seed"
                    f" step, cap {2 * meta['cap']}")
        rec["step1"] = {"seeded": [int(first.size), int(second.size)],
                        "colored": int(res["colored"].size),
                        "attempts": res["attempts"]}

    # steps 2-4: hand a pivot of every important part a duplicated color
    triples: list[Triple] = []
    if imps:
        triples = _handoff_steps(ctx, larges, imps, rec)

    # step 5: completion, unimportant parts first
    large_members = np.zeros(n, dtype=bool)
    for ac in larges:
        large_members[ac.members] = True
    rounds = 0
    for ac in unimps:
        outside = [t for _, t in ac.matching if not large_members[t]]
        if len(outside) < 7.0 * d / 60.0:
            raise InvariantViolated(
                f"part {ac.index}: only {len(outside)} matched tails leave"
                f" the large parts, need {7.0 * d / 60.0:.1f}")
        rounds += _graytone_or_force(ctx, ac.members,
                                     f"p2s/unimp/{ac.index}",
                                     f"part-completion/{ac.index}")["rounds"]
    for ac in smalls:
        rounds += _graytone_or_force(ctx, ac.members,
                                     f"p2s/small/{ac.index}",
                                     f"part-completion/{ac.index}")["rounds"]
    rounds += _graytone_or_force(ctx, ctx.dec.sparse_nodes(),
                                 "p2s/sparse", "sparse-completion")["rounds"]
    for ac in imps:
        for t in triples:
            if t.part == ac.index and state.colors[t.pivot] < 0:
                if int(state.duplicate_surplus(
                        np.array([t.pivot]))[0]) < 1:
                    raise InvariantViolated(
                        f"part {ac.index}: pivot {t.pivot} lost its"
                        f" duplicated color before its turn")
        rounds += _graytone_or_force(ctx, ac.members,
                                     f"p2s/imp/{ac.index}",
                                     f"part-completion/{ac.index}")["rounds"]
    rec["completion_rounds"] = rounds


def _handoff_steps(ctx: RunContext, larges: list, imps: list,
                   rec: dict) -> list:
    """Steps 2-4: tail pool, split, activation, triples, pair coloring."""
    g, cfg, net, state = ctx.g, ctx.cfg, ctx.net, ctx.state
    d = g.max_degree
    large_ids = np.concatenate([ac.members for ac in larges])
    x_pool = ctx.active(large_ids)
    x_mask = _bits.mask_from_ids(g.n, x_pool)
    arc_groups = {}
    for ac in imps:
        hs, ts = [], []
        for h, t in ac.matching:
            if x_mask[h] and x_mask[t]:
                hs.append(h)
                ts.append(t)
        arc_groups[ac.index] = (np.array(hs, dtype=np.int64),
                                np.array(ts, dtype=np.int64))
    watch = ctx.active(np.arange(g.n))
    inst2, meta2 = lll.build_tail_pool_sampling(
        g, x_pool, watch, arc_groups, cfg.q_sample, d)
    if meta2["degenerate"]:
        raise NoCandidate(
            f"important parts {meta2['degenerate']} lost every live"
            f" matched arc before the hand-off step")
    values2 = _solve_instance(ctx, inst2, "tail-pool")
    z_pool = x_pool[values2]
    z_mask = _bits.mask_from_ids(g.n, z_pool)
    counts = g.count_neighbors_in_mask(z_mask)
    worst = int(counts[watch].max()) if watch.size else 0
    if worst > d / 10.0:
        raise InvariantViolated(
            f"a node keeps {worst} tail-pool neighbors, cap {d / 10.0:.1f}")
    useful_groups = {}
    for key, (hs, ts) in arc_groups.items():
        use = z_mask[ts] & ~z_mask[hs]
        useful_groups[key] = (hs[use], ts[use])
        if int(use.sum()) < meta2["arc_floor"]:
            raise InvariantViolated(
                f"part {key}: {int(use.sum())} useful arcs, floor"
                f" {meta2['arc_floor']:.2f}")
    rec["step2"] = {"pool": int(z_pool.size),
                    "max_pool_neighbors": worst,
                    "useful": {k: int(v[0].size)
                               for k, v in useful_groups.items()}}

    split_groups = {k: v for k, v in useful_groups.items() if v[0].size >= 2}
    side_floor = meta2["arc_floor"] / 3.0
    if split_groups:
        inst2b, _ = lll.build_pool_split(g, z_pool, split_groups, side_floor)
        coins = _solve_instance(ctx, inst2b, "pool-split")
    else:
        coins = np.zeros(z_pool.size, dtype=bool)
    low, high = lll.split_arc_groups(g, z_pool, coins, useful_groups)
    for key in split_groups:
        for side in (low, high):
            if side[key][0].size < side_floor:
                raise InvariantViolated(
                    f"part {key}: a split side keeps {side[key][0].size}"
                    f" arcs, floor {side_floor:.2f}")

    picked: dict[int, tuple[int, int]] = {}
    p3 = min(1.0, ctx.q_eff / d)
    for name, side in (("low", low), ("high", high)):
        remaining = {k: side[k] for k in sorted(useful_groups)
                     if k not in picked and side[k][0].size}
        if not remaining:
            continue
        hs = np.concatenate([remaining[k][0] for k in sorted(remaining)])
        ts = np.concatenate([remaining[k][1] for k in sorted(remaining)])
        gs = np.concatenate([np.full(remaining[k][0].size, k, dtype=np.int64)
                             for k in sorted(remaining)])
        inst3, _ = lll.build_arc_activation(hs, ts, gs, p3)
        values3 = _solve_instance(ctx, inst3, f"activation-{name}")
        picked.update(lll.pick_successful_arcs(hs, ts, gs, values3))
    missing = [ac.index for ac in imps if ac.index not in picked]
    if missing:
        raise NoCandidate(
            f"no successful hand-off arc for parts {missing[:5]}")

    triples = []
    taken = {v for pick in picked.values() for v in pick}
    candidate_counts = {}
    for ac in imps:
        pivot, tail = picked[ac.index]
        anchor, count = select_triple_anchor(ctx, ac, pivot, tail, taken)
        candidate_counts[ac.index] = count
        taken.add(anchor)
        triples.append(Triple(anchor=anchor, pivot=pivot, tail=tail,
                              part=ac.index))
    validate_triples(g, state, triples)
    tails = np.array([t.tail for t in triples], dtype=np.int64)
    tail_counts = g.count_neighbors_in_mask(
        _bits.mask_from_ids(g.n, tails))
    worst_tail = int(tail_counts[tails].max())
    if worst_tail > d / 10.0:
        raise InvariantViolated(
            f"a tail touches {worst_tail} other tails, cap {d / 10.0:.1f}")
    rec["step3"] = {"picked": {k: list(v) for k, v in sorted(picked.items())},
                    "anchor_candidates": candidate_counts,
                    "tail_degree": worst_tail}

    pg = build_pair_graph(g, state,
                          [(t.anchor, t.tail) for t in triples],
                          degree_cap=d / 9.0,
                          single_floor=4.0 * d / 5.0,
                          joint_floor=3.0 * d / 5.0)
    history = pair_color_rounds(g, state, net, pg, _tag("handoff-pairs"),
                                max_rounds=cfg.lll_rounds)
    for t in triples:
        if int(state.duplicate_surplus(np.array([t.pivot]))[0]) < 1:
            raise InvariantViolated(
                f"part {t.part}: pivot {t.pivot} sees no duplicated color"
                f" after pair coloring")
    rec["step4"] = {"pairs": len(triples),
                    "pair_degree": pg.max_degree,
                    "history": [list(h) for h in history]}
    return triples


def select_triple_anchor(ctx: RunContext, ac, pivot: int, tail: int,
                         taken: set) -> tuple[int, int]:
    """Lowest eligible in-part partner for a pivot/tail arc.

    Eligible: uncolored member, adjacent to the pivot, not adjacent to
    the tail, and not an endpoint of another part's arc.
    """
    g = ctx.g
    members = ctx.active(ac.members)
    cand = [int(v) for v in members
            if v != pivot
            and g.has_edge(int(v), pivot)
            and not g.has_edge(int(v), tail)
            and int(v) not in taken]
    if not cand:
        raise NoCandidate(
            f"part {ac.index}: no anchor for pivot {pivot}, tail {tail}")
    return min(cand), len(cand)


# ---------------------------------------------------------------------------
# phases 3-5


def phase3_toeholds(ctx: RunContext) -> None:
    """Parts with their own toehold: non-edge pair, low-degree member,
    or a stalled heavy neighbor inside."""
    g, cfg, net, state = ctx.g, ctx.cfg, ctx.net, ctx.state
    d = g.max_degree
    rec = {"parts": 0, "pairs": []}
    ctx.report["phases"]["phase3"] = rec
    for ac in ctx.cls.acs:
        if ac.kind not in (KIND_EASY, KIND_NICE):
            continue
        rec["parts"] += 1
        h = ctx.active(ac.members)
        if h.size == 0:
            continue
        gray, _, leftover = graytone_split(g, state, h)
        if gray.size == 0 or leftover.size:
            if ac.non_edge is None:
                raise InvariantViolated(
                    f"part {ac.index} has no toehold and no non-edge")
            u, w = ac.non_edge
            if state.colors[u] >= 0 or state.colors[w] >= 0:
                raise InvariantViolated(
                    f"part {ac.index}: non-edge pair ({u}, {w}) was"
                    f" colored early")
            members_mask = _bits.mask_from_ids(g.n, ac.members)
            rows = g.bit_rows()
            common_in = int(_bits.popcount_rows(
                (rows[u] & rows[w] & members_mask)[None, :])[0])
            if common_in < d / 2.0:
                raise InvariantViolated(
                    f"part {ac.index}: pair ({u}, {w}) shares {common_in}"
                    f" in-part neighbors, need {d / 2.0:.1f}")
            same_color_pair(g, state, net, u, w,
                            _tag(f"hollow/{ac.index}"),
                            min_common=d / 2.0,
                            max_burn=2.0 * cfg.eps * d)
            rec["pairs"].append([int(u), int(w)])
        _graytone_or_force(ctx, ac.members, f"p3/part/{ac.index}",
                           f"part-completion/{ac.index}")


def phase4_levels(ctx: RunContext) -> None:
    """Finite-level difficult parts, in increasing level order."""
    g, state = ctx.g, ctx.state
    acs = ctx.cls.acs
    finite = [ac for ac in acs
              if ac.kind == KIND_DIFFICULT and ac.level != LEVEL_INF]
    levels = sorted({ac.level for ac in finite})
    rec = {"levels": [int(l) for l in levels], "parts": len(finite)}
    ctx.report["phases"]["phase4"] = rec
    for lev in levels:
        for ac in finite:
            if ac.level < lev and ctx.active(ac.members).size:
                raise LevelOrderViolated(
                    f"level {lev} starting while part {ac.index}"
                    f" (level {ac.level}) is incomplete")
        batch = [ac for ac in finite if ac.level == lev]
        for ac in batch:
            if state.colors[ac.special] >= 0:
                raise LevelOrderViolated(
                    f"heavy neighbor {ac.special} of part {ac.index}"
                    f" colored before level {lev}")
        for ac in batch:
            _graytone_or_force(ctx, ac.members, f"p4/part/{ac.index}",
                               f"part-completion/{ac.index}")
            ctx.pending.discard(ac.index)


def phase5_pairs(ctx: RunContext) -> None:
    """Difficult parts without a finite level; heavy neighbors pair up."""
    g, cfg, net, state = ctx.g, ctx.cfg, ctx.net, ctx.state
    d = g.max_degree
    acs = ctx.cls.acs
    inf_parts = [ac for ac in acs
                 if ac.kind == KIND_DIFFICULT and ac.level == LEVEL_INF]
    rec = {"parts": len(inf_parts), "type1": 0, "type2": 0, "held_last": 0}
    ctx.report["phases"]["phase5"] = rec
    if not inf_parts:
        return
    for ac in acs:
        if (ac.kind == KIND_DIFFICULT and ac.level != LEVEL_INF
                and ctx.active(ac.members).size):
            raise LevelOrderViolated(
                f"part {ac.index} (level {ac.level}) incomplete at the"
                f" final phase")
    inf_index = {ac.index for ac in inf_parts}
    serving_inf: dict[int, list[int]] = {}
    for s, parts in sorted(ctx.serving.items()):
        mine = [p for p in parts if p in inf_index]
        if mine:
            serving_inf[s] = mine
    pairs: list[tuple[int, int]] = []
    held_last: list[int] = []
    taken: set[int] = set()
    rows = g.bit_rows()
    for s, part_ids in serving_inf.items():
        if len(part_ids) == 1:
            ac = acs[part_ids[0]]
            cand = [int(v) for v in ctx.active(ac.members)
                    if not g.has_edge(int(v), s) and int(v) not in taken]
            if not cand:
                raise PairFormationFailed(
                    f"part {ac.index}: heavy neighbor {s} has no"
                    f" non-adjacent uncolored partner inside")
            u = min(cand)
            members_mask = _bits.mask_from_ids(g.n, ac.members)
            outs = _bits.popcount_rows(rows[[s, u]] & ~members_mask[None, :])
            out_s, out_u = int(outs[0]), int(outs[1])
            if out_s + out_u > d - ac.e:
                raise InvariantViolated(
                    f"part {ac.index}: pair ({s}, {u}) meets"
                    f" {out_s + out_u} outside neighbors, cap {d - ac.e}")
            pairs.append((s, u))
            taken.update((s, u))
            rec["type1"] += 1
        else:
            by_e = sorted(part_ids, key=lambda i: (acs[i].e, i))
            c1, c2 = acs[by_e[0]], acs[by_e[-1]]
            w1_pool = [int(v) for v in ctx.active(c1.members)
                       if g.has_edge(int(v), s) and int(v) not in taken]
            if not w1_pool:
                raise PairFormationFailed(
                    f"part {c1.index}: heavy neighbor {s} keeps no"
                    f" uncolored partner there")
            w1 = min(w1_pool)
            cand2 = [int(v) for v in ctx.active(c2.members)
                     if g.has_edge(int(v), s)
                     and not g.has_edge(int(v), w1)
                     and int(v) not in taken]
            floor = 2 * c2.e - c1.e
            if len(cand2) < max(1, floor):
                raise PairFormationFailed(
                    f"parts {c1.index}/{c2.index}: {len(cand2)} candidate"
                    f" partners via {s}, need {max(1, floor)}")
            w2 = min(cand2)
            pairs.append((w1, w2))
            taken.update((w1, w2))
            held_last.append(s)
            rec["type2"] += 1
    if pairs:
        pg = build_pair_graph(g, state, pairs, degree_cap=float(d),
                              single_floor=1.0, joint_floor=1.0)
        pair_color_rounds(g, state, net, pg, _tag("final-pairs"),
                          max_rounds=cfg.lll_rounds)
    for ac in inf_parts:
        _graytone_or_force(ctx, ac.members, f"p5/part/{ac.index}",
                           f"part-completion/{ac.index}")
        ctx.pending.discard(ac.index)
    last = state.uncolored(np.array(sorted(held_last), dtype=np.int64))
    rec["held_last"] = int(last.size)
    if last.size:
        # the shared heavy neighbors come last; their paired partners
        # guarantee the strict palette margin the solver demands
        solve_d1lc(g, state, net, last, _tag("held-last"),
                   max_rounds=cfg.d1lc_rounds)


# ---------------------------------------------------------------------------
# entry point


def run(g: Graph, cfg: RunConfig | None = None) -> tuple[np.ndarray, dict]:
    cfg = cfg or RunConfig()
    cfg.check(g.n)
    verdict = validate_delta_colorable(g)
    if not verdict.ok:
        raise IllegalSpec(f"input rejected: {verdict.reason}")
    d = g.max_degree
    report: dict = {
        "n": g.n, "max_degree": d, "palette": d,
        "seed": cfg.seed, "config": cfg.echo(g.n),
        "regime": "", "phases": {}, "lll": {},
        "fallbacks": [], "flags": [],
        "verdicts": {}, "bandwidth": {},
    }
    if d < cfg.fallback_degree:
        colors = brooks_coloring(g, d)
        report["regime"] = "oracle"
        report["fallbacks"].append("degree-floor-oracle")
        _finish(g, colors, report)
        return colors, report
    net = Network(g, seed=cfg.seed, c_bits=cfg.c_bits,
                  strict=cfg.strict_budget)
    state = ColoringState(g, d)
    ctx = RunContext(g=g, cfg=cfg, net=net, state=state, report=report)
    phase1_classify(ctx)
    if d >= cfg.regime_bar(g.n):
        report["regime"] = "large"
        phase2_large(ctx)
    else:
        report["regime"] = "small"
        phase2_small(ctx)
    phase3_toeholds(ctx)
    phase4_levels(ctx)
    phase5_pairs(ctx)
    colors = state.colors.copy()
    band = net.report()
    report["bandwidth"] = {
        "budget": band.budget, "c_bits": band.c_bits,
        "rounds": band.rounds, "total_bits": band.total_bits,
        "max_edge_bits_round": band.max_edge_bits_round,
        "violations": list(band.violations),
        "phases": [list(p) for p in band.phases],
    }
    _finish(g, colors, report)
    return colors, report


def _finish(g: Graph, colors: np.ndarray, report: dict) -> None:
    if (colors < 0).any():
        raise InvariantViolated(
            f"{int((colors < 0).sum())} nodes left uncolored")
    errors = check_proper_coloring(g, colors, g.max_degree)
    report["verdicts"] = {
        "complete": bool((colors >= 0).all()),
        "proper": not errors,
        "within_palette": bool(colors.max() < g.max_degree
                               if colors.size else True),
        "errors": errors,
    }
    if errors:
        raise InvariantViolated(f"improper output: {errors[:3]}")
