"""Classification of almost-clique parts and the derived node partition.

For a part C with deficiency e = max_degree - |C| + 1:

* C is *easy* when it holds a toehold of its own: two non-adjacent members
  or a member of degree below max_degree.
* Otherwise C is *difficult* when some outsider has at least 2e neighbors
  inside C; the lowest-id such outsider is C's designated heavy neighbor.
* Otherwise C is *nice* when it contains the heavy neighbor of some
  difficult part.
* Otherwise C is *ordinary*.

Difficult parts carry an escalation level: ceil(log2 e) when their heavy
neighbor sits inside another difficult part, infinity otherwise. Heavy
neighbors must not be colored before their part's turn, so the partition
marks them as stalled wherever they live.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _bits
from .acd import AcDecomposition
from .errors import InvariantViolated, MatchingTooSmall
from .graphs import Graph, max_bipartite_matching
from .simulator import Network

KIND_SPARSE = 0
KIND_EASY = 1
KIND_DIFFICULT = 2
KIND_NICE = 3
KIND_ORDINARY = 4

KIND_NAMES = {KIND_SPARSE: "sparse", KIND_EASY: "easy",
              KIND_DIFFICULT: "difficult", KIND_NICE: "nice",
              KIND_ORDINARY: "ordinary"}

LEVEL_INF = math.inf


@dataclass
class AcInfo:
    index: int
    members: np.ndarray
    e: int
    kind: int = KIND_ORDINARY
    special: int | None = None          # heavy neighbor, difficult parts only
    level: float = LEVEL_INF
    non_edge: tuple | None = None       # an easy part's non-adjacent pair
    low_degree_member: int | None = None
    matching: list = field(default_factory=list)   # (member, outsider) arcs
    large: bool = False
    important: bool = False

    @property
    def kind_name(self) -> str:
        return KIND_NAMES[self.kind]


@dataclass
class Classification:
    acs: list
    node_kind: np.ndarray               # KIND_* per node
    stalled: np.ndarray                 # bool per node: heavy neighbor on hold
    special_home: dict                  # special node -> index of its part

    def ordinary(self):
        return [ac for ac in self.acs if ac.kind == KIND_ORDINARY]

    def difficult_levels(self) -> list[float]:
        return sorted({ac.level for ac in self.acs
                       if ac.kind == KIND_DIFFICULT})


def classify_acs(g: Graph, dec: AcDecomposition, net: Network
                 ) -> Classification:
    """Label every part, find heavy neighbors, distribute levels."""
    d = g.max_degree
    # one count broadcast tells parts their outside load; a second short
    # exchange settles kinds and heavy-neighbor identities
    net.charge("classify/in-part-counts", net.count_bits, items_per_edge=1)
    net.charge("classify/kinds", net.id_bits, items_per_edge=2)
    acs: list[AcInfo] = []
    for i, part in enumerate(dec.parts):
        part = np.asarray(part, dtype=np.int64)
        e = d - len(part) + 1
        info = AcInfo(index=i, members=part, e=e)
        mask = _bits.mask_from_ids(g.n, part)
        counts = g.count_neighbors_in_mask(mask)
        low = part[g.degrees[part] < d]
        inside = counts[part]
        missing = part[inside < len(part) - 1]
        if len(missing):
            info.kind = KIND_EASY
            info.non_edge = _find_non_edge(g, part, missing, mask)
            if len(low):
                info.low_degree_member = int(low[0])
        elif len(low):
            info.kind = KIND_EASY
            info.low_degree_member = int(low[0])
        else:
            outside = np.flatnonzero(dec.labels != i)
            if e <= 0:
                raise InvariantViolated(
                    f"part {i}: complete on {len(part)} nodes with no"
                    f" deficiency should have been rejected upstream")
            intrusive = outside[counts[outside] >= 2 * e]
            if len(intrusive):
                info.kind = KIND_DIFFICULT
                info.special = int(intrusive.min())
        acs.append(info)
    # nice: hosts a difficult part's heavy neighbor, unless already settled
    special_home: dict[int, int] = {}
    for ac in acs:
        if ac.kind == KIND_DIFFICULT:
            home = int(dec.labels[ac.special])
            special_home[ac.special] = ac.index
            if home >= 0 and acs[home].kind == KIND_ORDINARY:
                acs[home].kind = KIND_NICE
    _assign_levels(dec, acs)
    node_kind = np.zeros(g.n, dtype=np.int8)
    for ac in acs:
        node_kind[ac.members] = ac.kind
    stalled = np.zeros(g.n, dtype=bool)
    for s in special_home:
        stalled[s] = True
    return Classification(acs=acs, node_kind=node_kind, stalled=stalled,
                          special_home=special_home)


def _find_non_edge(g: Graph, part, missing, mask) -> tuple:
    v = int(missing[0])
    present = g.bit_rows()[v] & mask
    absent = part[~np.isin(part, np.append(_bits.ids_from_mask(present), v))]
    return (v, int(absent[0]))


def _assign_levels(dec: AcDecomposition, acs: list) -> None:
    for ac in acs:
        if ac.kind != KIND_DIFFICULT:
            continue
        home = int(dec.labels[ac.special])
        if home >= 0 and acs[home].kind == KIND_DIFFICULT:
            # the host's deficiency must have doubled, else levels tangle
            if acs[home].e < 2 * ac.e:
                raise InvariantViolated(
                    f"part {home} hosts the heavy neighbor of part"
                    f" {ac.index} but its deficiency {acs[home].e} is below"
                    f" {2 * ac.e}")
            ac.level = math.ceil(math.log2(ac.e)) if ac.e > 1 else 0
        else:
            ac.level = LEVEL_INF


# ---------------------------------------------------------------------------
# boundary matchings


def boundary_edges(g: Graph, dec: AcDecomposition, ac: AcInfo
                   ) -> list[tuple[int, int]]:
    """Cross edges (member, outsider) of one part."""
    out = []
    for v in ac.members.tolist():
        nb = g.neighbors(v)
        ext = nb[dec.labels[nb] != ac.index]
        out.extend((v, int(w)) for w in ext.tolist())
    return out


def maximum_boundary_matching(g: Graph, dec: AcDecomposition, ac: AcInfo
                              ) -> list[tuple[int, int]]:
    """Exact maximum matching of the boundary graph (oracle route)."""
    edges = boundary_edges(g, dec, ac)
    left = sorted({u for u, _ in edges})
    right = sorted({w for _, w in edges})
    return max_bipartite_matching(left, right, edges)


def proposal_boundary_matching(g: Graph, dec: AcDecomposition, ac: AcInfo,
                               net: Network | None = None
                               ) -> list[tuple[int, int]]:
    """Greedy proposal rounds; maximal, hence at least half the maximum.

    Each round, every unmatched member proposes to its lowest-id unmatched
    outside neighbor; outsiders accept their lowest-id proposer.
    """
    edges = boundary_edges(g, dec, ac)
    nbrs: dict[int, list[int]] = {}
    for u, w in edges:
        nbrs.setdefault(u, []).append(w)
    for u in nbrs:
        nbrs[u].sort()
    matched_m: dict[int, int] = {}
    matched_o: dict[int, int] = {}
    rounds = 0
    while True:
        proposals: dict[int, list[int]] = {}
        for u, targets in nbrs.items():
            if u in matched_m:
                continue
            for w in targets:
                if w not in matched_o:
                    proposals.setdefault(w, []).append(u)
                    break
        if not proposals:
            break
        rounds += 1
        for w, us in proposals.items():
            u = min(us)
            matched_m[u] = w
            matched_o[w] = u
    if net is not None and rounds:
        net.charge("matching/proposals", net.id_bits, items_per_edge=rounds,
                   directed_edges=2 * len(edges))
    return sorted(matched_m.items())


def attach_matchings(g: Graph, dec: AcDecomposition, cls: Classification,
                     net: Network, floor: float | None = None) -> None:
    """Store proposal matchings on every ordinary part; enforce the floor."""
    d = g.max_degree
    floor = d / 10.0 if floor is None else floor
    for ac in cls.ordinary():
        ac.matching = proposal_boundary_matching(g, dec, ac, net)
        if len(ac.matching) < floor:
            raise MatchingTooSmall(
                f"part {ac.index}: matching {len(ac.matching)} below"
                f" {floor:.1f}")


def mark_subtypes(g: Graph, cls: Classification, q_eff: float) -> None:
    """Split ordinary parts into large/small and important/unimportant.

    Large: size above max_degree - max_degree / q_eff. Important: large with
    at least max_degree / 12 matched partners inside other large ordinary
    parts.
    """
    d = g.max_degree
    size_bar = d - d / q_eff
    large_members = np.zeros(g.n, dtype=bool)
    for ac in cls.ordinary():
        ac.large = len(ac.members) > size_bar
        if ac.large:
            large_members[ac.members] = True
    for ac in cls.ordinary():
        if not ac.large:
            ac.important = False
            continue
        tails = [w for _, w in ac.matching if large_members[w]]
        ac.important = len(tails) >= d / 12.0
