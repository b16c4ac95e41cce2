"""Almost-clique decomposition: construction, validation, agreement metric.

A decomposition at density parameter eps splits the nodes into parts
("almost-cliques") and a leftover set. The validator enforces, with
D = max degree:

  (i)   (1 - eps/4) D <= |C| <= (1 + eps) D for every part C,
  (ii)  every member of C has at least (1 - eps) D neighbors inside C,
  (iii) every node outside C has at most (1 - eps/2) D neighbors in C,
  (iv)  every leftover node sees at least (1/64) eps^2 D^2 non-adjacent
        pairs among its neighbors.

Construction is anchor-driven: after one full neighbor-list exchange
(charged to the network), each unassigned node in turn acts as an anchor,
gathers the neighbors that share almost all of its ball, and keeps the
candidate part if the invariants hold locally. One augmentation pass then
pulls in stragglers with (1 - eps) D neighbors inside an accepted part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _bits
from .errors import DecompositionFailed
from .graphs import Graph
from .simulator import Network

SPARSE_ZETA = 1.0 / 64.0
_TOL = 1e-9


@dataclass
class AcDecomposition:
    eps: float
    parts: list                       # sorted node-id arrays
    labels: np.ndarray                # part index per node, -1 = leftover
    meta: dict = field(default_factory=dict)

    def sparse_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.labels < 0).astype(np.int64)


def compute_acd(g: Graph, eps: float, net: Network,
                max_retries: int = 8) -> AcDecomposition:
    """Build a decomposition; retries with shuffled anchors, then raises."""
    if not 0 < eps < 1:
        raise DecompositionFailed(f"eps {eps} out of range")
    d = g.max_degree
    # every node ships its full neighbor list to all neighbors, then three
    # short label-agreement rounds
    net.charge("acd/neighbor-lists", net.id_bits, items_per_edge=max(1, d))
    net.charge("acd/labels", net.id_bits, items_per_edge=3)
    last_errors: list[str] = []
    for attempt in range(max_retries):
        rng = net.nodes_rng(tag=1000 + attempt)
        order = np.arange(g.n, dtype=np.int64)
        if attempt > 0:
            order = order[rng.permutation(g.n)]
        dec = _anchor_sweep(g, eps, order)
        errors = validate_acd(g, dec)
        if not errors:
            dec.meta["attempt"] = attempt
            return dec
        last_errors = errors
    raise DecompositionFailed(
        f"no valid decomposition in {max_retries} attempts;"
        f" last errors: {last_errors[:3]}")


def _anchor_sweep(g: Graph, eps: float, order: np.ndarray) -> AcDecomposition:
    d = g.max_degree
    rows = g.bit_rows()
    member_floor = (1.0 - eps) * d
    share_floor = (1.0 - eps / 2.0) * d
    size_floor = (1.0 - eps / 4.0) * d
    size_cap = (1.0 + eps) * d
    labels = np.full(g.n, -1, dtype=np.int32)
    parts: list[np.ndarray] = []
    for a in order:
        a = int(a)
        if labels[a] >= 0 or g.degrees[a] < member_floor - _TOL:
            continue
        ball = np.append(g.neighbors(a).astype(np.int64), a)
        cand = ball[labels[ball] < 0]
        cand_mask = _bits.mask_from_ids(g.n, cand)
        shared = _bits.popcount_rows(rows[cand] & cand_mask[None, :])
        part = cand[shared >= share_floor - _TOL]
        # peel members that fall under the in-part degree floor
        for _ in range(3):
            if len(part) == 0:
                break
            pmask = _bits.mask_from_ids(g.n, part)
            inside = _bits.popcount_rows(rows[part] & pmask[None, :])
            keep = inside >= member_floor - _TOL
            if keep.all():
                break
            part = part[keep]
        if len(part) < size_floor - _TOL or len(part) > size_cap + _TOL:
            continue
        labels[part] = len(parts)
        parts.append(np.sort(part))
    _augment(g, eps, parts, labels)
    parts = [np.sort(p) for p in parts]
    return AcDecomposition(eps=eps, parts=parts, labels=labels)


def _augment(g: Graph, eps: float, parts: list, labels: np.ndarray) -> None:
    d = g.max_degree
    member_floor = (1.0 - eps) * d
    size_cap = (1.0 + eps) * d
    for i, part in enumerate(parts):
        mask = _bits.mask_from_ids(g.n, part)
        counts = g.count_neighbors_in_mask(mask)
        joiners = np.flatnonzero((labels < 0) & (counts >= member_floor - _TOL))
        if len(joiners) == 0:
            continue
        room = int(math.floor(size_cap + _TOL)) - len(part)
        joiners = joiners[:max(0, room)]
        if len(joiners):
            labels[joiners] = i
            parts[i] = np.concatenate([part, joiners.astype(np.int64)])


def validate_acd(g: Graph, dec: AcDecomposition) -> list[str]:
    """Check invariants (i)-(iv); empty list means the decomposition holds."""
    d = g.max_degree
    eps = dec.eps
    errors: list[str] = []
    seen = np.zeros(g.n, dtype=bool)
    for i, part in enumerate(dec.parts):
        part = np.asarray(part, dtype=np.int64)
        if len(part) == 0:
            errors.append(f"part {i} is empty")
            continue
        if np.any(seen[part]):
            errors.append(f"part {i} overlaps an earlier part")
        seen[part] = True
        if np.any(dec.labels[part] != i):
            errors.append(f"part {i} disagrees with the label array")
        lo = (1.0 - eps / 4.0) * d
        hi = (1.0 + eps) * d
        if not (lo - _TOL <= len(part) <= hi + _TOL):
            errors.append(f"part {i} size {len(part)} outside"
                          f" [{lo:.2f}, {hi:.2f}]")
        mask = _bits.mask_from_ids(g.n, part)
        counts = g.count_neighbors_in_mask(mask)
        member_floor = (1.0 - eps) * d
        low = part[counts[part] < member_floor - _TOL]
        if len(low):
            errors.append(f"part {i}: {len(low)} members under the"
                          f" {member_floor:.2f} in-part degree floor,"
                          f" first {low[:3].tolist()}")
        outsiders = np.flatnonzero(dec.labels != i)
        cap = (1.0 - eps / 2.0) * d
        heavy = outsiders[counts[outsiders] > cap + _TOL]
        if len(heavy):
            errors.append(f"part {i}: {len(heavy)} outsiders above the"
                          f" {cap:.2f} share cap, first {heavy[:3].tolist()}")
    stray = np.flatnonzero((dec.labels >= 0) & ~seen)
    if len(stray):
        errors.append(f"{len(stray)} labeled nodes missing from parts")
    errors.extend(_check_sparse(g, dec))
    return errors


def _check_sparse(g: Graph, dec: AcDecomposition) -> list[str]:
    d = g.max_degree
    need = SPARSE_ZETA * dec.eps * dec.eps * d * d
    if need <= _TOL:
        return []
    rows = g.bit_rows()
    bad: list[int] = []
    for v in np.flatnonzero(dec.labels < 0):
        nb = g.neighbors(int(v)).astype(np.int64)
        deg = len(nb)
        pairs = deg * (deg - 1) // 2
        if pairs < need - _TOL:
            bad.append(int(v))
            continue
        inside = int(_bits.popcount_rows(rows[nb] & rows[int(v)][None, :]).sum()) // 2
        if pairs - inside < need - _TOL:
            bad.append(int(v))
    if bad:
        return [f"{len(bad)} leftover nodes miss the {need:.1f} non-edge"
                f" floor, first {bad[:3]}"]
    return []


def membership_agreement(dec: AcDecomposition, parts: list,
                         n: int) -> float:
    """Fraction of nodes on which `dec` matches a reference partition.

    Reference parts are greedily matched to decomposition parts by overlap;
    reference nodes outside any part count as matches when left out of all
    decomposition parts too.
    """
    ref_label = np.full(n, -1, dtype=np.int64)
    for i, part in enumerate(parts):
        ref_label[np.asarray(part, dtype=np.int64)] = i
    used = set()
    mapping: dict[int, int] = {}
    for i, part in enumerate(parts):
        part = np.asarray(part, dtype=np.int64)
        got = dec.labels[part]
        got = got[got >= 0]
        if len(got) == 0:
            continue
        vals, cnts = np.unique(got, return_counts=True)
        for j in vals[np.argsort(-cnts)]:
            if int(j) not in used:
                mapping[i] = int(j)
                used.add(int(j))
                break
    agree = 0
    for v in range(n):
        r = int(ref_label[v])
        h = int(dec.labels[v])
        if r < 0:
            agree += h < 0
        else:
            agree += mapping.get(r, -2) == h
    return agree / max(1, n)
