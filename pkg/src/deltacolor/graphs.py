"""Graph container, instance generators, and exact combinatorial oracles.

Graphs are simple and undirected, stored in CSR form with sorted neighbor
lists. Generators are deterministic per seed and attach ground-truth
structure (`PlantedInfo`) used by validators and tests.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import _bits
from .errors import GenerationFailed, GraphFormatError, IllegalSpec


# ---------------------------------------------------------------------------
# core container


class Graph:
    """Immutable simple graph with CSR adjacency and lazy packed bit rows."""

    __slots__ = ("n", "indptr", "indices", "degrees", "max_degree", "planted",
                 "_rows")

    def __init__(self, n: int, indptr: np.ndarray, indices: np.ndarray,
                 planted: "PlantedInfo | None" = None):
        self.n = int(n)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int32)
        self.degrees = np.diff(self.indptr).astype(np.int32)
        self.max_degree = int(self.degrees.max(initial=0))
        self.planted = planted
        self._rows = None
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)
        self.degrees.setflags(write=False)

    @classmethod
    def from_edges(cls, n: int, u, v, planted: "PlantedInfo | None" = None
                   ) -> "Graph":
        """Build from undirected edge arrays; rejects loops and duplicates."""
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        if u.shape != v.shape:
            raise IllegalSpec("edge endpoint arrays differ in length")
        if len(u):
            if u.min(initial=0) < 0 or v.min(initial=0) < 0 \
                    or u.max(initial=0) >= n or v.max(initial=0) >= n:
                raise IllegalSpec("edge endpoint out of range")
            if np.any(u == v):
                raise IllegalSpec("self loop")
            lo = np.minimum(u, v)
            hi = np.maximum(u, v)
            key = np.sort(lo * n + hi)
            if np.any(key[1:] == key[:-1]):
                raise IllegalSpec("duplicate edge")
        du = np.concatenate([u, v])
        dv = np.concatenate([v, u])
        order = np.lexsort((dv, du))
        du = du[order]
        dv = dv[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, du + 1, 1)
        np.cumsum(indptr, out=indptr)
        return cls(n, indptr, dv.astype(np.int32), planted)

    # -- queries ------------------------------------------------------------

    @property
    def num_edges(self) -> int:
        return len(self.indices) // 2

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.degrees[v])

    def has_edge(self, u: int, v: int) -> bool:
        row = self.neighbors(u)
        i = np.searchsorted(row, v)
        return i < len(row) and row[i] == v

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """All edges as (u, v) arrays with u < v."""
        owner = np.repeat(np.arange(self.n, dtype=np.int64),
                          np.diff(self.indptr))
        keep = owner < self.indices
        return owner[keep], self.indices[keep].astype(np.int64)

    def bit_rows(self) -> np.ndarray:
        if self._rows is None:
            self._rows = _bits.pack_rows(self.n, self.indptr, self.indices)
        return self._rows

    def neighbor_mask(self, v: int) -> np.ndarray:
        return self.bit_rows()[v]

    def count_neighbors_in_mask(self, mask: np.ndarray) -> np.ndarray:
        """Per-node count of neighbors inside the masked node set."""
        return _bits.popcount_rows(self.bit_rows() & mask[None, :])

    def common_neighbor_count(self, u: int, v: int) -> int:
        rows = self.bit_rows()
        return _bits.popcount(rows[u] & rows[v])

    def induced_edge_count(self, ids) -> int:
        ids = np.asarray(ids, dtype=np.int64)
        mask = _bits.mask_from_ids(self.n, ids)
        inside = _bits.popcount_rows(self.bit_rows()[ids] & mask[None, :])
        return int(inside.sum()) // 2


def count_non_edges(g: Graph, ids) -> int:
    """Exact number of unordered non-adjacent pairs inside a node set."""
    ids = np.asarray(ids, dtype=np.int64)
    k = len(ids)
    return k * (k - 1) // 2 - g.induced_edge_count(ids)


# ---------------------------------------------------------------------------
# proper-coloring and colorability checks


def check_proper_coloring(g: Graph, colors: np.ndarray, num_colors: int
                          ) -> list[str]:
    """Return a list of violations; empty means a proper coloring.

    `colors` is int per node, -1 meaning uncolored (reported as violation).
    """
    colors = np.asarray(colors)
    out = []
    if colors.shape != (g.n,):
        return [f"color array has shape {colors.shape}, expected ({g.n},)"]
    uncolored = np.flatnonzero(colors < 0)
    if len(uncolored):
        out.append(f"{len(uncolored)} uncolored nodes, first {uncolored[:5].tolist()}")
    high = np.flatnonzero(colors >= num_colors)
    if len(high):
        out.append(f"{len(high)} nodes over palette {num_colors}, first {high[:5].tolist()}")
    u, v = g.edges()
    both = (colors[u] >= 0) & (colors[v] >= 0)
    bad = both & (colors[u] == colors[v])
    if np.any(bad):
        i = np.flatnonzero(bad)[:5]
        pairs = list(zip(u[i].tolist(), v[i].tolist()))
        out.append(f"{int(bad.sum())} monochromatic edges, first {pairs}")
    return out


@dataclass
class ColorabilityVerdict:
    ok: bool
    reason: str | None = None
    component: np.ndarray | None = None


def validate_delta_colorable(g: Graph) -> ColorabilityVerdict:
    """Check the structural conditions under which max_degree colors suffice.

    Rejects graphs of max degree below 3 (out of scope) and graphs with a
    complete component on max_degree + 1 nodes. Everything else is accepted.
    """
    d = g.max_degree
    if d < 3:
        reason = "max degree below 3 is out of scope"
        if d == 2:
            labels = _component_labels(g)
            for c in range(labels.max(initial=-1) + 1):
                ids = np.flatnonzero(labels == c)
                if len(ids) % 2 == 1 and np.all(g.degrees[ids] == 2):
                    return ColorabilityVerdict(False, "odd cycle component",
                                               ids.astype(np.int64))
        return ColorabilityVerdict(False, reason)
    labels = _component_labels(g)
    sizes = np.bincount(labels, minlength=labels.max(initial=-1) + 1)
    for c in np.flatnonzero(sizes == d + 1):
        ids = np.flatnonzero(labels == c)
        if np.all(g.degrees[ids] == d):
            # d+1 nodes all of degree d inside one component: complete
            return ColorabilityVerdict(False, "complete component on max_degree+1 nodes",
                                       ids.astype(np.int64))
    return ColorabilityVerdict(True)


def _component_labels(g: Graph) -> np.ndarray:
    if g.n == 0:
        return np.zeros(0, dtype=np.int64)
    m = csr_matrix((np.ones(len(g.indices), dtype=np.int8),
                    g.indices, g.indptr), shape=(g.n, g.n))
    _, labels = connected_components(m, directed=False)
    return labels


# ---------------------------------------------------------------------------
# maximum bipartite matching (Hopcroft-Karp)


def max_bipartite_matching(left, right, edges) -> list[tuple]:
    """Maximum matching of a bipartite graph given as (left, right, edges).

    `edges` is an iterable of (l, r) pairs with l in left, r in right.
    Returns matched pairs as a list of (l, r).
    """
    left = list(left)
    right = list(right)
    lidx = {x: i for i, x in enumerate(left)}
    ridx = {x: i for i, x in enumerate(right)}
    if len(lidx) != len(left) or len(ridx) != len(right):
        raise IllegalSpec("duplicate node in bipartition")
    adj: list[list[int]] = [[] for _ in left]
    for l, r in edges:
        adj[lidx[l]].append(ridx[r])
    nl, nr = len(left), len(right)
    INF = nl + nr + 1
    match_l = [-1] * nl
    match_r = [-1] * nr
    dist = [0] * nl

    def bfs() -> bool:
        queue = []
        for i in range(nl):
            if match_l[i] == -1:
                dist[i] = 0
                queue.append(i)
            else:
                dist[i] = INF
        found = False
        qi = 0
        while qi < len(queue):
            i = queue[qi]
            qi += 1
            for r in adj[i]:
                j = match_r[r]
                if j == -1:
                    found = True
                elif dist[j] == INF:
                    dist[j] = dist[i] + 1
                    queue.append(j)
        return found

    def dfs(i: int) -> bool:
        for r in adj[i]:
            j = match_r[r]
            if j == -1 or (dist[j] == dist[i] + 1 and dfs(j)):
                match_l[i] = r
                match_r[r] = i
                return True
        dist[i] = INF
        return False

    while bfs():
        for i in range(nl):
            if match_l[i] == -1:
                dfs(i)
    return [(left[i], right[match_l[i]]) for i in range(nl) if match_l[i] != -1]


# ---------------------------------------------------------------------------
# file formats


def write_graph(g: Graph, path) -> None:
    """Text format: first line `n max_degree`, then one `u v` line per edge."""
    u, v = g.edges()
    with open(path, "w") as fh:
        fh.write(f"{g.n} {g.max_degree}\n")
        for a, b in zip(u.tolist(), v.tolist()):
            fh.write(f"{a} {b}\n")


def read_graph(path) -> Graph:
    with open(path) as fh:
        head = fh.readline().split()
        if len(head) != 2:
            raise GraphFormatError("header must be `n max_degree`")
        try:
            n, d = int(head[0]), int(head[1])
        except ValueError as exc:
            raise GraphFormatError("non-integer header") from exc
        us, vs = [], []
        for ln, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise GraphFormatError(f"line {ln}: expected `u v`")
            us.append(int(parts[0]))
            vs.append(int(parts[1]))
    try:
        g = Graph.from_edges(n, us, vs)
    except IllegalSpec as exc:
        raise GraphFormatError(str(exc)) from exc
    if g.max_degree != d:
        raise GraphFormatError(
            f"header max_degree {d} but edges give {g.max_degree}")
    return g


def write_coloring(colors: np.ndarray, path) -> None:
    with open(path, "w") as fh:
        for v, c in enumerate(np.asarray(colors).tolist()):
            fh.write(f"{v} {c}\n")


def read_coloring(path, n: int) -> np.ndarray:
    colors = np.full(n, -1, dtype=np.int32)
    seen = np.zeros(n, dtype=bool)
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise GraphFormatError(f"line {ln}: expected `node color`")
            v, c = int(parts[0]), int(parts[1])
            if not 0 <= v < n:
                raise GraphFormatError(f"line {ln}: node {v} out of range")
            if seen[v]:
                raise GraphFormatError(f"line {ln}: node {v} repeated")
            seen[v] = True
            colors[v] = c
    return colors


# ---------------------------------------------------------------------------
# generators


@dataclass
class PlantedInfo:
    """Ground truth attached to generated instances."""
    kind: str
    parts: list = field(default_factory=list)          # node id arrays
    part_ext: list = field(default_factory=list)       # external degree per part
    sparse: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    specials: dict = field(default_factory=dict)       # part index -> node id
    meta: dict = field(default_factory=dict)


@dataclass
class GeneratorSpec:
    """Parameters for `generate`. Unused fields may stay None."""
    kind: str
    delta: int
    seed: int = 0
    n: int | None = None
    eps: float | None = None
    n_acs: int | None = None
    ext_degree: int | None = None
    layers: int | None = None
    variant: str | None = None
    unimportant_acs: int = 0
    filler_n: int | None = None

    def resolved_eps(self) -> float:
        if self.eps is not None:
            return self.eps
        return 1.0 / 172.0 if self.kind == "difficult_chain" else 1.0 / 12.0


KNOWN_KINDS = ("nice_clique", "random_regular", "planted_acd",
               "difficult_chain", "ordinary_lattice", "reject_case")


def generate(spec: GeneratorSpec) -> Graph:
    """Build the instance described by `spec` (deterministic per seed)."""
    if spec.kind not in KNOWN_KINDS:
        raise IllegalSpec(f"unknown generator kind {spec.kind!r}")
    if spec.kind != "reject_case" and spec.delta < 3:
        raise IllegalSpec("generators require max degree at least 3")
    builder = {
        "nice_clique": _gen_nice_clique,
        "random_regular": _gen_random_regular,
        "planted_acd": _gen_planted_acd,
        "difficult_chain": _gen_difficult_chain,
        "ordinary_lattice": _gen_ordinary_lattice,
        "reject_case": _gen_reject_case,
    }[spec.kind]
    return builder(spec)


def _rng(spec: GeneratorSpec, attempt: int = 0) -> np.random.Generator:
    # crc32 keeps the stream stable across processes (str hash is salted)
    tag = zlib.crc32(spec.kind.encode())
    return np.random.default_rng(np.random.SeedSequence([tag, spec.seed, attempt]))


def _clique_edge_arrays(block: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    i, j = np.triu_indices(len(block), 1)
    return block[i], block[j]


def _er_pairs(ids: np.ndarray, p: float, rng: np.random.Generator
              ) -> tuple[np.ndarray, np.ndarray]:
    i, j = np.triu_indices(len(ids), 1)
    keep = rng.random(len(i)) < p
    return ids[i[keep]], ids[j[keep]]


def _gen_nice_clique(spec: GeneratorSpec) -> Graph:
    d = spec.delta
    block = np.arange(d + 1, dtype=np.int64)
    u, v = _clique_edge_arrays(block)
    keep = ~((u == 0) & (v == 1))         # drop one edge: (0, 1)
    planted = PlantedInfo(kind="nice_clique", parts=[block], part_ext=[0],
                          meta={"non_edge": (0, 1)})
    return Graph.from_edges(d + 1, u[keep], v[keep], planted)


def _gen_random_regular(spec: GeneratorSpec) -> Graph:
    d = spec.delta
    n = spec.n
    if n is None:
        raise IllegalSpec("random_regular requires n")
    if d >= n or (n * d) % 2 != 0:
        raise IllegalSpec("no d-regular graph on n nodes with these values")
    for attempt in range(100):
        rng = _rng(spec, attempt)
        uu, vv = _circulant_edges(n, d)
        _swap_sweeps(n, uu, vv, rng, sweeps=8)
        planted = PlantedInfo(kind="random_regular",
                              sparse=np.arange(n, dtype=np.int64))
        g = Graph.from_edges(n, uu, vv, planted)
        if validate_delta_colorable(g).ok:
            return g
    raise GenerationFailed("random_regular: no valid instance in 100 attempts")


def _circulant_edges(n: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    base = np.arange(n, dtype=np.int64)
    us, vs = [], []
    for k in range(1, d // 2 + 1):
        us.append(base)
        vs.append((base + k) % n)
    if d % 2:
        # odd degree forces even n; add the antipodal perfect matching
        us.append(base[: n // 2])
        vs.append(base[: n // 2] + n // 2)
    u = np.concatenate(us)
    v = np.concatenate(vs)
    return np.minimum(u, v), np.maximum(u, v)


def _swap_sweeps(n: int, uu: np.ndarray, vv: np.ndarray,
                 rng: np.random.Generator, sweeps: int) -> None:
    """Batched degree-preserving double-edge swaps, in place."""
    E = len(uu)
    for _ in range(sweeps):
        allkey = np.sort(uu * n + vv)
        perm = rng.permutation(E)
        half = E // 2
        i1 = perm[:half]
        i2 = perm[half:2 * half]
        a, b = uu[i1], vv[i1]
        c, d_ = uu[i2], vv[i2]
        flip = rng.integers(0, 2, size=half).astype(bool)
        c2 = np.where(flip, d_, c)
        d2 = np.where(flip, c, d_)
        p1u = np.minimum(a, d2)
        p1v = np.maximum(a, d2)
        p2u = np.minimum(c2, b)
        p2v = np.maximum(c2, b)
        k1 = p1u * n + p1v
        k2 = p2u * n + p2v
        ok = (a != d2) & (c2 != b) & (k1 != k2)
        ok &= ~_keys_present(allkey, k1) & ~_keys_present(allkey, k2)
        prop = np.concatenate([k1[ok], k2[ok]])
        uniq, cnt = np.unique(prop, return_counts=True)
        dup = uniq[cnt > 1]
        if len(dup):
            ok &= ~np.isin(k1, dup) & ~np.isin(k2, dup)
        sel = np.flatnonzero(ok)
        uu[i1[sel]] = p1u[sel]
        vv[i1[sel]] = p1v[sel]
        uu[i2[sel]] = p2u[sel]
        vv[i2[sel]] = p2v[sel]


def _keys_present(sorted_keys: np.ndarray, keys: np.ndarray) -> np.ndarray:
    pos = np.searchsorted(sorted_keys, keys)
    pos_c = np.minimum(pos, len(sorted_keys) - 1)
    return (pos < len(sorted_keys)) & (sorted_keys[pos_c] == keys)


class _Wiring:
    """Stub bookkeeping for cross-edges added on top of clique blocks."""

    def __init__(self, n: int):
        self.n = n
        self.us: list[int] = []
        self.vs: list[int] = []
        self.keys: set[int] = set()

    def has(self, u: int, v: int) -> bool:
        a, b = (u, v) if u < v else (v, u)
        return a * self.n + b in self.keys

    def add(self, u: int, v: int) -> None:
        a, b = (u, v) if u < v else (v, u)
        key = a * self.n + b
        if u == v or key in self.keys:
            raise IllegalSpec("wiring produced a repeated or loop edge")
        self.keys.add(key)
        self.us.append(u)
        self.vs.append(v)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.asarray(self.us, dtype=np.int64),
                np.asarray(self.vs, dtype=np.int64))


def _gen_planted_acd(spec: GeneratorSpec) -> Graph:
    """Disjoint near-full cliques plus a sparse filler blob absorbing stubs.

    Every clique member ends at degree exactly delta; filler nodes stay well
    below delta so the blob is genuinely sparse.
    """
    d = spec.delta
    eps = spec.resolved_eps()
    t = spec.n_acs if spec.n_acs is not None else 3
    e = spec.ext_degree if spec.ext_degree is not None else max(1, int(eps * d / 8))
    if t < 1 or e < 1:
        raise IllegalSpec("planted_acd needs at least one clique and one stub")
    size = d + 1 - e
    if size < 2 or e >= d:
        raise IllegalSpec("external degree too large for the clique size")
    filler_n = spec.filler_n if spec.filler_n is not None else max(size + 64, 2 * d)
    n = t * size + filler_n
    rng = _rng(spec)
    blocks = [np.arange(i * size, (i + 1) * size, dtype=np.int64) for i in range(t)]
    filler = np.arange(t * size, n, dtype=np.int64)
    wiring = _Wiring(n)
    for block in blocks:
        _wire_stubs_to_filler(wiring, block, np.full(size, e, dtype=np.int64),
                              filler, cap=e, rng=rng)
    us, vs = [], []
    for block in blocks:
        bu, bv = _clique_edge_arrays(block)
        us.append(bu)
        vs.append(bv)
    wu, wv = wiring.arrays()
    # sparse blob: mean internal degree about delta / 3
    p = min(1.0, (d / 3) / max(1, filler_n - 1))
    eu, ev = _er_pairs(filler, p, rng)
    planted = PlantedInfo(kind="planted_acd", parts=blocks,
                          part_ext=[e] * t, sparse=filler,
                          meta={"eps": eps})
    u = np.concatenate(us + [wu, eu])
    v = np.concatenate(vs + [wv, ev])
    g = Graph.from_edges(n, u, v, planted)
    if int(g.degrees[np.concatenate(blocks)].max()) != d \
            or int(g.degrees[np.concatenate(blocks)].min()) != d:
        raise GenerationFailed("planted_acd: clique degrees off target")
    if int(g.degrees.max()) > d:
        raise GenerationFailed("planted_acd: filler degree exceeded delta")
    return g


def _wire_stubs_to_filler(wiring: _Wiring, block: np.ndarray,
                          rem: np.ndarray, filler: np.ndarray, cap: int,
                          rng: np.random.Generator,
                          exclude: set | None = None) -> None:
    """Attach all remaining stubs of `block` to filler nodes.

    Each filler node takes at most `cap` edges into this block, and a block
    node never gets the same partner twice (targets stride over a shuffled
    filler list wider than any node's stub count).
    """
    total = int(rem.sum())
    if total == 0:
        return
    keep = [f for f in filler.tolist() if not exclude or f not in exclude]
    pool = np.asarray(keep, dtype=np.int64)[rng.permutation(len(keep))].tolist()
    # stride targets over a prefix wide enough that no node repeats a partner
    # and no filler node exceeds its cap
    width = max((total + cap - 1) // cap, int(rem.max()))
    if width > len(pool):
        raise IllegalSpec("filler too small for stub load")
    load: dict[int, int] = {}
    pos = 0
    for node, r in zip(block.tolist(), rem.tolist()):
        for _ in range(int(r)):
            placed = False
            while not placed:
                for probe in range(width):
                    f = pool[(pos + probe) % width]
                    if load.get(f, 0) < cap and not wiring.has(node, f):
                        wiring.add(node, f)
                        load[f] = load.get(f, 0) + 1
                        pos = (pos + probe + 1) % width
                        placed = True
                        break
                else:
                    if width < len(pool):
                        width = min(len(pool), width * 2)
                    else:
                        raise IllegalSpec("filler striding failed to place a stub")
    rem[:] = 0


def _gen_ordinary_lattice(spec: GeneratorSpec) -> Graph:
    """Disjoint full cliques tied together by cross-clique perfect matchings.

    Every member has degree exactly delta, nobody is intrusive anywhere, no
    clique contains a non-edge: all cliques classify as ordinary. The last
    `unimportant_acs` cliques send their stubs to a sparse filler instead of
    to each other, pushing their matched partners outside ordinary land.
    """
    d = spec.delta
    t = spec.n_acs if spec.n_acs is not None else 10
    e = spec.ext_degree if spec.ext_degree is not None else 2
    k_unimp = spec.unimportant_acs
    if t < 2 or not 2 <= e < d:
        raise IllegalSpec("ordinary_lattice needs >=2 cliques and 2 <= ext_degree < delta")
    if not 0 <= k_unimp <= t:
        raise IllegalSpec("unimportant_acs out of range")
    if k_unimp and t - k_unimp == 1:
        raise IllegalSpec("a single cross-matched clique cannot pair with itself")
    size = d + 1 - e
    t_cross = t - k_unimp
    if t_cross and (t_cross * size) % 2 != 0:
        raise IllegalSpec("cross-matched node count must be even")
    filler_n = 0
    if k_unimp:
        filler_n = spec.filler_n if spec.filler_n is not None else max(size + 64, 2 * d)
    n = t * size + filler_n
    for attempt in range(100):
        rng = _rng(spec, attempt)
        try:
            g = _build_lattice(spec, d, t, e, k_unimp, size, filler_n, n, rng)
        except GenerationFailed:
            continue
        return g
    raise GenerationFailed("ordinary_lattice: no valid wiring in 100 attempts")


def _build_lattice(spec, d, t, e, k_unimp, size, filler_n, n, rng) -> Graph:
    blocks = [np.arange(i * size, (i + 1) * size, dtype=np.int64) for i in range(t)]
    filler = np.arange(t * size, n, dtype=np.int64)
    part_of = np.full(n, -1, dtype=np.int64)
    for i, block in enumerate(blocks):
        part_of[block] = i
    wiring = _Wiring(n)
    t_cross = t - k_unimp
    if t_cross:
        pool = np.concatenate(blocks[:t_cross])
        for _ in range(e):
            _add_cross_matching(wiring, pool, part_of, rng)
    for block in blocks[t_cross:]:
        _wire_stubs_to_filler(wiring, block, np.full(size, e, dtype=np.int64),
                              filler, cap=e, rng=rng)
    us, vs = [], []
    for block in blocks:
        bu, bv = _clique_edge_arrays(block)
        us.append(bu)
        vs.append(bv)
    wu, wv = wiring.arrays()
    eu = ev = np.zeros(0, dtype=np.int64)
    if filler_n:
        p = min(1.0, (d / 3) / max(1, filler_n - 1))
        eu, ev = _er_pairs(filler, p, rng)
    planted = PlantedInfo(kind="ordinary_lattice", parts=blocks,
                          part_ext=[e] * t, sparse=filler,
                          meta={"eps": spec.resolved_eps(),
                                "unimportant": list(range(t_cross, t))})
    u = np.concatenate(us + [wu, eu])
    v = np.concatenate(vs + [wv, ev])
    g = Graph.from_edges(n, u, v, planted)
    members = np.concatenate(blocks)
    if int(g.degrees[members].min()) != d or int(g.degrees[members].max()) != d:
        raise GenerationFailed("lattice: member degree off target")
    if int(g.degrees.max()) > d:
        raise GenerationFailed("lattice: degree cap exceeded")
    return g


def _add_cross_matching(wiring: _Wiring, pool: np.ndarray,
                        part_of: np.ndarray, rng: np.random.Generator,
                        cap_sweeps: int = 500) -> None:
    """One perfect matching on `pool` with partners in distinct parts and no
    repeated edges; repairs collisions by rotating the bad half."""
    order = pool[rng.permutation(len(pool))]
    a = order[0::2].copy()
    b = order[1::2].copy()
    if len(a) != len(b):
        raise IllegalSpec("cross matching needs an even pool")
    for _ in range(cap_sweeps):
        bad = part_of[a] == part_of[b]
        for i in np.flatnonzero(~bad):
            if wiring.has(int(a[i]), int(b[i])):
                bad[i] = True
        # duplicates inside the batch
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        key = lo * wiring.n + hi
        uniq, first = np.unique(key, return_index=True)
        dup_mask = np.ones(len(key), dtype=bool)
        dup_mask[first] = False
        bad |= dup_mask
        idx = np.flatnonzero(bad)
        if len(idx) == 0:
            for i in range(len(a)):
                wiring.add(int(a[i]), int(b[i]))
            return
        if len(idx) > 1:
            b[idx] = b[np.roll(idx, 1)]
        if len(idx) < 8:
            # small bad sets can cycle among themselves; mix in a good pair
            j = int(rng.integers(0, len(a)))
            i0 = int(idx[int(rng.integers(0, len(idx)))])
            if j != i0:
                b[i0], b[j] = b[j], b[i0]
    raise GenerationFailed("cross matching failed to untangle")


def _gen_difficult_chain(spec: GeneratorSpec) -> Graph:
    """Ladder of cliques with doubling deficiency plus a sparse filler.

    Layer l is a clique on delta + 1 - 2^l nodes whose members end at degree
    exactly delta. The designated heavy outside neighbor of layer l sits in
    layer l+1 (the last one in the filler) with exactly 2^(l+1) edges into
    layer l. Every member of layer l >= 1 keeps at least one edge into layer
    l-1, wired top layer first; leftovers go to the filler under caps that
    keep filler nodes non-intrusive.
    """
    d = spec.delta
    layers = spec.layers if spec.layers is not None else 3
    if layers < 1:
        raise IllegalSpec("difficult_chain needs at least one layer")
    evals = [2 ** l for l in range(layers)]
    sizes = [d + 1 - e for e in evals]
    if sizes[-1] < 3 * evals[-1] + 2 or 2 * evals[-1] >= sizes[-1]:
        raise IllegalSpec("delta too small for the requested layer count")
    starts = np.cumsum([0] + sizes)
    blocks = [np.arange(starts[i], starts[i + 1], dtype=np.int64)
              for i in range(layers)]
    n_clique = int(starts[-1])
    rng = _rng(spec)

    rem = np.zeros(n_clique, dtype=np.int64)
    for block, e in zip(blocks, evals):
        rem[block] = e
    wiring = _Wiring(10 ** 9)      # n unknown until filler sized; re-key later
    covered = np.zeros(n_clique, dtype=bool)

    def wire(u: int, v: int) -> None:
        if rem[u] <= 0 or rem[v] <= 0:
            raise IllegalSpec("chain wiring ran out of stubs")
        wiring.add(u, v)
        rem[u] -= 1
        rem[v] -= 1

    # heavy outside neighbors: layer l's sits at the head of layer l + 1,
    # wired to the first 2^(l+1) layer-l nodes that still have stubs
    specials = {}
    for l in range(layers - 1):
        s = int(blocks[l + 1][0])
        specials[l] = s
        tgts = [int(x) for x in blocks[l] if rem[x] > 0][: 2 * evals[l]]
        if len(tgts) < 2 * evals[l]:
            raise IllegalSpec("layer too drained to host its heavy neighbor")
        for tgt in tgts:
            wire(s, tgt)
        covered[s] = True          # its down-links double as coverage

    # down-coverage, top layer first; donors that still need their own
    # down-link (any non-bottom layer) are drawn on only as a last resort
    for l in range(layers - 1, 0, -1):
        donors = blocks[l - 1]
        donor_used = np.zeros(len(donors), dtype=bool)
        self_need = 1 if l - 1 >= 1 else 0
        for min_rem in (1 + self_need, 1):
            di = 0
            for v in (int(x) for x in blocks[l]):
                if covered[v] or rem[v] <= 0:
                    continue
                for probe in range(len(donors)):
                    j = (di + probe) % len(donors)
                    u = int(donors[j])
                    if donor_used[j] or rem[u] < min_rem or wiring.has(u, v):
                        continue
                    wire(v, u)
                    donor_used[j] = True
                    covered[v] = True
                    di = (j + 1) % len(donors)
                    break
        if l == layers - 1 and not all(covered[int(x)] for x in blocks[l]):
            raise IllegalSpec("cannot cover the top layer from below")
        # lower layers may stay partially uncovered; they recover as parts

    resid = int(rem.sum())
    per_node_cap = {l: evals[l] for l in range(layers)}
    worst = max((int(rem[blocks[l]].sum()) + per_node_cap[l] - 1) // per_node_cap[l]
                for l in range(layers))
    filler_n = spec.filler_n if spec.filler_n is not None else max(d, worst + 64)
    n = n_clique + filler_n
    filler = np.arange(n_clique, n, dtype=np.int64)

    # re-key cross edges under the real n
    rekeyed = _Wiring(n)
    for u, v in zip(wiring.us, wiring.vs):
        rekeyed.add(u, v)
    wiring = rekeyed

    # top layer's heavy neighbor is the first filler node
    s_last = int(filler[0])
    specials[layers - 1] = s_last
    tgts = [int(x) for x in blocks[-1] if rem[x] > 0][: 2 * evals[-1]]
    if len(tgts) < 2 * evals[-1]:
        raise IllegalSpec("top layer too drained to host its heavy neighbor")
    for tgt in tgts:
        wiring.add(s_last, tgt)
        rem[tgt] -= 1

    # residual stubs to filler, heavy neighbor excluded
    for l in range(layers):
        block = blocks[l]
        _wire_stubs_to_filler(wiring, block, rem[block], filler,
                              cap=per_node_cap[l], rng=rng,
                              exclude={s_last})
        rem[block] = 0

    us, vs = [], []
    for block in blocks:
        bu, bv = _clique_edge_arrays(block)
        us.append(bu)
        vs.append(bv)
    wu, wv = wiring.arrays()
    p = min(1.0, (d / 3) / max(1, filler_n - 1))
    eu, ev = _er_pairs(filler, p, rng)
    planted = PlantedInfo(kind="difficult_chain", parts=blocks,
                          part_ext=evals, sparse=filler, specials=specials,
                          meta={"eps": spec.resolved_eps(), "layers": layers,
                                "resid": resid})
    u = np.concatenate(us + [wu, eu])
    v = np.concatenate(vs + [wv, ev])
    g = Graph.from_edges(n, u, v, planted)
    members = np.concatenate(blocks)
    if int(g.degrees[members].min()) != d or int(g.degrees[members].max()) != d:
        raise GenerationFailed("chain: member degree off target")
    if int(g.degrees.max()) > d:
        raise GenerationFailed("chain: degree cap exceeded")
    # the top layer must be fully covered: each member keeps a link downward
    top = blocks[-1]
    if not all(covered[v] for v in top):
        raise GenerationFailed("chain: top layer coverage incomplete")
    return g


def _gen_reject_case(spec: GeneratorSpec) -> Graph:
    variant = spec.variant or "clique"
    if variant == "clique":
        d = spec.delta
        if d < 3:
            raise IllegalSpec("reject clique needs delta >= 3")
        block = np.arange(d + 1, dtype=np.int64)
        u, v = _clique_edge_arrays(block)
        planted = PlantedInfo(kind="reject_case", meta={"variant": variant})
        return Graph.from_edges(d + 1, u, v, planted)
    if variant == "odd_cycle":
        n = spec.n if spec.n is not None else 9
        if n < 3 or n % 2 == 0:
            raise IllegalSpec("odd cycle needs odd n >= 3")
        base = np.arange(n, dtype=np.int64)
        planted = PlantedInfo(kind="reject_case", meta={"variant": variant})
        return Graph.from_edges(n, base, (base + 1) % n, planted)
    raise IllegalSpec(f"unknown reject variant {variant!r}")
