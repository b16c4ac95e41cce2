"""Centralized max-degree coloring used as the escalation oracle.

Components with a low-degree node are colored greedily along a reverse
BFS order.  Regular components get a same-colored nonadjacent pair in
some neighborhood whose removal keeps the component connected; when no
such pair exists the component is split at an articulation point and
the pieces are aligned afterwards.  The same routine doubles as the
ground-truth existence checker in tests.
"""

from __future__ import annotations

import numpy as np

from .errors import DecompositionFailed, IllegalSpec, InvariantViolated
from .graphs import Graph, _component_labels, check_proper_coloring


def brooks_coloring(g: Graph, num_colors: int = None) -> np.ndarray:
    """Proper coloring with at most max(num_colors, max degree) colors.

    Raises InvariantViolated on a complete component spanning a full
    palette plus one, or an odd cycle under a two-color palette.
    """
    P = g.max_degree if num_colors is None else int(num_colors)
    P = max(P, 1)
    if P < g.max_degree:
        raise IllegalSpec("palette smaller than the maximum degree")
    colors = np.full(g.n, -1, dtype=np.int32)
    labels = _component_labels(g)
    for c in range(labels.max(initial=-1) + 1):
        ids = np.flatnonzero(labels == c).astype(np.int64)
        _color_component(g, ids, P, colors)
    bad = check_proper_coloring(g, colors, P)
    if bad:
        raise InvariantViolated(
            "fallback produced an improper coloring: " + bad[0])
    return colors


def _color_component(g: Graph, ids: np.ndarray, P: int,
                     colors: np.ndarray) -> None:
    if ids.size == 1:
        colors[ids[0]] = 0
        return
    # a component is adjacency-closed, so global degrees are local ones
    low = ids[g.degrees[ids] < P]
    if low.size:
        _greedy_tree(g, ids, int(low[0]), P, colors)
        return
    if ids.size == P + 1:
        raise InvariantViolated(
            "component is a complete graph needing one color beyond the "
            "palette")
    if P == 2:
        if ids.size % 2:
            raise InvariantViolated("odd cycle under a two-color palette")
        _two_color_cycle(g, ids, colors)
        return
    pair = _find_connected_pair(g, ids, cap=500)
    if pair is None:
        x = _articulation_point(g, ids)
        if x is not None:
            _split_at_cut(g, ids, x, P, colors)
            return
        pair = _find_connected_pair(g, ids, cap=None)
        if pair is None:
            raise DecompositionFailed(
                "regular component admits no splitting structure")
    u, w, v = pair
    colors[u] = 0
    colors[w] = 0
    _greedy_tree(g, ids, v, P, colors, blocked=(u, w))


def _two_color_cycle(g: Graph, ids: np.ndarray, colors: np.ndarray) -> None:
    start = int(ids[0])
    colors[start] = 0
    frontier = [start]
    while frontier:
        nxt = []
        for a in frontier:
            for b in g.neighbors(a):
                b = int(b)
                if colors[b] < 0:
                    colors[b] = 1 - colors[a]
                    nxt.append(b)
        frontier = nxt


def _greedy_tree(g: Graph, ids: np.ndarray, root: int, P: int,
                 colors: np.ndarray, blocked: tuple = ()) -> None:
    """Color along decreasing BFS distance so the root goes last."""
    seen = np.zeros(g.n, dtype=bool)
    for b in blocked:
        seen[b] = True
    seen[root] = True
    order = [root]
    head = 0
    while head < len(order):
        for b in g.neighbors(order[head]):
            b = int(b)
            if not seen[b]:
                seen[b] = True
                order.append(b)
        head += 1
    if len(order) + len(blocked) != ids.size:
        raise DecompositionFailed("component fell apart during treewalk")
    free = np.zeros(P, dtype=bool)
    for node in reversed(order):
        free[:] = True
        for b in g.neighbors(node):
            c = colors[b]
            if c >= 0:
                free[c] = False
        slot = np.flatnonzero(free)
        if slot.size == 0:
            raise DecompositionFailed(
                f"node {node} ran out of colors in the treewalk")
        colors[node] = slot[0]


def _find_connected_pair(g: Graph, ids: np.ndarray, cap) -> tuple:
    """(u, w, v): u, w nonadjacent neighbors of v whose removal keeps the
    component connected.  cap bounds the number of connectivity probes;
    None means exhaustive."""
    tried = 0
    for v in ids:
        nb = g.neighbors(int(v))
        if cap is not None and nb.size > 64:
            # capped pass: scan a window; the exhaustive pass sees it all
            nb = nb[:64]
        for i in range(nb.size):
            for j in range(i + 1, nb.size):
                u, w = int(nb[i]), int(nb[j])
                if g.has_edge(u, w):
                    continue
                if _connected_without(g, ids, u, w):
                    return (u, w, int(v))
                tried += 1
                if cap is not None and tried >= cap:
                    return None
    return None


def _connected_without(g: Graph, ids: np.ndarray, u: int, w: int) -> bool:
    seen = np.zeros(g.n, dtype=bool)
    seen[u] = True
    seen[w] = True
    start = -1
    for v in ids:
        if not seen[v]:
            start = int(v)
            break
    if start < 0:
        return False
    seen[start] = True
    count = 1
    frontier = [start]
    while frontier:
        nxt = []
        for a in frontier:
            for b in g.neighbors(a):
                b = int(b)
                if not seen[b]:
                    seen[b] = True
                    count += 1
                    nxt.append(b)
        frontier = nxt
    return count == ids.size - 2


def _articulation_point(g: Graph, ids: np.ndarray):
    """First articulation point of the component, or None."""
    root = int(ids[0])
    disc = {}
    lowv = {}
    parent = {root: -1}
    stack = [(root, iter(g.neighbors(root).tolist()))]
    disc[root] = lowv[root] = 0
    t = 1
    root_children = 0
    found = None
    while stack:
        node, it = stack[-1]
        advanced = False
        for b in it:
            b = int(b)
            if b not in disc:
                parent[b] = node
                disc[b] = lowv[b] = t
                t += 1
                if node == root:
                    root_children += 1
                stack.append((b, iter(g.neighbors(b).tolist())))
                advanced = True
                break
            elif b != parent[node]:
                lowv[node] = min(lowv[node], disc[b])
        if not advanced:
            stack.pop()
            if stack:
                par = stack[-1][0]
                lowv[par] = min(lowv[par], lowv[node])
                if par != root and lowv[node] >= disc[par] and found is None:
                    found = par
    if root_children > 1:
        return root
    return found


def _split_at_cut(g: Graph, ids: np.ndarray, x: int, P: int,
                  colors: np.ndarray) -> None:
    """Color each piece hanging off the cut vertex, pinning x to color 0.

    x keeps fewer than P neighbors inside every piece, so the treewalk
    with x as root succeeds; each piece's colors are then swapped so x
    lands on 0 everywhere.
    """
    in_comp = np.zeros(g.n, dtype=bool)
    in_comp[ids] = True
    assigned = np.zeros(g.n, dtype=bool)
    assigned[x] = True
    for s in ids:
        s = int(s)
        if s == x or assigned[s]:
            continue
        piece = [s]
        seen = {s, x}
        head = 0
        while head < len(piece):
            for b in g.neighbors(piece[head]):
                b = int(b)
                if in_comp[b] and b not in seen:
                    seen.add(b)
                    piece.append(b)
            head += 1
        sub = np.asarray(sorted(piece + [x]), dtype=np.int64)
        local = np.full(g.n, -1, dtype=np.int32)
        _greedy_piece(g, sub, x, P, local)
        cx = int(local[x])
        if cx != 0:
            zero = sub[local[sub] == 0]
            atcx = sub[local[sub] == cx]
            local[zero] = cx
            local[atcx] = 0
        for node in piece:
            colors[node] = local[node]
        assigned[np.asarray(piece)] = True
    colors[x] = 0


def _greedy_piece(g: Graph, sub: np.ndarray, root: int, P: int,
                  out: np.ndarray) -> None:
    """Treewalk coloring restricted to the node set sub."""
    inside = np.zeros(g.n, dtype=bool)
    inside[sub] = True
    seen = np.zeros(g.n, dtype=bool)
    seen[root] = True
    order = [root]
    head = 0
    while head < len(order):
        for b in g.neighbors(order[head]):
            b = int(b)
            if inside[b] and not seen[b]:
                seen[b] = True
                order.append(b)
        head += 1
    if len(order) != sub.size:
        raise DecompositionFailed("cut piece is not connected through root")
    free = np.zeros(P, dtype=bool)
    for node in reversed(order):
        free[:] = True
        for b in g.neighbors(node):
            if inside[b] and out[b] >= 0:
                free[out[b]] = False
        slot = np.flatnonzero(free)
        if slot.size == 0:
            raise DecompositionFailed(
                f"node {node} ran out of colors in a cut piece")
        out[node] = slot[0]
