"""Independent reference implementations used to pin expected values.

Deliberately naive: plain dicts and backtracking, no shared code with the
package under test.
"""


def edge_set(pairs):
    return {(min(u, v), max(u, v)) for u, v in pairs}


def brute_max_matching(left, right, edges):
    """Maximum bipartite matching size by exhaustive search (small inputs)."""
    left = list(left)
    adj = {l: sorted({r for (a, r) in edges if a == l}) for l in left}
    best = 0

    def go(i, used, count):
        nonlocal best
        if count + (len(left) - i) <= best:
            return
        if i == len(left):
            best = max(best, count)
            return
        go(i + 1, used, count)
        for r in adj[left[i]]:
            if r not in used:
                used.add(r)
                go(i + 1, used, count + 1)
                used.remove(r)

    go(0, set(), 0)
    return best


def ref_non_edges(pairs, ids):
    """Non-adjacent unordered pairs inside `ids`, counted the slow way."""
    es = edge_set(pairs)
    ids = list(ids)
    cnt = 0
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            a, b = min(ids[i], ids[j]), max(ids[i], ids[j])
            if (a, b) not in es:
                cnt += 1
    return cnt


def can_list_color(n, pairs, lists):
    """Backtracking feasibility check for list coloring on tiny graphs."""
    adj = {v: set() for v in range(n)}
    for u, v in pairs:
        adj[u].add(v)
        adj[v].add(u)
    order = sorted(range(n), key=lambda v: -len(adj[v]))
    assign = {}

    def go(i):
        if i == n:
            return True
        v = order[i]
        for c in lists[v]:
            if all(assign.get(u) != c for u in adj[v]):
                assign[v] = c
                if go(i + 1):
                    return True
                del assign[v]
        return False

    return go(0)


def ref_common_neighbors(pairs, u, v):
    es = edge_set(pairs)
    nodes = set()
    for a, b in es:
        nodes.add(a)
        nodes.add(b)
    nu = {b for a, b in es if a == u} | {a for a, b in es if b == u}
    nv = {b for a, b in es if a == v} | {a for a, b in es if b == v}
    return len(nu & nv)
