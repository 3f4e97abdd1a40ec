"""Exact brute-force references for desk-scale verification: the optimal
k-colorable-subgraph size, the chromatic number, and exhaustive
enumeration of the integer feasible matrices."""

from __future__ import annotations

import numpy as np


class OracleSizeError(ValueError):
    """Raised when an instance exceeds the configured brute-force guard."""


def alpha_k_exact(g, k, max_vertices=15, initial_lb=0):
    """Exact maximum number of vertices colorable with k colors.

    Branch and bound over vertex-by-vertex assignment to {uncolored,
    1..k}.  Color symmetry is broken by allowing a vertex to open color c
    only when colors 1..c-1 are already in use, and a branch is pruned
    when colored-so-far plus remaining vertices cannot beat the
    incumbent.  ``initial_lb`` may prime the incumbent with a known valid
    lower bound (it only prunes; the returned value is unaffected).
    """
    if g.n > max_vertices:
        raise OracleSizeError(
            f"{g.n} vertices exceed the brute-force guard ({max_vertices}); "
            "raise max_vertices explicitly to override"
        )
    if k < 1:
        raise ValueError("k must be at least 1")
    order = sorted(g.vertices, key=lambda v: (-g.degree(v), v))
    n = g.n
    pos_of = {v: i for i, v in enumerate(order)}
    earlier_neighbors = [
        [pos_of[u] for u in g.neighbors(v) if pos_of[u] < i]
        for i, v in enumerate(order)
    ]
    colors = [0] * n
    best = max(0, int(initial_lb))

    def descend(i, colored, used):
        nonlocal best
        if colored + (n - i) <= best:
            return
        if i == n:
            best = colored
            return
        limit = min(used + 1, k)
        for c in range(1, limit + 1):
            if all(colors[j] != c for j in earlier_neighbors[i]):
                colors[i] = c
                descend(i + 1, colored + 1, max(used, c))
                colors[i] = 0
                if best == n:
                    return
        descend(i + 1, colored, used)  # leave vertex i uncolored

    descend(0, 0, 0)
    return best


def chi_exact(g, max_vertices=15):
    """Exact chromatic number by iterative deepening: the smallest k for
    which all n vertices are k-colorable."""
    for k in range(1, g.n + 1):
        if alpha_k_exact(g, k, max_vertices=max_vertices) == g.n:
            return k
    raise AssertionError("unreachable: every graph is n-colorable")


def enumerate_Dnk(n, k, g=None, limit=2**20):
    """All distinct 0/1 matrices X = P P' with binary row-sum-at-most-one
    assignment matrices P; when a graph is given only edge-compatible
    matrices (X[i,j] = 0 on edges) are kept.

    Matrices are n x n uint8 arrays indexed 0..n-1 for vertices 1..n,
    returned in a deterministic order.
    """
    total = (k + 1) ** n
    if total > limit:
        raise OracleSizeError(
            f"(k+1)^n = {total} assignment matrices exceed the guard {limit}"
        )
    edge_idx = []
    if g is not None:
        if g.n != n:
            raise ValueError("graph order does not match n")
        edge_idx = [(i - 1, j - 1) for i, j in sorted(g.edges)]
    seen = {}
    chunk = 1 << 14
    for lo in range(0, total, chunk):
        codes = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        assign = np.empty((len(codes), n), dtype=np.int8)
        for col in range(n):
            assign[:, col] = codes % (k + 1)
            codes //= k + 1
        x = (assign[:, :, None] == assign[:, None, :]) & (assign[:, :, None] != 0)
        x = x.astype(np.uint8)
        if edge_idx:
            ok = np.ones(len(x), dtype=bool)
            for i, j in edge_idx:
                ok &= x[:, i, j] == 0
            x = x[ok]
        for mat in x:
            seen.setdefault(mat.tobytes(), mat)
    return [seen[key] for key in sorted(seen)]
