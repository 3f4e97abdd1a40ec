"""Constructions of the small benchmark graphs the tests reproduce
bounds on, plus helpers to write them as DIMACS files.

The graphs are built from their defining constructions (queens graphs,
iterated Mycielski-type extensions), which yields graphs isomorphic to
the standard benchmark instances; the vertex counts, edge counts and
densities are asserted against the published values.
"""

from __future__ import annotations

from mkcs.graph import Graph


def mycielskian(g, levels=1):
    """Generalized Mycielski extension with the given number of shadow
    levels: level 0 is the original graph, each vertex of level i is
    joined to the neighbors' copies on level i+1, and an apex vertex is
    joined to all of the top level.  ``levels=1`` is the classical
    construction."""
    n = g.n
    edges = list(g.edges)
    # copy c of vertex v (c = 0..levels) has id v + c*n; apex is last
    for i, j in g.edges:
        for c in range(levels):
            edges.append((i + c * n, j + (c + 1) * n))
            edges.append((j + c * n, i + (c + 1) * n))
    apex = (levels + 1) * n + 1
    for v in range(1, n + 1):
        edges.append((v + levels * n, apex))
    return Graph(apex, edges)


def _iterated(base, levels, rounds, name):
    g = base
    for _ in range(rounds):
        g = mycielskian(g, levels)
    return Graph(g.n, g.edges, name=name)


def myciel5():
    """47 vertices, 236 edges: four classical Mycielski rounds from K2."""
    g = _iterated(Graph(2, [(1, 2)]), 1, 4, "myciel5")
    assert (g.n, g.num_edges) == (47, 236)
    return g


def myciel_graph(index):
    """myciel3 = 2 rounds (11 vertices), myciel4 = 3 rounds, ..."""
    g = _iterated(Graph(2, [(1, 2)]), 1, index - 1, f"myciel{index}")
    return g


def one_insertions_4():
    """67 vertices, 232 edges: three rounds of the two-level extension."""
    g = _iterated(Graph(2, [(1, 2)]), 2, 3, "1-Insertions_4")
    assert (g.n, g.num_edges) == (67, 232)
    return g


def queen6_6():
    """36 vertices, 290 edges: squares of a 6x6 board, adjacent when they
    share a row, column, or diagonal."""
    size = 6
    edges = []
    cells = [(r, c) for r in range(size) for c in range(size)]
    for a in range(len(cells)):
        ra, ca = cells[a]
        for b in range(a + 1, len(cells)):
            rb, cb = cells[b]
            if ra == rb or ca == cb or abs(ra - rb) == abs(ca - cb):
                edges.append((a + 1, b + 1))
    g = Graph(size * size, edges, name="queen6_6")
    assert (g.n, g.num_edges) == (36, 290)
    return g


def petersen():
    outer = [(1, 2), (2, 3), (3, 4), (4, 5), (5, 1)]
    spokes = [(i, i + 5) for i in range(1, 6)]
    inner = [(6, 8), (8, 10), (10, 7), (7, 9), (9, 6)]
    return Graph(10, outer + spokes + inner, name="petersen")


def complete_graph(n):
    return Graph(n, [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)],
                 name=f"K{n}")


def cycle_graph(n):
    return Graph(n, [(i, i % n + 1) for i in range(1, n + 1)], name=f"C{n}")
