import json

import numpy as np
import pytest

from bench_instances import complete_graph, cycle_graph
from mkcs.cuts import (
    Cut,
    CutFamily,
    cluster_cuts,
    cuts_to_jsonl,
    kappa_rank,
    select_cuts,
    separate_clique_external,
    separate_clique_union,
    separate_odd_hole,
    separate_triangle,
    SeparationReport,
)
from mkcs.graph import Clique, Graph, Hole5, enumerate_5holes, enumerate_cliques, random_graph
from mkcs.linalg import FreeIndexMap
from mkcs.oracle import enumerate_Dnk
from mkcs.projection import ClusteredCuts, dykstra


def integer_vec(fmap, mat):
    """Free-entry vector of an exact 0/1 matrix (0-indexed)."""
    x = np.zeros(fmap.m)
    for i in range(1, fmap.n + 1):
        x[fmap.diag_coord(i)] = mat[i - 1, i - 1]
    for pos, (r, c) in enumerate(zip(fmap.pair_rows, fmap.pair_cols)):
        x[fmap.n + pos] = mat[r - 1, c - 1]
    return x


def coloring_matrix(g, assignment):
    """Bordered matrix of a (valid) partial coloring."""
    n = g.n
    x = np.zeros((n + 1, n + 1))
    for v, c in assignment.items():
        x[v, v] = 1.0
        x[0, v] = x[v, 0] = 1.0
        for u, cu in assignment.items():
            if u != v and cu == c:
                x[u, v] = x[v, u] = 1.0
    return x


def all_candidates(g, fmap, k, X, min_viol=1e-9):
    rng = np.random.default_rng(0)
    ce = enumerate_cliques(g)
    he = enumerate_5holes(g)
    cands = []
    cands += separate_triangle(X, g, fmap, k, min_viol).candidates
    cands += separate_clique_external(X, g, fmap, ce, k, min_viol, rng=rng).candidates
    cands += separate_clique_union(X, g, fmap, ce, k, min_viol, rng=rng).candidates
    cands += separate_odd_hole(X, g, fmap, he, k, min_viol, rng=rng).candidates
    return cands


class TestKappaRank:
    def test_clique_formula(self):
        assert kappa_rank(Clique(frozenset(range(4))), 2) == 2
        assert kappa_rank(Clique(frozenset(range(4))), 7) == 4

    def test_hole_formula(self):
        hole = Hole5((1, 2, 3, 4, 5))
        assert kappa_rank(hole, 1) == 2
        assert kappa_rank(hole, 2) == 4
        assert kappa_rank(hole, 3) == 5

    def test_zero_colors(self):
        assert kappa_rank(Clique(frozenset({1, 2})), 0) == 0
        assert kappa_rank(Hole5((1, 2, 3, 4, 5)), 0) == 0

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            kappa_rank(Clique(frozenset({1})), -1)


class TestSeparateTriangle:
    def test_identity_pattern_clean(self):
        g = Graph(4, [])
        fmap = FreeIndexMap(g)
        x = np.zeros(fmap.m)
        x[: g.n] = 1.0
        X = fmap.vec_to_mat(x, 2)
        rep = separate_triangle(X, g, fmap, 2)
        assert rep.count(CutFamily.T1) == 0

    def test_pair_apex_violation(self):
        g = Graph(3, [])
        fmap = FreeIndexMap(g)
        X = np.zeros((4, 4))
        X[1, 3] = X[3, 1] = 0.8
        X[2, 3] = X[3, 2] = 0.8
        X[3, 3] = X[0, 3] = X[3, 0] = 1.0
        X[1, 2] = X[2, 1] = 0.2
        rep = separate_triangle(X, g, fmap, 3)
        viols = [v for c, v in rep.candidates if c.family == CutFamily.T1]
        assert max(viols) == pytest.approx(0.4)

    def test_three_set_cut_for_one_color(self):
        g = Graph(3, [])
        fmap = FreeIndexMap(g)
        x = np.zeros(fmap.m)
        x[: g.n] = 0.7
        X = fmap.vec_to_mat(x, 1)
        rep = separate_triangle(X, g, fmap, 1)
        t2 = [v for c, v in rep.candidates if c.family == CutFamily.T2]
        assert t2 and max(t2) == pytest.approx(1.1)

    def test_three_set_family_suppressed_above_two_colors(self):
        g = Graph(3, [])
        fmap = FreeIndexMap(g)
        x = np.ones(FreeIndexMap(g).m)
        X = fmap.vec_to_mat(x, 3)
        rep = separate_triangle(X, g, fmap, 3, min_viol=1e-9)
        assert rep.count(CutFamily.T2) == 0

    def test_triangle_three_sets_skipped(self):
        g = complete_graph(3)
        fmap = FreeIndexMap(g)
        x = np.ones(fmap.m)
        X = fmap.vec_to_mat(x, 1)
        rep = separate_triangle(X, g, fmap, 1, min_viol=1e-9)
        assert rep.count(CutFamily.T2) == 0

    def test_edge_terms_dropped_from_support(self):
        g = Graph(3, [(1, 2)])
        fmap = FreeIndexMap(g)
        x = np.ones(fmap.m)
        X = fmap.vec_to_mat(x, 3)
        for cut, _ in separate_triangle(X, g, fmap, 3, 1e-9).candidates:
            assert all(p < fmap.m for p in cut.coeffs)
            # no coefficient may reference the edge {1,2}
            assert all(
                (r, c) != (1, 2)
                for r, c in [
                    (fmap.pair_rows[p - g.n], fmap.pair_cols[p - g.n])
                    for p in cut.coeffs
                    if p >= g.n
                ]
            )


class TestSeparateCliqueExternal:
    def test_edge_clique_violation(self):
        g = Graph(3, [(1, 2)])
        fmap = FreeIndexMap(g)
        X = np.zeros((4, 4))
        X[1, 3] = X[3, 1] = 0.6
        X[2, 3] = X[3, 2] = 0.6
        X[3, 3] = X[0, 3] = X[3, 0] = 1.0
        rep = separate_clique_external(
            X, g, fmap, enumerate_cliques(g), 2, min_viol=1e-3
        )
        assert rep.candidates
        assert max(v for _, v in rep.candidates) == pytest.approx(0.2)

    def test_feasible_coloring_produces_nothing(self):
        g = cycle_graph(5)
        fmap = FreeIndexMap(g)
        X = coloring_matrix(g, {1: 1, 3: 1, 2: 2, 4: 2})
        rep = separate_clique_external(X, g, fmap, enumerate_cliques(g), 2)
        assert not rep.candidates

    def test_six_clique_extension_strengthens(self):
        # K7: the non-maximal 6-cliques extend to the full K7 minus the
        # external vertex, so every reported cut has 6 support pairs
        g = complete_graph(7)
        # add an external vertex 8 joined to nothing
        g = Graph(8, list(g.edges))
        fmap = FreeIndexMap(g)
        x = np.ones(fmap.m)
        X = fmap.vec_to_mat(x, 2)
        rep = separate_clique_external(X, g, fmap, enumerate_cliques(g), 2, 1e-9)
        for cut, _ in rep.candidates:
            assert len(cut.coeffs) == 8  # 7 clique pairs + the apex diagonal

    def test_truncation_flag_and_seeded_subset(self):
        g = random_graph(12, 0.6, 5)
        fmap = FreeIndexMap(g)
        x = np.ones(fmap.m)
        X = fmap.vec_to_mat(x, 2)
        enum = enumerate_cliques(g)
        r1 = separate_clique_external(
            X, g, fmap, enum, 2, 1e-9, max_cliques=3, rng=np.random.default_rng(11)
        )
        r2 = separate_clique_external(
            X, g, fmap, enum, 2, 1e-9, max_cliques=3, rng=np.random.default_rng(11)
        )
        assert r1.truncated
        assert [c.key() for c, _ in r1.candidates] == [c.key() for c, _ in r2.candidates]


class TestSeparateCliqueUnion:
    def test_two_disjoint_edges(self):
        g = Graph(4, [(1, 2), (3, 4)])
        fmap = FreeIndexMap(g)
        X = np.zeros((5, 5))
        for v in range(1, 5):
            X[v, v] = X[0, v] = X[v, 0] = 0.75
        rep = separate_clique_union(X, g, fmap, enumerate_cliques(g), 1)
        assert max(v for _, v in rep.candidates) == pytest.approx(2.0)

    def test_small_pairs_skipped(self):
        g = Graph(4, [(1, 2), (3, 4)])
        fmap = FreeIndexMap(g)
        x = np.ones(fmap.m)
        X = fmap.vec_to_mat(x, 4)
        rep = separate_clique_union(X, g, fmap, enumerate_cliques(g), 4, 1e-9)
        assert not rep.candidates  # |Q| + |Q'| = 4 <= k

    def test_feasible_coloring_produces_nothing(self):
        g = Graph(4, [(1, 2), (3, 4)])
        fmap = FreeIndexMap(g)
        X = coloring_matrix(g, {1: 1, 3: 1, 2: 2, 4: 2})
        rep = separate_clique_union(X, g, fmap, enumerate_cliques(g), 2)
        assert not rep.candidates


class TestSeparateOddHole:
    def test_hole_with_external_apex(self):
        g = Graph(6, [(1, 2), (2, 3), (3, 4), (4, 5), (5, 1)])
        fmap = FreeIndexMap(g)
        X = np.zeros((7, 7))
        for v in range(1, 6):
            X[v, 6] = X[6, v] = 0.5
        X[6, 6] = X[0, 6] = X[6, 0] = 1.0
        rep = separate_odd_hole(X, g, fmap, enumerate_5holes(g), 2)
        assert max(v for _, v in rep.candidates) == pytest.approx(0.5)

    def test_zero_apex_no_violation(self):
        g = Graph(6, [(1, 2), (2, 3), (3, 4), (4, 5), (5, 1)])
        fmap = FreeIndexMap(g)
        X = np.zeros((7, 7))
        rep = separate_odd_hole(X, g, fmap, enumerate_5holes(g), 2)
        assert not rep.candidates

    def test_feasible_coloring_produces_nothing(self):
        g = Graph(6, [(1, 2), (2, 3), (3, 4), (4, 5), (5, 1)])
        fmap = FreeIndexMap(g)
        X = coloring_matrix(g, {1: 1, 3: 1, 2: 2, 4: 2, 6: 1})
        rep = separate_odd_hole(X, g, fmap, enumerate_5holes(g), 2)
        assert not rep.candidates


class TestCutValidity:
    """Every producible cut must hold on every integer feasible matrix."""

    @pytest.mark.parametrize("seed", range(10))
    def test_adversarial_iterates(self, seed):
        rng = np.random.default_rng([99, seed])
        n = int(rng.integers(4, 8))
        k = int(rng.integers(1, 4))
        g = random_graph(n, float(rng.choice([0.3, 0.5, 0.7])), seed)
        fmap = FreeIndexMap(g)
        mats = enumerate_Dnk(n, k, g)
        vecs = np.array([integer_vec(fmap, m) for m in mats])
        for X in (
            fmap.vec_to_mat(np.ones(fmap.m), k),
            fmap.vec_to_mat(rng.uniform(0, 1, fmap.m), k),
        ):
            for cut, viol in all_candidates(g, fmap, k, X):
                assert viol >= 1e-9
                idx = np.array(sorted(cut.coeffs))
                a = np.array([cut.coeffs[p] for p in idx])
                lhs = vecs[:, idx] @ a
                assert lhs.max() <= cut.rhs + 1e-9, (cut.family, cut.coeffs)

    def test_integer_points_never_separated(self):
        g = cycle_graph(5)
        fmap = FreeIndexMap(g)
        for m in enumerate_Dnk(5, 2, g):
            X = fmap.vec_to_mat(integer_vec(fmap, m), 2)
            assert not all_candidates(g, fmap, 2, X, min_viol=1e-6)

    @pytest.mark.parametrize("seed", range(4))
    def test_reported_violation_consistent_with_coefficients(self, seed):
        rng = np.random.default_rng(seed)
        g = random_graph(7, 0.4, seed)
        fmap = FreeIndexMap(g)
        k = 2
        X = fmap.vec_to_mat(rng.uniform(0, 1, fmap.m), k)
        xvec = fmap.mat_to_vec(X)
        min_viol = 0.05
        for cut, viol in all_candidates(g, fmap, k, X, min_viol=min_viol):
            assert viol >= min_viol
            assert viol == pytest.approx(cut.violation(xvec), abs=1e-9)


class TestPropositions:
    def test_subclique_cut_implied(self, rng):
        # a point satisfying the clique cut satisfies it for any subclique
        g = complete_graph(4)
        g = Graph(6, list(g.edges) + [(5, 6)])
        fmap = FreeIndexMap(g)
        mats = enumerate_Dnk(6, 2, g)
        vecs = [integer_vec(fmap, m) for m in mats]
        for _ in range(30):
            weights = rng.random(len(vecs))
            weights /= weights.sum()
            x = np.einsum("i,ij->j", weights, np.array(vecs))
            q = [1, 2, 3, 4]
            ell = 5
            full = sum(x[fmap.pair_coord(i, ell)] for i in q) - x[fmap.diag_coord(ell)]
            assert full <= 1e-9
            for drop in q:
                sub = [i for i in q if i != drop]
                val = sum(x[fmap.pair_coord(i, ell)] for i in sub) - x[fmap.diag_coord(ell)]
                assert val <= full + 1e-9

    @pytest.mark.parametrize("length", [4, 6])
    def test_even_hole_analogue_implied_by_triangle_cuts(self, length, rng):
        # project random points onto the triangle halfspaces used in the
        # proof; the resulting points satisfy the even-hole inequality
        n = length + 1
        ell = n
        edges = [(i, i % length + 1) for i in range(1, length + 1)]
        g = Graph(n, edges)
        fmap = FreeIndexMap(g)
        cuts = []
        for cid, i in enumerate(range(1, length + 1)):
            j = i % length + 1
            coeffs = {
                fmap.pair_coord(i, ell): 1.0,
                fmap.pair_coord(j, ell): 1.0,
                fmap.diag_coord(ell): -1.0,
            }
            cuts.append(Cut(cid, CutFamily.T1, coeffs, 0.0))
        clustered = ClusteredCuts(cuts, cluster_cuts(cuts), fmap.weights)
        for _ in range(20):
            x0 = rng.uniform(0, 1, fmap.m)
            res = dykstra(x0, fmap.weights, clustered, eps=1e-8, max_cycles=5000)
            lhs = sum(res.x[fmap.pair_coord(i, ell)] for i in range(1, length + 1))
            rhs = (length / 2) * res.x[fmap.diag_coord(ell)]
            assert lhs <= rhs + 1e-6


def make_cut(cid, support, viol_rank=0, family=CutFamily.T1, rhs=0.0):
    return Cut(cid, family, {p: 1.0 for p in support}, rhs)


class TestSelectCuts:
    def _report(self, entries):
        rep = SeparationReport()
        for cut, viol in entries:
            rep.add(cut, viol)
        return rep

    def test_single_candidate_accepted(self):
        rep = self._report([(make_cut(0, [1, 2], family=CutFamily.CLIQUE_EXT), 0.5)])
        assert len(select_cuts(rep, 2, 10, 5)) == 1

    def test_per_variable_cap(self):
        entries = [
            (make_cut(i, [0, 10 + i], family=CutFamily.CLIQUE_EXT), 1.0 - i * 0.01)
            for i in range(6)
        ]
        out = select_cuts(self._report(entries), 2, 100, 5)
        assert len(out) == 5

    def test_max_ineq_cap(self):
        entries = [
            (make_cut(i, [i], family=CutFamily.CLIQUE_EXT), 1.0) for i in range(10)
        ]
        assert len(select_cuts(self._report(entries), 2, 4, 5)) == 4

    def test_phase1_only_clique_external(self):
        entries = [
            (make_cut(0, [0, 1], family=CutFamily.T1), 2.0),
            (make_cut(1, [2, 3], family=CutFamily.CLIQUE_EXT), 1.0),
        ]
        out = select_cuts(self._report(entries), 1, 10, 5)
        assert [c.family for c in out] == [CutFamily.CLIQUE_EXT]

    def test_existing_duplicates_rejected(self):
        cut = make_cut(0, [1, 2], family=CutFamily.CLIQUE_EXT)
        rep = self._report([(cut, 1.0)])
        assert select_cuts(rep, 2, 10, 5, existing_keys={cut.key()}) == []

    def test_violation_then_family_then_id_order(self):
        a = make_cut(7, [0], family=CutFamily.HOLE5)
        b = make_cut(3, [1], family=CutFamily.T1)
        c = make_cut(1, [2], family=CutFamily.T1)
        out = select_cuts(self._report([(a, 1.0), (b, 1.0), (c, 1.0)]), 2, 2, 5)
        assert [x.id for x in out] == [1, 3]

    def test_deterministic(self):
        entries = [
            (make_cut(i, [i % 4, 4 + i % 3], family=CutFamily.CLIQUE_EXT), 1.0)
            for i in range(12)
        ]
        first = [c.id for c in select_cuts(self._report(entries), 2, 6, 2)]
        second = [c.id for c in select_cuts(self._report(entries), 2, 6, 2)]
        assert first == second


class TestClusterCuts:
    def test_disjoint_one_cluster(self):
        cuts = [make_cut(0, [0, 1]), make_cut(1, [2, 3])]
        assert cluster_cuts(cuts) == [[0, 1]]

    def test_overlap_two_clusters(self):
        cuts = [make_cut(0, [0, 1]), make_cut(1, [1, 2])]
        assert len(cluster_cuts(cuts)) == 2

    def test_star_pattern(self):
        # the center cut overlaps each leaf; leaves are pairwise disjoint
        center = make_cut(0, [0, 1, 2, 3])
        leaves = [make_cut(i, [i - 1, 10 + i]) for i in range(1, 5)]
        clusters = cluster_cuts([center] + leaves)
        assert len(clusters) == 2
        assert [0] in clusters and [1, 2, 3, 4] in clusters

    @pytest.mark.parametrize("seed", range(5))
    def test_clusters_have_disjoint_supports(self, seed):
        rng = np.random.default_rng(seed)
        cuts = []
        for cid in range(40):
            sup = rng.choice(30, size=int(rng.integers(1, 6)), replace=False)
            cuts.append(make_cut(cid, [int(s) for s in sup]))
        clusters = cluster_cuts(cuts)
        assert sorted(i for cl in clusters for i in cl) == list(range(40))
        for cl in clusters:
            seen = set()
            for i in cl:
                assert not (cuts[i].support & seen)
                seen |= cuts[i].support


def test_jsonl_serialization():
    cuts = [
        Cut(3, CutFamily.CLIQUE_EXT, {2: 1.0, 5: -1.0}, 0.0),
        Cut(4, CutFamily.T2, {0: 1.0}, 2.0),
    ]
    lines = cuts_to_jsonl(cuts).strip().split("\n")
    first = json.loads(lines[0])
    assert first == {
        "id": 3,
        "family": "CLIQUE_EXT",
        "rhs": 0.0,
        "coeffs": [[2, 1.0], [5, -1.0]],
    }
    assert json.loads(lines[1])["family"] == "T2"
