"""Valid inequalities for the k-colorable-subgraph relaxation:
representation, separation, selection, and clustering."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from .graph import Clique, Hole5, extend_clique_greedy


class CutFamily(enum.IntEnum):
    """Cut families; the numeric order is the selection tie-break order."""

    T1 = 0
    CLIQUE_EXT = 1
    CLIQUE_UNION = 2
    HOLE5 = 3
    T2 = 4


@dataclass
class Cut:
    """One linear inequality ``sum_p a_p x_p <= rhs`` over free entries."""

    id: int
    family: CutFamily
    coeffs: dict          # free-entry coordinate -> coefficient
    rhs: float

    @property
    def support(self):
        return frozenset(self.coeffs)

    def violation(self, x):
        return sum(a * x[p] for p, a in self.coeffs.items()) - self.rhs

    def key(self):
        """Canonical identity of the inequality, independent of family/id."""
        items = tuple(sorted((p, round(a, 9)) for p, a in self.coeffs.items()))
        return (round(self.rhs, 9), items)

    def to_json(self):
        coeffs = sorted((int(p), float(a)) for p, a in self.coeffs.items())
        return json.dumps(
            {"id": self.id, "family": self.family.name, "rhs": self.rhs,
             "coeffs": coeffs},
            separators=(",", ":"),
        )


def cuts_to_jsonl(cuts):
    """JSON-lines dump of a cut list, for reproducibility audits."""
    return "".join(c.to_json() + "\n" for c in cuts)


@dataclass
class SeparationReport:
    """Violated-cut candidates found by one or more separators."""

    candidates: list = field(default_factory=list)  # (Cut, violation) pairs
    family_counts: dict = field(default_factory=dict)
    truncated: bool = False

    def add(self, cut, violation):
        self.candidates.append((cut, violation))
        self.family_counts[cut.family] = self.family_counts.get(cut.family, 0) + 1

    def merge(self, other):
        self.candidates.extend(other.candidates)
        for fam, cnt in other.family_counts.items():
            self.family_counts[fam] = self.family_counts.get(fam, 0) + cnt
        self.truncated = self.truncated or other.truncated
        return self

    def count(self, family=None):
        if family is None:
            return len(self.candidates)
        return self.family_counts.get(family, 0)


def kappa_rank(structure, kappa):
    """Largest number of vertices of the structure colorable with ``kappa``
    colors: min(kappa, |Q|) for a clique, min(kappa*(|C|-1)/2, |C|) for an
    odd hole, and 0 when kappa is 0."""
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    size = len(structure)
    if isinstance(structure, Hole5) or (
        not isinstance(structure, Clique) and isinstance(structure, tuple)
    ):
        return min(kappa * (size - 1) // 2, size)
    return min(kappa, size)


def _sanitize(X, fmap, k):
    """Force the bordered structure (zero edges, border = diagonal) so that
    matrix arithmetic on entries equals coefficient arithmetic on the
    free-entry vector."""
    return fmap.vec_to_mat(fmap.mat_to_vec(X), k)


def _pair_coeff(fmap, coeffs, i, j, value):
    """Accumulate a coefficient on the (i, j) entry, dropping edge-pinned
    positions (their entries are identically zero)."""
    if i == j:
        p = fmap.diag_coord(i)
    else:
        a, b = (i, j) if i < j else (j, i)
        p = fmap.pair_index.get((a, b))
        if p is None:
            return
    coeffs[p] = coeffs.get(p, 0.0) + value


def separate_triangle(X, g, fmap, k, min_viol=1e-2, id_base=0):
    """Separate the three-vertex inequalities.

    For every unordered vertex triple, the three role assignments of the
    apex give cuts ``X[i,l] + X[j,l] <= X[l,l] + X[i,j]``; the second
    family ``sum X[ii] <= sum X[ij] + k`` over the triple is emitted only
    for k <= 2 (it is implied by the bound constraints otherwise) and
    never for triangles, where it is implied by the relaxation itself.
    """
    Xs = _sanitize(X, fmap, k)
    n = g.n
    report = SeparationReport()
    next_id = id_base
    diag = np.diagonal(Xs)
    emit_t2 = k <= 2
    for ell in range(1, n + 1):
        col = Xs[:, ell]
        # violation of the apex-ell cut for every pair (i, j)
        viol = col[:, None] + col[None, :] - diag[ell] - Xs
        for i in range(1, n):
            row = viol[i]
            for j in range(i + 1, n + 1):
                if i == ell or j == ell:
                    continue
                if row[j] >= min_viol:
                    coeffs = {}
                    _pair_coeff(fmap, coeffs, i, ell, 1.0)
                    _pair_coeff(fmap, coeffs, j, ell, 1.0)
                    _pair_coeff(fmap, coeffs, ell, ell, -1.0)
                    _pair_coeff(fmap, coeffs, i, j, -1.0)
                    coeffs = {p: a for p, a in coeffs.items() if a != 0.0}
                    if coeffs:
                        report.add(Cut(next_id, CutFamily.T1, coeffs, 0.0), row[j])
                        next_id += 1
    if emit_t2:
        for i in range(1, n - 1):
            for j in range(i + 1, n + 1):
                for ell in range(j + 1, n + 1):
                    if g.has_edge(i, j) and g.has_edge(i, ell) and g.has_edge(j, ell):
                        continue
                    v = (
                        diag[i] + diag[j] + diag[ell]
                        - Xs[i, j] - Xs[i, ell] - Xs[j, ell] - k
                    )
                    if v >= min_viol:
                        coeffs = {}
                        for u in (i, j, ell):
                            _pair_coeff(fmap, coeffs, u, u, 1.0)
                        _pair_coeff(fmap, coeffs, i, j, -1.0)
                        _pair_coeff(fmap, coeffs, i, ell, -1.0)
                        _pair_coeff(fmap, coeffs, j, ell, -1.0)
                        report.add(
                            Cut(next_id, CutFamily.T2, coeffs, float(k)), v
                        )
                        next_id += 1
    return report


def _subset(items, limit, rng):
    """Seeded uniform subset of at most ``limit`` items, order preserved."""
    if len(items) <= limit:
        return items, False
    chosen = rng.choice(len(items), size=limit, replace=False)
    chosen.sort()
    return [items[i] for i in chosen], True


def _clique_external_cut(fmap, g, clique_vertices, ell, cut_id):
    coeffs = {}
    for i in clique_vertices:
        _pair_coeff(fmap, coeffs, i, ell, 1.0)
    if not coeffs:
        return None
    _pair_coeff(fmap, coeffs, ell, ell, -1.0)
    return Cut(cut_id, CutFamily.CLIQUE_EXT, coeffs, 0.0)


def separate_clique_external(X, g, fmap, cliques, k, min_viol=1e-2,
                             max_cliques=100000, rng=None, id_base=0):
    """Separate ``sum_{i in Q} X[i,l] <= X[l,l]`` over the enumerated
    cliques and every external vertex.

    When the clique pool exceeds ``max_cliques`` a seeded uniform subset
    is drawn.  A violated cut on a non-maximal size-6 clique is first
    strengthened by greedy extension before being reported.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    Xs = _sanitize(X, fmap, k)
    xvec = fmap.mat_to_vec(Xs)
    report = SeparationReport()
    pool = cliques.all_cliques() if hasattr(cliques, "all_cliques") else list(cliques)
    pool, report.truncated = _subset(pool, max_cliques, rng)
    next_id = id_base
    diag = np.diagonal(Xs)
    for clique in pool:
        members = sorted(clique.vertices)
        colsum = Xs[members, :].sum(axis=0)
        viol = colsum - diag
        for ell in range(1, g.n + 1):
            if ell in clique.vertices or viol[ell] < min_viol:
                continue
            target = clique
            if len(clique) == 6 and not clique.maximal:
                target = extend_clique_greedy(g, clique, ell, Xs)
            cut = _clique_external_cut(fmap, g, target.vertices, ell, next_id)
            if cut is None:
                continue
            v = cut.violation(xvec)
            if v >= min_viol:
                report.add(cut, v)
                next_id += 1
    return report


def separate_clique_union(X, g, fmap, cliques, k, min_viol=1e-2,
                          max_pairs=100000, rng=None, id_base=0):
    """Separate the pairwise clique inequality
    ``sum_Q X[ii] + sum_Q' X[jj] <= sum cross X[ij] + k`` over disjoint
    pairs of maximal cliques whose sizes sum to more than k."""
    rng = rng if rng is not None else np.random.default_rng(0)
    Xs = _sanitize(X, fmap, k)
    report = SeparationReport()
    pool = cliques.all_cliques() if hasattr(cliques, "all_cliques") else list(cliques)
    pool = [c for c in pool if c.maximal]
    next_id = id_base
    diag = np.diagonal(Xs)
    npool = len(pool)
    total_pairs = npool * (npool - 1) // 2
    if total_pairs > max_pairs:
        report.truncated = True
        seen = set()
        pairs = []
        # rejection-sample distinct unordered pairs; generous retry budget
        draws = rng.integers(0, npool, size=(4 * max_pairs, 2))
        for a, b in draws:
            if a == b:
                continue
            pair = (min(a, b), max(a, b))
            if pair in seen:
                continue
            seen.add(pair)
            pairs.append(pair)
            if len(pairs) >= max_pairs:
                break
    else:
        pairs = [(a, b) for a in range(npool) for b in range(a + 1, npool)]
    for a, b in pairs:
        qa, qb = pool[a], pool[b]
        if qa.vertices & qb.vertices:
            continue
        if len(qa) + len(qb) <= k:
            continue
        va = sorted(qa.vertices)
        vb = sorted(qb.vertices)
        cross = Xs[np.ix_(va, vb)].sum()
        v = diag[va].sum() + diag[vb].sum() - cross - k
        if v < min_viol:
            continue
        coeffs = {}
        for u in va + vb:
            _pair_coeff(fmap, coeffs, u, u, 1.0)
        for i in va:
            for j in vb:
                _pair_coeff(fmap, coeffs, i, j, -1.0)
        report.add(Cut(next_id, CutFamily.CLIQUE_UNION, coeffs, float(k)), v)
        next_id += 1
    return report


def separate_odd_hole(X, g, fmap, holes, k, min_viol=1e-2,
                      max_holes=100000, rng=None, id_base=0):
    """Separate ``sum_{i in C} X[i,l] <= 2 X[l,l]`` over 5-holes and
    external vertices."""
    rng = rng if rng is not None else np.random.default_rng(0)
    Xs = _sanitize(X, fmap, k)
    report = SeparationReport()
    pool = holes.holes if hasattr(holes, "holes") else list(holes)
    pool, report.truncated = _subset(pool, max_holes, rng)
    next_id = id_base
    diag = np.diagonal(Xs)
    for hole in pool:
        members = list(hole.vertices)
        colsum = Xs[members, :].sum(axis=0)
        viol = colsum - 2.0 * diag
        for ell in range(1, g.n + 1):
            if ell in hole.vertices or viol[ell] < min_viol:
                continue
            coeffs = {}
            for i in members:
                _pair_coeff(fmap, coeffs, i, ell, 1.0)
            if not coeffs:
                continue
            _pair_coeff(fmap, coeffs, ell, ell, -2.0)
            report.add(Cut(next_id, CutFamily.HOLE5, coeffs, 0.0), viol[ell])
            next_id += 1
    return report


def select_cuts(report, phase, max_ineq, max_cuts_per_var, existing_keys=()):
    """Pick the cuts to add this round.

    Candidates are sorted by violation descending (ties by family order,
    then id); one is accepted only if every coordinate of its support
    appears in fewer than ``max_cuts_per_var`` cuts already accepted this
    round, up to ``max_ineq`` in total.  Duplicates of existing cuts are
    rejected, and in phase 1 only external-clique cuts are considered.
    """
    existing = set(existing_keys)
    candidates = report.candidates if isinstance(report, SeparationReport) else report
    if phase == 1:
        candidates = [
            (c, v) for c, v in candidates if c.family == CutFamily.CLIQUE_EXT
        ]
    order = sorted(candidates, key=lambda cv: (-cv[1], cv[0].family, cv[0].id))
    accepted = []
    var_load = {}
    seen = set(existing)
    for cut, _viol in order:
        if len(accepted) >= max_ineq:
            break
        key = cut.key()
        if key in seen:
            continue
        if any(var_load.get(p, 0) >= max_cuts_per_var for p in cut.coeffs):
            continue
        accepted.append(cut)
        seen.add(key)
        for p in cut.coeffs:
            var_load[p] = var_load.get(p, 0) + 1
    return accepted


def cluster_cuts(cuts):
    """Partition cuts into clusters of pairwise-disjoint supports.

    Greedy first-fit coloring of the conflict graph, processing cuts in
    descending support size (ties by list position); returns a list of
    index lists into ``cuts``.
    """
    order = sorted(range(len(cuts)), key=lambda i: (-len(cuts[i].coeffs), i))
    clusters = []
    occupied = []  # union of supports per cluster
    for idx in order:
        support = cuts[idx].support
        for cid, taken in enumerate(occupied):
            if not (taken & support):
                clusters[cid].append(idx)
                occupied[cid] = taken | support
                break
        else:
            clusters.append([idx])
            occupied.append(set(support))
    for members in clusters:
        members.sort()
    return clusters
