"""Projections onto the affine feasible set of the relaxation: the unit
box, weighted halfspaces, Dykstra's cyclic scheme over clustered cuts,
and the three-step matrix<->vector procedure tying them together."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def project_box(x):
    """Componentwise clamp to [0, 1]; the weighted and unweighted
    projections coincide because the box is separable."""
    return np.clip(x, 0.0, 1.0)


def project_halfspace_weighted(x, cut, w):
    """Weighted projection onto the halfspace ``a.x <= b`` of one cut:
    ``x - (a.x - b)_+ / (a' W^-1 a) * W^-1 a``.  Coordinates outside the
    cut's support are untouched; feasible inputs are returned unchanged.
    """
    if not cut.coeffs:
        raise ValueError("cannot project onto a cut with empty support")
    idx = np.fromiter(cut.coeffs.keys(), dtype=np.intp, count=len(cut.coeffs))
    a = np.fromiter(cut.coeffs.values(), dtype=np.float64, count=len(cut.coeffs))
    viol = float(a @ x[idx]) - cut.rhs
    if viol <= 0.0:
        return x
    winv_a = a / w[idx]
    out = x.copy()
    out[idx] -= (viol / float(a @ winv_a)) * winv_a
    return out


class ClusteredCuts:
    """Flat array view of cuts grouped into disjoint-support clusters.

    Within a cluster all member halfspace projections act on disjoint
    coordinates, so one Dykstra pass applies them simultaneously.
    """

    def __init__(self, cuts, clusters, w):
        self.cuts = cuts
        self.clusters = clusters
        self.groups = []
        all_idx = []
        all_a = []
        for members in clusters:
            idx_parts = []
            a_parts = []
            starts = [0]
            rhs = np.empty(len(members))
            denom = np.empty(len(members))
            for pos, ci in enumerate(members):
                cut = cuts[ci]
                items = sorted(cut.coeffs.items())
                idx = np.array([p for p, _ in items], dtype=np.intp)
                a = np.array([v for _, v in items])
                idx_parts.append(idx)
                a_parts.append(a)
                starts.append(starts[-1] + len(idx))
                rhs[pos] = cut.rhs
                denom[pos] = float(a @ (a / w[idx]))
            idx = np.concatenate(idx_parts) if idx_parts else np.empty(0, dtype=np.intp)
            a = np.concatenate(a_parts) if a_parts else np.empty(0)
            lengths = np.diff(starts)
            self.groups.append(
                {
                    "idx": idx,
                    "a": a,
                    "winv_a": a / w[idx] if len(idx) else a,
                    "starts": np.array(starts[:-1], dtype=np.intp),
                    "lengths": lengths,
                    "rhs": rhs,
                    "denom": denom,
                }
            )
            all_idx.append(idx)
            all_a.append(a)
        # flattened view over every cut, for the end-of-cycle violation check
        self._chk_idx = np.concatenate(all_idx) if all_idx else np.empty(0, dtype=np.intp)
        self._chk_a = np.concatenate(all_a) if all_a else np.empty(0)
        starts = []
        rhs = []
        offset = 0
        for grp in self.groups:
            starts.extend(offset + int(s) for s in grp["starts"])
            rhs.extend(grp["rhs"])
            offset += len(grp["idx"])
        self._chk_starts = np.array(starts, dtype=np.intp)
        self._chk_rhs = np.array(rhs)

    def __len__(self):
        return len(self.cuts)

    def max_violation(self, x):
        if len(self._chk_rhs) == 0:
            return 0.0
        sums = np.add.reduceat(self._chk_a * x[self._chk_idx], self._chk_starts)
        return float(np.max(sums - self._chk_rhs))

    def project_cluster(self, x, gid):
        """In-place simultaneous weighted projection onto every halfspace
        of one cluster (supports are disjoint)."""
        grp = self.groups[gid]
        idx = grp["idx"]
        if len(idx) == 0:
            return
        vals = grp["a"] * x[idx]
        viol = np.add.reduceat(vals, grp["starts"]) - grp["rhs"]
        np.clip(viol, 0.0, None, out=viol)
        if not viol.any():
            return
        scale = np.repeat(viol / grp["denom"], grp["lengths"])
        x[idx] -= scale * grp["winv_a"]


@dataclass
class DykstraResult:
    x: np.ndarray          # returned iterate (box-clamped when capped out)
    feasible: bool
    cycles: int
    raw: np.ndarray = None  # final iterate before any cap-out clamp


def dykstra(x0, w, clustered, eps=1e-2, max_cycles=100):
    """Cyclic projection with correction terms onto box /\\ halfspaces.

    Cycle order is the box first, then cut clusters in index order.  For
    each set: subtract its stored correction, project (weighted), store
    the new correction as projected minus input-with-correction-removed.
    Terminates when, at the end of a cycle, the largest cut and box
    violations are at most ``eps`` and the iterate moved by at most
    ``eps`` over the cycle (feasibility alone can hold many cycles before
    the iterate settles near the projection); hitting ``max_cycles``
    returns the box-projected iterate flagged infeasible so downstream
    bounds stay meaningful.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    corr_box = np.zeros_like(x)
    ngroups = len(clustered.groups)
    corr = [np.zeros(len(g["idx"])) for g in clustered.groups]
    for cycle in range(1, max_cycles + 1):
        prev = x.copy()
        y = x - corr_box
        x = project_box(y)
        corr_box = x - y
        for gid in range(ngroups):
            grp = clustered.groups[gid]
            idx = grp["idx"]
            if len(idx) == 0:
                continue
            x[idx] -= corr[gid]
            before = x[idx].copy()
            clustered.project_cluster(x, gid)
            corr[gid] = x[idx] - before
        box_viol = max(float(x.max()) - 1.0, -float(x.min()), 0.0)
        drift = float(np.max(np.abs(x - prev)))
        if max(clustered.max_violation(x), box_viol) <= eps and drift <= eps:
            return DykstraResult(x, True, cycle, x)
    return DykstraResult(project_box(x), False, max_cycles, x)


@dataclass
class AffineProjection:
    matrix: np.ndarray
    feasible: bool
    cycles: int


def project_affine_set(u, fmap, k, clustered=None, eps_dyk=1e-2, max_cycles=100):
    """Frobenius projection of a bordered symmetric matrix onto the affine
    set (zero edges, border = diagonal, corner = k, unit box, cuts).

    Three steps: extract the weighted free-entry vector, project it onto
    the box (exactly, when there are no cuts) or the box-and-halfspace
    intersection via Dykstra, and rebuild the bordered matrix.
    """
    v = fmap.mat_to_vec(u)
    if clustered is None or len(clustered) == 0:
        return AffineProjection(fmap.vec_to_mat(project_box(v), k), True, 0)
    res = dykstra(v, fmap.weights, clustered, eps=eps_dyk, max_cycles=max_cycles)
    return AffineProjection(fmap.vec_to_mat(res.x, k), res.feasible, res.cycles)
