"""First-order solver for the bound-constrained SDP relaxation of the
maximum k-colorable subgraph problem: the inner ADMM, dual-based valid
upper bounds, a greedy feasibility heuristic, and the cutting-plane
outer loop that stitches them together."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .cuts import (
    CutFamily,
    SeparationReport,
    cluster_cuts,
    select_cuts,
    separate_clique_external,
    separate_clique_union,
    separate_odd_hole,
    separate_triangle,
)
from .graph import CliqueEnumeration, HoleEnumeration, enumerate_5holes, enumerate_cliques
from .intadmm import Coloring
from .linalg import (
    FreeIndexMap,
    augmented_identity,
    initial_iterate,
    project_nsd,
    project_psd,
)
from .projection import ClusteredCuts, project_affine_set

logger = logging.getLogger(__name__)

ALL_FAMILIES = (
    CutFamily.T1,
    CutFamily.CLIQUE_EXT,
    CutFamily.CLIQUE_UNION,
    CutFamily.HOLE5,
    CutFamily.T2,
)

_GAMMA_SUP = (1.0 + math.sqrt(5.0)) / 2.0


def scipy_linprog_backend(c, cut_list, m):
    """Exact LP maximization of ``c . x`` over the box and the cut
    halfspaces, via scipy's HiGHS solver."""
    from scipy.optimize import linprog

    a_ub = np.zeros((len(cut_list), m))
    b_ub = np.empty(len(cut_list))
    for row, cut in enumerate(cut_list):
        for p, a in cut.coeffs.items():
            a_ub[row, p] = a
        b_ub[row] = cut.rhs
    res = linprog(-c, A_ub=a_ub if len(cut_list) else None,
                  b_ub=b_ub if len(cut_list) else None,
                  bounds=(0.0, 1.0), method="highs")
    if not res.success:
        raise RuntimeError(f"LP backend failed: {res.message}")
    return float(-res.fun)


@dataclass
class AdmmParams:
    """Solver parameters; the defaults are the tuned production values."""

    beta: float = 1.2
    gamma: float = 1.617
    eps_admm: float = 1e-4
    eps_admm_final: float = 1e-5
    max_inner_iter: int = 2000
    max_inner_iter_final: int = 10000
    min_viol: float = 1e-2
    min_ineq: float | None = None          # defaults to n/4 at solve time
    min_ineq_phase1: float | None = None   # defaults to n
    max_ineq: int | None = None            # defaults to 5n
    max_cuts_per_var: int = 5
    min_impr: float = 0.025
    min_impr_phase1: float = 0.25
    time_limit_global: float = 3600.0
    time_limit_cliques: float = 10.0
    time_limit_holes: float = 10.0
    max_cliques: int = 100000
    max_clique_pairs: int = 100000
    max_holes: int = 100000
    eps_dyk: float = 1e-2
    dyk_max_cycles: int = 100
    seed: int = 0
    families: tuple = ALL_FAMILIES
    # The bound over the cut-free affine set has a closed form but cannot
    # certify anything below the cut-free optimum (it is a valid dual
    # bound of that problem for every NSD dual matrix), so the default
    # evaluates the dual bound exactly over the cut-constrained set.
    ub_mode: str = "lp"                    # or "box_only"
    lp_backend: object = scipy_linprog_backend  # callable(c, cuts, m) -> float
    single_precision: bool = False
    max_outer: int | None = None

    def __post_init__(self):
        if not 0.0 < self.gamma < _GAMMA_SUP:
            raise ValueError(
                f"gamma must lie in (0, (1+sqrt(5))/2); got {self.gamma}"
            )
        if self.ub_mode not in ("box_only", "lp"):
            raise ValueError(f"unknown ub_mode {self.ub_mode!r}")

    def resolved(self, n):
        """Fill the n-dependent knobs for an n-vertex instance."""
        return replace(
            self,
            min_ineq=self.min_ineq if self.min_ineq is not None else n / 4.0,
            min_ineq_phase1=(
                self.min_ineq_phase1 if self.min_ineq_phase1 is not None else float(n)
            ),
            max_ineq=self.max_ineq if self.max_ineq is not None else 5 * n,
        )


@dataclass
class AdmmState:
    """Iterates of the inner solver, warm-started across outer iterations."""

    X: np.ndarray
    Y: np.ndarray
    L: np.ndarray
    k: int
    iterations: int = 0


def initial_state(g, k):
    x0 = initial_iterate(g.n, k)
    return AdmmState(x0, x0.copy(), np.zeros_like(x0), k)


def admm_objective(x):
    """Objective value of a bordered iterate: the trace of the inner block."""
    return float(np.trace(x[1:, 1:]))


def inner_admm(state, fmap, params, clustered=None, tightened=False,
               ub_probe=None, ub_interval=None):
    """Run the alternating projections until the residual criterion or the
    iteration cap is met.

    Each sweep projects onto the affine set, then onto the PSD cone, then
    takes the scaled dual step; it stops when
    ``max(|X - Y| / (1 + |X|), beta |X - X_prev| / (1 + |X|)) <= eps``
    in Frobenius norms on the full bordered matrices.  ``tightened``
    switches to the final-pass tolerance and cap.  ``ub_probe`` is called
    every ``ub_interval`` sweeps and may stop the loop early by returning
    True.

    Returns ``(iterations_run, stopped_by_probe)``.
    """
    eps = params.eps_admm_final if tightened else params.eps_admm
    cap = params.max_inner_iter_final if tightened else params.max_inner_iter
    beta = params.beta
    gamma = params.gamma
    ibar = augmented_identity(fmap.n)
    it = 0
    for it in range(1, cap + 1):
        target = state.Y + (ibar - state.L) / beta
        x_new = project_affine_set(
            target, fmap, state.k, clustered, params.eps_dyk, params.dyk_max_cycles
        ).matrix
        y_new = project_psd(x_new + state.L / beta, params.single_precision)
        if not np.isfinite(x_new).all() or not np.isfinite(y_new).all():
            raise ArithmeticError(
                f"non-finite ADMM iterate at inner iteration {state.iterations + 1}"
            )
        scale = 1.0 + float(np.linalg.norm(x_new))
        primal = float(np.linalg.norm(x_new - y_new)) / scale
        dual = beta * float(np.linalg.norm(x_new - state.X)) / scale
        state.L = state.L + gamma * beta * (x_new - y_new)
        state.X = x_new
        state.Y = y_new
        state.iterations += 1
        if max(primal, dual) <= eps:
            return it, False
        if ub_probe is not None and ub_interval and it % ub_interval == 0:
            if ub_probe(state):
                return it, True
    return it, False


def valid_upper_bound(lam, fmap, k, cut_list=(), mode="box_only", lp_backend=None):
    """Weak-duality upper bound from any dual iterate.

    With ``C`` the bordered identity minus the NSD projection of the dual
    matrix, the bound maximizes ``<C, Xbar>`` over the cut-free affine
    set, whose linear program has a closed form: a diagonal entry is
    switched on when its diagonal-plus-border gain is positive, an
    off-diagonal non-edge when its entry of C is positive.  In ``lp``
    mode the maximization runs over the cut-constrained set through the
    pluggable LP backend for a (weakly) tighter, still valid, bound;
    without a backend it falls back to the closed form with a notice.
    """
    c_mat = augmented_identity(fmap.n) - project_nsd(lam)
    diag_gain = np.diagonal(c_mat)[1:] + 2.0 * c_mat[0, 1:]
    off = c_mat[fmap.pair_rows, fmap.pair_cols]
    base = k * float(c_mat[0, 0])
    if mode == "lp" and len(cut_list):
        if lp_backend is None:
            logger.info("lp mode requested without a backend; using box bound")
        else:
            c = np.concatenate([diag_gain, 2.0 * off])
            return base + lp_backend(c, list(cut_list), fmap.m)
    return (
        base
        + float(np.clip(diag_gain, 0.0, None).sum())
        + 2.0 * float(np.clip(off, 0.0, None).sum())
    )


def greedy_lower_bound(g, k, seed=0):
    """Feasible partial coloring from k rounds of greedy maximal stable
    sets (highest residual degree last, seeded tie shuffling).  Returns
    ``(number_of_colored_vertices, coloring)``; the value is always a
    valid lower bound."""
    rng = np.random.default_rng(seed)
    remaining = list(g.vertices)
    assignment = {}
    for color in range(1, k + 1):
        if not remaining:
            break
        remaining_set = set(remaining)
        shuffled = [remaining[i] for i in rng.permutation(len(remaining))]
        shuffled.sort(key=lambda v: len(g.adj[v] & remaining_set))
        chosen = set()
        for v in shuffled:
            if not (g.adj[v] & chosen):
                chosen.add(v)
        for v in sorted(chosen):
            assignment[v] = color
        remaining = [v for v in remaining if v not in chosen]
    return len(assignment), Coloring(dict(sorted(assignment.items())))


@dataclass
class OuterRecord:
    """Per-outer-iteration trace entry; the tightened final pass appears
    as a second entry with the same outer index."""

    outer: int
    inner_iters: int
    ub: float
    n_cuts_added: int
    n_cuts_total: int
    phase: int
    elapsed_s: float

    def to_json(self, timing=True):
        import json

        return json.dumps(
            {
                "outer": self.outer,
                "inner_iters": self.inner_iters,
                "ub": self.ub,
                "n_cuts_added": self.n_cuts_added,
                "n_cuts_total": self.n_cuts_total,
                "phase": self.phase,
                "elapsed_s": round(self.elapsed_s, 3) if timing else 0.0,
            },
            separators=(",", ":"),
        )


def records_to_jsonl(records, timing=True):
    return "".join(r.to_json(timing) + "\n" for r in records)


@dataclass
class CpAdmmResult:
    ub: float
    matrix: np.ndarray
    lb_hint: int
    termination: str
    outer_iterations: int
    inner_iterations: int
    tightened_iterations: int
    cuts: list
    records: list = field(default_factory=list)
    family_counts: dict = field(default_factory=dict)
    elapsed_s: float = 0.0
    enumeration_complete: bool = True


def _separate_families(families, state, g, fmap, k, params, clique_enum,
                       hole_enum, rng, id_base):
    """Run the separators of the requested families against the current
    primal iterate and merge their reports."""
    report = SeparationReport()
    next_id = id_base
    if CutFamily.T1 in families or CutFamily.T2 in families:
        tri = separate_triangle(state.X, g, fmap, k, params.min_viol, next_id)
        next_id += len(tri.candidates)
        if CutFamily.T1 not in families or CutFamily.T2 not in families:
            pruned = SeparationReport()
            for c, v in tri.candidates:
                if c.family in families:
                    pruned.add(c, v)
            pruned.truncated = tri.truncated
            tri = pruned
        report.merge(tri)
    if CutFamily.CLIQUE_EXT in families:
        rep = separate_clique_external(
            state.X, g, fmap, clique_enum, k, params.min_viol,
            params.max_cliques, rng, next_id,
        )
        next_id += len(rep.candidates)
        report.merge(rep)
    if CutFamily.CLIQUE_UNION in families:
        rep = separate_clique_union(
            state.X, g, fmap, clique_enum, k, params.min_viol,
            params.max_clique_pairs, rng, next_id,
        )
        next_id += len(rep.candidates)
        report.merge(rep)
    if CutFamily.HOLE5 in families:
        rep = separate_odd_hole(
            state.X, g, fmap, hole_enum, k, params.min_viol,
            params.max_holes, rng, next_id,
        )
        next_id += len(rep.candidates)
        report.merge(rep)
    return report, next_id


def cp_admm(g, k, params=None, lb_hint=None, ub_stop_below=None,
            first_outer_ub_interval=None):
    """Cutting-plane outer loop around the inner ADMM.

    Each round solves the current relaxation, extracts a valid upper
    bound from the dual iterate, separates violated inequalities (phase 1
    considers external-clique cuts only; phase 2 all configured
    families), and adds a capped selection of them.  Termination: the
    bound rounded down reaches the known lower bound, the bound stops
    improving, too few violated inequalities remain, or the time limit
    runs out; on the two plateau criteria one tightened inner pass runs
    first so the final bound is accurate.

    ``ub_stop_below`` (with ``first_outer_ub_interval``) aborts the solve
    as soon as any valid bound drops below the given target, which the
    chromatic-number driver uses to stop early; bound probes run every
    ``first_outer_ub_interval`` sweeps of the first outer iteration.
    """
    if params is None:
        params = AdmmParams()
    if not 1 <= k <= g.n:
        raise ValueError(f"k must lie in [1, {g.n}]; got {k}")
    params = params.resolved(g.n)
    t0 = time.monotonic()
    if lb_hint is None:
        lb_hint, _ = greedy_lower_bound(g, k, params.seed)
    fmap = FreeIndexMap(g)
    families = tuple(params.families)
    need_cliques = CutFamily.CLIQUE_EXT in families or CutFamily.CLIQUE_UNION in families
    clique_enum = (
        enumerate_cliques(g, params.time_limit_cliques)
        if need_cliques
        else CliqueEnumeration([], [])
    )
    hole_enum = (
        enumerate_5holes(g, params.time_limit_holes)
        if CutFamily.HOLE5 in families
        else HoleEnumeration([])
    )
    enum_complete = clique_enum.complete and hole_enum.complete

    state = initial_state(g, k)
    cut_list = []
    clustered = None
    existing_keys = set()
    phase = 1 if CutFamily.CLIQUE_EXT in families else 2
    best_ub = math.inf
    prev_best = None
    records = []
    outer = 0
    inner_total = 0
    tightened_total = 0
    id_counter = 0
    termination = "max_outer"
    family_counts = {}

    def probe(st):
        nonlocal best_ub
        ub_now = valid_upper_bound(
            st.L, fmap, k, cut_list, params.ub_mode, params.lp_backend
        )
        best_ub = min(best_ub, ub_now)
        return ub_stop_below is not None and ub_now < ub_stop_below - 1e-9

    def run_tightened():
        nonlocal tightened_total, best_ub
        iters, _ = inner_admm(state, fmap, params, clustered, tightened=True)
        tightened_total += iters
        ub_t = valid_upper_bound(
            state.L, fmap, k, cut_list, params.ub_mode, params.lp_backend
        )
        best_ub = min(best_ub, ub_t)
        records.append(
            OuterRecord(outer, iters, ub_t, 0, len(cut_list), phase,
                        time.monotonic() - t0)
        )

    while True:
        outer += 1
        use_probe = (
            outer == 1 and ub_stop_below is not None and first_outer_ub_interval
        )
        iters, probed = inner_admm(
            state, fmap, params, clustered,
            ub_probe=probe if use_probe else None,
            ub_interval=first_outer_ub_interval if use_probe else None,
        )
        inner_total += iters
        ub = valid_upper_bound(
            state.L, fmap, k, cut_list, params.ub_mode, params.lp_backend
        )
        best_ub = min(best_ub, ub)
        improvement = math.inf if prev_best is None else prev_best - best_ub
        prev_best = best_ub
        elapsed = time.monotonic() - t0

        def record(n_added):
            records.append(
                OuterRecord(outer, iters, ub, n_added, len(cut_list), phase,
                            time.monotonic() - t0)
            )

        if probed or (
            ub_stop_below is not None and best_ub < ub_stop_below - 1e-9
        ):
            termination = "ub_below_target"
            record(0)
            break
        if math.floor(best_ub + 1e-9) <= lb_hint:
            termination = "lb_match"
            record(0)
            break
        if elapsed > params.time_limit_global:
            termination = "time_limit"
            record(0)
            break
        if params.max_outer is not None and outer >= params.max_outer:
            termination = "max_outer"
            record(0)
            break

        rng = np.random.default_rng([params.seed, outer])
        report, id_counter = _separate_families(
            [f for f in families if phase == 2 or f == CutFamily.CLIQUE_EXT],
            state, g, fmap, k, params, clique_enum, hole_enum, rng, id_counter,
        )
        fresh = []
        fresh_keys = set()
        for cand, viol in report.candidates:
            key = cand.key()
            if key in existing_keys or key in fresh_keys:
                continue
            fresh_keys.add(key)
            fresh.append((cand, viol))
        if phase == 1:
            clique_viol = len(fresh)
            if (improvement < params.min_impr_phase1
                    or clique_viol < params.min_ineq_phase1):
                phase = 2
                extra, id_counter = _separate_families(
                    [f for f in families if f != CutFamily.CLIQUE_EXT],
                    state, g, fmap, k, params, clique_enum, hole_enum, rng,
                    id_counter,
                )
                for cand, viol in extra.candidates:
                    key = cand.key()
                    if key in existing_keys or key in fresh_keys:
                        continue
                    fresh_keys.add(key)
                    fresh.append((cand, viol))

        if outer > 1 and improvement < params.min_impr:
            record(0)
            run_tightened()
            termination = "min_impr"
            break
        if len(fresh) < params.min_ineq:
            record(0)
            run_tightened()
            termination = "min_ineq"
            break

        accepted = select_cuts(
            fresh, phase, params.max_ineq, params.max_cuts_per_var, existing_keys
        )
        if not accepted:
            record(0)
            run_tightened()
            termination = "min_ineq"
            break
        for cut in accepted:
            existing_keys.add(cut.key())
            family_counts[cut.family.name] = family_counts.get(cut.family.name, 0) + 1
        cut_list.extend(accepted)
        clustered = ClusteredCuts(cut_list, cluster_cuts(cut_list), fmap.weights)
        record(len(accepted))

    return CpAdmmResult(
        ub=best_ub,
        matrix=state.X,
        lb_hint=lb_hint,
        termination=termination,
        outer_iterations=outer,
        inner_iterations=inner_total,
        tightened_iterations=tightened_total,
        cuts=cut_list,
        records=records,
        family_counts=family_counts,
        elapsed_s=time.monotonic() - t0,
        enumeration_complete=enum_complete,
    )
