"""Command-line front end: configuration, orchestration of the bound and
solve pipelines, the chromatic-number lower-bound driver, and
machine-readable reporting."""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from .cpadmm import (
    AdmmParams,
    ALL_FAMILIES,
    cp_admm,
    greedy_lower_bound,
    records_to_jsonl,
    scipy_linprog_backend,
)
from .cuts import CutFamily, cuts_to_jsonl
from .graph import DimacsError, parse_dimacs
from .intadmm import IntAdmmParams, int_admm, int_trace_to_jsonl
from .oracle import OracleSizeError, alpha_k_exact, chi_exact

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_PARSE_ERROR = 2
EXIT_INVALID_ARGS = 3


class CliError(Exception):
    """Carries the process exit code alongside the message."""

    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


_ADMM_FIELD_NAMES = {
    f.name
    for f in dataclasses.fields(AdmmParams)
    if f.name not in ("families", "lp_backend", "ub_mode")
}
_INT_FIELD_NAMES = {f.name for f in dataclasses.fields(IntAdmmParams)}


@dataclass
class RunConfig:
    """Resolved run configuration: defaults, then config-file values, then
    command-line flags.  Solver fields default to the production values
    of the two parameter tables."""

    instance: str | None = None
    k: int | None = None
    mode: str = "bound"
    out: str | None = None
    time_limit: float | None = None    # overrides time_limit_global when set
    lp_backend: str = "external"       # external (exact LP bound) | none
    expensive_tests: bool = False
    stable_timing: bool = False
    per_k_time_limit: float = 600.0    # chromatic mode: budget per k value
    int_max_iterations: int | None = None
    families: tuple = tuple(f.name for f in ALL_FAMILIES)
    admm: AdmmParams = field(default_factory=AdmmParams)
    intp: IntAdmmParams = field(default_factory=IntAdmmParams)

    @property
    def seed(self):
        return self.admm.seed

    def admm_params(self):
        fams = tuple(CutFamily[name] for name in self.families)
        params = dataclasses.replace(self.admm, families=fams)
        if self.time_limit is not None:
            params = dataclasses.replace(params, time_limit_global=self.time_limit)
        if self.lp_backend == "none":
            params = dataclasses.replace(params, ub_mode="box_only", lp_backend=None)
        else:
            params = dataclasses.replace(
                params, ub_mode="lp", lp_backend=scipy_linprog_backend
            )
        return params

    def int_params(self):
        return dataclasses.replace(self.intp, seed=self.admm.seed)


def _apply_overrides(cfg, overrides, source):
    admm_kwargs = {}
    int_kwargs = {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key in _ADMM_FIELD_NAMES:
            admm_kwargs[key] = value
        elif key in _INT_FIELD_NAMES:
            int_kwargs[key] = value
        elif key == "families":
            names = value.split(",") if isinstance(value, str) else list(value)
            names = [s.strip().upper() for s in names if s.strip()]
            for name in names:
                if name not in CutFamily.__members__:
                    raise CliError(
                        f"{source}: unknown cut family {name!r}", EXIT_INVALID_ARGS
                    )
            cfg.families = tuple(names)
        elif key in ("time_limit", "lp_backend", "expensive_tests",
                     "stable_timing", "per_k_time_limit", "int_max_iterations",
                     "k", "out"):
            if key == "lp_backend" and value not in ("none", "external"):
                raise CliError(
                    f"{source}: lp_backend must be 'none' or 'external'",
                    EXIT_INVALID_ARGS,
                )
            setattr(cfg, key, value)
        elif key == "seed":
            admm_kwargs["seed"] = value
        else:
            raise CliError(f"{source}: unknown configuration key {key!r}",
                           EXIT_INVALID_ARGS)
    if admm_kwargs:
        try:
            cfg.admm = dataclasses.replace(cfg.admm, **admm_kwargs)
        except ValueError as exc:
            raise CliError(f"{source}: {exc}", EXIT_INVALID_ARGS) from exc
    if int_kwargs:
        try:
            cfg.intp = dataclasses.replace(cfg.intp, **int_kwargs)
        except ValueError as exc:
            raise CliError(f"{source}: {exc}", EXIT_INVALID_ARGS) from exc
    return cfg


def load_config_file(path):
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise CliError(f"cannot read config file: {exc}", EXIT_INVALID_ARGS) from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"malformed config file: {exc}", EXIT_INVALID_ARGS) from exc
    if not isinstance(data, dict):
        raise CliError("config file must hold a flat JSON object",
                       EXIT_INVALID_ARGS)
    return data


def _load_instance(cfg):
    path = Path(cfg.instance)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read instance: {exc}", EXIT_PARSE_ERROR) from exc
    try:
        return parse_dimacs(data, name=path.stem)
    except DimacsError as exc:
        raise CliError(f"cannot parse instance: {exc}", EXIT_PARSE_ERROR) from exc


def _require_k(cfg, g):
    if cfg.k is None:
        raise CliError("this mode requires --k", EXIT_INVALID_ARGS)
    if not 1 <= cfg.k <= max(1, g.n - 1):
        raise CliError(
            f"k must lie in [1, {g.n - 1}] for this instance; got {cfg.k}",
            EXIT_INVALID_ARGS,
        )


def _base_report(cfg, g, mode):
    return {
        "schema": SCHEMA_VERSION,
        "mode": mode,
        "instance": str(cfg.instance),
        "graph": g.name or Path(str(cfg.instance)).stem,
        "n": g.n,
        "density": round(g.density, 6),
        "k": cfg.k,
        "seed": cfg.seed,
    }


def _clock(cfg, seconds):
    return 0.0 if cfg.stable_timing else round(seconds, 3)


def run_bound(cfg, g=None):
    """Greedy lower bound followed by the cutting-plane bound solver.

    Returns ``(report, solver_result)``; the report is the stable
    machine-readable summary, the result carries the iterate and traces.
    """
    if g is None:
        g = _load_instance(cfg)
    _require_k(cfg, g)
    params = cfg.admm_params()
    t0 = time.monotonic()
    lb_hint, _ = greedy_lower_bound(g, cfg.k, params.seed)
    res = cp_admm(g, cfg.k, params, lb_hint=lb_hint)
    report = _base_report(cfg, g, "bound")
    report.update(
        {
            "lb_hint": lb_hint,
            "ub": res.ub,
            "outer_iters": res.outer_iterations,
            "inner_iters": res.inner_iterations,
            "tightened_iters": res.tightened_iterations,
            "cuts": {"total": len(res.cuts), **dict(sorted(res.family_counts.items()))},
            "termination": res.termination,
            "enumeration_complete": res.enumeration_complete,
            "time_ub": _clock(cfg, time.monotonic() - t0),
        }
    )
    return report, res


def run_solve(cfg):
    """Bound phase, then the integer solver warm-started from its iterate
    with the bound as the optimality target."""
    g = _load_instance(cfg)
    t_start = time.monotonic()
    report, bound_res = run_bound(cfg, g)
    remaining = None
    if cfg.time_limit is not None:
        remaining = max(0.0, cfg.time_limit - (time.monotonic() - t_start))
    t0 = time.monotonic()
    int_res = int_admm(
        g,
        cfg.k,
        cfg.int_params(),
        warm=bound_res.matrix,
        known_ub=bound_res.ub,
        max_iterations=cfg.int_max_iterations,
        time_limit=remaining,
    )
    report["mode"] = "solve"
    report.update(
        {
            "lb": int_res.value,
            "feasible_found": int_res.feasible_found,
            "coloring": {str(v): c for v, c in sorted(int_res.coloring.assignment.items())},
            "gap": report["ub"] - int_res.value,
            "optimal": math.floor(report["ub"] + 1e-9) == int_res.value,
            "int_iters": int_res.iterations,
            "int_termination": int_res.termination,
            "time_lb": _clock(cfg, time.monotonic() - t0),
        }
    )
    return report, bound_res, int_res


def chromatic_search(g, cfg=None):
    """Lower bound on the chromatic number from bound runs over a jumping
    sequence of k values.

    Starting from k = 1, each round solves the bound problem with relaxed
    stopping rules (no minimum-improvement criterion, a single violated
    inequality suffices to continue, early abort once any valid bound
    drops below n, with bound probes every 100 sweeps of the first outer
    iteration).  While the bound stays below n, k jumps to
    ``ceil(k*n / floor(bound))``, which always advances by at least one;
    the first k whose bound reaches n is returned and is a valid lower
    bound on the chromatic number.

    Returns ``(k, steps)`` where steps records every solved k.
    """
    if cfg is None:
        cfg = RunConfig()
    deadline = (
        None if cfg.time_limit is None else time.monotonic() + cfg.time_limit
    )
    steps = []
    k = 1
    while True:
        if k >= g.n:
            # at k = n the relaxation value is exactly n, no solve needed
            k = g.n
            steps.append({"k": k, "ub": float(g.n), "skipped": True})
            break
        budget = cfg.per_k_time_limit
        if deadline is not None:
            budget = min(budget, max(0.0, deadline - time.monotonic()))
        params = dataclasses.replace(
            cfg.admm_params(),
            min_ineq=1.0,
            min_impr=-math.inf,
            time_limit_global=budget,
        )
        res = cp_admm(
            g, k, params, ub_stop_below=float(g.n), first_outer_ub_interval=100
        )
        steps.append(
            {
                "k": k,
                "ub": res.ub,
                "outer_iters": res.outer_iterations,
                "inner_iters": res.inner_iterations,
                "termination": res.termination,
            }
        )
        if res.ub < g.n - 1e-9:
            floor_ub = max(1, math.floor(res.ub + 1e-9))
            k_next = -(-k * g.n // floor_ub)  # ceil division
            k = max(k_next, k + 1)
        else:
            break
        if deadline is not None and time.monotonic() > deadline:
            break
    return k, steps


def chromatic_lower_bound(cfg):
    """File-based wrapper around :func:`chromatic_search` producing the
    machine-readable report."""
    g = _load_instance(cfg)
    report = _base_report(cfg, g, "chromatic")
    t0 = time.monotonic()
    k, steps = chromatic_search(g, cfg)
    report.update(
        {
            "k": None,
            "chi_lower_bound": k,
            "steps": steps,
            "time_total": _clock(cfg, time.monotonic() - t0),
        }
    )
    return k, report


def run_oracle(cfg):
    """Exact reference values: alpha_k when --k is given, else the
    chromatic number.  Guarded by instance size unless expensive runs
    are enabled."""
    g = _load_instance(cfg)
    guard = 64 if cfg.expensive_tests else 15
    report = _base_report(cfg, g, "oracle")
    t0 = time.monotonic()
    try:
        if cfg.k is not None:
            if not 1 <= cfg.k <= g.n:
                raise CliError(f"k must lie in [1, {g.n}]", EXIT_INVALID_ARGS)
            lb_hint, _ = greedy_lower_bound(g, cfg.k, cfg.seed)
            report["alpha_k"] = alpha_k_exact(
                g, cfg.k, max_vertices=guard, initial_lb=lb_hint
            )
        else:
            report["chi"] = chi_exact(g, max_vertices=guard)
    except OracleSizeError as exc:
        raise CliError(str(exc), EXIT_INVALID_ARGS) from exc
    report["time_total"] = _clock(cfg, time.monotonic() - t0)
    return report


REPORT_COLUMNS = (
    "graph", "n", "density", "k", "ub", "lb", "time_ub", "time_lb",
    "inner_iters", "outer_iters", "cuts",
)


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def report_rows(reports):
    rows = []
    for rep in reports:
        cuts = rep.get("cuts")
        rows.append(
            {
                "graph": rep.get("graph"),
                "n": rep.get("n"),
                "density": rep.get("density"),
                "k": rep.get("k"),
                "ub": rep.get("ub"),
                "lb": rep.get("lb", rep.get("lb_hint")),
                "time_ub": rep.get("time_ub"),
                "time_lb": rep.get("time_lb"),
                "inner_iters": rep.get("inner_iters"),
                "outer_iters": rep.get("outer_iters"),
                "cuts": cuts.get("total") if isinstance(cuts, dict) else cuts,
            }
        )
    return rows


def run_report(reports):
    """Aggregate per-run reports into byte-stable CSV and JSON tables.

    Returns ``(csv_text, json_text)`` with one row per report in input
    order; fields missing from a report become empty cells / nulls.
    """
    rows = report_rows(reports)
    lines = [",".join(REPORT_COLUMNS)]
    for row in rows:
        lines.append(",".join(_cell(row[col]) for col in REPORT_COLUMNS))
    csv_text = "\n".join(lines) + "\n"
    json_text = json.dumps(rows, indent=2, sort_keys=True) + "\n"
    return csv_text, json_text


class _ArgumentParser(argparse.ArgumentParser):
    # usage errors exit with the invalid-arguments code, not argparse's 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID_ARGS, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _ArgumentParser(
        prog="mkcs",
        description=(
            "Bounds and feasible solutions for the maximum k-colorable "
            "subgraph problem on DIMACS instances."
        ),
    )
    parser.add_argument("mode", choices=("bound", "solve", "chromatic", "oracle"))
    parser.add_argument("instance", help="path to a DIMACS edge-format file")
    parser.add_argument("--k", default=None,
                        help="number of colors, or a comma-separated list")
    parser.add_argument("--config", default=None, help="flat JSON config file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None, help="write the JSON report here")
    parser.add_argument("--time-limit", type=float, default=None,
                        help="overall wall-clock budget in seconds")
    parser.add_argument("--lp-backend", choices=("none", "external"), default=None)
    parser.add_argument("--families", default=None,
                        help="comma-separated cut families to separate")
    parser.add_argument("--expensive-tests", action=argparse.BooleanOptionalAction,
                        default=None, help="lift the oracle size guard")
    parser.add_argument("--stable-timing", action=argparse.BooleanOptionalAction,
                        default=None,
                        help="write zeros for wall times so outputs are reproducible")
    parser.add_argument("--per-k-time-limit", type=float, default=None,
                        help="chromatic mode: budget per k value")
    parser.add_argument("--int-max-iterations", type=int, default=None)
    solver = parser.add_argument_group("solver parameters")
    solver.add_argument("--beta", type=float, default=None)
    solver.add_argument("--gamma", type=float, default=None)
    solver.add_argument("--eps-admm", type=float, default=None)
    solver.add_argument("--eps-admm-final", type=float, default=None)
    solver.add_argument("--max-inner-iter", type=int, default=None)
    solver.add_argument("--max-inner-iter-final", type=int, default=None)
    solver.add_argument("--min-viol", type=float, default=None)
    solver.add_argument("--min-ineq", type=float, default=None)
    solver.add_argument("--min-ineq-phase1", type=float, default=None)
    solver.add_argument("--max-ineq", type=int, default=None)
    solver.add_argument("--max-cuts-per-var", type=int, default=None)
    solver.add_argument("--min-impr", type=float, default=None)
    solver.add_argument("--min-impr-phase1", type=float, default=None)
    solver.add_argument("--time-limit-global", type=float, default=None)
    solver.add_argument("--time-limit-cliques", type=float, default=None)
    solver.add_argument("--time-limit-holes", type=float, default=None)
    solver.add_argument("--max-cliques", type=int, default=None)
    solver.add_argument("--max-clique-pairs", type=int, default=None)
    solver.add_argument("--max-holes", type=int, default=None)
    solver.add_argument("--eps-dyk", type=float, default=None)
    solver.add_argument("--dyk-max-cycles", type=int, default=None)
    integer = parser.add_argument_group("integer solver parameters")
    integer.add_argument("--beta0", type=float, default=None)
    integer.add_argument("--beta-incr", type=float, default=None)
    integer.add_argument("--beta-decr", type=float, default=None)
    integer.add_argument("--beta-min", type=float, default=None)
    integer.add_argument("--eps-int", type=float, default=None)
    integer.add_argument("--max-tries-without-impr", type=int, default=None)
    integer.add_argument("--max-iterations", type=int, default=None,
                         dest="max_iterations")
    return parser


def _parse_k_values(raw):
    """Normalize the k setting: None, an int, or a comma-separated list."""
    if raw is None:
        return None
    if isinstance(raw, int):
        return [raw]
    if isinstance(raw, (list, tuple)):
        items = list(raw)
    else:
        items = str(raw).split(",")
    try:
        values = [int(item) for item in items]
    except (TypeError, ValueError):
        raise CliError(f"malformed k value {raw!r}", EXIT_INVALID_ARGS) from None
    if not values:
        raise CliError("empty k list", EXIT_INVALID_ARGS)
    return values


def resolve_config(args):
    """Defaults, then config-file entries, then explicit CLI flags."""
    cfg = RunConfig(instance=args.instance, k=args.k, mode=args.mode,
                    out=args.out)
    if args.config:
        _apply_overrides(cfg, load_config_file(args.config), args.config)
    flag_overrides = {
        key: value
        for key, value in vars(args).items()
        if key not in ("mode", "instance", "config", "k", "out")
    }
    _apply_overrides(cfg, flag_overrides, "command line")
    if args.k is not None:
        cfg.k = args.k
    if args.out is not None:
        cfg.out = args.out
    return cfg


def _write_side_files(cfg, out, suffix, bound_res, int_res):
    timing = not cfg.stable_timing
    if bound_res is not None:
        trace = out.parent / (out.stem + suffix + ".trace.jsonl")
        trace.write_text(records_to_jsonl(bound_res.records, timing=timing))
        cuts = out.parent / (out.stem + suffix + ".cuts.jsonl")
        cuts.write_text(cuts_to_jsonl(bound_res.cuts))
    if int_res is not None:
        trace = out.parent / (out.stem + suffix + ".int_trace.jsonl")
        trace.write_text(int_trace_to_jsonl(int_res.records))


def _write_outputs(cfg, report, bound_res=None, int_res=None):
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if cfg.out:
        out = Path(cfg.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        _write_side_files(cfg, out, "", bound_res, int_res)
    else:
        sys.stdout.write(text)


def _run_single(cfg):
    """Dispatch one (instance, k) run; returns (report, bound_res, int_res)."""
    if cfg.mode == "bound":
        report, bound_res = run_bound(cfg)
        return report, bound_res, None
    if cfg.mode == "solve":
        report, bound_res, int_res = run_solve(cfg)
        return report, bound_res, int_res
    return run_oracle(cfg), None, None


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if cfg.mode == "chromatic":
            _, report = chromatic_lower_bound(cfg)
            _write_outputs(cfg, report)
            return EXIT_OK
        ks = _parse_k_values(cfg.k)
        if ks is None or len(ks) == 1:
            cfg.k = ks[0] if ks else None
            report, bound_res, int_res = _run_single(cfg)
            _write_outputs(cfg, report, bound_res, int_res)
            return EXIT_OK
        # a k-list produces one report per k plus an aggregate table
        runs = []
        side = []
        for k in ks:
            cfg.k = k
            report, bound_res, int_res = _run_single(cfg)
            runs.append(report)
            side.append((k, bound_res, int_res))
        wrapper = {
            "schema": SCHEMA_VERSION,
            "mode": cfg.mode,
            "instance": str(cfg.instance),
            "runs": runs,
        }
        text = json.dumps(wrapper, indent=2, sort_keys=True) + "\n"
        if cfg.out:
            out = Path(cfg.out)
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(text)
            csv_text, _ = run_report(runs)
            (out.parent / (out.stem + ".csv")).write_text(csv_text)
            for k, bound_res, int_res in side:
                _write_side_files(cfg, out, f".k{k}", bound_res, int_res)
        else:
            sys.stdout.write(text)
    except CliError as exc:
        print(f"mkcs: error: {exc}", file=sys.stderr)
        return exc.code
    except DimacsError as exc:
        print(f"mkcs: error: {exc}", file=sys.stderr)
        return EXIT_PARSE_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
