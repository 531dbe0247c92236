"""Command-line front end: `handsoff solve|scenario|compare|verify|bench`.

Problems are declared in a JSON config (matrices as row-major nested
arrays); every run writes a self-contained report plus CSV/SVG artifacts
into the output directory.  All randomness flows from explicit seeds, so
rerunning a config reproduces the report bit-for-bit (wall time aside).

Exit codes: 0 success, 1 config/input error, 2 infeasible problem,
3 solver failure, 4 verification found violations.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
import tempfile
import time

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from handsoff.analysis import (
    compare_report,
    scenario_solve,
    sparsity_report,
    verify_robust,
)
from handsoff.benchmarks import smd_problem
from handsoff.dynamics import ParameterBox, UncertainLTI, simulate_trajectory
from handsoff.inner import SolverError
from handsoff.outer import AnnealerConfig, sip_solve
from handsoff.problem import (
    ControlParams,
    PWCGrid,
    RobustProblem,
    TerminalSet,
    admissibility,
    l1_cost,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_SOLVER = 3
EXIT_VIOLATIONS = 4

DEFAULT_TRAJECTORY_ALPHAS = 100
TRAJECTORY_SUBSTEPS = 4


class ConfigError(ValueError):
    """Config parsing failure carrying the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def _get(cfg: dict, key: str, path: str, required: bool = True, default=None):
    if key not in cfg:
        if required:
            raise ConfigError(f"{path}.{key}", "missing required field")
        return default
    return cfg[key]


def parse_config(raw: dict) -> tuple[RobustProblem, AnnealerConfig, dict]:
    """Turn a raw config dict into a problem, annealer config, and extras."""
    if not isinstance(raw, dict):
        raise ConfigError("$", "config must be a JSON object")
    sys_cfg = _get(raw, "system", "$")
    try:
        system = UncertainLTI(
            a_nominal=_get(sys_cfg, "a_nominal", "$.system"),
            b_nominal=_get(sys_cfg, "b_nominal", "$.system"),
            a_terms=tuple(_get(sys_cfg, "a_terms", "$.system", required=False, default=[])),
            b_terms=tuple(_get(sys_cfg, "b_terms", "$.system", required=False, default=[])),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError("$.system", str(exc)) from exc
    box_cfg = _get(raw, "box", "$")
    try:
        box = ParameterBox(_get(box_cfg, "lower", "$.box"), _get(box_cfg, "upper", "$.box"))
    except (ValueError, TypeError) as exc:
        raise ConfigError("$.box", str(exc)) from exc
    try:
        grid = PWCGrid(_get(raw, "horizon", "$"), _get(raw, "segments", "$"))
    except (ValueError, TypeError) as exc:
        raise ConfigError("$.horizon/segments", str(exc)) from exc
    term_cfg = _get(raw, "terminal", "$")
    if not isinstance(term_cfg, list) or not term_cfg:
        raise ConfigError("$.terminal", "must be a non-empty list of {c, d} rows")
    try:
        terminal = TerminalSet(
            [_get(row, "c", f"$.terminal[{j}]") for j, row in enumerate(term_cfg)],
            [_get(row, "d", f"$.terminal[{j}]") for j, row in enumerate(term_cfg)],
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError("$.terminal", str(exc)) from exc
    try:
        problem = RobustProblem(system, box, grid, terminal, _get(raw, "x0", "$"))
    except (ValueError, TypeError) as exc:
        raise ConfigError("$", str(exc)) from exc
    ann_cfg = raw.get("annealer", {})
    try:
        annealer = AnnealerConfig(**ann_cfg)
    except (ValueError, TypeError) as exc:
        raise ConfigError("$.annealer", str(exc)) from exc
    extras = {
        "delta": raw.get("delta"),
        "verify_samples": raw.get("verify_samples", 10_000),
        "trajectory_samples": raw.get("trajectory_samples", DEFAULT_TRAJECTORY_ALPHAS),
    }
    return problem, annealer, extras


def serialize_config(problem: RobustProblem, annealer: AnnealerConfig, extras: dict) -> dict:
    """Inverse of parse_config on the semantic content."""
    return {
        "system": {
            "a_nominal": problem.system.a_nominal.tolist(),
            "b_nominal": problem.system.b_nominal.tolist(),
            "a_terms": [a.tolist() for a in problem.system.a_terms],
            "b_terms": [b.tolist() for b in problem.system.b_terms],
        },
        "box": {
            "lower": problem.box.lower.tolist(),
            "upper": problem.box.upper.tolist(),
        },
        "horizon": problem.grid.horizon,
        "segments": problem.grid.segments,
        "x0": problem.x0.tolist(),
        "terminal": [
            {"c": problem.terminal.normals[j].tolist(), "d": float(problem.terminal.offsets[j])}
            for j in range(problem.terminal.num_rows)
        ],
        "annealer": dataclasses.asdict(annealer),
        "delta": extras.get("delta"),
        "verify_samples": extras.get("verify_samples", 10_000),
        "trajectory_samples": extras.get("trajectory_samples", DEFAULT_TRAJECTORY_ALPHAS),
    }


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(path, f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(path, f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc


def config_hash(raw: dict) -> str:
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def atomic_write(path: str, data: str) -> None:
    """Whole-file atomic write: temp file in the target dir, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".handsoff-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _trace_summary(trace) -> dict:
    values = [v for _, v in trace]
    return {
        "iterations_logged": len(trace),
        "first_value": values[0] if values else None,
        "final_value": values[-1] if values else None,
        "improvement_iters": [int(i) for i, _ in trace],
    }


def write_report(path: str, report: dict) -> None:
    atomic_write(path, json.dumps(report, sort_keys=True, indent=2) + "\n")


def write_trajectories_csv(
    path: str, problem: RobustProblem, control: ControlParams, n_alphas: int, seed: int
) -> np.ndarray:
    """Dense trajectories for sampled parameters; returns the states tensor."""
    rng = np.random.default_rng(seed)
    alphas = problem.box.sample(rng, n_alphas)
    d = problem.system.dim_state
    lines = ["alpha_index,t," + ",".join(f"x{i + 1}" for i in range(d))]
    all_states = []
    for idx, alpha in enumerate(alphas):
        times, states = simulate_trajectory(
            problem.system, alpha, problem.x0, control, TRAJECTORY_SUBSTEPS
        )
        all_states.append(states)
        for t, x in zip(times, states):
            lines.append(f"{idx},{t!r}," + ",".join(repr(float(v)) for v in x))
    atomic_write(path, "\n".join(lines) + "\n")
    return np.array(all_states)


def write_control_svg(path: str, control: ControlParams) -> None:
    grid = control.grid
    fig, ax = plt.subplots(figsize=(7, 3))
    edges = grid.boundaries
    ax.stairs(control.theta, edges, fill=False, color="tab:red", linewidth=1.5)
    centers = 0.5 * (edges[:-1] + edges[1:])
    markerline, stemlines, _ = ax.stem(centers, control.theta, basefmt=" ")
    plt.setp(markerline, markersize=3, color="tab:red")
    plt.setp(stemlines, linewidth=0.6, color="tab:red", alpha=0.5)
    ax.axhline(0.0, color="k", linewidth=0.6)
    ax.set_xlabel("t")
    ax.set_ylabel("u(t)")
    ax.set_ylim(-1.1, 1.1)
    ax.set_title("piecewise-constant control")
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)


def write_states_svg(path: str, times: np.ndarray, states: np.ndarray) -> None:
    """State fan across sampled parameters; states has shape (n_alpha, n_t, d)."""
    d = states.shape[2]
    fig, ax = plt.subplots(figsize=(7, 3.5))
    colors = plt.cm.viridis(np.linspace(0, 1, d))
    for i in range(d):
        for traj in states:
            ax.plot(times, traj[:, i], color=colors[i], alpha=0.15, linewidth=0.6)
        ax.plot(times, states[0][:, i], color=colors[i], linewidth=1.2, label=f"x{i + 1}")
    ax.set_xlabel("t")
    ax.set_ylabel("state")
    ax.set_title("state trajectories over sampled parameters")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)


def _emit_solution_artifacts(
    outdir: str,
    problem: RobustProblem,
    control: ControlParams,
    extras: dict,
    seed: int,
) -> dict:
    os.makedirs(outdir, exist_ok=True)
    n_alphas = int(extras.get("trajectory_samples", DEFAULT_TRAJECTORY_ALPHAS))
    states = write_trajectories_csv(
        os.path.join(outdir, "trajectories.csv"), problem, control, n_alphas, seed
    )
    times, _ = simulate_trajectory(
        problem.system, problem.box.center, problem.x0, control, TRAJECTORY_SUBSTEPS
    )
    write_control_svg(os.path.join(outdir, "control.svg"), control)
    write_states_svg(os.path.join(outdir, "states.svg"), times, states)
    rep = verify_robust(
        problem, control, int(extras.get("verify_samples", 10_000)), seed, include_vertices=True
    )
    return {
        "samples": rep.samples,
        "violations": rep.violations,
        "worst_margin": rep.worst_margin,
        "tolerance": rep.tolerance,
    }


def _solution_report(
    raw: dict,
    method: str,
    problem: RobustProblem,
    control: ControlParams,
    value: float,
    status: str,
    trace,
    worst_tuple,
    verification: dict,
    wall_time: float,
) -> dict:
    spars = sparsity_report(control)
    return {
        "config_hash": config_hash(raw),
        "method": method,
        "status": status,
        "value_weighted": value,
        "value_unweighted": value / problem.grid.h,
        "theta": control.theta.tolist(),
        "sparsity": {
            "l1": spars.l1,
            "l0": spars.l0,
            "bang_off_bang_score": spars.bang_off_bang_score,
            "support_segments": list(spars.support_segments),
        },
        "verification": verification,
        "worst_tuple": None if worst_tuple is None else worst_tuple.as_array().tolist(),
        "trace": None if trace is None else _trace_summary(trace),
        "wall_time_s": wall_time,
    }


def _apply_overrides(raw: dict, args) -> dict:
    raw = json.loads(json.dumps(raw))  # deep copy before mutation
    if getattr(args, "seed", None) is not None:
        raw.setdefault("annealer", {})["seed"] = args.seed
    if getattr(args, "segments", None) is not None:
        raw["segments"] = args.segments
    if getattr(args, "delta", None) is not None:
        raw["delta"] = args.delta
    if getattr(args, "samples", None) is not None:
        raw["verify_samples"] = args.samples
    return raw


def cmd_solve(args) -> int:
    raw = _apply_overrides(load_config(args.config), args)
    problem, annealer, extras = parse_config(raw)
    t0 = time.perf_counter()
    try:
        result = sip_solve(problem, annealer, extras.get("delta"))
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if result.theta_star is None:
        print("problem is infeasible: some scenario tuple admits no control", file=sys.stderr)
        return EXIT_INFEASIBLE
    outdir = args.out
    verification = _emit_solution_artifacts(
        outdir, problem, result.theta_star, extras, annealer.seed
    )
    report = _solution_report(
        raw,
        "sip",
        problem,
        result.theta_star,
        result.value,
        result.status,
        result.trace,
        result.worst_tuple,
        verification,
        time.perf_counter() - t0,
    )
    report["delta"] = result.delta
    report["exactness_guaranteed"] = result.exactness_guaranteed
    write_report(os.path.join(outdir, "report.json"), report)
    print(f"value = {result.value:.6f} ({result.status}); artifacts in {outdir}")
    return EXIT_OK


def cmd_scenario(args) -> int:
    if args.count < 1:
        print("--count must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    raw = _apply_overrides(load_config(args.config), args)
    problem, annealer, extras = parse_config(raw)
    seed = args.seed if args.seed is not None else annealer.seed
    t0 = time.perf_counter()
    try:
        sol, tup = scenario_solve(problem, args.count, seed)
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if not sol.optimal:
        print("scenario program infeasible", file=sys.stderr)
        return EXIT_INFEASIBLE
    outdir = args.out
    verification = _emit_solution_artifacts(outdir, problem, sol.theta, extras, seed)
    report = _solution_report(
        raw,
        "scenario",
        problem,
        sol.theta,
        sol.value,
        sol.status,
        None,
        None,
        verification,
        time.perf_counter() - t0,
    )
    report["num_scenarios"] = args.count
    write_report(os.path.join(outdir, "report.json"), report)
    print(f"scenario value = {sol.value:.6f} ({args.count} scenarios); artifacts in {outdir}")
    return EXIT_OK


def cmd_compare(args) -> int:
    raw = _apply_overrides(load_config(args.config), args)
    problem, annealer, extras = parse_config(raw)
    try:
        counts = [int(c) for c in args.counts.split(",")] if args.counts else []
    except ValueError:
        print(f"--counts must be comma-separated integers, got {args.counts!r}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        table = compare_report(
            problem,
            annealer,
            counts,
            extras.get("delta"),
            verify_samples=int(extras.get("verify_samples", 10_000)),
            verify_seed=annealer.seed,
        )
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    os.makedirs(args.out, exist_ok=True)
    header = "method,value_weighted,value_unweighted,runtime_s,violations,status"
    lines = [header]
    for row in table.rows:
        viol = "" if row.violations is None else str(row.violations)
        lines.append(
            f"{row.method},{row.value_weighted!r},{row.value_unweighted!r},"
            f"{row.runtime_s:.3f},{viol},{row.status}"
        )
    atomic_write(os.path.join(args.out, "compare.csv"), "\n".join(lines) + "\n")
    widths = (14, 16, 18, 10, 11, 16)
    fmt = "".join(f"{{:<{w}}}" for w in widths)
    print(fmt.format("method", "value(h-weight)", "value(unweight)", "time[s]", "violations", "status"))
    for row in table.rows:
        print(
            fmt.format(
                row.method,
                f"{row.value_weighted:.4f}",
                f"{row.value_unweighted:.4f}",
                f"{row.runtime_s:.2f}",
                "-" if row.violations is None else row.violations,
                row.status,
            )
        )
    return EXIT_OK


def cmd_verify(args) -> int:
    raw = _apply_overrides(load_config(args.config), args)
    problem, annealer, extras = parse_config(raw)
    try:
        with open(args.theta_file) as fh:
            theta = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read theta file {args.theta_file}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        control = ControlParams(np.asarray(theta, dtype=float), problem.grid)
    except (ValueError, TypeError) as exc:
        print(f"invalid theta file: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    ok, violation = admissibility(control)
    if not ok:
        print(f"theta is inadmissible: max |theta_k| exceeds 1 by {violation:.3g}", file=sys.stderr)
        return EXIT_CONFIG
    samples = args.samples if args.samples is not None else int(extras.get("verify_samples", 10_000))
    seed = args.seed if args.seed is not None else annealer.seed
    rep = verify_robust(problem, control, samples, seed, include_vertices=True)
    os.makedirs(args.out, exist_ok=True)
    report = {
        "config_hash": config_hash(raw),
        "method": "verify",
        "samples": rep.samples,
        "violations": rep.violations,
        "worst_margin": rep.worst_margin,
        "tolerance": rep.tolerance,
        "violating_alphas": [a.tolist() for a in rep.violating_alphas],
        "l1_cost": l1_cost(control),
    }
    write_report(os.path.join(args.out, "report.json"), report)
    print(
        f"{rep.violations}/{rep.samples} violations, worst margin {rep.worst_margin:.3g}"
    )
    return EXIT_OK if rep.violations == 0 else EXIT_VIOLATIONS


def cmd_bench(args) -> int:
    if args.name != "smd":
        print(f"unknown benchmark {args.name!r}; available: smd", file=sys.stderr)
        return EXIT_CONFIG
    segments = args.segments if args.segments is not None else 50
    problem = smd_problem(segments)
    annealer = AnnealerConfig(seed=args.seed if args.seed is not None else 0)
    extras = {"delta": args.delta, "verify_samples": args.samples or 10_000}
    raw = serialize_config(problem, annealer, extras)
    os.makedirs(args.out, exist_ok=True)
    config_path = os.path.join(args.out, "config.json")
    atomic_write(config_path, json.dumps(raw, sort_keys=True, indent=2) + "\n")
    bench_args = argparse.Namespace(
        config=config_path,
        seed=None,
        segments=None,
        delta=None,
        samples=None,
        out=args.out,
    )
    return cmd_solve(bench_args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="handsoff",
        description="Robust maximum hands-off control of uncertain LTI systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("config", help="path to JSON problem config")
        p.add_argument("--seed", type=int, default=None, help="override annealer seed")
        p.add_argument("--segments", type=int, default=None, help="override segment count N")
        p.add_argument("--delta", type=int, default=None, help="override scenario tuple length")
        p.add_argument("--samples", type=int, default=None, help="override verification sample count")
        p.add_argument("--out", default="out", help="output directory")

    p = sub.add_parser("solve", help="solve the robust problem exactly")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("scenario", help="scenario-optimization baseline")
    common(p)
    p.add_argument("--count", type=int, required=True, help="number of sampled scenarios")
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("compare", help="SIP vs scenario comparison table")
    common(p)
    p.add_argument("--counts", default="", help="comma-separated scenario counts")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("verify", help="Monte Carlo robustness check of a control")
    common(p)
    p.add_argument("--theta-file", required=True, help="JSON array of control levels")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="run a built-in benchmark")
    p.add_argument("name", help="benchmark name (smd)")
    common(p, config=False)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
