"""Command-line interface: simulate-forward, simulate-perfect, analyze, validate.

Exit codes: 0 on success, 1 when a validation suite fails, 2 on configuration
errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, io
from .config import load_config
from .errors import BudgetExhausted, ConfigError, KalisimError
from .forward import forward_simulate
from .perfect import PerfectRunStats, perfect_sample
from .sampling import RandomStream, RegionLedger
from .validation import SUITES, run_suite

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--seed", type=int, default=None, help="override rng.seed")
    p.add_argument("--out", default=None, help="override output.points path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kalisim",
        description="Point-process simulation via neighborhood decompositions of intensities",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fwd = sub.add_parser("simulate-forward", help="forward simulation from empty past")
    _add_common(p_fwd)
    p_fwd.add_argument("--t-max", type=float, default=None)
    p_fwd.add_argument("--n-max", type=int, default=None)

    p_perf = sub.add_parser("simulate-perfect", help="perfect simulation of one node")
    _add_common(p_perf)
    p_perf.add_argument("--t-max", type=float, default=None)
    p_perf.add_argument("--node", type=int, default=None)
    p_perf.add_argument("--runs", type=int, default=None)
    p_perf.add_argument("--dump-ledger", default=None, help="write the region ledger as JSON")

    p_an = sub.add_parser("analyze", help="branching-cost analysis report")
    p_an.add_argument("--config", required=True)
    p_an.add_argument("--nodes", type=int, default=None, help="size of the node sample")
    p_an.add_argument("--invariant", action="store_true", help="use the translation-invariant reduction")
    p_an.add_argument("--theta", default=None, help="comma-separated vector for the log-Laplace fixed point")
    p_an.add_argument("--p-grid", default=None, help="comma-separated weight exponents for the cost curve")
    p_an.add_argument("--out", default=None, help="write the JSON report here (default stdout)")

    p_val = sub.add_parser("validate", help="run a named statistical/property suite")
    p_val.add_argument("suite", help="suite name (see 'validate list')")
    p_val.add_argument("--seed", type=int, default=None)
    return parser


def _seed_of(args, cfg) -> int:
    return args.seed if args.seed is not None else cfg.seed


def _cmd_forward(args) -> int:
    cfg = load_config(args.config)
    model = cfg.build_model()
    t_max = args.t_max if args.t_max is not None else cfg.t_max
    n_max = args.n_max if args.n_max is not None else cfg.n_max
    nodes = cfg.nodes if cfg.nodes is not None else model.node_set()
    seed = _seed_of(args, cfg)
    out_path = args.out or cfg.points_path

    runs = cfg.runs
    summaries = []
    base = RandomStream(seed)
    for r in range(runs):
        run = forward_simulate(model, nodes, t_max, n_max, cfg.guard, base.child(r))
        path = _run_path(out_path, r, runs)
        n = io.emit_points(path, run.accepted)
        summaries.append(
            {
                "run": r,
                "seed_path": [seed, r],
                "points": n,
                "stop_reason": run.stop_reason,
                "tau": run.tau,
                "proposals": run.proposals,
                "rate": n / run.tau if run.tau > 0 else 0.0,
                "file": str(path),
            }
        )
        print(f"run {r}: {n} points, stop {run.stop_reason} at tau={run.tau:g} -> {path}")
    if cfg.summary_path:
        io.write_summary(cfg.summary_path, {"command": "simulate-forward", "runs": summaries})
    return EXIT_OK


def _run_path(base: str, r: int, runs: int) -> str:
    if runs == 1:
        return base
    p = Path(base)
    return str(p.with_name(f"{p.stem}_run{r:03d}{p.suffix or '.csv'}"))


def _cmd_perfect(args) -> int:
    cfg = load_config(args.config)
    model = cfg.build_model()
    t_max = args.t_max if args.t_max is not None else cfg.t_max
    node = args.node if args.node is not None else cfg.node
    runs = args.runs if args.runs is not None else cfg.runs
    seed = _seed_of(args, cfg)
    out_path = args.out or cfg.points_path

    summaries = []
    exhausted = 0
    base = RandomStream(seed)
    last_ledger = None
    for r in range(runs):
        stats = PerfectRunStats()
        ledger = RegionLedger()
        last_ledger = ledger
        try:
            sample = perfect_sample(
                model, node, t_max, base.child(r), budget=cfg.budget, ledger=ledger, stats=stats
            )
        except BudgetExhausted as exc:
            exhausted += 1
            print(f"run {r}: backward budget exhausted ({exc})", file=sys.stderr)
            summaries.append({"run": r, "seed_path": [seed, r], "budget_exhausted": True})
            continue
        path = _run_path(out_path, r, runs)
        n = io.emit_points(path, sample)
        entry = {
            "run": r,
            "seed_path": [seed, r],
            "points": n,
            "rate": n / t_max,
            "budget_exhausted": False,
            "file": str(path),
        }
        entry.update(stats.to_json())
        summaries.append(entry)
        print(f"run {r}: {n} accepted points on [0,{t_max:g}] -> {path}")
    if args.dump_ledger and last_ledger is not None:
        last_ledger.dump(args.dump_ledger)
        print(f"ledger of the last run -> {args.dump_ledger}")
    if cfg.summary_path:
        io.write_summary(
            cfg.summary_path,
            {
                "command": "simulate-perfect",
                "node": node,
                "t_max": t_max,
                "budget_exhausted_runs": exhausted,
                "runs": summaries,
            },
        )
    return EXIT_OK


def _cmd_analyze(args) -> int:
    cfg = load_config(args.config)
    model = cfg.build_model()
    report: dict = {"family": cfg.model_section.get("family")}

    if args.invariant or (model.node_set() is None and args.nodes is None):
        verdict = analysis.subcriticality_gamma(model, invariant=True)
        report["reduction"] = "translation-invariant scalar"
        report["gamma"] = verdict.gamma
        report["verdict"] = verdict.verdict
        if verdict.subcritical:
            report["expected_clan_size"] = 1.0 / (1.0 - verdict.gamma)
    else:
        if args.nodes is not None:
            if model.node_set() is None:
                half = args.nodes // 2
                nodes = list(range(-half, args.nodes - half))
            else:
                nodes = list(model.node_set())[: args.nodes]
        else:
            nodes = list(model.node_set())
        summary = analysis.branching_summary(model, nodes)
        report["reduction"] = "finite node sample"
        report["nodes"] = nodes
        report["M"] = summary.matrix.tolist()
        report["gamma"] = summary.gamma
        report["verdict"] = summary.verdict
        report["expected_clan_size"] = {str(k): v for k, v in summary.expected_w.items()}
        if summary.off_mass:
            report["off_sample_mass"] = {str(k): v for k, v in summary.off_mass.items()}
        if args.theta is not None:
            theta = [float(v) for v in args.theta.split(",")]
            off = analysis.OffspringModel.from_model(model, nodes)
            state = analysis.log_laplace_fixed_point(off, theta)
            report["log_laplace"] = {
                "theta": theta,
                "fixed_point": state.fixed_point.tolist(),
                "iterations": state.iterations,
                "residual": state.residual,
            }

    if args.p_grid is not None:
        sec = cfg.model_section
        if sec.get("family") != "lattice-4.2.6":
            raise ConfigError(["--p-grid needs the lattice-4.2.6 preset (gamma and delta)"])
        grid = [float(v) for v in args.p_grid.split(",")]
        curve = analysis.weight_cost_curve(float(sec["gamma"]), float(sec["delta"]), grid)
        report["cost_curve"] = {
            "c_gamma": curve.c_gamma,
            "argmin_p": curve.argmin_p,
            "points": [
                {
                    "p": pt.p,
                    "f": pt.f_value,
                    "offspring_mean": pt.offspring_mean,
                    "expected_clan_size": pt.expected_clan_size,
                    "subcritical": pt.subcritical,
                }
                for pt in curve.points
            ],
        }

    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"analysis report -> {args.out}")
    else:
        print(text)
    return EXIT_OK


def _cmd_validate(args) -> int:
    if args.suite == "list":
        for name in sorted(SUITES):
            print(name)
        return EXIT_OK
    try:
        report = run_suite(args.suite, seed=args.seed)
    except KeyError as exc:
        print(exc.args[0], file=sys.stderr)
        return EXIT_CONFIG
    print(report.render())
    return EXIT_OK if report.passed else EXIT_VALIDATION


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate-forward":
            return _cmd_forward(args)
        if args.command == "simulate-perfect":
            return _cmd_perfect(args)
        if args.command == "analyze":
            return _cmd_analyze(args)
        if args.command == "validate":
            return _cmd_validate(args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except KalisimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
