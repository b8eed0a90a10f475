"""Command-line interface: simulate, meanfield, threshold, optimize, scenario."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, gillespie, meanfield, qmatrix, threshold
from .harness import (
    SCENARIO_NAMES,
    build_network,
    derive_seed,
    load_scenario,
    run_scenario,
    write_csv,
)
from .params import (
    ActivityRates,
    activity_from_mapping,
    epidemic_from_mapping,
    homogeneous_from_mapping,
    load_config,
)
from .sgp import SgpConfig, allocate_by_centrality, sgp_optimize


def _homogeneous(cfg):
    return homogeneous_from_mapping(cfg)


def cmd_threshold(args) -> int:
    cfg = load_config(args.config)
    hp = _homogeneous(cfg)
    if args.sweep is None:
        report = threshold.classify_stability(hp)
        print(json.dumps(report.to_dict(), indent=2))
        return 0
    lo, hi, count = args.sweep_range
    grid = np.linspace(float(lo), float(hi), int(count))
    rows = []
    for value in grid:
        if args.sweep == "gamma1":
            hp_v = hp.with_gamma1(float(value))
        else:  # s2
            if not 0.0 <= value < 1.0:
                raise ValueError("s2 sweep values must lie in [0, 1)")
            hp_v = hp.with_gamma1(hp.gamma2 * value / (1.0 - value))
        rep = threshold.classify_stability(hp_v)
        rows.append((value, rep.r0, rep.case))
    out = Path(args.out or "threshold_sweep.csv")
    write_csv(out, [args.sweep, "r0", "case"], rows)
    print(str(out))
    return 0


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    net, _ = build_network(cfg["network"], args.seed, "simulate")
    epi = epidemic_from_mapping(cfg["epidemic"])
    rates = activity_from_mapping(cfg["activity"], net.n)
    sim_cfg = cfg.get("simulate", {})
    runs = args.runs or int(sim_cfg.get("runs", 100))
    seeds = gillespie.SeedSpec(
        count=int(sim_cfg.get("seeds", 1)), state=sim_cfg.get("seed_state", "C"))
    horizon = sim_cfg.get("horizon")
    grid = np.linspace(0.0, float(sim_cfg.get("grid_max", 60.0)),
                       int(sim_cfg.get("grid_points", 121)))
    ens = gillespie.run_ensemble(net, epi, rates, seeds, runs=runs,
                                 master_seed=args.seed, horizon=horizon, grid=grid)
    out_dir = Path(args.out_dir)
    rows = [(t, *counts) for t, counts in zip(ens.times, ens.mean_counts)]
    csv_path = write_csv(out_dir / "simulate_timeseries.csv",
                         ["t", "mean_S", "mean_C", "mean_I", "mean_R"], rows)
    summary = ens.summary()
    json_path = out_dir / "simulate_summary.json"
    json_path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    print(json.dumps({"csv": str(csv_path), "summary": str(json_path), **summary}))
    return 0


def cmd_meanfield(args) -> int:
    cfg = load_config(args.config)
    mf_cfg = cfg.get("meanfield", {})
    seed_fraction = args.seed_fraction if args.seed_fraction is not None \
        else float(mf_cfg.get("seed_fraction", 0.01))
    horizon = float(mf_cfg.get("horizon", 1e4))
    grid = np.linspace(0.0, float(mf_cfg.get("grid_max", 100.0)),
                       int(mf_cfg.get("grid_points", 201)))
    out_dir = Path(args.out_dir)
    if cfg["network"].get("kind", "random_regular") == "random_regular" \
            and not args.heterogeneous:
        hp = _homogeneous(cfg)
        res = meanfield.integrate_homogeneous(
            meanfield.homogeneous_seeded(hp, seed_fraction), hp, horizon=horizon, grid=grid)
        header = ["t", "S1", "S2", "C1", "C2", "I1", "I2", "R1", "R2"]
        rows = [(t, *y) for t, y in zip(res.times, res.states)]
    else:
        net, _ = build_network(cfg["network"], args.seed, "meanfield")
        epi = epidemic_from_mapping(cfg["epidemic"])
        rates = activity_from_mapping(cfg["activity"], net.n)
        res = meanfield.integrate(meanfield.seeded_state(rates, seed_fraction),
                                  net, epi, rates, horizon=horizon, grid=grid)
        header = ["t", "S1", "S2", "C1", "C2", "I1", "I2", "R1", "R2"]
        rows = [(t, *y.reshape(8, net.n).mean(axis=1)) for t, y in zip(res.times, res.states)]
    csv_path = write_csv(out_dir / "meanfield_trajectory.csv", header, rows)
    summary = {"prevalence": res.prevalence, "converged": res.converged,
               "steady_time": res.steady_time}
    print(json.dumps({"csv": str(csv_path), **summary}))
    return 0


def cmd_optimize(args) -> int:
    cfg = load_config(args.config)
    net, _ = build_network(cfg["network"], args.seed, "optimize")
    epi = epidemic_from_mapping(cfg["epidemic"])
    opt = cfg.get("optimize", {})
    act = dict(cfg["activity"])
    act.setdefault("gamma1", act["gamma2"])
    rates = activity_from_mapping(act, net.n)
    lo = float(opt.get("lower", 0.08))
    hi = float(opt.get("upper", 0.3))
    policies = [p.strip() for p in args.policy.split(",")]
    out_dir = Path(args.out_dir)

    def lam_for(gamma):
        asm = qmatrix.build_q(net, epi, rates.with_gamma1(gamma),
                              gamma1_upper=np.full(net.n, hi))
        return qmatrix.lambda1(asm, net=net)

    if args.budget_sweep:
        lo_b, hi_b, count = args.budget_sweep
        budgets = np.linspace(float(lo_b), float(hi_b), int(count))
        rows = []
        for budget in budgets:
            scfg = SgpConfig(budget=float(budget), lower=np.full(net.n, lo),
                             upper=np.full(net.n, hi))
            lams = {}
            for policy in ("sgp", "degree", "closeness"):
                if policy not in policies:
                    lams[policy] = float("nan")
                elif policy == "sgp":
                    lams[policy] = sgp_optimize(net, epi, rates, scfg).lam
                else:
                    lams[policy] = lam_for(allocate_by_centrality(net, rates, scfg, policy))
            rows.append((budget, lams["sgp"], lams["degree"], lams["closeness"]))
        csv_path = write_csv(out_dir / "optimize_budget_sweep.csv",
                             ["budget", "lambda_sgp", "lambda_degree", "lambda_closeness"],
                             rows)
        print(str(csv_path))
        return 0

    budget = args.budget if args.budget is not None else float(opt["budget"])
    scfg = SgpConfig(budget=float(budget), lower=np.full(net.n, lo), upper=np.full(net.n, hi))
    results = {}
    for policy in policies:
        if policy == "sgp":
            res = sgp_optimize(net, epi, rates, scfg)
            results[policy] = {"rates": res.gamma1.tolist(), "lambda": res.lam,
                               "iterations": res.iterations, "converged": res.converged,
                               "trace": list(map(float, res.trace))}
        else:
            gamma = allocate_by_centrality(net, rates, scfg, policy)
            results[policy] = {"rates": gamma.tolist(), "lambda": lam_for(gamma)}
    payload = {"budget": float(budget), "bounds": [lo, hi], "seed": args.seed, **results}
    out_path = out_dir / "optimize_result.json"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print(json.dumps({k: v.get("lambda") for k, v in results.items()} | {"out": str(out_path)}))
    return 0


def cmd_scenario(args) -> int:
    overrides = load_config(args.config) if args.config else None
    scenario = load_scenario(args.name, overrides=overrides, paper_scale=args.paper_scale)
    outputs = run_scenario(scenario, args.out_dir, master_seed=args.seed,
                           plot=not args.no_plot)
    print(json.dumps({"scenario": scenario.name, "outputs": [str(o) for o in outputs]},
                     indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scir",
        description="SCIR epidemics on two-layer temporal networks: simulation, "
                    "thresholds, and budgeted activity-rate optimization.")
    parser.add_argument("--version", action="version", version=f"scir {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("threshold", help="stability report or threshold sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--sweep", choices=["gamma1", "s2"])
    p.add_argument("--sweep-range", nargs=3, metavar=("LO", "HI", "N"), type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("simulate", help="stochastic ensemble simulation")
    p.add_argument("--config", required=True)
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("meanfield", help="mean-field integration")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seed-fraction", type=float)
    p.add_argument("--heterogeneous", action="store_true",
                   help="integrate the per-node system even on regular layers")
    p.add_argument("--out-dir", default="out")
    p.set_defaults(func=cmd_meanfield)

    p = sub.add_parser("optimize", help="budgeted activity-rate optimization")
    p.add_argument("--config", required=True)
    p.add_argument("--budget", type=float)
    p.add_argument("--budget-sweep", nargs=3, metavar=("LO", "HI", "N"), type=float)
    p.add_argument("--policy", default="sgp,degree,closeness")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="out")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("scenario", help="run a built-in or custom scenario")
    p.add_argument("name", help=f"one of {', '.join(SCENARIO_NAMES)} or a YAML path")
    p.add_argument("--config", help="YAML file with overriding keys")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="out")
    p.add_argument("--paper-scale", action="store_true")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_scenario)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "sweep", None) is not None and args.sweep_range is None:
        parser.error("--sweep requires --sweep-range LO HI N")
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        error = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(error), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
