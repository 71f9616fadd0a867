"""Command line entry point.

Subcommands:
  run           execute a preset or a config file and write CSV outputs
  list-presets  show the experiment catalog
  check         run the fast invariant suite

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
The default output directory is ./swarmlab_out (override with --out or the
SWARM_LAB_OUT environment variable).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import replace

import numpy as np

from . import lab
from .lab import ConfigError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swarmlab")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment preset or config file")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", help="preset name (see list-presets)")
    src.add_argument("--config", help="path to a flat key=value config file")
    run.add_argument("--seed", type=int, help="override the master seed")
    run.add_argument("--runs", type=int, help="override the number of runs per sweep point")
    run.add_argument("--out", help="output directory")
    run.add_argument("--workers", type=int, default=1, help="thread pool size for runs")

    sub.add_parser("list-presets", help="list the experiment catalog")
    sub.add_parser("check", help="run the fast invariant suite")
    return parser


def _cmd_run(args) -> int:
    try:
        if args.preset:
            cfg = lab.preset(args.preset)
        else:
            if not os.path.exists(args.config):
                print(f"config file not found: {args.config}", file=sys.stderr)
                return 1
            with open(args.config) as f:
                cfg = lab.parse_config(f.read())
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.runs is not None:
            cfg = replace(cfg, runs=args.runs)
        cfg.validate()
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 1

    out_dir = args.out or os.environ.get("SWARM_LAB_OUT") or "swarmlab_out"
    out_dir = os.path.join(out_dir, cfg.preset)
    try:
        result = lab.run_experiment(cfg, workers=max(1, args.workers))
        written = lab.write_outputs(result, out_dir)
    except OSError as exc:
        print(f"i/o failure under {out_dir}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # surfaced with context, nonzero exit
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2
    for row in result.aggregate_rows():
        tail = "" if row["mean_consensus_time"] is None else f", mean t_cons {row['mean_consensus_time']:.2f}"
        print(
            f"{cfg.preset} [{row['sweep_value']}]: mean clusters "
            f"{row['mean_clusters']:.2f} +- {row['std_clusters']:.2f}, "
            f"consensus {row['consensus_fraction']:.3f}{tail}"
        )
    print("wrote: " + ", ".join(written))
    return 0


def _cmd_list() -> int:
    for name, cfg in sorted(lab.preset_catalog().items()):
        print(f"{name:22s} {cfg.description}")
    return 0


def _cmd_check() -> int:
    """Fast invariant suite: core identities and one short run per family."""
    from . import _fast
    from .core import Ensemble, velocity_variance
    from .meanfield import OpinionPopulation, boltzmann_mc_step
    from .network import Topological, metric_neighbors, topological_neighbors
    from .potential import PowerLaw, tail_integral

    failures = 0

    def check(name: str, ok: bool, detail: str = ""):
        nonlocal failures
        print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail and not ok else ""))
        if not ok:
            failures += 1

    rng = np.random.default_rng(1)

    v = rng.normal(size=(12, 3))
    e = Ensemble(positions=rng.normal(size=(12, 3)), velocities=v)
    pair = sum(
        np.sum((v[i] - v[j]) ** 2) for i in range(12) for j in range(12)
    ) / (2 * 144)
    direct = velocity_variance(e)
    check("velocity variance double evaluation", abs(pair - direct) <= 1e-12 * max(pair, 1.0))

    e1 = Ensemble(positions=np.array([[0.0], [1.0], [3.0]]))
    sets = topological_neighbors(e1, 2)
    check(
        "rank-based neighbor asymmetry",
        list(sets[2]) == [1, 2] and list(sets[1]) == [0, 1],
    )
    msets = metric_neighbors(Ensemble(positions=rng.normal(size=(8, 2))), 1.0)
    sym = all((i in msets[j]) == (j in msets[i]) for i in range(8) for j in range(8))
    check("metric neighbor symmetry", sym)

    closed = tail_integral(PowerLaw(beta=1.0), 0.7, 2.0)
    expected = 0.5 * (math.pi / 2 - math.atan(1.4))
    check("tail integral closed form", abs(closed - expected) <= 1e-12)

    x0 = rng.uniform(0, 1, (10, 2))
    v0 = rng.normal(0, 1, (10, 2))
    _, xs, vs = _fast.cs_rk4_sample(x0, v0, 1.0, 1.0, 1e-3, 2000, 100)
    vbar = vs.mean(axis=1)
    bigv = ((vs - vs.mean(axis=1, keepdims=True)) ** 2).sum(axis=(1, 2)) / 10
    check("alignment conserves mean velocity", np.max(np.abs(vbar - vbar[0])) <= 1e-10)
    check("velocity variance nonincreasing", bool(np.all(np.diff(bigv) <= 1e-12)))

    pop = OpinionPopulation(samples=rng.uniform(-1, 1, 500), target=0.3, kappa=1.0, eta=0.05)
    stepped, _ = boltzmann_mc_step(pop, lambda x, y: 1.0, rng)
    predicted = pop.mean + pop.beta * (pop.target - pop.mean)
    check("pair exchange mean recursion", abs(stepped.mean - predicted) <= 1e-12)

    check("compiled vs generic drift", _compare_hk(rng))

    print("all checks passed" if failures == 0 else f"{failures} check(s) failed")
    return 0 if failures == 0 else 2


def _compare_hk(rng) -> bool:
    from . import _fast
    from .dynamics import HKModel
    from .network import Topological

    x0 = rng.uniform(0, 1, 30)
    out = _fast.hk_run(x0, "topological", 4, dt=0.05, t_end=0.05, exit_tol=0.0, consensus_eps=0)
    model = HKModel(variant=Topological(k=4))
    ref = x0 + 0.05 * model.deriv(x0[:, None])[0][:, 0]
    return bool(np.max(np.abs(out["opinions"] - ref)) < 1e-13)


def cli_main(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "list-presets":
        return _cmd_list()
    if args.command == "check":
        return _cmd_check()
    return 1


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
