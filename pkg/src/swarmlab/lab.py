"""Experiment harness: named presets, seeded Monte Carlo sweeps, CSV persistence.

Every experiment is a grid of sweep points, each repeated over independent
runs whose random streams derive from (master seed, sweep index, run index),
so results are reproducible bit for bit and independent of execution order.
The output files carry a ``# schema=1`` comment with the producing config
digest, and ``config.echo`` re-runs to identical aggregates.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _fast
from . import network as net
from .core import Ensemble, config_digest, detect_clusters

__all__ = [
    "ExperimentConfig",
    "RunSummary",
    "SweepPointResult",
    "ExperimentResult",
    "ConfigError",
    "preset_catalog",
    "preset",
    "run_experiment",
    "write_outputs",
    "parse_config",
]

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

AGGREGATE_COLUMNS = [
    "sweep_value", "runs", "mean_clusters", "std_clusters",
    "consensus_fraction", "mean_consensus_time",
]
RUNS_COLUMNS = [
    "sweep_value", "run_index", "n_clusters", "c1", "c2",
    "consensus_time", "final_time", "steps",
]
HISTOGRAM_COLUMNS = ["sweep_value", "cluster_size", "count"]


class ConfigError(ValueError):
    """Invalid experiment configuration; carries one message per bad field."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("; ".join(problems))


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved description of one opinion-dynamics experiment.

    The sweep variable picks what varies across points: the confidence radius,
    the neighbor count, the long-range bias exponent, or the presence of
    long-range links.  Long-range links, when enabled, are resampled per run
    from the initial positions and then held fixed for that run.
    """

    preset: str = "custom"
    model: str = "hk"
    network: str = "metric"  # metric | topological
    radius: float = 0.2
    k: int = 5
    long_range: str = "none"  # none | sampled
    exponent: float = 0.0
    n_agents: int = 100
    init: str = "uniform01"  # uniform01 | gaussian | explicit
    init_mean: float = 0.5
    init_sigma: float = 0.1
    init_values: tuple = ()
    runs: int = 100
    seed: int = 42
    t_end: float = 50.0
    dt: float = 0.05
    exit_tol: float = 1e-10
    consensus_eps: float = 1e-3
    cluster_eps: float = 1e-3
    sweep_variable: str = "none"  # none | radius | k | exponent | long_range
    sweep_values: tuple = ()
    record_timeseries: bool = False
    timeseries_stride: int = 10
    description: str = ""

    def validate(self) -> None:
        problems = []
        if self.model != "hk":
            problems.append(f"model.variant: only 'hk' is supported by the harness, got {self.model!r}")
        if self.network not in ("metric", "topological"):
            problems.append(f"network.variant: expected metric|topological, got {self.network!r}")
        if self.network == "metric" and self.radius <= 0:
            problems.append("network.metric.r: must be positive")
        if self.network == "topological" and self.k < 1:
            problems.append("network.topological.k: must be >= 1")
        if self.long_range not in ("none", "sampled"):
            problems.append(f"network.long_range.mode: expected none|sampled, got {self.long_range!r}")
        if self.exponent < 0:
            problems.append("network.long_range.exponent: must be nonnegative")
        if self.n_agents < 1:
            problems.append("agents.n: must be >= 1")
        if self.init not in ("uniform01", "gaussian", "explicit"):
            problems.append(f"init.kind: expected uniform01|gaussian|explicit, got {self.init!r}")
        if self.init == "gaussian" and self.init_sigma <= 0:
            problems.append("init.gaussian.sigma: must be positive")
        if self.init == "explicit" and len(self.init_values) != self.n_agents:
            problems.append(
                f"init.values: explicit start needs exactly agents.n={self.n_agents} values, "
                f"got {len(self.init_values)}"
            )
        if self.runs < 1:
            problems.append("runs: must be >= 1")
        if self.t_end <= 0 or self.dt <= 0 or self.dt > self.t_end:
            problems.append("sim.t_end/sim.dt: need 0 < dt <= t_end")
        if self.consensus_eps <= 0:
            problems.append("consensus.epsilon: must be positive")
        if self.cluster_eps <= 0:
            problems.append("cluster.epsilon: must be positive")
        valid_sweeps = ("none", "radius", "k", "exponent", "long_range")
        if self.sweep_variable not in valid_sweeps:
            problems.append(f"sweep.variable: expected one of {valid_sweeps}, got {self.sweep_variable!r}")
        if self.sweep_variable != "none" and not self.sweep_values:
            problems.append("sweep.values: sweep grid must be nonempty")
        if problems:
            raise ConfigError(problems)

    # -- flat text form ------------------------------------------------------

    def to_text(self) -> str:
        lines = [
            f"preset={self.preset}",
            f"model.variant={self.model}",
            f"network.variant={self.network}",
            f"network.metric.r={self.radius:.17g}",
            f"network.topological.k={self.k}",
            f"network.long_range.mode={self.long_range}",
            f"network.long_range.exponent={self.exponent:.17g}",
            f"agents.n={self.n_agents}",
            f"init.kind={self.init}",
            f"init.gaussian.mean={self.init_mean:.17g}",
            f"init.gaussian.sigma={self.init_sigma:.17g}",
            "init.values=" + ",".join(f"{v:.17g}" for v in self.init_values),
            f"runs={self.runs}",
            f"seed={self.seed}",
            f"sim.t_end={self.t_end:.17g}",
            f"sim.dt={self.dt:.17g}",
            f"sim.exit_tol={self.exit_tol:.17g}",
            f"consensus.epsilon={self.consensus_eps:.17g}",
            f"cluster.epsilon={self.cluster_eps:.17g}",
            f"sweep.variable={self.sweep_variable}",
            "sweep.values=" + ",".join(str(v) for v in self.sweep_values),
            f"record.timeseries={'true' if self.record_timeseries else 'false'}",
            f"timeseries.stride={self.timeseries_stride}",
        ]
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return config_digest(self.to_text())


_KEY_PARSERS = {
    "preset": ("preset", str),
    "model.variant": ("model", str),
    "network.variant": ("network", str),
    "network.metric.r": ("radius", float),
    "network.topological.k": ("k", int),
    "network.long_range.mode": ("long_range", str),
    "network.long_range.exponent": ("exponent", float),
    "agents.n": ("n_agents", int),
    "init.kind": ("init", str),
    "init.gaussian.mean": ("init_mean", float),
    "init.gaussian.sigma": ("init_sigma", float),
    "runs": ("runs", int),
    "seed": ("seed", int),
    "sim.t_end": ("t_end", float),
    "sim.dt": ("dt", float),
    "sim.exit_tol": ("exit_tol", float),
    "consensus.epsilon": ("consensus_eps", float),
    "cluster.epsilon": ("cluster_eps", float),
    "sweep.variable": ("sweep_variable", str),
    "record.timeseries": ("record_timeseries", lambda s: s.strip().lower() == "true"),
    "timeseries.stride": ("timeseries_stride", int),
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat dotted-key format (one key=value per line, # comments)."""
    fields: dict = {}
    problems = []
    sweep_values_raw = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected key=value, got {raw!r}")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "sweep.values":
            sweep_values_raw = value
            continue
        if key == "init.values":
            try:
                fields["init_values"] = (
                    tuple(float(v) for v in value.split(",")) if value else ()
                )
            except ValueError:
                problems.append(f"line {lineno}: cannot parse init.values={value!r}")
            continue
        if key not in _KEY_PARSERS:
            problems.append(f"line {lineno}: unknown key {key!r}")
            continue
        attr, conv = _KEY_PARSERS[key]
        try:
            fields[attr] = conv(value)
        except ValueError:
            problems.append(f"line {lineno}: cannot parse {key}={value!r}")
    if problems:
        raise ConfigError(problems)
    cfg = ExperimentConfig(**fields)
    if sweep_values_raw is not None and sweep_values_raw:
        try:
            if cfg.sweep_variable == "long_range":
                values = tuple(v.strip() for v in sweep_values_raw.split(","))
            elif cfg.sweep_variable == "k":
                values = tuple(int(v) for v in sweep_values_raw.split(","))
            else:
                values = tuple(float(v) for v in sweep_values_raw.split(","))
        except ValueError:
            raise ConfigError(
                [f"sweep.values: cannot parse {sweep_values_raw!r} for sweep over {cfg.sweep_variable}"]
            ) from None
        cfg = replace(cfg, sweep_values=values)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------


def _matched_k(r: float, n: int) -> int:
    """Neighbor count with the same expected initial connections as radius r.

    For x uniform on [0, 1], the expected number of agents within r of a
    given one is (n - 1)(2r - r^2); plus one for the agent itself.
    """
    return max(2, round(1 + (n - 1) * (2 * r - r * r)))


def preset_catalog() -> dict[str, ExperimentConfig]:
    """All named experiment presets (100 agents uniform on [0, 1])."""
    r_grid = (0.05, 0.1, 0.15, 0.2, 0.25, 0.3)
    catalog = {
        "fig4_metric": ExperimentConfig(
            preset="fig4_metric", network="metric", runs=100,
            sweep_variable="radius", sweep_values=r_grid,
            description="mean asymptotic cluster count vs confidence radius",
        ),
        "fig4_topological": ExperimentConfig(
            preset="fig4_topological", network="topological", runs=100,
            sweep_variable="k", sweep_values=(2, 5, 10, 20, 40),
            description="mean asymptotic cluster count vs neighbor count",
        ),
        "fig4_compare": ExperimentConfig(
            preset="fig4_compare", network="topological", runs=100,
            sweep_variable="k",
            sweep_values=tuple(_matched_k(r, 100) for r in r_grid),
            description="topological counterpart with the same expected initial connections as the radius grid",
        ),
        "fig5a": ExperimentConfig(
            preset="fig5a", network="metric", radius=0.1, runs=1000,
            description="asymptotic cluster-size distribution at radius 0.1",
        ),
        "fig5b": ExperimentConfig(
            preset="fig5b", network="metric", radius=0.2, runs=1000,
            description="asymptotic cluster-size distribution at radius 0.2",
        ),
        "fig6_twocluster": ExperimentConfig(
            preset="fig6_twocluster", network="metric", radius=0.2, runs=2000,
            description="joint distribution of the two biggest clusters at radius 0.2",
        ),
        "fig7_longrange": ExperimentConfig(
            preset="fig7_longrange", network="metric", radius=0.1, runs=200,
            t_end=200.0, sweep_variable="long_range",
            sweep_values=("none", "uniform"), record_timeseries=True,
            description="effect of one uniformly chosen distant link per agent",
        ),
        "fig8_consensus_time": ExperimentConfig(
            preset="fig8_consensus_time", network="metric", radius=0.1, runs=100,
            t_end=300.0, long_range="sampled", sweep_variable="exponent",
            sweep_values=(1.0, 0.5, 0.1),
            description="time to consensus vs distance bias of the distant link",
        ),
        "fig8_cluster_count": ExperimentConfig(
            preset="fig8_cluster_count", network="topological", k=5, runs=100,
            t_end=1000.0, long_range="sampled", sweep_variable="exponent",
            sweep_values=(1.0, 0.5, 0.1),
            description="final cluster count vs distance bias of the distant link",
        ),
    }
    return catalog


def preset(name: str) -> ExperimentConfig:
    catalog = preset_catalog()
    if name not in catalog:
        raise ConfigError(
            [f"unknown preset {name!r}; valid presets: {', '.join(sorted(catalog))}"]
        )
    return catalog[name]


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunSummary:
    sweep_value: object
    run_index: int
    n_clusters: int
    c1: int
    c2: int
    consensus_time: float | None
    final_time: float
    steps: int
    sizes: tuple[int, ...]


@dataclass(frozen=True)
class SweepPointResult:
    sweep_value: object
    summaries: tuple[RunSummary, ...]
    timeseries: dict | None  # run 0 sampled series when recorded

    def aggregate(self) -> dict:
        counts = np.array([s.n_clusters for s in self.summaries])
        cons = [s.consensus_time for s in self.summaries if s.consensus_time is not None]
        return {
            "sweep_value": self.sweep_value,
            "runs": len(self.summaries),
            "mean_clusters": float(counts.mean()),
            "std_clusters": float(counts.std()),
            "consensus_fraction": len(cons) / len(self.summaries),
            "mean_consensus_time": float(np.mean(cons)) if cons else None,
        }


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    points: tuple[SweepPointResult, ...]

    def aggregate_rows(self) -> list[dict]:
        return [p.aggregate() for p in self.points]


def _resolve_point(cfg: ExperimentConfig, value):
    """Network mode, rule parameter and link sampling for one sweep point."""
    mode = cfg.network
    param = cfg.radius if mode == "metric" else cfg.k
    sample_links = cfg.long_range == "sampled"
    exponent = cfg.exponent
    if cfg.sweep_variable == "radius":
        mode, param = "metric", float(value)
    elif cfg.sweep_variable == "k":
        mode, param = "topological", int(value)
    elif cfg.sweep_variable == "exponent":
        sample_links, exponent = True, float(value)
    elif cfg.sweep_variable == "long_range":
        sample_links = value != "none"
        exponent = 0.0 if value == "uniform" else exponent
    return mode, param, sample_links, exponent


def _single_run(cfg: ExperimentConfig, sweep_index: int, value, run_index: int) -> tuple[RunSummary, dict | None]:
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=cfg.seed, spawn_key=(sweep_index, run_index))
    )
    if cfg.init == "uniform01":
        x0 = rng.uniform(0.0, 1.0, cfg.n_agents)
    elif cfg.init == "gaussian":
        x0 = cfg.init_mean + cfg.init_sigma * rng.standard_normal(cfg.n_agents)
    else:
        x0 = np.array(cfg.init_values, dtype=float)
    mode, param, sample_links, exponent = _resolve_point(cfg, value)
    links = None
    if sample_links:
        e0 = Ensemble(positions=x0)
        base = net.neighbor_sets(
            net.Metric(param) if mode == "metric" else net.Topological(int(param)), e0
        )
        links = net.augment_long_range(e0, base, exponent, rng)
    record = cfg.record_timeseries and run_index == 0
    out = _fast.hk_run(
        x0, mode, param, links=links, dt=cfg.dt, t_end=cfg.t_end,
        exit_tol=cfg.exit_tol, consensus_eps=cfg.consensus_eps,
        stride=cfg.timeseries_stride, record=record,
    )
    clusters = detect_clusters(out["opinions"], cfg.cluster_eps)
    sizes = clusters.sizes
    summary = RunSummary(
        sweep_value=value,
        run_index=run_index,
        n_clusters=clusters.count,
        c1=sizes[0],
        c2=sizes[1] if len(sizes) > 1 else 0,
        consensus_time=out["consensus_time"],
        final_time=out["final_time"],
        steps=out["steps"],
        sizes=sizes,
    )
    series = None
    if record:
        series = {
            "times": out["times"],
            "edge_count": out["edge_count"],
            "snapshots": out["snapshots"],
        }
    return summary, series


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Execute all sweep points and runs; deterministic for a given seed.

    Runs are independent and may execute on a thread pool; results are folded
    in (sweep, run) index order so the outcome does not depend on scheduling.
    """
    cfg.validate()
    values = list(cfg.sweep_values) if cfg.sweep_variable != "none" else [None]
    points = []
    for si, value in enumerate(values):
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(
                    pool.map(lambda j: _single_run(cfg, si, value, j), range(cfg.runs))
                )
        else:
            results = [_single_run(cfg, si, value, j) for j in range(cfg.runs)]
        summaries = tuple(r[0] for r in results)
        series = results[0][1]
        points.append(SweepPointResult(sweep_value=value, summaries=summaries, timeseries=series))
        log.info("preset %s: sweep point %r done (%d runs)", cfg.preset, value, cfg.runs)
    return ExperimentResult(config=cfg, points=tuple(points))


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _schema_line(cfg: ExperimentConfig | None) -> str:
    digest = cfg.digest() if cfg is not None else "none"
    name = cfg.preset if cfg is not None else "none"
    return f"# schema={SCHEMA_VERSION} config={digest} preset={name}\n"


def write_outputs(result: ExperimentResult | None, out_dir: str, cfg: ExperimentConfig | None = None) -> list[str]:
    """Write aggregate.csv, runs.csv, histogram.csv, config.echo (and timeseries.csv).

    An empty result produces headers-only files.  Every CSV starts with the
    schema comment carrying the producing config digest.
    """
    cfg = cfg if cfg is not None else (result.config if result is not None else None)
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def path(name):
        p = os.path.join(out_dir, name)
        written.append(p)
        return p

    points = result.points if result is not None else ()

    with open(path("aggregate.csv"), "w") as f:
        f.write(_schema_line(cfg))
        f.write(",".join(AGGREGATE_COLUMNS) + "\n")
        for p in points:
            row = p.aggregate()
            f.write(",".join(_fmt(row[c]) for c in AGGREGATE_COLUMNS) + "\n")

    with open(path("runs.csv"), "w") as f:
        f.write(_schema_line(cfg))
        f.write(",".join(RUNS_COLUMNS) + "\n")
        for p in points:
            for s in p.summaries:
                f.write(
                    ",".join(
                        _fmt(v)
                        for v in (
                            s.sweep_value, s.run_index, s.n_clusters, s.c1, s.c2,
                            s.consensus_time, s.final_time, s.steps,
                        )
                    )
                    + "\n"
                )

    with open(path("histogram.csv"), "w") as f:
        f.write(_schema_line(cfg))
        f.write(",".join(HISTOGRAM_COLUMNS) + "\n")
        for p in points:
            tally: dict[int, int] = {}
            for s in p.summaries:
                for size in s.sizes:
                    tally[size] = tally.get(size, 0) + 1
            for size in sorted(tally):
                f.write(f"{_fmt(p.sweep_value)},{size},{tally[size]}\n")

    if cfg is not None:
        with open(path("config.echo"), "w") as f:
            f.write(cfg.to_text())

    if any(p.timeseries is not None for p in points):
        n = cfg.n_agents if cfg is not None else points[0].timeseries["snapshots"].shape[1]
        with open(path("timeseries.csv"), "w") as f:
            f.write(_schema_line(cfg))
            agent_cols = ",".join(f"x{i}" for i in range(n))
            f.write(f"sweep_value,t,edge_count,{agent_cols}\n")
            for p in points:
                if p.timeseries is None:
                    continue
                ts = p.timeseries
                for row in range(len(ts["times"])):
                    xs = ",".join(_fmt(float(v)) for v in ts["snapshots"][row])
                    f.write(
                        f"{_fmt(p.sweep_value)},{_fmt(float(ts['times'][row]))},"
                        f"{int(ts['edge_count'][row])},{xs}\n"
                    )
    return written
