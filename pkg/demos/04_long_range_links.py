"""Distant connections turn clustering into consensus.

With confidence radius r = 0.1 the bounded-confidence dynamics freezes into
several clusters.  Giving every agent one extra static link to a uniformly
chosen non-neighbor collapses the whole population to a single opinion, and
the interaction graph grows until it is complete (N^2 directed edges counting
self-loops).  Biasing the link toward nearby agents (probability ~ rho^-a)
weakens the effect: the smaller the exponent a, the faster consensus comes.

Run: python demos/04_long_range_links.py
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from swarmlab import _fast
from swarmlab.core import Ensemble, detect_clusters
from swarmlab.network import augment_long_range, metric_neighbors

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

rng = np.random.default_rng(5)
x0 = rng.uniform(0, 1, 100)
e0 = Ensemble(positions=x0[:, None])
base = metric_neighbors(e0, 0.1)
links = augment_long_range(e0, base, 0.0, rng)

runs = {
    "local only": None,
    "with distant links": links,
}
fig, axes = plt.subplots(2, 2, figsize=(11, 7))
for col, (label, lk) in enumerate(runs.items()):
    out = _fast.hk_run(
        x0, "metric", 0.1, links=lk, dt=0.05, t_end=60.0,
        exit_tol=1e-10, consensus_eps=1e-3, stride=4, record=True,
    )
    clusters = detect_clusters(out["opinions"], 1e-3)
    t_cons = out["consensus_time"]
    print(
        f"{label}: {clusters.count} terminal clusters"
        + (f", consensus at t = {t_cons:.1f}" if t_cons else ", no consensus")
        + f", final edge count {out['edge_count'][-1]}"
    )
    for agent in range(100):
        axes[0, col].plot(out["times"], out["snapshots"][:, agent], lw=0.4, alpha=0.5)
    axes[0, col].set_title(f"opinions, {label}")
    axes[0, col].set_xlabel("t")
    axes[1, col].plot(out["times"], out["edge_count"])
    axes[1, col].axhline(100 * 100, ls="--", color="k", lw=0.8)
    axes[1, col].set_title("directed edges (incl. self-loops)")
    axes[1, col].set_xlabel("t")

fig.tight_layout()
path = os.path.join(OUT, "long_range_links.png")
fig.savefig(path, dpi=130)
print(f"wrote {path}")

# exponent sweep: smaller a = longer links = faster consensus
print("\nbias exponent sweep (20 runs each):")
for a in (1.0, 0.5, 0.1):
    times = []
    for j in range(20):
        r = np.random.default_rng(np.random.SeedSequence(entropy=9, spawn_key=(int(10 * a), j)))
        x = r.uniform(0, 1, 100)
        e = Ensemble(positions=x[:, None])
        lk = augment_long_range(e, metric_neighbors(e, 0.1), a, r)
        out = _fast.hk_run(x, "metric", 0.1, links=lk, dt=0.05, t_end=300.0, consensus_eps=1e-3)
        if out["consensus_time"] is not None:
            times.append(out["consensus_time"])
    print(f"  a = {a}: mean time to consensus {np.mean(times):.1f} ({len(times)}/20 runs)")
