"""Beyond flat opinion space: spheres, headings, spins and wiggly fish.

Four short vignettes:
  * consensus on the unit sphere via tangent projection, where antipodal
    pairs are stationary and trajectories stay on the sphere to 1e-6 without
    any renormalization;
  * the planar constant-speed heading model, whose order parameter rises as
    neighbors average their directions;
  * spin dynamics: the voter model reaching absorbing consensus, and the
    ring pair-convincing rule with its ferromagnetic cascade;
  * the persistent turning walker, whose curvature is an Ornstein-Uhlenbeck
    process producing smoothly wiggling trajectories, plus a self-propelled
    group with short-range repulsion and long-range attraction.

Run: python demos/06_other_state_spaces.py
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from swarmlab.core import Ensemble
from swarmlab.dynamics import (
    DOrsogna,
    IntegratorSpec,
    SphereConsensus,
    integrate,
    ptw_step,
    sphere_rhs,
    sznajd_step,
    vicsek_step,
    voter_step,
)
from swarmlab.network import StaticGraph, lattice_graph
from swarmlab.potential import Morse

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)
rng = np.random.default_rng(4)

# --- sphere ---------------------------------------------------------------------
x = rng.normal(size=(10, 3))
x /= np.linalg.norm(x, axis=1)[:, None]
w = rng.uniform(0, 1, (10, 10))
np.fill_diagonal(w, 0)
rec = integrate(
    SphereConsensus(weights=w), Ensemble(positions=x),
    IntegratorSpec(scheme="rk4", dt=1e-3, t_end=10.0, sample_stride=100),
    record_positions=True,
)
norms = np.linalg.norm(rec.positions, axis=2)
print(f"sphere consensus: spread {rec.max_dev[0]:.3f} -> {rec.max_dev[-1]:.2e}; "
      f"max |norm - 1| without renormalization {np.max(np.abs(norms - 1)):.1e}")
anti = Ensemble(positions=[[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
print(f"antipodal pair drift: {np.max(np.abs(sphere_rhs(anti, np.ones((2, 2))))):.1e}")

# --- constant-speed headings -------------------------------------------------------
e = Ensemble(
    positions=rng.uniform(0, 5, (60, 2)),
    velocities=np.stack(
        [np.cos(a := rng.uniform(-np.pi, np.pi, 60)), np.sin(a)], axis=1
    ),
)
order = []
for _ in range(150):
    e = vicsek_step(e, radius=1.2, speed=1.0, noise=0.3, dt=0.05, rng=rng)
    order.append(float(np.linalg.norm(e.velocities.mean(axis=0))))
print(f"heading model order parameter: {order[0]:.2f} -> {order[-1]:.2f}")

# --- spins -------------------------------------------------------------------------
g = lattice_graph(4, dims=2)
spins = rng.choice([-1, 1], size=16)
for step in range(100_000):
    spins = voter_step(spins, g, rng)
    if np.all(spins == spins[0]):
        print(f"voter model on the 4x4 grid: consensus ({spins[0]:+d}) after {step + 1} updates")
        break

ring = rng.choice([-1, 1], size=24)
for step in range(20_000):
    ring = sznajd_step(ring, rng)
    if np.all(ring == ring[0]) or step == 19_999:
        frac = np.mean(ring == 1)
        print(f"ring pair-convincing after {step + 1} updates: {frac:.0%} spin-up")
        break

# --- persistent turning walker ------------------------------------------------------
paths = 6
xw = np.zeros((paths, 2))
theta = rng.uniform(-np.pi, np.pi, paths)
kappa = np.zeros(paths)
tracks = [xw.copy()]
for _ in range(4000):
    xw, theta, kappa = ptw_step(xw, theta, kappa, 1.0, 1.0, 1.2, 5e-3, rng)
    tracks.append(xw.copy())
tracks = np.array(tracks)
print(f"turning walkers: rms displacement {np.sqrt(np.mean(np.sum(tracks[-1]**2, axis=1))):.1f} after t = 20")

# --- self-propelled group with pair forces --------------------------------------------
morse = Morse(c_rep=1.0, c_att=0.6, l_rep=0.5, l_att=2.0)
model = DOrsogna(alpha_prop=1.0, beta_fric=0.5, morse=morse)
e0 = Ensemble(positions=rng.uniform(-1, 1, (30, 2)), velocities=0.3 * rng.normal(size=(30, 2)))
rec2 = integrate(
    model, e0, IntegratorSpec(scheme="rk4", dt=5e-3, t_end=30.0, sample_stride=200),
    record_positions=True,
)
speeds = np.linalg.norm(rec2.velocities[-1], axis=1)
print(f"self-propelled group: speeds settle near sqrt(alpha/beta) = 1.41 "
      f"(mean {speeds.mean():.2f}, spread {speeds.std():.2f})")

fig, axes = plt.subplots(1, 3, figsize=(14, 4))
for p in range(paths):
    axes[0].plot(tracks[:, p, 0], tracks[:, p, 1], lw=0.8)
axes[0].set_title("persistent turning walkers")
axes[0].set_aspect("equal")
axes[1].plot(order)
axes[1].set_title("heading order parameter")
axes[1].set_xlabel("step")
axes[2].scatter(rec2.positions[-1][:, 0], rec2.positions[-1][:, 1], s=18)
axes[2].quiver(
    rec2.positions[-1][:, 0], rec2.positions[-1][:, 1],
    rec2.velocities[-1][:, 0], rec2.velocities[-1][:, 1], width=3e-3,
)
axes[2].set_title("self-propelled group (pair forces)")
axes[2].set_aspect("equal")
fig.tight_layout()
path = os.path.join(OUT, "state_spaces.png")
fig.savefig(path, dpi=130)
print(f"wrote {path}")
