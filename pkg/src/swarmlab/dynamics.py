"""Model right-hand sides and steppers.

Continuous-time models (bounded-confidence averaging, normalized-influence
drift, linear protocols, sphere consensus, velocity alignment, migration,
self-propelled particles) expose ``deriv`` on raw arrays and are advanced by
:func:`integrate`.  Discrete-time and event-driven models (angle averaging
with noise, voter, ring pair-convincing, persistent turning walker) have
dedicated step functions driven by an explicit rng.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import network as net
from . import potential as pot
from .core import ClusterSummary, Ensemble, RunRecord, detect_clusters

__all__ = [
    "HKModel",
    "JMModel",
    "LinearProtocol",
    "SphereConsensus",
    "CuckerSmale",
    "MigrationModel",
    "DOrsogna",
    "IntegratorSpec",
    "hk_rhs",
    "jm_rhs",
    "linear_protocol_rhs",
    "sphere_rhs",
    "cs_rhs",
    "migration_rhs",
    "dorsogna_rhs",
    "vicsek_step",
    "voter_step",
    "sznajd_step",
    "ptw_step",
    "integrate",
]

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# First-order models
# ---------------------------------------------------------------------------


def _hk_deriv(x: np.ndarray, variant, scaling: net.Scaling, links: np.ndarray | None) -> np.ndarray:
    e = Ensemble(positions=x)
    sets = net.neighbor_sets(variant, e)
    if links is not None and links.size:
        sets = net.apply_links(sets, links)
    deg = net.degrees(sets, scaling)
    out = np.zeros_like(x)
    for i, members in enumerate(sets):
        out[i] = (x[members] - x[i]).sum(axis=0) / deg[i]
    return out


def hk_rhs(
    ensemble: Ensemble,
    variant,
    scaling: net.Scaling = net.Scaling.BY_CARDINALITY,
    links: np.ndarray | None = None,
) -> np.ndarray:
    """Bounded-confidence drift: each agent moves toward its neighbors' mean.

    dx_i = (1/deg_i) sum_{j in N_i} (x_j - x_i), with the neighbor-count
    normalization by default.
    """
    return _hk_deriv(ensemble.positions, variant, scaling, links)


def _jm_deriv(x: np.ndarray, phi: pot.JabinMotsch) -> np.ndarray:
    diffs = x[:, None, :] - x[None, :, :]
    sq = np.sum(diffs * diffs, axis=-1)
    w = np.asarray(phi.func(sq), dtype=float)
    norm = w.sum(axis=1)
    if np.any(norm <= 0):
        raise ValueError("influence normalizer vanished; phi(0) must be positive")
    return np.einsum("ij,ijd->id", w, -diffs) / norm[:, None]


def jm_rhs(ensemble: Ensemble, phi: pot.JabinMotsch) -> np.ndarray:
    """Normalized influence drift with weights phi(|x_i - x_j|^2)."""
    return _jm_deriv(ensemble.positions, phi)


def _linear_deriv(x: np.ndarray, weights: np.ndarray, scaling: net.Scaling) -> np.ndarray:
    n = x.shape[0]
    if weights.shape != (n, n):
        raise ValueError(f"weight matrix shape {weights.shape} does not match N={n}")
    if scaling is net.Scaling.BY_N:
        deg = np.full(n, float(n))
    elif scaling is net.Scaling.BY_CARDINALITY:
        deg = np.count_nonzero(weights, axis=1) + 1.0
    else:
        deg = weights.sum(axis=1)
        if np.any(deg <= 0):
            raise ValueError("weight-sum scaling requires positive row sums")
    return (weights @ x - weights.sum(axis=1)[:, None] * x) / deg[:, None]


def linear_protocol_rhs(
    ensemble: Ensemble, weights: np.ndarray, scaling: net.Scaling = net.Scaling.BY_N
) -> np.ndarray:
    """Linear consensus protocol dx_i = (1/deg_i) sum_j a_ij (x_j - x_i)."""
    return _linear_deriv(ensemble.positions, np.asarray(weights, dtype=float), scaling)


def _sphere_deriv(x: np.ndarray, weights: np.ndarray) -> np.ndarray:
    y = weights @ x - weights.sum(axis=1)[:, None] * x
    return y - np.sum(y * x, axis=1)[:, None] * x


def sphere_rhs(ensemble: Ensemble, weights: np.ndarray) -> np.ndarray:
    """Consensus drift projected onto the tangent space of the unit sphere.

    With P_x(y) = y - <y, x> x, returns P_{x_i}(sum_j a_ij (x_j - x_i)).
    States must be unit vectors; outputs are tangent by construction.
    """
    x = ensemble.positions
    norms = np.linalg.norm(x, axis=1)
    if np.max(np.abs(norms - 1.0)) > 1e-9:
        raise ValueError("sphere dynamics need unit-norm states")
    return _sphere_deriv(x, np.asarray(weights, dtype=float))


# ---------------------------------------------------------------------------
# Second-order models
# ---------------------------------------------------------------------------


def _cs_accel(x: np.ndarray, v: np.ndarray, kernel) -> np.ndarray:
    diffs = x[:, None, :] - x[None, :, :]
    dist = np.sqrt(np.sum(diffs * diffs, axis=-1))
    a = pot.evaluate(kernel, dist)
    return (a @ v - a.sum(axis=1)[:, None] * v) / x.shape[0]


def cs_rhs(ensemble: Ensemble, kernel) -> tuple[np.ndarray, np.ndarray]:
    """Velocity alignment: dx_i = v_i, dv_i = (1/N) sum_j a(|x_j - x_i|)(v_j - v_i).

    The pair terms are antisymmetric, so the mean velocity drift is exactly
    zero.
    """
    if ensemble.velocities is None:
        raise ValueError("second-order model needs velocities")
    v = ensemble.velocities
    return v.copy(), _cs_accel(ensemble.positions, v, kernel)


def migration_rhs(
    ensemble: Ensemble, kernel, target: np.ndarray, alpha
) -> tuple[np.ndarray, np.ndarray]:
    """Alignment blended with relaxation toward a target velocity.

    dv_i = alpha_i (V - v_i) + (1 - alpha_i) * alignment term, alpha_i in [0, 1].
    """
    if ensemble.velocities is None:
        raise ValueError("second-order model needs velocities")
    v = ensemble.velocities
    alpha_vec = np.broadcast_to(np.asarray(alpha, dtype=float), (ensemble.count,))
    if np.any(alpha_vec < 0) or np.any(alpha_vec > 1):
        raise ValueError("alpha must lie in [0, 1]")
    target = np.asarray(target, dtype=float)
    align = _cs_accel(ensemble.positions, v, kernel)
    dv = alpha_vec[:, None] * (target[None, :] - v) + (1.0 - alpha_vec)[:, None] * align
    return v.copy(), dv


def dorsogna_rhs(
    ensemble: Ensemble, alpha_prop: float, beta_fric: float, morse: pot.Morse
) -> tuple[np.ndarray, np.ndarray]:
    """Self-propulsion, friction and pair forces:
    dv_i = (alpha - beta |v_i|^2) v_i - grad_i U.
    """
    if ensemble.velocities is None:
        raise ValueError("second-order model needs velocities")
    v = ensemble.velocities
    if ensemble.count >= 2:
        _, grad = pot.morse_energy_and_gradient(ensemble, morse)
    else:
        grad = np.zeros_like(ensemble.positions)
    speed2 = np.sum(v * v, axis=1)
    dv = (alpha_prop - beta_fric * speed2)[:, None] * v - grad
    return v.copy(), dv


# ---------------------------------------------------------------------------
# Model containers
# ---------------------------------------------------------------------------


@dataclass
class HKModel:
    variant: object
    scaling: net.Scaling = net.Scaling.BY_CARDINALITY
    links: np.ndarray | None = None
    noise_sigma: float = 0.0
    order: int = field(default=1, init=False)

    def deriv(self, x, v=None):
        return _hk_deriv(x, self.variant, self.scaling, self.links), None

    def edge_count(self, x: np.ndarray) -> int:
        sets = net.neighbor_sets(self.variant, Ensemble(positions=x))
        if self.links is not None and self.links.size:
            sets = net.apply_links(sets, self.links)
        return net.edge_count(sets)


@dataclass
class JMModel:
    phi: pot.JabinMotsch
    noise_sigma: float = 0.0
    order: int = field(default=1, init=False)

    def deriv(self, x, v=None):
        return _jm_deriv(x, self.phi), None


@dataclass
class LinearProtocol:
    weights: np.ndarray
    scaling: net.Scaling = net.Scaling.BY_N
    noise_sigma: float = 0.0
    order: int = field(default=1, init=False)

    def deriv(self, x, v=None):
        return _linear_deriv(x, np.asarray(self.weights, dtype=float), self.scaling), None


@dataclass
class SphereConsensus:
    weights: np.ndarray
    noise_sigma: float = 0.0
    order: int = field(default=1, init=False)
    on_sphere: bool = field(default=True, init=False)

    def deriv(self, x, v=None):
        return _sphere_deriv(x, np.asarray(self.weights, dtype=float)), None


@dataclass
class CuckerSmale:
    kernel: object
    noise_sigma: float = 0.0
    order: int = field(default=2, init=False)

    def deriv(self, x, v):
        return v.copy(), _cs_accel(x, v, self.kernel)


@dataclass
class MigrationModel:
    kernel: object
    target: np.ndarray
    alpha: object = 0.0
    noise_sigma: float = 0.0
    order: int = field(default=2, init=False)

    def deriv(self, x, v):
        n = x.shape[0]
        alpha_vec = np.broadcast_to(np.asarray(self.alpha, dtype=float), (n,))
        target = np.asarray(self.target, dtype=float)
        align = _cs_accel(x, v, self.kernel)
        dv = alpha_vec[:, None] * (target[None, :] - v) + (1.0 - alpha_vec)[:, None] * align
        return v.copy(), dv


@dataclass
class DOrsogna:
    alpha_prop: float
    beta_fric: float
    morse: pot.Morse
    noise_sigma: float = 0.0
    order: int = field(default=2, init=False)

    def deriv(self, x, v):
        e = Ensemble(positions=x, velocities=v)
        dx, dv = dorsogna_rhs(e, self.alpha_prop, self.beta_fric, self.morse)
        return dx, dv


# ---------------------------------------------------------------------------
# Discrete-time and stochastic steppers
# ---------------------------------------------------------------------------


def vicsek_step(
    ensemble: Ensemble,
    radius: float,
    speed: float,
    noise: float,
    dt: float,
    rng: np.random.Generator,
) -> Ensemble:
    """Planar constant-speed step: headings move to the local circular mean.

    New angle = atan2 of summed sines/cosines over neighbors within ``radius``
    (self included), plus a uniform perturbation on [-noise/2, noise/2].
    Positions advance with the pre-update velocity.
    """
    if ensemble.dim != 2:
        raise ValueError("constant-speed heading dynamics are planar (d = 2)")
    if ensemble.velocities is None:
        raise ValueError("needs velocities")
    v = ensemble.velocities
    speeds = np.linalg.norm(v, axis=1)
    if np.max(np.abs(speeds - speed)) > 1e-9 * max(speed, 1.0):
        raise ValueError("all agents must move at the common speed")
    x = ensemble.positions
    theta = np.arctan2(v[:, 1], v[:, 0])
    sets = net.metric_neighbors(ensemble, radius)
    mean_angle = np.array(
        [math.atan2(np.sin(theta[m]).sum(), np.cos(theta[m]).sum()) for m in sets]
    )
    if noise > 0:
        mean_angle = mean_angle + rng.uniform(-noise / 2, noise / 2, size=ensemble.count)
    new_x = x + v * dt
    new_v = speed * np.stack([np.cos(mean_angle), np.sin(mean_angle)], axis=1)
    return Ensemble(positions=new_x, velocities=new_v)


def voter_step(spins: np.ndarray, graph: net.StaticGraph, rng: np.random.Generator) -> np.ndarray:
    """One voter update: a random agent copies a randomly chosen neighbor's spin."""
    spins = np.asarray(spins, dtype=int)
    if not np.all(np.abs(spins) == 1):
        raise ValueError("spins must be +/-1")
    n = spins.shape[0]
    voter = int(rng.integers(n))
    neighbors = np.nonzero(graph.weights[voter] > 0)[0]
    out = spins.copy()
    if neighbors.size == 0:
        log.info("voter %d is isolated; step is a no-op", voter)
        return out
    pick = int(rng.choice(neighbors))
    out[voter] = spins[pick]
    return out


def sznajd_step(
    spins: np.ndarray, rng: np.random.Generator, ferro_prob: float = 1.0
) -> np.ndarray:
    """One pair-convincing update on a periodic ring.

    Pick a random adjacent pair (i, i+1).  If the two spins agree, both outer
    neighbors adopt that spin (with probability ``ferro_prob``).  If they
    disagree, the outer neighbors are set to the alternating pattern
    x_{i-1} = -x_i and x_{i+2} = -x_{i+1}.
    """
    spins = np.asarray(spins, dtype=int)
    n = spins.shape[0]
    if n < 4:
        raise ValueError("ring updates need at least 4 agents")
    i = int(rng.integers(n))
    j = (i + 1) % n
    left, right = (i - 1) % n, (i + 2) % n
    out = spins.copy()
    if spins[i] == spins[j]:
        if ferro_prob >= 1.0 or rng.random() < ferro_prob:
            out[left] = spins[i]
            out[right] = spins[i]
    else:
        out[left] = -spins[i]
        out[right] = -spins[j]
    return out


def ptw_step(
    x: np.ndarray,
    theta: np.ndarray,
    kappa: np.ndarray,
    speed: float,
    relax: float,
    diffusion: float,
    dt: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Euler-Maruyama step of the persistent turning walker.

    x advances along (cos theta, sin theta) at constant speed, the heading
    turns at rate speed * kappa, and the curvature relaxes to 0 while being
    kicked by white noise of intensity ``diffusion``.  Arrays may carry a
    leading batch dimension for many independent walkers.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    theta = np.asarray(theta, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    x = np.asarray(x, dtype=float)
    tau = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    new_x = x + speed * tau * dt
    new_theta = theta + speed * kappa * dt
    noise = rng.standard_normal(size=kappa.shape)
    new_kappa = kappa - relax * kappa * dt + diffusion * math.sqrt(dt) * noise
    return new_x, new_theta, new_kappa


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntegratorSpec:
    """Scheme and horizon for advancing an ODE model.

    ``early_exit_tol`` enables equilibrium detection: integration stops once
    the max rhs norm drops below the tolerance.   Sphere states can be
    renormalized to unit length after every step.
    """

    scheme: str = "rk4"
    dt: float = 1e-3
    t_end: float = 1.0
    sample_stride: int = 100
    renormalize_sphere: bool = False
    early_exit_tol: float | None = None

    def __post_init__(self):
        if self.scheme not in ("euler", "rk4", "euler_maruyama"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.dt <= 0 or self.t_end <= 0:
            raise ValueError("dt and t_end must be positive")
        if self.dt > self.t_end:
            raise ValueError("dt must not exceed t_end")
        if self.sample_stride < 1:
            raise ValueError("sample stride must be >= 1")


def _renormalize(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x, axis=1)[:, None]


def integrate(
    model,
    e0: Ensemble,
    spec: IntegratorSpec,
    rng: np.random.Generator | None = None,
    observers: Sequence[Callable] = (),
    record_positions: bool = False,
    consensus_eps: float | None = None,
    cluster_eps: float | None = None,
    config_hash: str = "",
    seed: int = 0,
) -> RunRecord:
    """Advance an ODE model to t_end, sampling diagnostics at a fixed stride.

    Deterministic models integrate with explicit Euler or the classical
    fourth-order Runge-Kutta scheme; a model with additive noise
    (``noise_sigma > 0``) must use Euler-Maruyama, which perturbs the
    consensus variable by sigma * sqrt(dt) * N(0, I) each step.  Observers are
    invoked at every sampled instant with (t, positions, velocities) and their
    dict results collected into ``record.extras``.
    """
    sigma = getattr(model, "noise_sigma", 0.0)
    if sigma > 0 and spec.scheme != "euler_maruyama":
        raise ValueError("a noisy model requires the euler_maruyama scheme")
    if sigma == 0 and spec.scheme == "euler_maruyama":
        raise ValueError("euler_maruyama is reserved for noisy models (noise_sigma > 0)")
    if sigma > 0 and rng is None:
        raise ValueError("a noisy model needs an rng")

    second_order = model.order == 2
    if second_order and e0.velocities is None:
        raise ValueError("second-order model needs velocities")

    x = np.array(e0.positions, dtype=float)
    v = np.array(e0.velocities, dtype=float) if second_order else None
    nsteps = int(round(spec.t_end / spec.dt))

    times, xs_list, vs_list = [], [], []
    svar, vvar, maxdev, edges = [], [], [], []
    extras: dict[str, list] = {}
    has_edges = hasattr(model, "edge_count")
    t_consensus: float | None = None

    def sample(t: float):
        times.append(t)
        xbar = x.mean(axis=0)
        dev = x - xbar
        svar.append(float(np.sum(dev * dev) / x.shape[0]))
        maxdev.append(float(np.max(np.linalg.norm(dev, axis=1))))
        if second_order:
            vdev = v - v.mean(axis=0)
            vvar.append(float(np.sum(vdev * vdev) / v.shape[0]))
        if has_edges:
            edges.append(model.edge_count(x))
        if record_positions:
            xs_list.append(x.copy())
            if second_order:
                vs_list.append(v.copy())
        for obs in observers:
            for key, value in obs(t, x, v).items():
                extras.setdefault(key, []).append(value)

    def check_consensus(t: float):
        nonlocal t_consensus
        if consensus_eps is None or t_consensus is not None:
            return
        dev = x - x.mean(axis=0)
        if np.max(np.linalg.norm(dev, axis=1)) <= consensus_eps:
            t_consensus = t

    check_consensus(0.0)
    sample(0.0)
    dt = spec.dt
    step = 0
    while step < nsteps:
        if second_order:
            k1x, k1v = model.deriv(x, v)
            if spec.scheme == "rk4":
                k2x, k2v = model.deriv(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v)
                k3x, k3v = model.deriv(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v)
                k4x, k4v = model.deriv(x + dt * k3x, v + dt * k3v)
                x = x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
                v = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
            else:
                x = x + dt * k1x
                v = v + dt * k1v
                if sigma > 0:
                    v = v + sigma * math.sqrt(dt) * rng.standard_normal(v.shape)
            rhs_norm = max(
                float(np.max(np.linalg.norm(k1x, axis=1))),
                float(np.max(np.linalg.norm(k1v, axis=1))),
            )
        else:
            k1, _ = model.deriv(x)
            if spec.scheme == "rk4":
                k2, _ = model.deriv(x + 0.5 * dt * k1)
                k3, _ = model.deriv(x + 0.5 * dt * k2)
                k4, _ = model.deriv(x + dt * k3)
                x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            else:
                x = x + dt * k1
                if sigma > 0:
                    x = x + sigma * math.sqrt(dt) * rng.standard_normal(x.shape)
            rhs_norm = float(np.max(np.linalg.norm(k1, axis=1)))

        if spec.renormalize_sphere and getattr(model, "on_sphere", False):
            x = _renormalize(x)

        step += 1
        t = step * dt
        check_consensus(t)
        if step % spec.sample_stride == 0 or step == nsteps:
            sample(t)
        if spec.early_exit_tol is not None and rhs_norm < spec.early_exit_tol:
            if step % spec.sample_stride != 0 and step != nsteps:
                sample(t)
            break

    terminal = Ensemble(positions=x, velocities=v if second_order else None)
    clusters: ClusterSummary | None = None
    if cluster_eps is not None:
        clusters = detect_clusters(x, cluster_eps)

    record = RunRecord(
        config_hash=config_hash,
        seed=seed,
        times=np.array(times),
        spatial_variance=np.array(svar),
        velocity_variance=np.array(vvar) if second_order else None,
        max_dev=np.array(maxdev),
        edge_count=np.array(edges, dtype=int) if has_edges else None,
        positions=np.array(xs_list) if record_positions else None,
        velocities=np.array(vs_list) if (record_positions and second_order) else None,
        terminal=terminal,
        terminal_clusters=clusters,
        consensus_time=t_consensus,
        extras={k: np.array(vals) for k, vals in extras.items()},
    )
    record.validate()
    return record
