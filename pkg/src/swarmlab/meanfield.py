"""Particle discretizations of kinetic alignment and binary opinion exchange.

A :class:`ParticleMeasure` is the uniform atomic measure on particle states;
pushing its atoms along the interaction-averaged field reproduces the finite
agent system exactly, which is the basis of several exactness tests.  The
opinion side implements receding-horizon-steered binary interactions swept
Nanbu style (one interaction per agent per sweep) and their small-step drift
fields.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .core import Ensemble
from .dynamics import _cs_accel

__all__ = [
    "ParticleMeasure",
    "OpinionPopulation",
    "empirical_cs_step",
    "support_radii",
    "proportion_control_step",
    "boltzmann_pair_update",
    "boltzmann_mc_step",
    "quasi_invariant_drift",
    "population_histogram",
    "write_population_histogram",
    "SweepInfo",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ParticleMeasure:
    """Uniform empirical measure (1/N) sum of point masses at (x_i, v_i)."""

    positions: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.positions, dtype=float)
        v = np.asarray(self.velocities, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if v.ndim == 1:
            v = v[:, None]
        if x.shape != v.shape or x.shape[0] < 1:
            raise ValueError("positions and velocities must be matching (N, d) arrays")
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "velocities", v)

    @property
    def count(self) -> int:
        return self.positions.shape[0]

    def to_ensemble(self) -> Ensemble:
        return Ensemble(positions=self.positions, velocities=self.velocities)


def empirical_cs_step(mu: ParticleMeasure, kernel, dt: float) -> ParticleMeasure:
    """Advance the atoms one Euler step along the characteristics.

    dx = v, dv = xi[mu](x, v) with xi the interaction average over the
    measure itself; on an atomic measure this coincides with the finite
    N-agent alignment right-hand side, atom by atom.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    x, v = mu.positions, mu.velocities
    accel = _cs_accel(x, v, kernel)
    return ParticleMeasure(positions=x + dt * v, velocities=v + dt * accel)


def support_radii(mu: ParticleMeasure) -> tuple[float, float]:
    """Empirical support radii (X0, V0): max distances from the two barycenters."""
    x, v = mu.positions, mu.velocities
    x0 = float(np.max(np.linalg.norm(x - x.mean(axis=0), axis=1)))
    v0 = float(np.max(np.linalg.norm(v - v.mean(axis=0), axis=1)))
    return x0, v0


def proportion_control_step(
    mu: ParticleMeasure, kernel, proportion: float, u_bound: float, dt: float
) -> tuple[ParticleMeasure, dict]:
    """One controlled characteristics step acting on at most a ``proportion`` of mass.

    Heuristic stand-in for the constructive confinement strategy: the
    floor(c N) particles with the largest velocity deviation receive the unit
    push u = -u_bound * vperp/|vperp|; everyone else is uncontrolled.  The
    controlled mass floor(c N)/N never exceeds c and the control never
    exceeds the unit bound; both facts are reported per step.
    """
    if not (0 < proportion <= 1):
        raise ValueError("proportion must lie in (0, 1]")
    if not (0 <= u_bound <= 1):
        raise ValueError("the external action is bounded by 1")
    if dt <= 0:
        raise ValueError("dt must be positive")
    x, v = mu.positions, mu.velocities
    n = mu.count
    vperp = v - v.mean(axis=0)
    norms = np.linalg.norm(vperp, axis=1)
    m = int(math.floor(proportion * n))
    u = np.zeros_like(v)
    if m > 0:
        chosen = np.argsort(-norms, kind="stable")[:m]
        moving = chosen[norms[chosen] > 0]
        u[moving] = -u_bound * vperp[moving] / norms[moving, None]
    accel = _cs_accel(x, v, kernel) + u
    info = {
        "controlled_mass": m / n,
        "mass_ok": m / n <= proportion + 1e-15,
        "max_control": float(np.max(np.linalg.norm(u, axis=1))) if n else 0.0,
    }
    return ParticleMeasure(positions=x + dt * v, velocities=v + dt * accel), info


# ---------------------------------------------------------------------------
# Binary opinion exchange with embedded receding-horizon steering
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OpinionPopulation:
    """Scalar opinions on I = [-1, 1] steered toward ``target``.

    ``eta`` is the interaction step, ``kappa`` the control penalty; the
    resulting per-interaction gain is beta = 2 eta / (kappa + 2 eta), always
    in (0, 1).
    """

    samples: np.ndarray
    target: float
    kappa: float
    eta: float

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1 or s.size < 1:
            raise ValueError("samples must be a nonempty 1D array")
        if np.any(np.abs(s) > 1.0 + 1e-12):
            raise ValueError("samples must lie in [-1, 1]")
        if self.kappa <= 0 or self.eta <= 0:
            raise ValueError("kappa and eta must be positive")
        object.__setattr__(self, "samples", s)

    @property
    def beta(self) -> float:
        return 2.0 * self.eta / (self.kappa + 2.0 * self.eta)

    @property
    def mean(self) -> float:
        return float(self.samples.mean())


@dataclass(frozen=True)
class SweepInfo:
    clamped: int
    skipped: int | None


def boltzmann_pair_update(x, y, pop: OpinionPopulation, kernel) -> tuple:
    """Post-interaction states of an opinion pair under the steered exchange.

    x* = x + eta a(x,y)(y - x) + (beta/2)[(x_d - y) + (x_d - x)
         + eta (a(x,y) - a(y,x))(y - x)]
    and symmetrically for y*.  The compromise part moves the pair together;
    the beta part is the one-horizon steering toward the target.  Results are
    clamped to [-1, 1] (clamps are counted by the sweep driver; for
    eta >= beta/2 and a target inside the domain the update is a convex
    combination and never clamps).
    """
    eta, beta, xd = pop.eta, pop.beta, pop.target
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    axy = np.asarray(kernel(x, y), dtype=float)
    ayx = np.asarray(kernel(y, x), dtype=float)
    x_new = x + eta * axy * (y - x) + 0.5 * beta * ((xd - y) + (xd - x) + eta * (axy - ayx) * (y - x))
    y_new = y + eta * ayx * (x - y) + 0.5 * beta * ((xd - x) + (xd - y) + eta * (ayx - axy) * (x - y))
    return x_new, y_new


def boltzmann_mc_step(
    pop: OpinionPopulation, kernel, rng: np.random.Generator
) -> tuple[OpinionPopulation, SweepInfo]:
    """One sweep: a random perfect matching, every pair updated once.

    With an odd population one uniformly chosen agent sits the sweep out
    (reported in the info).  Disjoint pairing makes the mean recursion
    m <- m + beta (x_d - m) exact for the constant symmetric kernel.
    """
    n = pop.samples.size
    if n < 2:
        raise ValueError("need at least two agents to interact")
    perm = rng.permutation(n)
    skipped = None
    if n % 2 == 1:
        skipped = int(perm[-1])
        perm = perm[:-1]
    left, right = perm[0::2], perm[1::2]
    s = pop.samples
    x_new, y_new = boltzmann_pair_update(s[left], s[right], pop, kernel)
    out = s.copy()
    out[left] = x_new
    out[right] = y_new
    clamped = int(np.count_nonzero(np.abs(out) > 1.0))
    if clamped:
        log.info("clamped %d opinions back into [-1, 1]", clamped)
        out = np.clip(out, -1.0, 1.0)
    return replace(pop, samples=out), SweepInfo(clamped=clamped, skipped=skipped)


def population_histogram(pop: OpinionPopulation, bins: int = 40) -> tuple[np.ndarray, np.ndarray]:
    """Fixed-bin histogram of the opinion mass on [-1, 1]: (edges, mass).

    Mass sums to one; bins are uniform so different sweeps stay comparable.
    """
    if bins < 1:
        raise ValueError("need at least one bin")
    edges = np.linspace(-1.0, 1.0, bins + 1)
    counts, _ = np.histogram(pop.samples, bins=edges)
    return edges, counts / pop.samples.size


def write_population_histogram(pop: OpinionPopulation, path, bins: int = 40) -> None:
    """CSV export of the opinion histogram: bin_left, bin_right, mass."""
    edges, mass = population_histogram(pop, bins)
    with open(path, "w") as f:
        f.write("bin_left,bin_right,mass\n")
        for left, right, m in zip(edges[:-1], edges[1:], mass):
            f.write(f"{left:.17g},{right:.17g},{m:.17g}\n")


def quasi_invariant_drift(
    samples: np.ndarray, target: float, kappa: float, kernel
) -> tuple[np.ndarray, np.ndarray]:
    """Small-step drift fields of the binary exchange at each sample point.

    xi(x)   = average over y of a(x, y)(y - x)
    zeta(x) = average over y of (1/kappa)[(x_d - x) + (x_d - y)]
    with the averages taken against the empirical measure of ``samples``.
    One sweep displaces opinions by eta (xi + zeta) + O(eta^2).
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    s = np.asarray(samples, dtype=float)
    xg, yg = s[:, None], s[None, :]
    a = np.asarray(kernel(xg, yg), dtype=float)
    a = np.broadcast_to(a, (s.size, s.size))
    xi = np.mean(a * (yg - xg), axis=1)
    zeta = np.mean((target - xg) + (target - yg), axis=1) / kappa
    return xi, zeta
