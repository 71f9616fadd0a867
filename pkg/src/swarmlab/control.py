"""Feedback laws and region predicates for steering alignment dynamics.

Two stabilizers act on the velocity deviations v_perp = v - vbar: the total
feedback -alpha * v_perp touching every agent, and the componentwise-sparse
law that spends the whole control budget on the single worst-deviating agent.
Both switch off inside the region where uncontrolled dynamics already align.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import _fast
from . import potential as pot
from .core import Ensemble, RunRecord, spatial_variance, velocity_variance
from .dynamics import _cs_accel

__all__ = [
    "TotalFeedback",
    "Sparse",
    "SampledSparse",
    "MigrationBudget",
    "RegionVerdict",
    "flocking_region",
    "consensus_region_meanfield",
    "total_feedback",
    "sparse_feedback",
    "sparse_threshold",
    "SampledControl",
    "run_controlled_cs",
    "dvdt_under_control",
    "sparse_optimality_probe",
    "random_feasible_control",
    "migration_alpha",
    "leader_follower_rhs",
    "control_cost",
    "write_control_history",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TotalFeedback:
    alpha_gain: float

    def __post_init__(self):
        if self.alpha_gain <= 0:
            raise ValueError("gain must be positive")


@dataclass(frozen=True)
class Sparse:
    bound: float

    def __post_init__(self):
        if self.bound <= 0:
            raise ValueError("bound must be positive")


@dataclass(frozen=True)
class SampledSparse:
    bound: float
    tau: float

    def __post_init__(self):
        if self.bound <= 0 or self.tau <= 0:
            raise ValueError("bound and sampling time must be positive")


@dataclass(frozen=True)
class MigrationBudget:
    bound: float
    strategy: str = "off"  # off | full_greedy | constant
    constant_alpha: float = 0.0

    def __post_init__(self):
        if self.bound < 0:
            raise ValueError("budget must be nonnegative")
        if self.strategy not in ("off", "full_greedy", "constant"):
            raise ValueError("unknown strategy")


@dataclass(frozen=True)
class RegionVerdict:
    """Outcome of a region membership test.

    ``margin`` is threshold minus the measured quantity; the boundary
    convention (inclusive for the finite-dimensional alignment region, strict
    for the support-radius consensus region) is recorded by ``inside``.
    """

    inside: bool
    margin: float
    threshold: float
    measured: float


def flocking_region(ensemble: Ensemble, kernel) -> RegionVerdict:
    """Test sqrt(V) <= integral of a(sqrt(2N) r) dr from sqrt(X) to infinity.

    Initial data inside this region align without any control.  Boundary
    points count as inside (the condition is non-strict).
    """
    big_x = spatial_variance(ensemble)
    big_v = velocity_variance(ensemble)
    threshold = pot.tail_integral(kernel, math.sqrt(big_x), math.sqrt(2.0 * ensemble.count))
    if math.isinf(threshold):
        raise ValueError("kernel tail diverges; the region test needs an integrable tail")
    margin = threshold - math.sqrt(big_v)
    return RegionVerdict(inside=margin >= 0.0, margin=margin, threshold=threshold, measured=math.sqrt(big_v))


def consensus_region_meanfield(x_radius: float, v_radius: float, kernel) -> RegionVerdict:
    """Support-radius variant: V0 < integral of a(2x) dx from X0 to infinity.

    The inequality is strict, so a measure sitting exactly on the threshold is
    outside.
    """
    if x_radius < 0 or v_radius < 0:
        raise ValueError("support radii are nonnegative")
    threshold = pot.tail_integral(kernel, x_radius, 2.0)
    if math.isinf(threshold):
        raise ValueError("kernel tail diverges; the region test needs an integrable tail")
    margin = threshold - v_radius
    return RegionVerdict(inside=margin > 0.0, margin=margin, threshold=threshold, measured=v_radius)


def total_feedback(ensemble: Ensemble, alpha_gain: float, bound: float | None = None) -> np.ndarray:
    """u_i = -alpha (v_i - vbar): damps every deviation simultaneously.

    When a budget is supplied, the feasibility condition
    sum_i |u_i| <= bound (equivalently alpha <= bound / sum_i |vperp_i|)
    is checked and a violation logged.
    """
    if ensemble.velocities is None:
        raise ValueError("needs velocities")
    if alpha_gain <= 0:
        raise ValueError("gain must be positive")
    v = ensemble.velocities
    u = -alpha_gain * (v - v.mean(axis=0))
    if bound is not None:
        total = float(np.sum(np.linalg.norm(u, axis=1)))
        if total > bound + 1e-12:
            log.warning("total feedback exceeds budget: sum|u| = %.6g > %.6g", total, bound)
    return u


def sparse_threshold(ensemble: Ensemble, kernel) -> float:
    """gamma(X): the tail integral evaluated at the current spatial variance."""
    big_x = spatial_variance(ensemble)
    return pot.tail_integral(kernel, math.sqrt(big_x), math.sqrt(2.0 * ensemble.count))


def sparse_feedback(ensemble: Ensemble, kernel, bound: float) -> np.ndarray:
    """Componentwise-sparse feedback: the full budget on the worst agent.

    Zero control when max_i |vperp_i| <= gamma(X)^2; otherwise the smallest
    index attaining the max receives -bound * vperp_j / |vperp_j| and every
    other component stays zero.  At most one row is ever nonzero.
    """
    if ensemble.velocities is None:
        raise ValueError("needs velocities")
    if bound <= 0:
        raise ValueError("bound must be positive")
    v = ensemble.velocities
    vperp = v - v.mean(axis=0)
    norms = np.linalg.norm(vperp, axis=1)
    u = np.zeros_like(v)
    gamma = sparse_threshold(ensemble, kernel)
    j = int(np.argmax(norms))  # argmax returns the first (smallest) index on ties
    if norms[j] <= gamma * gamma:
        return u
    u[j] = -bound * vperp[j] / norms[j]
    return u


class SampledControl:
    """Hold a feedback law constant between sampling instants 0, tau, 2 tau, ...

    Recomputing only on the sampling grid makes the control time-sparse by
    construction: at most ceil(T / tau) switches on [0, T].
    """

    def __init__(self, law, tau: float):
        if tau <= 0:
            raise ValueError("sampling time must be positive")
        self.law = law
        self.tau = tau
        self._held: np.ndarray | None = None
        self._next_sample = 0.0

    def control(self, t: float, ensemble: Ensemble) -> np.ndarray:
        if self._held is None or t >= self._next_sample - 1e-12:
            self._held = self.law(ensemble)
            self._next_sample = (math.floor(t / self.tau + 1e-12) + 1) * self.tau
        return self._held


def dvdt_under_control(ensemble: Ensemble, kernel, u: np.ndarray) -> float:
    """Exact instantaneous dV/dt of the controlled alignment dynamics.

    dV/dt = (2/N) sum_i <vperp_i, f_i + u_i> with f the uncontrolled
    acceleration; the mean-velocity shift drops out because sum vperp = 0.
    """
    if ensemble.velocities is None:
        raise ValueError("needs velocities")
    v = ensemble.velocities
    vperp = v - v.mean(axis=0)
    accel = _cs_accel(ensemble.positions, v, kernel)
    return float(2.0 / ensemble.count * np.sum(vperp * (accel + u)))


def random_feasible_control(shape: tuple[int, int], bound: float, rng: np.random.Generator) -> np.ndarray:
    """Random control with sum of row norms at most ``bound``."""
    n, d = shape
    directions = rng.standard_normal((n, d))
    norms = np.linalg.norm(directions, axis=1)
    norms[norms == 0] = 1.0
    directions /= norms[:, None]
    weights = rng.dirichlet(np.ones(n)) * bound * rng.uniform(0.0, 1.0)
    return directions * weights[:, None]


@dataclass(frozen=True)
class OptimalityReport:
    dvdt_sparse: float
    dvdt_samples: np.ndarray
    never_beaten: bool


def sparse_optimality_probe(
    ensemble: Ensemble, kernel, bound: float, trials: int, rng: np.random.Generator
) -> OptimalityReport:
    """Compare the sparse law's instantaneous dV/dt against random feasible controls.

    While active, the sparse law maximizes the instantaneous decrease of V over
    the whole budget-feasible set, so it should never lose.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    u_sparse = sparse_feedback(ensemble, kernel, bound) if bound > 0 else np.zeros_like(ensemble.velocities)
    base = dvdt_under_control(ensemble, kernel, u_sparse)
    samples = np.empty(trials)
    for t in range(trials):
        u = random_feasible_control(ensemble.velocities.shape, bound, rng)
        samples[t] = dvdt_under_control(ensemble, kernel, u)
    return OptimalityReport(
        dvdt_sparse=base,
        dvdt_samples=samples,
        never_beaten=bool(np.all(base <= samples + 1e-12)),
    )


def run_controlled_cs(
    e0: Ensemble,
    kernel,
    bound: float,
    dt: float,
    t_end: float,
    sample_stride: int = 10,
    hold_steps: int = 10,
    switch_off_in_region: bool = True,
) -> RunRecord:
    """Integrate alignment dynamics under the sparse feedback (RK4).

    The control is recomputed every ``hold_steps`` steps (default sampling
    time 10 dt) and held constant in between; once the state enters the
    alignment region the control switches off for good (when
    ``switch_off_in_region``).  The record carries the
    sampled control norms, the active index (-1 for off), the active index at
    every control update under ``extras['index_updates']``, and the region
    entry time under ``extras['region_entry_time']``.
    """
    if e0.velocities is None:
        raise ValueError("needs velocities")
    nsteps = int(round(t_end / dt))
    if isinstance(kernel, pot.PowerLaw) and kernel.beta == 1.0:
        out = _fast.controlled_cs_rk4(
            e0.positions, e0.velocities, kernel.beta, kernel.amplitude, bound,
            dt, nsteps, stride=sample_stride, hold=hold_steps,
            switch_off_in_region=switch_off_in_region,
        )
    else:
        out = _python_controlled_cs(
            e0, kernel, bound, dt, nsteps, sample_stride, hold_steps, switch_off_in_region
        )
    xs, vs = out["positions"], out["velocities"]
    xbar = xs.mean(axis=1, keepdims=True)
    vbar = vs.mean(axis=1, keepdims=True)
    record = RunRecord(
        times=out["times"],
        spatial_variance=np.sum((xs - xbar) ** 2, axis=(1, 2)) / xs.shape[1],
        velocity_variance=np.sum((vs - vbar) ** 2, axis=(1, 2)) / vs.shape[1],
        max_dev=np.max(np.linalg.norm(xs - xbar, axis=2), axis=1),
        control_norm=out["control_norm"],
        active_index=out["active_index"],
        positions=xs,
        velocities=vs,
        terminal=Ensemble(positions=xs[-1], velocities=vs[-1]),
        extras={
            "index_updates": out["index_updates"],
            "region_entry_time": out["region_entry_time"],
        },
    )
    record.validate()
    return record


def _python_controlled_cs(e0, kernel, bound, dt, nsteps, stride, hold, switch_off):
    """Generic-kernel fallback mirroring the compiled controlled run."""
    x = np.array(e0.positions, dtype=float)
    v = np.array(e0.velocities, dtype=float)
    n = x.shape[0]
    u = np.zeros_like(v)
    times, xs, vs, u_norm, u_idx, updates = [], [], [], [], [], []
    off = False
    region_entry = None
    active = -1

    def margin(x_, v_):
        e = Ensemble(positions=x_, velocities=v_)
        return flocking_region(e, kernel).margin

    if margin(x, v) >= 0.0:
        region_entry = 0.0
        off = switch_off

    for step in range(nsteps):
        if step % hold == 0:
            if off:
                active, u = -1, np.zeros_like(v)
            else:
                e = Ensemble(positions=x, velocities=v)
                u = sparse_feedback(e, kernel, bound)
                nz = np.nonzero(np.linalg.norm(u, axis=1) > 0)[0]
                active = int(nz[0]) if nz.size else -1
            updates.append(active)
        if step == 0:
            times.append(0.0)
            xs.append(x.copy())
            vs.append(v.copy())
            u_norm.append(bound if active >= 0 else 0.0)
            u_idx.append(active)

        def deriv(x_, v_):
            return v_.copy(), _cs_accel(x_, v_, kernel) + u

        k1x, k1v = deriv(x, v)
        k2x, k2v = deriv(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v)
        k3x, k3v = deriv(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v)
        k4x, k4v = deriv(x + dt * k3x, v + dt * k3v)
        x = x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        v = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        t = (step + 1) * dt
        if region_entry is None and margin(x, v) >= 0.0:
            region_entry = t
            if switch_off:
                off = True
                active, u = -1, np.zeros_like(v)
        if (step + 1) % stride == 0 or step + 1 == nsteps:
            times.append(t)
            xs.append(x.copy())
            vs.append(v.copy())
            u_norm.append(bound if active >= 0 else 0.0)
            u_idx.append(active)
    return {
        "times": np.array(times),
        "positions": np.array(xs),
        "velocities": np.array(vs),
        "control_norm": np.array(u_norm),
        "active_index": np.array(u_idx, dtype=int),
        "index_updates": np.array(updates, dtype=int),
        "region_entry_time": region_entry,
    }


def migration_alpha(strategy: MigrationBudget, ensemble: Ensemble, target: np.ndarray) -> np.ndarray:
    """Allocate per-agent sensing weights alpha in [0, 1] with sum alpha <= budget.

    'off' allocates nothing; 'constant' spreads a uniform value clipped to the
    budget; 'full_greedy' is a heuristic that saturates the agents farthest
    from the target velocity first.
    """
    if ensemble.velocities is None:
        raise ValueError("needs velocities")
    n = ensemble.count
    if strategy.strategy == "off":
        return np.zeros(n)
    if strategy.strategy == "constant":
        value = min(strategy.constant_alpha, strategy.bound / n, 1.0)
        return np.full(n, max(value, 0.0))
    deviations = np.linalg.norm(ensemble.velocities - np.asarray(target)[None, :], axis=1)
    order = np.argsort(-deviations, kind="stable")
    alpha = np.zeros(n)
    budget = strategy.bound
    for i in order:
        if budget <= 0:
            break
        alpha[i] = min(1.0, budget)
        budget -= alpha[i]
    return alpha


def leader_follower_rhs(
    leaders: Ensemble,
    followers: Ensemble | None,
    kernel,
    u: np.ndarray,
) -> tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray] | None]:
    """Coupled dynamics of m controlled leaders and N uncontrolled followers.

    Every agent feels the alignment field of the union population (each
    population's empirical average enters weighted by its share of the total
    mass, so with u = 0 the system is exactly the plain alignment dynamics on
    the merged ensemble); leader k additionally receives u_k.
    """
    if leaders.velocities is None:
        raise ValueError("leaders need velocities")
    u = np.asarray(u, dtype=float)
    if u.shape != leaders.velocities.shape:
        raise ValueError("control shape must match the leader population")
    if followers is None:
        merged_x, merged_v = leaders.positions, leaders.velocities
    else:
        if followers.velocities is None:
            raise ValueError("followers need velocities")
        merged_x = np.vstack([leaders.positions, followers.positions])
        merged_v = np.vstack([leaders.velocities, followers.velocities])
    accel = _cs_accel(merged_x, merged_v, kernel)
    m = leaders.count
    leader_rhs = (leaders.velocities.copy(), accel[:m] + u)
    if followers is None:
        return leader_rhs, None
    follower_rhs = (followers.velocities.copy(), accel[m:])
    return leader_rhs, follower_rhs


def write_control_history(record: RunRecord, path) -> None:
    """CSV export of a controlled run's control history.

    Columns: t, active_index (-1 when off), total control norm, then one
    per-agent norm column; for the one-agent feedback the active agent carries
    the whole budget and every other column is zero.
    """
    if record.control_norm is None or record.active_index is None:
        raise ValueError("record carries no control history")
    n = record.terminal.count
    with open(path, "w") as f:
        agent_cols = ",".join(f"u{i}" for i in range(n))
        f.write(f"t,active_index,control_norm,{agent_cols}\n")
        for t, idx, norm in zip(record.times, record.active_index, record.control_norm):
            per_agent = np.zeros(n)
            if idx >= 0:
                per_agent[idx] = norm
            row = ",".join(f"{v:.17g}" for v in per_agent)
            f.write(f"{t:.17g},{int(idx)},{norm:.17g},{row}\n")


def control_cost(record: RunRecord, gamma_weight: float) -> float:
    """Trapezoidal evaluation of integral N V(t) dt + gamma * integral sum|u| dt."""
    if record.control_norm is None:
        raise ValueError("record carries no control history")
    if record.velocity_variance is None:
        raise ValueError("record carries no velocity variance")
    n = record.terminal.count if record.terminal is not None else record.positions.shape[1]
    state_term = np.trapezoid(n * record.velocity_variance, record.times)
    control_term = np.trapezoid(record.control_norm, record.times)
    return float(state_term + gamma_weight * control_term)
