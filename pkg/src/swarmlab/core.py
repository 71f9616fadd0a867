"""Agent-state containers and the diagnostic statistics shared by all models.

The universal state is an :class:`Ensemble`: N agents in dimension d, carrying
positions and optionally velocities (second-order models) or spins (discrete
opinion models).  All diagnostics are computed lazily from snapshots, never
incrementally, so repeated evaluation cannot drift.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Ensemble",
    "Diagnostics",
    "ClusterSummary",
    "RunRecord",
    "barycenter_and_mean_velocity",
    "velocity_variance",
    "spatial_variance",
    "detect_clusters",
    "consensus_time",
]


def _as_state_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ValueError(f"{name} must be an (N, d) array with N >= 1, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Ensemble:
    """Immutable snapshot of N agents in dimension d.

    Exactly one of ``velocities`` / ``spins`` may accompany the positions;
    first-order real-valued models carry positions only.
    """

    positions: np.ndarray
    velocities: np.ndarray | None = None
    spins: np.ndarray | None = None

    def __post_init__(self):
        pos = _as_state_array(self.positions, "positions")
        object.__setattr__(self, "positions", pos)
        if self.velocities is not None and self.spins is not None:
            raise ValueError("an ensemble carries velocities or spins, not both")
        if self.velocities is not None:
            vel = _as_state_array(self.velocities, "velocities")
            if vel.shape != pos.shape:
                raise ValueError(
                    f"velocities shape {vel.shape} does not match positions {pos.shape}"
                )
            object.__setattr__(self, "velocities", vel)
        if self.spins is not None:
            spins = np.asarray(self.spins, dtype=int)
            if spins.shape != (pos.shape[0],):
                raise ValueError(f"spins must be a length-N vector, got shape {spins.shape}")
            if not np.all(np.abs(spins) == 1):
                raise ValueError("spins must be exactly +/-1")
            spins = spins.copy()
            spins.setflags(write=False)
            object.__setattr__(self, "spins", spins)

    @property
    def count(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def with_state(self, positions=None, velocities=None, spins=None) -> "Ensemble":
        """Copy with some components replaced (None keeps the current value)."""
        return Ensemble(
            positions=self.positions if positions is None else positions,
            velocities=self.velocities if velocities is None else velocities,
            spins=self.spins if spins is None else spins,
        )


@dataclass(frozen=True)
class Diagnostics:
    """Scalar statistics of one snapshot: X(t), V(t), barycenter, mean velocity."""

    spatial_variance: float
    velocity_variance: float | None
    barycenter: np.ndarray
    mean_velocity: np.ndarray | None
    time: float = 0.0

    @classmethod
    def measure(cls, ensemble: Ensemble, time: float = 0.0) -> "Diagnostics":
        xbar = ensemble.positions.mean(axis=0)
        if ensemble.velocities is not None:
            return cls(
                spatial_variance=spatial_variance(ensemble),
                velocity_variance=velocity_variance(ensemble),
                barycenter=xbar,
                mean_velocity=ensemble.velocities.mean(axis=0),
                time=time,
            )
        return cls(
            spatial_variance=spatial_variance(ensemble),
            velocity_variance=None,
            barycenter=xbar,
            mean_velocity=None,
            time=time,
        )


@dataclass(frozen=True)
class ClusterSummary:
    """Partition of N points into single-linkage clusters at tolerance epsilon.

    ``sizes`` is sorted descending and sums to N; ``centers`` are per-cluster
    means, pairwise farther apart than epsilon by construction.
    """

    sizes: tuple[int, ...]
    centers: np.ndarray
    epsilon: float

    @property
    def count(self) -> int:
        return len(self.sizes)


def barycenter_and_mean_velocity(ensemble: Ensemble) -> tuple[np.ndarray, np.ndarray]:
    """Return (mean position, mean velocity); requires a second-order ensemble."""
    if ensemble.velocities is None:
        raise ValueError("ensemble has no velocities")
    return ensemble.positions.mean(axis=0), ensemble.velocities.mean(axis=0)


def velocity_variance(ensemble: Ensemble) -> float:
    """Velocity variance V: mean squared deviation of velocities from their mean.

    Equals the symmetric pairwise form (1/2N^2) sum_ij |v_i - v_j|^2.
    """
    if ensemble.velocities is None:
        raise ValueError("ensemble has no velocities")
    v = ensemble.velocities
    dev = v - v.mean(axis=0)
    return float(np.sum(dev * dev) / v.shape[0])


def spatial_variance(ensemble: Ensemble) -> float:
    """Spatial variance X: (1/2N^2) sum_ij |x_i - x_j|^2, computed in centered form."""
    x = ensemble.positions
    dev = x - x.mean(axis=0)
    return float(np.sum(dev * dev) / x.shape[0])


def detect_clusters(values, epsilon: float) -> ClusterSummary:
    """Partition points by the transitive closure of ``|a - b| <= epsilon``.

    Single-linkage: two points share a cluster when a chain of epsilon-close
    points connects them.  Resulting cluster centers are therefore pairwise
    farther than epsilon apart.  The tolerance is always explicit; nothing is
    estimated from the data.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    pts = np.asarray(values, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]

    parent = np.arange(n)

    def find(i: int) -> int:
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    # 1D inputs are common (opinion models): sorting makes the closure linear.
    if pts.shape[1] == 1:
        order = np.argsort(pts[:, 0], kind="stable")
        flat = pts[order, 0]
        for idx in range(n - 1):
            if flat[idx + 1] - flat[idx] <= epsilon:
                ra, rb = find(order[idx]), find(order[idx + 1])
                if ra != rb:
                    parent[rb] = ra
    else:
        diffs = pts[:, None, :] - pts[None, :, :]
        close = np.sqrt(np.sum(diffs * diffs, axis=-1)) <= epsilon
        for i in range(n):
            for j in range(i + 1, n):
                if close[i, j]:
                    ri, rj = find(i), find(j)
                    if ri != rj:
                        parent[rj] = ri

    roots = np.array([find(i) for i in range(n)])
    labels = {root: k for k, root in enumerate(dict.fromkeys(roots))}
    groups: list[list[int]] = [[] for _ in labels]
    for i, root in enumerate(roots):
        groups[labels[root]].append(i)

    sizes = np.array([len(g) for g in groups])
    centers = np.array([pts[g].mean(axis=0) for g in groups])
    order = np.argsort(-sizes, kind="stable")
    return ClusterSummary(
        sizes=tuple(int(s) for s in sizes[order]),
        centers=centers[order],
        epsilon=float(epsilon),
    )


@dataclass
class RunRecord:
    """Sampled time series of one trajectory plus the provenance that produced it.

    ``times`` is strictly increasing.  Optional series are None when the model
    does not produce them (e.g. ``velocity_variance`` for first-order models).
    ``consensus_time`` is the first time all agents lay within the run's
    consensus radius of the barycenter, tracked at every accepted step.
    """

    config_hash: str = ""
    seed: int = 0
    times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    spatial_variance: np.ndarray = field(default_factory=lambda: np.zeros(0))
    velocity_variance: np.ndarray | None = None
    max_dev: np.ndarray = field(default_factory=lambda: np.zeros(0))
    edge_count: np.ndarray | None = None
    control_norm: np.ndarray | None = None
    active_index: np.ndarray | None = None
    positions: np.ndarray | None = None
    velocities: np.ndarray | None = None
    terminal: Ensemble | None = None
    terminal_clusters: ClusterSummary | None = None
    consensus_time: float | None = None
    extras: dict = field(default_factory=dict)

    def validate(self) -> None:
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("record times must be strictly increasing")
        if self.terminal_clusters is not None and self.terminal is not None:
            if sum(self.terminal_clusters.sizes) != self.terminal.count:
                raise ValueError("cluster sizes do not sum to N")


def consensus_time(record: RunRecord, epsilon: float) -> float | None:
    """First logged time at which all agents lie within epsilon of the barycenter.

    Returns None when no logged snapshot is that concentrated.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    hits = np.nonzero(record.max_dev <= epsilon)[0]
    if hits.size == 0:
        return None
    return float(record.times[hits[0]])


def config_digest(text: str) -> str:
    """Short stable digest used to stamp outputs with their producing config."""
    return hashlib.sha256(text.encode()).hexdigest()[:12]
