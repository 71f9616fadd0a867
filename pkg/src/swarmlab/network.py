"""Neighborhood rules and graphs: metric, topological, lattices, long-range links.

Neighbor sets are recomputed from positions every step for state-dependent
variants, so the interaction graph is time-varying.  Every rule includes the
agent itself (harmless in interaction sums since x_i - x_i = 0); with the
rank-based rule this makes k = 1 the no-interaction network.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .core import Ensemble

__all__ = [
    "Scaling",
    "FullyConnected",
    "Metric",
    "Topological",
    "AsymmetricMetric",
    "StaticGraph",
    "VisionCone",
    "LongRangeSpec",
    "NetworkSpec",
    "metric_neighbors",
    "topological_neighbors",
    "asymmetric_metric_neighbors",
    "neighbor_sets",
    "augment_long_range",
    "apply_links",
    "vision_cone_filter",
    "lattice_graph",
    "lattice_coordinates",
    "edge_count",
    "degrees",
]

log = logging.getLogger(__name__)


class Scaling(Enum):
    """Degree normalization of interaction sums."""

    BY_N = "n"
    BY_CARDINALITY = "cardinality"
    BY_WEIGHT_SUM = "weight_sum"


@dataclass(frozen=True)
class FullyConnected:
    pass


@dataclass(frozen=True)
class Metric:
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")


@dataclass(frozen=True)
class Topological:
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True)
class AsymmetricMetric:
    """1D bounded confidence with different left/right radii."""

    r_left: float
    r_right: float

    def __post_init__(self):
        if self.r_left <= 0 or self.r_right <= 0:
            raise ValueError("both radii must be positive")


@dataclass(frozen=True)
class StaticGraph:
    """Fixed weighted adjacency; zero diagonal, nonnegative weights."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("adjacency must be square")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        w = w.copy()
        np.fill_diagonal(w, 0.0)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def to_edge_list(self) -> str:
        """Serialize as one 'i j w' line per directed edge (0-based indices)."""
        lines = []
        rows, cols = np.nonzero(self.weights)
        for i, j in zip(rows, cols):
            lines.append(f"{i} {j} {self.weights[i, j]:.17g}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_edge_list(cls, text: str, n: int) -> "StaticGraph":
        w = np.zeros((n, n))
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"edge list line {lineno}: expected 'i j w'")
            i, j, weight = int(parts[0]), int(parts[1]), float(parts[2])
            w[i, j] = weight
        return cls(weights=w)


@dataclass(frozen=True)
class VisionCone:
    """Restrict a base rule to neighbors within the agent's cone of vision."""

    base: object
    half_angle: float

    def __post_init__(self):
        if not (0 < self.half_angle <= np.pi):
            raise ValueError("half angle must lie in (0, pi]")


@dataclass(frozen=True)
class LongRangeSpec:
    """One extra static link per agent, biased toward distance rho by rho^(-exponent)."""

    exponent: float = 0.0
    links_per_agent: int = 1

    def __post_init__(self):
        if self.exponent < 0:
            raise ValueError("exponent must be nonnegative")
        if self.links_per_agent != 1:
            raise ValueError("exactly one long-range link per agent is supported")


@dataclass(frozen=True)
class NetworkSpec:
    """Neighborhood rule plus optional long-range augmentation and scaling."""

    variant: object = field(default_factory=FullyConnected)
    long_range: LongRangeSpec | None = None
    scaling: Scaling = Scaling.BY_N


def _pairwise_distances(x: np.ndarray) -> np.ndarray:
    diffs = x[:, None, :] - x[None, :, :]
    return np.sqrt(np.sum(diffs * diffs, axis=-1))


def metric_neighbors(ensemble: Ensemble, radius: float) -> list[np.ndarray]:
    """Indices within ``radius`` of each agent (self always included)."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    dist = _pairwise_distances(ensemble.positions)
    return [np.nonzero(row <= radius)[0] for row in dist]


def topological_neighbors(ensemble: Ensemble, k: int) -> list[np.ndarray]:
    """Rank-based neighbors: j qualifies when at most k agents are as close to i as j.

    Distance ties all qualify, so a set may exceed k members.  The agent
    itself is always kept even when co-located agents inflate its own rank.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    dist = _pairwise_distances(ensemble.positions)
    sets = []
    for i, row in enumerate(dist):
        rank = np.sum(row[None, :] <= row[:, None], axis=1)  # rank[j] = #{m: d_im <= d_ij}
        members = np.nonzero(rank <= k)[0]
        if i not in members:
            members = np.sort(np.append(members, i))
        sets.append(members)
    return sets


def asymmetric_metric_neighbors(ensemble: Ensemble, r_left: float, r_right: float) -> list[np.ndarray]:
    """1D one-sided confidence: j qualifies when -r_left <= x_i - x_j <= r_right."""
    if ensemble.dim != 1:
        raise ValueError("asymmetric confidence is defined in one dimension only")
    if r_left <= 0 or r_right <= 0:
        raise ValueError("both radii must be positive")
    x = ensemble.positions[:, 0]
    gap = x[:, None] - x[None, :]
    mask = (gap >= -r_left) & (gap <= r_right)
    return [np.nonzero(row)[0] for row in mask]


def neighbor_sets(variant, ensemble: Ensemble) -> list[np.ndarray]:
    """Evaluate a neighborhood rule on the current positions."""
    if isinstance(variant, FullyConnected):
        full = np.arange(ensemble.count)
        return [full] * ensemble.count
    if isinstance(variant, Metric):
        return metric_neighbors(ensemble, variant.radius)
    if isinstance(variant, Topological):
        return topological_neighbors(ensemble, variant.k)
    if isinstance(variant, AsymmetricMetric):
        return asymmetric_metric_neighbors(ensemble, variant.r_left, variant.r_right)
    if isinstance(variant, StaticGraph):
        w = variant.weights
        return [
            np.unique(np.append(np.nonzero(w[i] > 0)[0], i)) for i in range(w.shape[0])
        ]
    if isinstance(variant, VisionCone):
        base = neighbor_sets(variant.base, ensemble)
        return vision_cone_filter(ensemble, base, variant.half_angle)
    raise TypeError(f"unknown network variant {type(variant).__name__}")


def augment_long_range(
    ensemble: Ensemble,
    base_sets: Sequence[np.ndarray],
    exponent: float,
    rng: np.random.Generator,
    metric: str = "euclidean",
) -> np.ndarray:
    """Sample one static long-range link per agent among its non-neighbors.

    Candidate j (not in the agent's base set) is drawn with probability
    proportional to rho_ij^(-exponent), where rho is measured on the initial
    positions; exponent 0 is the uniform choice.  Links are undirected and
    meant to be sampled once and reused for the whole run.  Agents without
    candidates simply get no link (logged).

    Returns an (L, 2) index array of sampled links.
    """
    if exponent < 0:
        raise ValueError("exponent must be nonnegative")
    x = ensemble.positions
    if metric == "euclidean":
        dist = _pairwise_distances(x)
    elif metric == "manhattan":
        dist = np.sum(np.abs(x[:, None, :] - x[None, :, :]), axis=-1)
    else:
        raise ValueError("metric must be 'euclidean' or 'manhattan'")

    n = ensemble.count
    links = []
    for i in range(n):
        candidates = np.setdiff1d(np.arange(n), base_sets[i], assume_unique=False)
        candidates = candidates[candidates != i]
        if candidates.size == 0:
            log.info("agent %d has no non-neighbor candidates; no long-range link", i)
            continue
        rho = dist[i, candidates]
        if exponent == 0:
            weights = np.ones_like(rho)
        elif np.any(rho == 0.0):
            # zero-distance candidates carry the whole (limiting) mass
            weights = (rho == 0.0).astype(float)
        else:
            weights = rho ** (-exponent)
        weights = weights / weights.sum()
        j = int(rng.choice(candidates, p=weights))
        links.append((i, j))
    return np.array(links, dtype=int).reshape(-1, 2)


def apply_links(base_sets: Sequence[np.ndarray], links: np.ndarray) -> list[np.ndarray]:
    """Merge undirected extra links into per-agent neighbor sets."""
    extra: list[list[int]] = [[] for _ in base_sets]
    for i, j in links:
        extra[i].append(j)
        extra[j].append(i)
    return [
        np.unique(np.concatenate([base, np.array(add, dtype=int)])) if add else base
        for base, add in zip(base_sets, extra)
    ]


def vision_cone_filter(
    ensemble: Ensemble, base_sets: Sequence[np.ndarray], half_angle: float
) -> list[np.ndarray]:
    """Drop neighbors outside the cone of vision around each agent's velocity.

    A neighbor j != i survives when the angle between v_i and x_j - x_i is at
    most ``half_angle``.  The agent itself is always kept, and an agent with
    zero velocity has no defined heading so it keeps all base neighbors.
    """
    if ensemble.velocities is None:
        raise ValueError("vision cones need velocities")
    if not (0 < half_angle <= np.pi):
        raise ValueError("half angle must lie in (0, pi]")
    x, v = ensemble.positions, ensemble.velocities
    cos_cut = np.cos(half_angle)
    filtered = []
    for i, members in enumerate(base_sets):
        speed = np.linalg.norm(v[i])
        if speed == 0.0:
            filtered.append(np.asarray(members))
            continue
        keep = []
        for j in members:
            if j == i:
                keep.append(j)
                continue
            offset = x[j] - x[i]
            norm = np.linalg.norm(offset)
            if norm == 0.0:
                keep.append(j)  # coincident: direction undefined, keep
                continue
            if float(offset @ v[i]) / (norm * speed) >= cos_cut - 1e-15:
                keep.append(j)
        filtered.append(np.array(sorted(keep), dtype=int))
    return filtered


def lattice_graph(n: int, dims: int = 1) -> StaticGraph:
    """Unit-weight path (dims=1, n nodes) or n x n grid (dims=2) adjacency."""
    if n < 2:
        raise ValueError("need n >= 2 nodes per side")
    if dims == 1:
        w = np.zeros((n, n))
        idx = np.arange(n - 1)
        w[idx, idx + 1] = 1.0
        w[idx + 1, idx] = 1.0
        return StaticGraph(weights=w)
    if dims == 2:
        size = n * n
        w = np.zeros((size, size))
        for row in range(n):
            for col in range(n):
                node = row * n + col
                if col + 1 < n:
                    w[node, node + 1] = w[node + 1, node] = 1.0
                if row + 1 < n:
                    w[node, node + n] = w[node + n, node] = 1.0
        return StaticGraph(weights=w)
    raise ValueError("dims must be 1 or 2")


def lattice_coordinates(n: int, dims: int = 1) -> np.ndarray:
    """Node coordinates matching :func:`lattice_graph` ordering (for Manhattan rho)."""
    if dims == 1:
        return np.arange(n, dtype=float)[:, None]
    rows, cols = np.divmod(np.arange(n * n), n)
    return np.stack([rows, cols], axis=1).astype(float)


def edge_count(network) -> int:
    """Directed edge count including self-loops.

    Counting the always-present self-loops makes a fully connected network of
    N agents report exactly N^2 edges, the value a consensus state reaches.
    """
    if isinstance(network, StaticGraph):
        n = network.weights.shape[0]
        return int(np.count_nonzero(network.weights)) + n
    return int(sum(len(members) for members in network))


def degrees(sets_or_graph, scaling: Scaling, n: int | None = None, weights=None) -> np.ndarray:
    """Per-agent normalizers for interaction sums under the chosen scaling."""
    if isinstance(sets_or_graph, StaticGraph):
        w = sets_or_graph.weights
        n_agents = w.shape[0]
        if scaling is Scaling.BY_N:
            return np.full(n_agents, float(n_agents))
        if scaling is Scaling.BY_CARDINALITY:
            return np.count_nonzero(w, axis=1) + 1.0  # self always counted
        row = w.sum(axis=1)
        if np.any(row <= 0):
            raise ValueError("weight-sum scaling requires positive row sums")
        return row
    sets = sets_or_graph
    n_agents = len(sets) if n is None else n
    if scaling is Scaling.BY_N:
        return np.full(n_agents, float(n_agents))
    if scaling is Scaling.BY_CARDINALITY:
        return np.array([float(len(members)) for members in sets])
    if weights is None:
        raise ValueError("weight-sum scaling needs explicit weights")
    return np.array([float(np.sum(weights[i, members])) for i, members in enumerate(sets)])
