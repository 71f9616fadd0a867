"""Interaction kernels a(.), influence functions phi(.), and their tail integrals.

Kernels map a nonnegative pairwise distance to an interaction strength.  The
tail integral of a kernel decides membership in the flocking/consensus
regions, so it carries a tight accuracy contract (closed form where available,
adaptive quadrature elsewhere).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate as _quadpack

from .core import Ensemble

__all__ = [
    "PowerLaw",
    "Constant",
    "Tabulated",
    "JabinMotsch",
    "Morse",
    "two_agent_demo",
    "jm_quadratic",
    "evaluate",
    "tail_integral",
    "jm_admissible",
    "JMReport",
    "morse_energy_and_gradient",
    "load_tabulated",
]


@dataclass(frozen=True)
class PowerLaw:
    """a(s) = amplitude / (1 + s^2)^beta, positive and nonincreasing."""

    beta: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.amplitude <= 0:
            raise ValueError("amplitude must be positive")


@dataclass(frozen=True)
class Constant:
    value: float = 1.0

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("constant kernel must be nonnegative")


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear kernel from samples on [0, s_max]; zero beyond s_max.

    ``monotonicity`` is a declared property ("nonincreasing" models the usual
    distance-decaying kernels, "nondecreasing" the opposite regime where
    far-apart agents interact more strongly); it is spot-checked on the grid.
    """

    grid: np.ndarray
    values: np.ndarray
    monotonicity: str = "nonincreasing"

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
            raise ValueError("grid and values must be matching 1D arrays of length >= 2")
        if grid[0] != 0 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must start at 0 and increase strictly")
        if np.any(values < 0):
            raise ValueError("kernel samples must be nonnegative")
        if self.monotonicity not in ("nonincreasing", "nondecreasing"):
            raise ValueError("monotonicity must be 'nonincreasing' or 'nondecreasing'")
        d = np.diff(values)
        if self.monotonicity == "nonincreasing" and np.any(d > 1e-12):
            raise ValueError("samples are not nonincreasing")
        if self.monotonicity == "nondecreasing" and np.any(d < -1e-12):
            raise ValueError("samples are not nondecreasing")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class JabinMotsch:
    """Influence function phi with compact support in [0, 1].

    ``func`` receives the *squared* inter-agent distance, following the
    normalized-drift opinion model that evaluates phi at |x_i - x_j|^2.
    """

    func: Callable[[np.ndarray], np.ndarray]
    name: str = "phi"


@dataclass(frozen=True)
class Morse:
    """Exponential pair potential with repulsive and attractive ranges.

    Default convention: w(s) = C_r exp(-s/l_r) - C_a exp(-s/l_a), so that
    l_a > l_r with C_r > C_a gives short-range repulsion and long-range
    attraction.  ``both_positive=True`` selects the all-repulsive variant in
    which the attractive exponential also enters with a plus sign.
    """

    c_rep: float
    c_att: float
    l_rep: float
    l_att: float
    both_positive: bool = False

    def __post_init__(self):
        for name in ("c_rep", "c_att", "l_rep", "l_att"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def two_agent_demo() -> PowerLaw:
    """The kernel a(s) = 2/(1+s^2) used by the two-agent escape example."""
    return PowerLaw(beta=1.0, amplitude=2.0)


def jm_quadratic() -> JabinMotsch:
    """phi(r) = (1 - r)_+^2: admissible with |phi'|^2 = 4 phi."""

    def phi(r):
        return np.clip(1.0 - np.asarray(r, dtype=float), 0.0, None) ** 2

    return JabinMotsch(func=phi, name="(1-r)+^2")


def evaluate(kernel, s):
    """Evaluate a kernel at distance(s) s >= 0.  Accepts scalars or arrays."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise ValueError("kernel argument must be nonnegative")
    if isinstance(kernel, PowerLaw):
        out = kernel.amplitude / (1.0 + s_arr * s_arr) ** kernel.beta
    elif isinstance(kernel, Constant):
        out = np.full_like(s_arr, kernel.value)
    elif isinstance(kernel, Tabulated):
        out = np.interp(s_arr, kernel.grid, kernel.values, right=0.0)
    elif isinstance(kernel, JabinMotsch):
        out = np.asarray(kernel.func(s_arr), dtype=float)
    elif isinstance(kernel, Morse):
        rep = kernel.c_rep * np.exp(-s_arr / kernel.l_rep)
        att = kernel.c_att * np.exp(-s_arr / kernel.l_att)
        out = rep + att if kernel.both_positive else rep - att
    else:
        raise TypeError(f"unknown kernel {type(kernel).__name__}")
    if np.isscalar(s) or s_arr.ndim == 0:
        return float(out)
    return out


def tail_integral(kernel, lower: float, stretch: float = 1.0) -> float:
    """Integral of a(stretch * r) dr from ``lower`` to infinity.

    For the power-law kernel with beta = 1 the arctangent closed form is used;
    other integrable cases go through adaptive Gauss-Kronrod quadrature with
    relative tolerance 1e-10.  A divergent tail (power law with beta <= 1/2,
    or a positive constant kernel) is reported as ``inf``.
    """
    if lower < 0:
        raise ValueError("lower must be nonnegative")
    if stretch <= 0:
        raise ValueError("stretch must be positive")

    if isinstance(kernel, PowerLaw):
        if kernel.beta <= 0.5:
            return math.inf
        if kernel.beta == 1.0:
            return (kernel.amplitude / stretch) * (math.pi / 2 - math.atan(stretch * lower))
        # substitute u = stretch * r; integrand decays like u^(-2 beta)
        val, _err = _quadpack.quad(
            lambda u: kernel.amplitude / (1.0 + u * u) ** kernel.beta,
            stretch * lower,
            math.inf,
            epsabs=1e-12,
            epsrel=1e-10,
            limit=200,
        )
        return val / stretch
    if isinstance(kernel, Constant):
        return 0.0 if kernel.value == 0 else math.inf
    if isinstance(kernel, Tabulated):
        s_max = float(kernel.grid[-1])
        upper = s_max / stretch
        if lower >= upper:
            return 0.0
        val, _err = _quadpack.quad(
            lambda r: float(np.interp(stretch * r, kernel.grid, kernel.values, right=0.0)),
            lower,
            upper,
            epsabs=1e-12,
            epsrel=1e-10,
            limit=200,
            points=list(kernel.grid / stretch),
        )
        return val
    raise TypeError(f"tail integral is not defined for {type(kernel).__name__}")


@dataclass(frozen=True)
class JMReport:
    admissible: bool
    constant: float | None
    reason: str


def jm_admissible(kernel: JabinMotsch, grid_size: int = 2001, eps: float = 1e-3) -> JMReport:
    """Grid-check the clustering conditions on an influence function.

    Checks, on a uniform grid over [0, 1]:
      1. compact support in [0, 1] (zero beyond 1),
      2. strict positivity and bounded difference quotients on [0, 1 - eps],
      3. a finite C with |phi'(r)|^2 <= C phi(r) wherever phi > 0.

    Returns the smallest C found on the grid, or the first failed condition.
    """
    if not isinstance(kernel, JabinMotsch):
        raise TypeError("jm_admissible applies to influence functions only")
    r = np.linspace(0.0, 1.0, grid_size)
    phi = np.asarray(kernel.func(r), dtype=float)

    beyond = np.linspace(1.0 + 1e-9, 3.0, 64)
    if np.any(np.abs(np.asarray(kernel.func(beyond), dtype=float)) > 1e-12):
        return JMReport(False, None, "support extends beyond [0, 1]")
    if np.any(phi < -1e-12):
        return JMReport(False, None, "negative values on [0, 1]")

    inner = r <= 1.0 - eps
    if np.any(phi[inner] <= 0):
        return JMReport(False, None, f"not strictly positive on [0, {1 - eps}]")

    h = r[1] - r[0]
    dphi = np.gradient(phi, h)
    if not np.all(np.isfinite(dphi[inner])) or np.max(np.abs(dphi[inner])) > 1e6:
        return JMReport(False, None, "difference quotients blow up inside the support")

    positive = phi > 1e-15
    ratio = dphi[positive] ** 2 / phi[positive]
    c = float(np.max(ratio))
    if not math.isfinite(c):
        return JMReport(False, None, "|phi'|^2 / phi unbounded on the grid")
    return JMReport(True, c, "ok")


def _morse_pair(kernel: Morse, dist: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pair energy w(s) and derivative w'(s) at the given distances."""
    rep = kernel.c_rep * np.exp(-dist / kernel.l_rep)
    att = kernel.c_att * np.exp(-dist / kernel.l_att)
    sign = 1.0 if kernel.both_positive else -1.0
    w = rep + sign * att
    dw = -rep / kernel.l_rep - sign * att / kernel.l_att
    return w, dw


def morse_energy_and_gradient(ensemble: Ensemble, kernel: Morse) -> tuple[float, np.ndarray]:
    """Total pair energy sum_{i<j} w(|x_i - x_j|) and its exact gradient.

    The returned gradient row i is the force term entering the self-propelled
    particle dynamics.  Coincident agents make the gradient direction
    undefined and are rejected.
    """
    x = ensemble.positions
    n = x.shape[0]
    if n < 2:
        raise ValueError("need at least two agents")
    diffs = x[:, None, :] - x[None, :, :]
    dist = np.sqrt(np.sum(diffs * diffs, axis=-1))
    off = ~np.eye(n, dtype=bool)
    if np.any(dist[off] == 0.0):
        raise ValueError("coincident agents: pair potential is singular at distance 0")

    w, dw = _morse_pair(kernel, dist)
    energy = 0.5 * float(np.sum(w[off]))

    np.fill_diagonal(dist, 1.0)  # avoid 0/0 on the diagonal; masked below anyway
    scale = dw / dist
    np.fill_diagonal(scale, 0.0)
    grad = np.sum(scale[:, :, None] * diffs, axis=1)
    return energy, grad


def load_tabulated(path, monotonicity: str = "nonincreasing") -> Tabulated:
    """Read a two-column text file of (s, a(s)) samples."""
    data = np.loadtxt(path)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns (s, a(s))")
    return Tabulated(grid=data[:, 0], values=data[:, 1], monotonicity=monotonicity)
