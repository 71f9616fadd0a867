"""Multi-agent consensus and flocking laboratory.

Subpackages map to concerns: ``core`` (state and diagnostics), ``network``
(neighborhood rules), ``potential`` (interaction kernels), ``dynamics``
(models and integrators), ``control`` (feedback laws and regions),
``meanfield`` (particle and binary-interaction schemes), ``lab`` (experiment
presets and persistence).
"""

from .core import (
    ClusterSummary,
    Diagnostics,
    Ensemble,
    RunRecord,
    barycenter_and_mean_velocity,
    consensus_time,
    detect_clusters,
    spatial_variance,
    velocity_variance,
)

__version__ = "0.1.0"

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
    "__version__",
]
