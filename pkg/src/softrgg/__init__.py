"""Noisy high-dimensional random geometric graphs: sampling, signed
subgraph statistics, Monte Carlo detection experiments, and the closed
forms and bounds that calibrate them.

The edge model interpolates between a pure Erdos-Renyi graph (q = 0) and
a hard spherical-cap geometric graph (q = 1): each pair connects with
probability (1 - q) p + q [inner product above the cap threshold].
"""

from .model import (
    AdjacencySample,
    LatentMatrix,
    MODES,
    ModelParams,
    Thresholds,
    edge_marginal_estimate,
    sample_graph,
    sample_latent,
    sphere_threshold,
    substream,
    thresholds,
)
from .mc import (
    ExperimentConfig,
    ExperimentRecord,
    GridPoint,
    StatisticSpec,
    detection_experiment,
    estimate_statistic,
    replicate_values,
    sweep,
)
from .specfun import ConvergenceError, DomainError
from .stats import (
    StatisticValue,
    UnsupportedOrderError,
    signed_clique_stat,
    signed_cycle_stat,
    signed_pattern_estimate,
    signed_triangle_stat,
    subgraph_probability_estimate,
)
from .theory import (
    HalfMomentTable,
    PhasePoint,
    eta_d,
    gamma_d,
    half_moment_table,
    phase_classify,
    signed_triangle_mean_bounds,
    threshold_gap_constants,
    tv_bound_report,
    wishart_logdet_mean,
)

__version__ = "0.1.0"

__all__ = [
    "AdjacencySample",
    "ConvergenceError",
    "DomainError",
    "ExperimentConfig",
    "ExperimentRecord",
    "GridPoint",
    "HalfMomentTable",
    "LatentMatrix",
    "MODES",
    "ModelParams",
    "PhasePoint",
    "StatisticSpec",
    "StatisticValue",
    "Thresholds",
    "UnsupportedOrderError",
    "detection_experiment",
    "edge_marginal_estimate",
    "estimate_statistic",
    "eta_d",
    "gamma_d",
    "half_moment_table",
    "phase_classify",
    "replicate_values",
    "sample_graph",
    "sample_latent",
    "signed_clique_stat",
    "signed_cycle_stat",
    "signed_pattern_estimate",
    "signed_triangle_mean_bounds",
    "signed_triangle_stat",
    "sphere_threshold",
    "subgraph_probability_estimate",
    "substream",
    "sweep",
    "threshold_gap_constants",
    "thresholds",
    "tv_bound_report",
    "wishart_logdet_mean",
    "__version__",
]
