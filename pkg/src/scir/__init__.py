"""SCIR epidemics on two-layer temporal networks.

Simulation (exact event-driven), mean-field ODE approximations, closed-form
epidemic thresholds, and budget-constrained activity-rate optimization.
"""

__version__ = "0.1.0"

from .netgen import (
    LayeredNetwork,
    NetworkError,
    NodeClassAssignment,
    average_degree,
    closeness_centrality,
    gen_barabasi_albert,
    gen_erdos_renyi,
    gen_random_regular,
    load_two_layer_edge_list,
)
from .params import (
    ActivityRates,
    EpidemicParams,
    HomogeneousParams,
    ParameterError,
    activity_probability,
    gamma1_for_activity,
)
from .threshold import ThresholdReport, build_ngm, classify_stability, r0, r0_components

__all__ = [
    "LayeredNetwork",
    "NetworkError",
    "NodeClassAssignment",
    "ActivityRates",
    "EpidemicParams",
    "HomogeneousParams",
    "ParameterError",
    "ThresholdReport",
    "activity_probability",
    "average_degree",
    "build_ngm",
    "classify_stability",
    "closeness_centrality",
    "gamma1_for_activity",
    "gen_barabasi_albert",
    "gen_erdos_renyi",
    "gen_random_regular",
    "load_two_layer_edge_list",
    "r0",
    "r0_components",
    "__version__",
]
