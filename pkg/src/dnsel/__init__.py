"""Deterministic node selection for semi-supervised graph learning."""

from .graph_io import (
    DatasetStats,
    Graph,
    GraphFormatError,
    GraphValidationError,
    from_edges,
    karate_club,
    load_container,
    load_dataset,
    load_edgelist,
    save_container,
    validate,
)
from .golf import (
    LeadingForest,
    NO_PARENT,
    assign_leading_nodes,
    build_forest,
    compute_aggregated_features,
    compute_delta,
    compute_density,
    compute_gamma,
    cut_forest,
    normalized_adjacency,
)
from .select import (
    InfeasibleSelectionError,
    LabelSet,
    SelectionConfig,
    SizeGuardError,
    brute_force_select,
    budget_for_rate,
    dns,
    evaluate_objective,
    select_labels,
)
from .gcn import GcnModel, TrainConfig, evaluate, forward, loss_and_gradients, train

__version__ = "0.1.0"

__all__ = [
    "DatasetStats", "Graph", "GraphFormatError", "GraphValidationError",
    "from_edges", "karate_club", "load_container", "load_dataset",
    "load_edgelist", "save_container", "validate",
    "LeadingForest", "NO_PARENT", "assign_leading_nodes", "build_forest",
    "compute_aggregated_features", "compute_delta", "compute_density",
    "compute_gamma", "cut_forest", "normalized_adjacency",
    "InfeasibleSelectionError", "LabelSet", "SelectionConfig", "SizeGuardError",
    "brute_force_select", "budget_for_rate", "dns", "evaluate_objective",
    "select_labels",
    "GcnModel", "TrainConfig", "evaluate", "forward", "loss_and_gradients",
    "train",
    "__version__",
]
