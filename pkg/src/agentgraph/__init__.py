"""Graph-parallel engine: scatter-combine execution over agent-graph partitions."""

from .errors import (
    AgentGraphError,
    ConfigurationError,
    FormatError,
    InputError,
    ParameterError,
    RoutingFault,
)
from .graph import CsrGraph, EdgeStream, IdIndex, PropertyColumn, build_csr, read_edge_list
from .partition import (
    AgentGraphPartition,
    HeuristicState,
    PartitionMetrics,
    PlacementResult,
    build_agent_graph,
    compute_metrics,
    compute_placement_metrics,
    partition_stream,
)
from .rmat import RmatParams, assign_weights, generate_rmat

__version__ = "0.1.0"

__all__ = [
    "AgentGraphError",
    "AgentGraphPartition",
    "ConfigurationError",
    "CsrGraph",
    "EdgeStream",
    "FormatError",
    "HeuristicState",
    "IdIndex",
    "InputError",
    "ParameterError",
    "PartitionMetrics",
    "PlacementResult",
    "PropertyColumn",
    "RmatParams",
    "RoutingFault",
    "assign_weights",
    "build_agent_graph",
    "build_csr",
    "compute_metrics",
    "compute_placement_metrics",
    "generate_rmat",
    "partition_stream",
    "read_edge_list",
]
