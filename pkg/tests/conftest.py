"""Shared fixtures: cached synthetic graphs and their partitionings."""

from __future__ import annotations

import numpy as np
import pytest

from agentgraph.graph import edge_stream_from_pairs
from agentgraph.partition import build_agent_graph, partition_stream
from agentgraph.rmat import RmatParams, assign_weights, generate_rmat

GRAPH_SEED = 101
WEIGHT_SEED = 202
K_SET = (1, 4, 16)


@pytest.fixture(scope="session")
def rmat14():
    return generate_rmat(RmatParams(scale=14, seed=GRAPH_SEED))


@pytest.fixture(scope="session")
def rmat14_weighted(rmat14):
    return assign_weights(rmat14, 1, 65535, seed=WEIGHT_SEED)


@pytest.fixture(scope="session")
def rmat14_sym(rmat14):
    return rmat14.symmetrized()


@pytest.fixture(scope="session")
def rmat10():
    return generate_rmat(RmatParams(scale=10, seed=GRAPH_SEED))


@pytest.fixture(scope="session")
def rmat10_weighted(rmat10):
    return assign_weights(rmat10, 1, 65535, seed=WEIGHT_SEED)


@pytest.fixture(scope="session")
def partitions14(rmat14, rmat14_weighted, rmat14_sym):
    """All partitionings used by the oracle-equivalence acceptance runs:
    {(graph kind, k): (stream, placement, partitions)}, plus build seconds."""
    import time

    table = {}
    build_seconds = {}
    for kind, stream in (("plain", rmat14), ("weighted", rmat14_weighted), ("sym", rmat14_sym)):
        for k in K_SET:
            t0 = time.perf_counter()
            placement = partition_stream(stream, k, "greedy-coordinated")
            parts = build_agent_graph(stream, placement)
            build_seconds[(kind, k)] = time.perf_counter() - t0
            table[(kind, k)] = (stream, placement, parts)
    table["build_seconds"] = build_seconds
    return table


@pytest.fixture
def chain_weighted():
    # 0 -2-> 1 -3-> 2
    return edge_stream_from_pairs([(0, 1, 2), (1, 2, 3)])


@pytest.fixture
def two_triangles():
    return edge_stream_from_pairs([(1, 2), (2, 3), (3, 1), (7, 8), (8, 9), (9, 7)]).symmetrized()


def random_stream(n_vertices: int, n_edges: int, seed: int, weighted: bool = False):
    """Uniform random endpoints; a helper for property-style tests."""
    rng = np.random.Generator(np.random.PCG64(seed))
    src = rng.integers(0, n_vertices, n_edges, dtype=np.uint64)
    dst = rng.integers(0, n_vertices, n_edges, dtype=np.uint64)
    w = rng.integers(1, 1000, n_edges, dtype=np.uint32) if weighted else None
    from agentgraph.graph import EdgeStream

    return EdgeStream(src, dst, w, num_vertices=n_vertices)
