"""Benchmark vertex programs: PageRank, single-source shortest paths,
connected components.

All three factor their vertex computation into edge-level messages folded by
a commutative, associative operator: PageRank sums weighted rank shares, the
two traversals take running minima.  State columns are laid out per the
runtime convention: PageRank's vertex and scatter columns alias one physical
array (its scatter payload is the rank itself), while the traversals keep the
previously applied value in a distinct scatter column.
"""

from __future__ import annotations

import numpy as np

from . import wire
from .engine import InitSpec, VertexProgram
from .errors import ParameterError

INF_U64 = np.uint64(np.iinfo(np.uint64).max)
NO_PREDECESSOR = int(INF_U64)


def pagerank_program(damping: float = 0.85, base: float = 0.15) -> VertexProgram:
    """Iterative rank propagation: rank = base + damping * sum of in-shares.

    Every vertex scatters rank/out_degree along all out-edges each superstep
    (out_degree is the whole-graph count, not the local row length) and stays
    scatter-active; run with a superstep cap.  Vertices with no out-edges
    scatter nothing; no rank redistribution for them.
    """
    if not 0.0 < damping < 1.0:
        raise ParameterError("damping must lie in (0, 1)")

    def scatter(values, weights, out_degrees):
        return values / out_degrees

    def apply(vertex, combined):
        return base + damping * combined, None, None

    return VertexProgram(
        name="pagerank",
        value_dtype=np.dtype(np.float64),
        combine_fn=np.add,
        combine_identity=0.0,
        scatter_fn=scatter,
        apply_fn=apply,
        assert_to_halt_fn=lambda: True,
        combine_activates_apply=True,
        needs_weights=False,
        alias_vertex_scatter=True,
        wire_format=wire.FMT_F64,
        update_format=wire.FMT_F64,
    )


def pagerank_init(base: float = 0.15) -> InitSpec:
    # Starting at the empty-sum fixed point keeps vertices that never
    # receive a message consistent with the dense iteration.
    return InitSpec(vertex_default=float(base), active="all")


def _saturating_add_u64(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    w = weights.astype(np.uint64)
    room = INF_U64 - values
    with np.errstate(over="ignore"):
        summed = values + w
    return np.where(w > room, INF_U64, summed)


def sssp_program(source: int, record_predecessor: bool = False) -> VertexProgram:
    """Label-correcting shortest paths from ``source``.

    Scatter relaxes each out-edge with the last applied distance; combine is
    min (carrying the upstream vertex id when predecessors are recorded, ties
    to the smaller id); apply keeps strict improvements and re-activates the
    vertex; assert_to_halt deactivates after scattering.  Distances are
    unsigned 64-bit with a saturating add so unreached state never wraps.
    """

    def scatter(values, weights, out_degrees):
        return _saturating_add_u64(values, weights)

    if record_predecessor:

        def apply(vertex, combined, vertex_aux, combined_aux):
            improved = combined < vertex
            new_v = np.where(improved, combined, vertex)
            new_aux = np.where(improved, combined_aux, vertex_aux)
            return new_v, new_v, improved, new_aux

    else:

        def apply(vertex, combined):
            improved = combined < vertex
            new_v = np.where(improved, combined, vertex)
            return new_v, new_v, improved

    return VertexProgram(
        name="sssp",
        value_dtype=np.dtype(np.uint64),
        combine_fn=np.minimum,
        combine_identity=INF_U64,
        scatter_fn=scatter,
        apply_fn=apply,
        assert_to_halt_fn=lambda: False,
        combine_activates_apply=True,
        needs_weights=True,
        track_aux=record_predecessor,
        aux_identity=NO_PREDECESSOR,
        wire_format=wire.FMT_U64_PAIR if record_predecessor else wire.FMT_U64,
        update_format=wire.FMT_U64,
    )


def sssp_init(source: int) -> InitSpec:
    return InitSpec(
        vertex_default=INF_U64,
        vertex_overrides={int(source): 0},
        aux_default=NO_PREDECESSOR,
        active=[int(source)],
    )


def cc_program() -> VertexProgram:
    """Connected components by min-label propagation on a symmetrized graph.

    Every vertex starts active with its own id as label; labels flow along
    out-edges, combine by min, and a vertex re-activates whenever its label
    strictly drops.  Converges to the component-minimum id everywhere.
    """

    def scatter(values, weights, out_degrees):
        return values

    def apply(vertex, combined):
        improved = combined < vertex
        new_v = np.where(improved, combined, vertex)
        return new_v, new_v, improved

    return VertexProgram(
        name="cc",
        value_dtype=np.dtype(np.uint64),
        combine_fn=np.minimum,
        combine_identity=INF_U64,
        scatter_fn=scatter,
        apply_fn=apply,
        assert_to_halt_fn=lambda: False,
        combine_activates_apply=True,
        needs_weights=False,
        wire_format=wire.FMT_U64,
        update_format=wire.FMT_U64,
    )


def cc_init() -> InitSpec:
    return InitSpec(vertex_default=lambda gids: gids.astype(np.uint64), active="all")


PROGRAMS = ("pagerank", "sssp", "cc")
