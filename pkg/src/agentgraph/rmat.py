"""Deterministic R-MAT synthetic graph generation.

Each edge is drawn by the standard recursive quadrant descent: at every one
of ``scale`` levels a quadrant of the adjacency matrix is chosen with
probabilities (a, b, c, d) and contributes one source bit and one target bit.
Randomness comes from the SplitMix64 counter stream keyed by
(seed, edge index, level), so output is reproducible edge by edge and
generation may be chunked by edge ranges without changing content or order.

Defaults follow the Graph500 convention: edge factor 16, a=0.57, b=c=0.19,
d=0.05, raw output (duplicate edges and self-loops kept, no id scrambling).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import ParameterError
from .graph import GID_DTYPE, WEIGHT_DTYPE, EdgeStream

_STREAM_QUADRANT = 0x51
_STREAM_WEIGHT = 0x57
_STREAM_PERMUTE = 0x50

_PROB_SUM_TOL = 1e-9


@dataclass(frozen=True)
class RmatParams:
    """Generator knobs: 2**scale vertices, edge_factor * 2**scale edges."""

    scale: int
    edge_factor: int = 16
    a: float = 0.57
    b: float = 0.19
    c: float = 0.19
    d: float = 0.05
    seed: int = 1

    def __post_init__(self):
        if self.scale < 1:
            raise ParameterError("scale must be >= 1")
        if self.edge_factor < 1:
            raise ParameterError("edge_factor must be >= 1")
        probs = (self.a, self.b, self.c, self.d)
        if any(p < 0 for p in probs):
            raise ParameterError("quadrant probabilities must be non-negative")
        if abs(sum(probs) - 1.0) > _PROB_SUM_TOL:
            raise ParameterError("quadrant probabilities must sum to 1")

    @property
    def num_vertices(self) -> int:
        return 1 << self.scale

    @property
    def num_edges(self) -> int:
        return self.edge_factor * self.num_vertices


def generate_rmat(params: RmatParams, permute_ids: bool = False) -> EdgeStream:
    """Generate the full edge stream for ``params``.

    ``permute_ids`` applies a seeded random bijection on vertex ids, hiding
    the correlation between id magnitude and degree that raw R-MAT exhibits.
    """
    n_edges = params.num_edges
    src = np.zeros(n_edges, dtype=GID_DTYPE)
    dst = np.zeros(n_edges, dtype=GID_DTYPE)
    # Quadrant thresholds: [a, a+b, a+b+c]; searchsorted yields 0..3 with
    # quadrant bit layout (source_bit, target_bit) = (q >> 1, q & 1).
    cuts = np.array([params.a, params.a + params.b, params.a + params.b + params.c])
    edge_idx = np.arange(n_edges, dtype=np.uint64)
    one = np.uint64(1)
    for level in range(params.scale):
        draw_idx = edge_idx * np.uint64(params.scale) + np.uint64(level)
        u = rng.unit_at(params.seed, _STREAM_QUADRANT, draw_idx)
        q = np.searchsorted(cuts, u, side="right").astype(np.uint64)
        src = (src << one) | (q >> one)
        dst = (dst << one) | (q & one)
    if permute_ids:
        perm = _seeded_permutation(params.num_vertices, params.seed)
        src = perm[src]
        dst = perm[dst]
    return EdgeStream(src, dst, None, num_vertices=params.num_vertices)


def _seeded_permutation(n: int, seed: int) -> np.ndarray:
    """Random bijection on [0, n): rank vertices by their hashed key."""
    keys = rng.u64_stream(seed, _STREAM_PERMUTE, 0, n)
    perm = np.empty(n, dtype=GID_DTYPE)
    perm[np.argsort(keys, kind="stable")] = np.arange(n, dtype=GID_DTYPE)
    return perm


def assign_weights(stream: EdgeStream, low: int, high: int, seed: int) -> EdgeStream:
    """Attach independent uniform integer weights in [low, high] to every edge."""
    if low > high:
        raise ParameterError(f"weight range is empty: [{low}, {high}]")
    if low < 0 or high > np.iinfo(WEIGHT_DTYPE).max:
        raise ParameterError("weights must fit an unsigned 32-bit integer")
    w = rng.randint_stream(seed, _STREAM_WEIGHT, 0, len(stream), low, high)
    return EdgeStream(stream.src, stream.dst, w.astype(WEIGHT_DTYPE), stream.num_vertices)
