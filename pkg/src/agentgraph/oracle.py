"""Serial reference implementations used as ground truth in tests.

These deliberately share no code with the engine or partitioner: they hold
the whole graph in memory as dense in-/out-adjacency and compute results the
straightforward way (dense synchronous iteration, binary-heap Dijkstra,
union-find).  Desk-scale only.
"""

from __future__ import annotations

import csv
import heapq
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, ParameterError
from .graph import GID_DTYPE, EdgeStream

INF_U64 = np.uint64(np.iinfo(np.uint64).max)


@dataclass
class OracleResult:
    """Per-vertex values keyed by global id, plus provenance."""

    gids: np.ndarray
    values: np.ndarray
    algorithm: str
    params: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return dict(zip(self.gids.tolist(), self.values.tolist()))

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["global_id", "value"])
            for g, v in zip(self.gids.tolist(), self.values.tolist()):
                writer.writerow([g, v])


def read_result_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a (global_id,value) CSV; values parse as int when possible."""
    gids = []
    values = []
    with Path(path).open("r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["global_id", "value"]:
            raise FormatError(f"{path}: expected header 'global_id,value'")
        for row in reader:
            if len(row) < 2:
                raise FormatError(f"{path}: short row {row!r}")
            gids.append(int(row[0]))
            values.append(row[1])
    gid_arr = np.array(gids, dtype=GID_DTYPE)
    try:
        val_arr = np.array([int(v) for v in values], dtype=np.uint64)
    except ValueError:
        val_arr = np.array([float(v) for v in values], dtype=np.float64)
    return gid_arr, val_arr


def _dense(stream: EdgeStream) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    vids = stream.vertex_ids()
    if stream.num_vertices is not None:
        return vids, stream.src.astype(np.int64), stream.dst.astype(np.int64)
    return vids, np.searchsorted(vids, stream.src), np.searchsorted(vids, stream.dst)


def serial_pagerank(
    stream: EdgeStream, iterations: int, damping: float = 0.85, base: float = 0.15
) -> OracleResult:
    """Dense synchronous iteration of the rank recurrence, gathering over
    in-edges with whole-graph out-degrees."""
    if iterations < 0:
        raise ParameterError("iterations must be >= 0")
    vids, gu, gv = _dense(stream)
    n = len(vids)
    odeg = np.bincount(gu, minlength=n).astype(np.float64)
    pr = np.full(n, base, dtype=np.float64)
    # Gather form: group contributions by target.
    order = np.argsort(gv, kind="stable")
    gv_sorted = gv[order]
    gu_sorted = gu[order]
    bounds = np.searchsorted(gv_sorted, np.arange(n + 1))
    safe_odeg = np.where(odeg > 0, odeg, 1.0)
    # reduceat over only the non-empty groups: each such start's group runs to
    # the next non-empty start, which equals its own end.
    nonempty = bounds[:-1] < bounds[1:]
    starts = bounds[:-1][nonempty]
    for _ in range(iterations):
        sums = np.zeros(n)
        if len(starts):
            shares = pr[gu_sorted] / safe_odeg[gu_sorted]
            sums[nonempty] = np.add.reduceat(shares, starts)
        pr = base + damping * sums
    return OracleResult(
        vids, pr, "pagerank", {"iterations": iterations, "damping": damping, "base": base}
    )


def serial_dijkstra(stream: EdgeStream, source: int) -> OracleResult:
    """Exact shortest distances with a binary heap; unreachable stays at the
    unsigned-64 maximum sentinel."""
    if stream.weight is None:
        raise ParameterError("dijkstra requires edge weights")
    vids, gu, gv = _dense(stream)
    n = len(vids)
    src_pos = np.searchsorted(vids, np.uint64(source))
    if src_pos >= n or vids[src_pos] != np.uint64(source):
        raise ParameterError(f"source vertex {source} not in the graph")
    order = np.argsort(gu, kind="stable")
    heads = gu[order]
    tails = gv[order].tolist()
    w_sorted = stream.weight[order].astype(np.int64).tolist()
    bounds = np.searchsorted(heads, np.arange(n + 1)).tolist()
    dist = [None] * n
    heap = [(0, int(src_pos))]
    while heap:
        d, u = heapq.heappop(heap)
        if dist[u] is not None:
            continue
        dist[u] = d
        for e in range(bounds[u], bounds[u + 1]):
            v = tails[e]
            if dist[v] is None:
                heapq.heappush(heap, (d + w_sorted[e], v))
    out = np.full(n, INF_U64, dtype=np.uint64)
    for i, d in enumerate(dist):
        if d is not None:
            out[i] = d
    return OracleResult(vids, out, "sssp", {"source": int(source)})


def serial_union_find_cc(stream: EdgeStream) -> OracleResult:
    """Union-find; the component representative is its minimum global id."""
    vids, gu, gv = _dense(stream)
    n = len(vids)
    parent = list(range(n))

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for a, b in zip(gu.tolist(), gv.tolist()):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra
    roots = np.fromiter((find(i) for i in range(n)), dtype=np.int64, count=n)
    labels = np.full(n, INF_U64, dtype=np.uint64)
    np.minimum.at(labels, roots, vids)
    return OracleResult(vids, labels[roots], "cc", {})
