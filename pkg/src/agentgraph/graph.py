"""In-memory directed property graph: edge streams, CSR, id indexing, file I/O.

Global vertex ids are arbitrary unsigned 64-bit integers.  Local ids are dense
unsigned 32-bit integers assigned per partition (or per whole-graph view).
All containers here are immutable after construction and safe for concurrent
readers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .errors import FormatError, InputError, ParameterError

GID_DTYPE = np.uint64
LID_DTYPE = np.uint32
WEIGHT_DTYPE = np.uint32

# Fixed-width binary edge record: little-endian u64 source, u64 target and,
# in the weighted variant, a trailing u32 weight.
_BIN_PLAIN = np.dtype([("src", "<u8"), ("dst", "<u8")])
_BIN_WEIGHTED = np.dtype([("src", "<u8"), ("dst", "<u8"), ("w", "<u4")])

COMMENT_PREFIX = "#"


@dataclass(frozen=True)
class EdgeStream:
    """A directed multigraph as parallel arrays of edge endpoints.

    ``num_vertices`` optionally declares a dense vertex universe [0, n); when
    absent the vertex set is the set of endpoint ids actually present.
    Duplicate edges and self-loops are preserved.
    """

    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray | None = None
    num_vertices: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "src", np.ascontiguousarray(self.src, dtype=GID_DTYPE))
        object.__setattr__(self, "dst", np.ascontiguousarray(self.dst, dtype=GID_DTYPE))
        if self.weight is not None:
            w = np.ascontiguousarray(self.weight, dtype=WEIGHT_DTYPE)
            if len(w) != len(self.src):
                raise ParameterError("weight column length does not match edge count")
            object.__setattr__(self, "weight", w)
        if len(self.src) != len(self.dst):
            raise ParameterError("source and target columns differ in length")
        if self.num_vertices is not None:
            if self.num_vertices <= 0:
                raise ParameterError("declared vertex count must be positive")
            if len(self.src) and int(max(self.src.max(), self.dst.max())) >= self.num_vertices:
                raise ParameterError("endpoint id outside the declared vertex universe")

    def __len__(self) -> int:
        return len(self.src)

    @property
    def weighted(self) -> bool:
        return self.weight is not None

    def vertex_ids(self) -> np.ndarray:
        """Sorted global ids of the vertex set (declared universe wins)."""
        if self.num_vertices is not None:
            return np.arange(self.num_vertices, dtype=GID_DTYPE)
        if not len(self.src):
            return np.empty(0, dtype=GID_DTYPE)
        return np.unique(np.concatenate([self.src, self.dst]))

    @property
    def vertex_count(self) -> int:
        if self.num_vertices is not None:
            return self.num_vertices
        return len(self.vertex_ids())

    def edges(self) -> Iterator[tuple[int, int] | tuple[int, int, int]]:
        """Iterate edges as python tuples, mainly for tests and tiny graphs."""
        if self.weight is None:
            yield from zip(self.src.tolist(), self.dst.tolist())
        else:
            yield from zip(self.src.tolist(), self.dst.tolist(), self.weight.tolist())

    def symmetrized(self) -> "EdgeStream":
        """Undirected view: every edge emitted in both directions."""
        src = np.concatenate([self.src, self.dst])
        dst = np.concatenate([self.dst, self.src])
        w = None if self.weight is None else np.concatenate([self.weight, self.weight])
        return EdgeStream(src, dst, w, self.num_vertices)


def edge_stream_from_pairs(pairs: Iterable, num_vertices: int | None = None) -> EdgeStream:
    """Build an EdgeStream from (u, v) or (u, v, w) tuples."""
    pairs = list(pairs)
    if not pairs:
        return EdgeStream(np.empty(0, GID_DTYPE), np.empty(0, GID_DTYPE), None, num_vertices)
    weighted = len(pairs[0]) == 3
    src = np.fromiter((p[0] for p in pairs), dtype=GID_DTYPE, count=len(pairs))
    dst = np.fromiter((p[1] for p in pairs), dtype=GID_DTYPE, count=len(pairs))
    w = None
    if weighted:
        w = np.fromiter((p[2] for p in pairs), dtype=WEIGHT_DTYPE, count=len(pairs))
    return EdgeStream(src, dst, w, num_vertices)


@dataclass(frozen=True)
class CsrGraph:
    """Compressed sparse row adjacency over dense local vertex ids.

    Out-edges of vertex ``v`` live at ``col_indices[row_offsets[v]:row_offsets[v+1]]``.
    Edge order within a row is the stable order of the build input.
    """

    row_offsets: np.ndarray
    col_indices: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "row_offsets", np.ascontiguousarray(self.row_offsets, dtype=np.uint64)
        )
        object.__setattr__(
            self, "col_indices", np.ascontiguousarray(self.col_indices, dtype=LID_DTYPE)
        )
        ro = self.row_offsets
        if len(ro) == 0 or ro[0] != 0:
            raise ParameterError("row_offsets must start at 0")
        if np.any(np.diff(ro.astype(np.int64)) < 0):
            raise ParameterError("row_offsets must be non-decreasing")
        if int(ro[-1]) != len(self.col_indices):
            raise ParameterError("row_offsets must end at the edge count")

    @property
    def vertex_count(self) -> int:
        return len(self.row_offsets) - 1

    @property
    def edge_count(self) -> int:
        return len(self.col_indices)

    def out_edges(self, v: int) -> np.ndarray:
        """Targets of v's out-edges (empty for sinks)."""
        if v < 0 or v >= self.vertex_count:
            raise ParameterError(f"vertex {v} out of range for {self.vertex_count} vertices")
        return self.col_indices[int(self.row_offsets[v]) : int(self.row_offsets[v + 1])]

    def out_degrees(self) -> np.ndarray:
        return np.diff(self.row_offsets).astype(np.int64)


def build_csr(
    sources: np.ndarray | Sequence[int],
    targets: np.ndarray | Sequence[int],
    vertex_count: int,
) -> tuple[CsrGraph, np.ndarray]:
    """Pack (source, target) pairs into CSR form.

    Returns the graph plus the permutation that maps input edge positions to
    CSR storage order, so parallel per-edge columns (weights) can follow.
    The permutation is a stable sort by source, preserving input order
    within each row.
    """
    src = np.asarray(sources, dtype=np.int64)
    dst = np.asarray(targets, dtype=np.int64)
    if len(src) != len(dst):
        raise ParameterError("sources and targets differ in length")
    if len(src) and (src.min() < 0 or src.max() >= vertex_count):
        raise ParameterError("source index out of range")
    if len(dst) and (dst.min() < 0 or dst.max() >= vertex_count):
        raise ParameterError("target index out of range")
    order = np.argsort(src, kind="stable")
    counts = np.bincount(src, minlength=vertex_count)
    row_offsets = np.zeros(vertex_count + 1, dtype=np.uint64)
    np.cumsum(counts, out=row_offsets[1:])
    return CsrGraph(row_offsets, dst[order].astype(LID_DTYPE)), order


@dataclass
class IdIndex:
    """Bidirectional translation between dense local ids and global ids.

    ``local_to_global`` is a flat array (hot-path lookup); ``global_to_local``
    is a hash map.  The two directions are mutually inverse.
    """

    local_to_global: np.ndarray
    global_to_local: dict = field(repr=False)

    @classmethod
    def from_globals(cls, gids: np.ndarray) -> "IdIndex":
        arr = np.ascontiguousarray(gids, dtype=GID_DTYPE)
        mapping = {int(g): i for i, g in enumerate(arr.tolist())}
        if len(mapping) != len(arr):
            raise ParameterError("duplicate global id in index")
        return cls(arr, mapping)

    def to_global(self, local: int) -> int:
        return int(self.local_to_global[local])

    def to_local(self, gid: int) -> int:
        try:
            return self.global_to_local[int(gid)]
        except KeyError:
            raise ParameterError(f"global id {gid} not present in index") from None

    def __len__(self) -> int:
        return len(self.local_to_global)


@dataclass(frozen=True)
class PropertyColumn:
    """A named flat array of fixed-width values indexed by local id."""

    name: str
    items: np.ndarray

    def __len__(self) -> int:
        return len(self.items)


def filter_vertices(ids: Sequence[int], rule: Callable[[int], bool]) -> list[int]:
    """Keep exactly the ids satisfying ``rule``, preserving order and duplicates."""
    return [i for i in ids if rule(i)]


# ---------------------------------------------------------------------------
# Edge-list file formats.  Text is the canonical interchange ("u v" or
# "u v w" per line, '#' comments); the binary variant exists for large inputs.
# ---------------------------------------------------------------------------


def read_edge_list(path: str | Path, weighted: bool = False) -> EdgeStream:
    """Parse a text edge list, reporting the line number of any malformed row."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"edge list not found: {path}")
    srcs: list[int] = []
    dsts: list[int] = []
    ws: list[int] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith(COMMENT_PREFIX):
                continue
            parts = line.split()
            if weighted and len(parts) < 3:
                raise FormatError(f"{path}:{lineno}: expected 'u v w', got {line!r}")
            if len(parts) not in (2, 3):
                raise FormatError(f"{path}:{lineno}: expected 2 or 3 fields, got {len(parts)}")
            try:
                u, v = int(parts[0]), int(parts[1])
                w = int(parts[2]) if weighted else 0
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-integer token in {line!r}") from None
            if u < 0 or v < 0 or w < 0:
                raise FormatError(f"{path}:{lineno}: negative value in {line!r}")
            srcs.append(u)
            dsts.append(v)
            if weighted:
                ws.append(w)
    src = np.array(srcs, dtype=GID_DTYPE)
    dst = np.array(dsts, dtype=GID_DTYPE)
    return EdgeStream(src, dst, np.array(ws, dtype=WEIGHT_DTYPE) if weighted else None)


def write_edge_list(stream: EdgeStream, path: str | Path) -> None:
    path = Path(path)
    cols = [stream.src, stream.dst] + ([stream.weight] if stream.weighted else [])
    table = np.stack([c.astype(np.uint64) for c in cols], axis=1)
    with path.open("w", encoding="utf-8") as fh:
        np.savetxt(fh, table, fmt="%d", delimiter=" ")


def read_edge_list_binary(path: str | Path, weighted: bool = False) -> EdgeStream:
    """Read fixed-width little-endian records (u64 src, u64 dst[, u32 weight])."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"edge list not found: {path}")
    dtype = _BIN_WEIGHTED if weighted else _BIN_PLAIN
    size = path.stat().st_size
    if size % dtype.itemsize != 0:
        raise FormatError(
            f"{path}: size {size} is not a multiple of the {dtype.itemsize}-byte record"
        )
    records = np.fromfile(path, dtype=dtype)
    w = records["w"].copy() if weighted else None
    return EdgeStream(records["src"].copy(), records["dst"].copy(), w)


def write_edge_list_binary(stream: EdgeStream, path: str | Path) -> None:
    dtype = _BIN_WEIGHTED if stream.weighted else _BIN_PLAIN
    records = np.empty(len(stream), dtype=dtype)
    records["src"] = stream.src
    records["dst"] = stream.dst
    if stream.weighted:
        records["w"] = stream.weight
    records.tofile(Path(path))
