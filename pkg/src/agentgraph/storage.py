"""On-disk layout for built partitions: one binary file per partition plus a
JSON manifest and metrics report.

Each partition file is a fixed header followed by length-prefixed
little-endian sections in a fixed order (master gids, agent tables, ragged
placement/presence arrays, out-degrees, CSR arrays, optional weights).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError, InputError
from .graph import CsrGraph
from .partition import AgentGraphPartition, PartitionMetrics

MAGIC = b"AGP1"
VERSION = 1
_HEAD = struct.Struct("<III QQ B")

MANIFEST_NAME = "manifest.json"
METRICS_NAME = "metrics.json"

_SECTIONS = (
    ("master_gids", "<u8"),
    ("scatter_gids", "<u8"),
    ("scatter_owner", "<i4"),
    ("combiner_gids", "<u8"),
    ("combiner_owner", "<i4"),
    ("scatter_placement_offsets", "<i8"),
    ("scatter_placement", "<i4"),
    ("combiner_presence_offsets", "<i8"),
    ("combiner_presence", "<i4"),
    ("out_degree", "<i8"),
    ("row_offsets", "<u8"),
    ("col_indices", "<u4"),
)


def _write_section(fh, arr: np.ndarray, dtype: str) -> None:
    payload = np.ascontiguousarray(arr, dtype=dtype).tobytes()
    fh.write(struct.pack("<Q", len(payload)))
    fh.write(payload)


def _read_section(fh, dtype: str, path: Path) -> np.ndarray:
    raw = fh.read(8)
    if len(raw) != 8:
        raise FormatError(f"{path}: truncated section header")
    (length,) = struct.unpack("<Q", raw)
    payload = fh.read(length)
    if len(payload) != length:
        raise FormatError(f"{path}: truncated section payload")
    return np.frombuffer(payload, dtype=dtype).copy()


def partition_file_name(index: int) -> str:
    return f"part-{index:05d}.agp"


def write_partition(part: AgentGraphPartition, path) -> None:
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(
            _HEAD.pack(
                VERSION,
                part.index,
                part.k,
                part.total_vertices,
                part.total_edges,
                1 if part.edge_weights is not None else 0,
            )
        )
        values = {
            "master_gids": part.master_gids,
            "scatter_gids": part.scatter_gids,
            "scatter_owner": part.scatter_owner,
            "combiner_gids": part.combiner_gids,
            "combiner_owner": part.combiner_owner,
            "scatter_placement_offsets": part.scatter_placement_offsets,
            "scatter_placement": part.scatter_placement,
            "combiner_presence_offsets": part.combiner_presence_offsets,
            "combiner_presence": part.combiner_presence,
            "out_degree": part.out_degree,
            "row_offsets": part.csr.row_offsets,
            "col_indices": part.csr.col_indices,
        }
        for name, dtype in _SECTIONS:
            _write_section(fh, values[name], dtype)
        if part.edge_weights is not None:
            _write_section(fh, part.edge_weights, "<u4")


def read_partition(path) -> AgentGraphPartition:
    path = Path(path)
    if not path.exists():
        raise InputError(f"partition file not found: {path}")
    with path.open("rb") as fh:
        if fh.read(4) != MAGIC:
            raise FormatError(f"{path}: not a partition file")
        version, index, k, nv, ne, weighted = _HEAD.unpack(fh.read(_HEAD.size))
        if version != VERSION:
            raise FormatError(f"{path}: unsupported partition file version {version}")
        data = {name: _read_section(fh, dtype, path) for name, dtype in _SECTIONS}
        weights = _read_section(fh, "<u4", path) if weighted else None
    return AgentGraphPartition(
        index=index,
        k=k,
        csr=CsrGraph(data["row_offsets"], data["col_indices"]),
        master_gids=data["master_gids"],
        scatter_gids=data["scatter_gids"],
        scatter_owner=data["scatter_owner"],
        combiner_gids=data["combiner_gids"],
        combiner_owner=data["combiner_owner"],
        scatter_placement_offsets=data["scatter_placement_offsets"],
        scatter_placement=data["scatter_placement"],
        combiner_presence_offsets=data["combiner_presence_offsets"],
        combiner_presence=data["combiner_presence"],
        out_degree=data["out_degree"],
        edge_weights=weights,
        total_vertices=int(nv),
        total_edges=int(ne),
    )


def write_partition_set(
    outdir,
    parts: list,
    metrics: PartitionMetrics | None = None,
    extra: dict | None = None,
) -> Path:
    """Write all partition files plus manifest (and metrics when given)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    files = []
    for part in parts:
        name = partition_file_name(part.index)
        write_partition(part, outdir / name)
        files.append(name)
    manifest = {
        "format": "agent-graph-partitions",
        "version": VERSION,
        "k": parts[0].k,
        "total_vertices": parts[0].total_vertices,
        "total_edges": parts[0].total_edges,
        "weighted": parts[0].edge_weights is not None,
        "files": files,
    }
    if extra:
        manifest.update(extra)
    if metrics is not None:
        (outdir / METRICS_NAME).write_text(
            json.dumps(metrics.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        manifest["metrics_file"] = METRICS_NAME
    (outdir / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return outdir / MANIFEST_NAME


def read_partition_set(indir) -> tuple[list, dict]:
    indir = Path(indir)
    manifest_path = indir / MANIFEST_NAME
    if not manifest_path.exists():
        raise InputError(f"no {MANIFEST_NAME} in {indir}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{manifest_path}: invalid JSON: {exc}") from None
    if manifest.get("format") != "agent-graph-partitions":
        raise FormatError(f"{manifest_path}: unrecognized manifest format")
    parts = [read_partition(indir / name) for name in manifest["files"]]
    if len(parts) != manifest.get("k"):
        raise FormatError(f"{manifest_path}: file count does not match k")
    return parts, manifest
