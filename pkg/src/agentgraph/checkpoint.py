"""Superstep-boundary snapshots of master runtime state.

A checkpoint stores, per partition, only the master vertex columns and the
two activation bitmaps; all agent data is temporal (a combiner is back at the
combine identity at every superstep boundary, a scatter agent's cache is
refilled by its master's next update) and is rebuilt from identities on
restore.  Sections are length-prefixed little-endian; a topology digest of
the master gid arrays guards against restoring into a different partitioning.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from .engine import EngineConfig, EngineState, PartitionRuntime, VertexProgram
from .errors import ConfigurationError, FormatError, InputError
from .partition import AgentGraphPartition
from .rng import GOLDEN, mix64

MAGIC = b"AGCP"
VERSION = 1

_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")


def _digest(gids: np.ndarray) -> int:
    """Order-sensitive fold of the master gid array."""
    if len(gids) == 0:
        return 0
    with np.errstate(over="ignore"):
        keyed = gids.astype(np.uint64) + np.arange(len(gids), dtype=np.uint64) * GOLDEN
    return int(np.bitwise_xor.reduce(mix64(keyed)))


def _write_section(fh, payload: bytes) -> None:
    fh.write(_U64.pack(len(payload)))
    fh.write(payload)


def _read_section(fh) -> bytes:
    raw = fh.read(_U64.size)
    if len(raw) != _U64.size:
        raise FormatError("truncated checkpoint section header")
    (length,) = _U64.unpack(raw)
    payload = fh.read(length)
    if len(payload) != length:
        raise FormatError("truncated checkpoint section payload")
    return payload


def save_checkpoint(state: EngineState, path) -> None:
    """Write the snapshot; legal only at a superstep boundary."""
    path = Path(path)
    prog = state.program
    name = prog.name.encode("utf-8")
    with path.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(_U32.pack(VERSION))
        fh.write(_U32.pack(len(name)))
        fh.write(name)
        fh.write(_U64.pack(state.superstep))
        fh.write(_U32.pack(state.k))
        for rt in state.runtimes:
            n = rt.part.master_count
            fh.write(_U64.pack(n))
            fh.write(_U64.pack(_digest(rt.part.master_gids)))
            _write_section(fh, rt.vertex_value.tobytes())
            _write_section(fh, rt.scatter_value[:n].tobytes())
            _write_section(fh, rt.combine_value[:n].tobytes())
            if prog.track_aux:
                _write_section(fh, rt.vertex_aux.tobytes())
                _write_section(fh, rt.combine_aux[:n].tobytes())
            _write_section(fh, np.packbits(rt.active_scatter).tobytes())
            _write_section(fh, np.packbits(rt.active_apply).tobytes())


def restore_checkpoint(
    path,
    partitions: Sequence[AgentGraphPartition],
    program: VertexProgram,
    config: EngineConfig | None = None,
) -> EngineState:
    """Rebuild an EngineState resuming at the recorded superstep."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"checkpoint not found: {path}")
    config = config or EngineConfig()
    with path.open("rb") as fh:
        if fh.read(4) != MAGIC:
            raise FormatError(f"{path}: not a checkpoint file")
        (version,) = _U32.unpack(fh.read(4))
        if version != VERSION:
            raise FormatError(f"{path}: unsupported checkpoint version {version}")
        (name_len,) = _U32.unpack(fh.read(4))
        name = fh.read(name_len).decode("utf-8")
        if name != program.name:
            raise ConfigurationError(
                f"checkpoint was taken by program {name!r}, not {program.name!r}"
            )
        (superstep,) = _U64.unpack(fh.read(8))
        (k,) = _U32.unpack(fh.read(4))
        if k != len(partitions):
            raise ConfigurationError(
                f"checkpoint has {k} partitions, topology has {len(partitions)}"
            )
        runtimes = []
        dt = np.dtype(program.value_dtype)
        for part in partitions:
            (n,) = _U64.unpack(fh.read(8))
            (digest,) = _U64.unpack(fh.read(8))
            if n != part.master_count or digest != _digest(part.master_gids):
                raise ConfigurationError(
                    f"partition {part.index} topology does not match the checkpoint"
                )
            rt = PartitionRuntime(part, program)
            rt.vertex_value[:] = np.frombuffer(_read_section(fh), dtype=dt)
            scatter_masters = np.frombuffer(_read_section(fh), dtype=dt)
            if not program.alias_vertex_scatter:
                rt.scatter_value[: part.master_count] = scatter_masters
            rt.combine_value[: part.master_count] = np.frombuffer(_read_section(fh), dtype=dt)
            if program.track_aux:
                rt.vertex_aux[:] = np.frombuffer(_read_section(fh), dtype=np.uint64)
                rt.combine_aux[: part.master_count] = np.frombuffer(
                    _read_section(fh), dtype=np.uint64
                )
            rt.active_scatter[:] = np.unpackbits(
                np.frombuffer(_read_section(fh), dtype=np.uint8), count=part.master_count
            ).astype(bool)
            rt.active_apply[:] = np.unpackbits(
                np.frombuffer(_read_section(fh), dtype=np.uint8), count=part.master_count
            ).astype(bool)
            runtimes.append(rt)
    rng = None
    if config.shuffle_seed is not None:
        rng = np.random.Generator(np.random.PCG64(config.shuffle_seed))
    return EngineState(
        runtimes=runtimes, program=program, config=config, superstep=superstep, _rng=rng
    )
