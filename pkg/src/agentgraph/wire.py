"""Binary message-buffer format used between workers.

A buffer is one 64-bit header followed by ``count`` packed messages, all
little-endian:

    byte 0      op        what the receiver does with the payload
    byte 1      flag      reserved, 0 for now
    bytes 2-3   format_id registered message record layout
    bytes 4-7   count     number of messages in the buffer

Each message carries the destination's 64-bit global vertex id plus a
fixed-width data field per format.  A zero-count (header-only) buffer is
legal and used for negotiation.  Buffers never exceed the globally
configured byte capacity; senders split instead.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import FormatError, ParameterError

HEADER = struct.Struct("<BBHI")
HEADER_SIZE = HEADER.size
DEFAULT_CAPACITY = 64 * 1024

OP_COMBINE = 1  # fold payload into the destination's combine slot
OP_SCATTER_UPDATE = 2  # install payload as a scatter agent's scatter_data

FMT_F64 = 1
FMT_U64 = 2
FMT_U64_PAIR = 3

_RECORDS = {
    FMT_F64: np.dtype([("dest", "<u8"), ("data", "<f8")]),
    FMT_U64: np.dtype([("dest", "<u8"), ("data", "<u8")]),
    FMT_U64_PAIR: np.dtype([("dest", "<u8"), ("data", "<u8"), ("aux", "<u8")]),
}


def record_dtype(format_id: int) -> np.dtype:
    try:
        return _RECORDS[format_id]
    except KeyError:
        raise FormatError(f"unregistered message format {format_id}") from None


def max_messages(format_id: int, capacity: int = DEFAULT_CAPACITY) -> int:
    return (capacity - HEADER_SIZE) // record_dtype(format_id).itemsize


@dataclass(frozen=True)
class MessageBuffer:
    """A decoded buffer: header fields plus columnar message payloads."""

    op: int
    flag: int
    format_id: int
    dest: np.ndarray
    data: np.ndarray
    aux: np.ndarray | None = None

    @property
    def count(self) -> int:
        return len(self.dest)


def pack_buffer(
    op: int,
    flag: int,
    format_id: int,
    dest: np.ndarray,
    data: np.ndarray,
    aux: np.ndarray | None = None,
    capacity: int = DEFAULT_CAPACITY,
) -> bytes:
    """Serialize one buffer; the caller must keep count within capacity."""
    dtype = record_dtype(format_id)
    count = len(dest)
    if count != len(data):
        raise ParameterError("dest and data lengths differ")
    if HEADER_SIZE + count * dtype.itemsize > capacity:
        raise ParameterError(
            f"{count} messages exceed buffer capacity {capacity}; split required"
        )
    if not 0 <= op <= 0xFF or not 0 <= flag <= 0xFF:
        raise ParameterError("op and flag are 8-bit fields")
    records = np.empty(count, dtype=dtype)
    records["dest"] = dest
    records["data"] = data
    if "aux" in dtype.names:
        if aux is None:
            raise ParameterError(f"format {format_id} requires an aux column")
        records["aux"] = aux
    return HEADER.pack(op, flag, format_id, count) + records.tobytes()


def unpack_buffer(blob: bytes) -> MessageBuffer:
    if len(blob) < HEADER_SIZE:
        raise FormatError("buffer shorter than its header")
    op, flag, format_id, count = HEADER.unpack_from(blob)
    dtype = record_dtype(format_id)
    expected = HEADER_SIZE + count * dtype.itemsize
    if len(blob) != expected:
        raise FormatError(f"buffer length {len(blob)} != header-implied {expected}")
    records = np.frombuffer(blob, dtype=dtype, offset=HEADER_SIZE)
    aux = records["aux"].copy() if "aux" in dtype.names else None
    return MessageBuffer(op, flag, format_id, records["dest"].copy(), records["data"].copy(), aux)


def pack_stream(
    op: int,
    flag: int,
    format_id: int,
    dest: np.ndarray,
    data: np.ndarray,
    aux: np.ndarray | None = None,
    capacity: int = DEFAULT_CAPACITY,
) -> Iterator[bytes]:
    """Split an arbitrarily long message batch into capacity-bounded buffers."""
    limit = max_messages(format_id, capacity)
    if limit < 1:
        raise ParameterError(f"capacity {capacity} cannot hold a single message")
    for lo in range(0, len(dest), limit):
        hi = lo + limit
        yield pack_buffer(
            op,
            flag,
            format_id,
            dest[lo:hi],
            data[lo:hi],
            None if aux is None else aux[lo:hi],
            capacity,
        )
