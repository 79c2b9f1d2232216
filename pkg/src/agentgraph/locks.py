"""Vertex-grained synchronization via a striped lock table.

Concurrent combine operations targeting the same vertex must serialize.
Rather than one lock per vertex, a fixed table of exclusive locks is indexed
by a hash of the local vertex id; the sparse, irregular access pattern of
real graphs keeps collision probability low at the default table size.
"""

from __future__ import annotations

import threading

from .errors import ParameterError
from .rng import mix64

DEFAULT_TABLE_SIZE = 4096


class StripedLockTable:
    __slots__ = ("size", "_locks", "_mask")

    def __init__(self, size: int = DEFAULT_TABLE_SIZE):
        if size < 1:
            raise ParameterError("lock table size must be >= 1")
        self.size = size
        self._locks = [threading.Lock() for _ in range(size)]
        # Power-of-two tables can mask instead of mod.
        self._mask = size - 1 if size & (size - 1) == 0 else None

    def lock_for(self, local_id: int) -> threading.Lock:
        h = int(mix64(local_id))
        slot = h & self._mask if self._mask is not None else h % self.size
        return self._locks[slot]
