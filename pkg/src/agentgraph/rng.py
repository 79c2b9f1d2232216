"""Counter-based pseudo-random streams (SplitMix64).

Every consumer derives values as ``mix(seed, stream_tag, index)``, so any
index range can be regenerated independently of batch boundaries.  That makes
generation order-free: parallel producers working on disjoint index ranges
emit exactly the bytes a sequential pass would.
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64


def mix64(x: np.ndarray | int) -> np.ndarray | np.uint64:
    """SplitMix64 finalizer: a 64-bit bijective hash.  Wraps modulo 2**64."""
    with np.errstate(over="ignore"):
        z = np.asarray(x, dtype=np.uint64) + GOLDEN
        z = (z ^ (z >> _U64(30))) * _MIX1
        z = (z ^ (z >> _U64(27))) * _MIX2
        z = z ^ (z >> _U64(31))
    return z if z.ndim else np.uint64(z)


def derive_seed(seed: int, stream_tag: int) -> np.uint64:
    """Fold a stream tag into a user seed so distinct tags never share a stream."""
    with np.errstate(over="ignore"):
        salted = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) ^ (GOLDEN * _U64(stream_tag))
    return mix64(salted)


def u64_stream(seed: int, stream_tag: int, start: int, count: int) -> np.ndarray:
    """Return ``count`` 64-bit words at absolute positions ``start..start+count``."""
    base = derive_seed(seed, stream_tag)
    with np.errstate(over="ignore"):
        idx = np.arange(start, start + count, dtype=np.uint64)
        keyed = base + idx * GOLDEN
    return mix64(keyed)


def u64_at(seed: int, stream_tag: int, indices: np.ndarray) -> np.ndarray:
    """Stream words at explicit (possibly non-contiguous) positions."""
    base = derive_seed(seed, stream_tag)
    with np.errstate(over="ignore"):
        keyed = base + indices.astype(np.uint64) * GOLDEN
    return mix64(keyed)


def unit_stream(seed: int, stream_tag: int, start: int, count: int) -> np.ndarray:
    """Uniform doubles in [0, 1) from the 53 high bits of the u64 stream."""
    return (u64_stream(seed, stream_tag, start, count) >> _U64(11)) * (2.0**-53)


def unit_at(seed: int, stream_tag: int, indices: np.ndarray) -> np.ndarray:
    return (u64_at(seed, stream_tag, indices) >> _U64(11)) * (2.0**-53)


def randint_stream(
    seed: int, stream_tag: int, start: int, count: int, low: int, high: int
) -> np.ndarray:
    """Uniform integers in [low, high] by modulo reduction.

    The bias is < (high - low + 1) / 2**64 per draw, negligible for the
    16-bit-ish ranges used here.
    """
    span = np.uint64(high - low + 1)
    return (u64_stream(seed, stream_tag, start, count) % span).astype(np.uint64) + np.uint64(low)
