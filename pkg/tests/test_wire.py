import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from agentgraph.errors import FormatError, ParameterError
from agentgraph.wire import (
    FMT_F64,
    FMT_U64,
    FMT_U64_PAIR,
    HEADER_SIZE,
    MessageBuffer,
    max_messages,
    pack_buffer,
    pack_stream,
    unpack_buffer,
)


def test_header_layout_is_bit_exact():
    blob = pack_buffer(1, 0, 2, np.arange(3, dtype=np.uint64), np.arange(3, dtype=np.uint64))
    assert blob[:8] == bytes([0x01, 0x00, 0x02, 0x00, 0x03, 0x00, 0x00, 0x00])


def test_zero_count_buffer_is_legal():
    empty = np.empty(0, dtype=np.uint64)
    blob = pack_buffer(1, 0, FMT_U64, empty, empty)
    assert len(blob) == HEADER_SIZE
    buf = unpack_buffer(blob)
    assert buf.count == 0 and buf.op == 1


def test_capacity_enforced():
    n = max_messages(FMT_U64, 1024) + 1
    arr = np.zeros(n, dtype=np.uint64)
    with pytest.raises(ParameterError, match="split"):
        pack_buffer(1, 0, FMT_U64, arr, arr, capacity=1024)


def test_pack_stream_splits():
    n = max_messages(FMT_U64, 1024) * 2 + 5
    dest = np.arange(n, dtype=np.uint64)
    data = dest * 3
    blobs = list(pack_stream(1, 0, FMT_U64, dest, data, capacity=1024))
    assert len(blobs) == 3
    got_dest = np.concatenate([unpack_buffer(b).dest for b in blobs])
    got_data = np.concatenate([unpack_buffer(b).data for b in blobs])
    assert np.array_equal(got_dest, dest) and np.array_equal(got_data, data)


def test_unregistered_format():
    with pytest.raises(FormatError):
        pack_buffer(1, 0, 99, np.empty(0, np.uint64), np.empty(0, np.uint64))


def test_truncated_rejected():
    blob = pack_buffer(1, 0, FMT_U64, np.arange(2, dtype=np.uint64), np.arange(2, dtype=np.uint64))
    with pytest.raises(FormatError):
        unpack_buffer(blob[:-3])
    with pytest.raises(FormatError):
        unpack_buffer(blob[:4])


@given(
    st.integers(0, 255),
    st.integers(0, 255),
    st.lists(st.tuples(st.integers(0, 2**63), st.integers(0, 2**63)), max_size=64),
)
@settings(max_examples=80, deadline=None)
def test_u64_round_trip(op, flag, messages):
    dest = np.array([d for d, _ in messages], dtype=np.uint64)
    data = np.array([x for _, x in messages], dtype=np.uint64)
    buf = unpack_buffer(pack_buffer(op, flag, FMT_U64, dest, data))
    assert buf.op == op and buf.flag == flag and buf.format_id == FMT_U64
    assert np.array_equal(buf.dest, dest) and np.array_equal(buf.data, data)


@given(st.lists(st.tuples(st.integers(0, 2**63), st.floats(allow_nan=False)), max_size=64))
@settings(max_examples=60, deadline=None)
def test_f64_round_trip(messages):
    dest = np.array([d for d, _ in messages], dtype=np.uint64)
    data = np.array([x for _, x in messages], dtype=np.float64)
    buf = unpack_buffer(pack_buffer(3, 1, FMT_F64, dest, data))
    assert np.array_equal(buf.dest, dest) and np.array_equal(buf.data, data)


def test_pair_round_trip():
    dest = np.array([1, 2], dtype=np.uint64)
    data = np.array([10, 20], dtype=np.uint64)
    aux = np.array([7, 8], dtype=np.uint64)
    buf = unpack_buffer(pack_buffer(1, 0, FMT_U64_PAIR, dest, data, aux))
    assert np.array_equal(buf.aux, aux)
    with pytest.raises(ParameterError):
        pack_buffer(1, 0, FMT_U64_PAIR, dest, data)  # aux column required
