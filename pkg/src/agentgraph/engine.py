"""Superstep scheduler executing vertex programs over agent-graph partitions.

One worker owns each partition.  A superstep runs two phases:

Phase 1 (scatter-combine) drains in three waves so that every message path
master -> [scatter agent ->] target [-> combiner -> master] completes inside
the phase:

  wave A  every scatter-active master emits its scatter function over its
          local out-edges; payloads fold into local combine slots in place.
          For each remote partition holding one of its scatter agents, the
          master sends exactly one update message carrying its scatter_data.
          assert_to_halt then runs for the scattering masters.
  wave B  receivers install the updates into agent scatter_data and relay
          along the agents' local out-edges (folding locally, possibly into
          combiners).
  wave C/D every combiner whose slot moved off the identity sends one
          combine message to its master's partition and resets to the
          identity; receivers fold the message into the master's combine
          slot, activating it for apply.

Phase 2 (apply) runs the apply function on every apply-active master,
updating vertex_data (optionally scatter_data), resetting its combine slot
to the identity, clearing the apply flag and optionally re-activating the
scatter flag.

Workers exchange only packed wire buffers (wire.py), exactly what a
networked deployment would put on the wire.  Within a worker the default is
one vectorized execution lane; with ``lanes > 1`` active vertices are
processed by a thread pool in scalar form, with combine targets serialized
through the striped lock table.  Either path yields the sequential fold for
commutative/associative combine operators.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import wire
from .errors import ConfigurationError, ParameterError, RoutingFault
from .graph import GID_DTYPE
from .locks import DEFAULT_TABLE_SIZE, StripedLockTable
from .partition import AgentGraphPartition

U64_MAX = np.uint64(np.iinfo(np.uint64).max)


@dataclass(frozen=True)
class VertexProgram:
    """User-side definition of one vertex computation.

    ``scatter_fn(values, weights, out_degrees)`` maps per-edge source state
    to message payloads; it must be elementwise (numpy arrays in, array out).
    ``combine_fn`` is the generalized sum: a commutative, associative binary
    ufunc (``np.add``, ``np.minimum``) applied scalar-wise or as a grouped
    fold.  ``combine_identity`` is its two-sided identity.  ``apply_fn``
    consumes the accumulated sum and produces new vertex state; see the
    program implementations for the exact array signatures.
    ``assert_to_halt_fn`` decides whether a vertex stays scatter-active after
    it finishes scattering (True for iterative programs, False for
    traversals).
    """

    name: str
    value_dtype: np.dtype
    combine_fn: np.ufunc
    combine_identity: object
    scatter_fn: Callable
    apply_fn: Callable
    assert_to_halt_fn: Callable[[], bool]
    combine_activates_apply: bool = True
    needs_weights: bool = False
    alias_vertex_scatter: bool = False
    track_aux: bool = False
    aux_identity: int = int(U64_MAX)
    wire_format: int = wire.FMT_U64
    update_format: int = wire.FMT_U64

    def fold_kind(self) -> str:
        if self.combine_fn is np.add:
            return "sum"
        if self.combine_fn is np.minimum:
            return "min"
        raise ConfigurationError(f"unsupported combine ufunc {self.combine_fn}")


@dataclass
class InitSpec:
    """Initial per-master state.  Defaults may be scalars or callables over
    the master gid array; overrides are exact per-gid values.  A master not
    covered by either is an initialization error."""

    vertex_default: object = None
    scatter_default: object = None
    aux_default: object = None
    vertex_overrides: dict = field(default_factory=dict)
    scatter_overrides: dict = field(default_factory=dict)
    active: object = "all"  # "all" or iterable of gids


@dataclass
class EngineConfig:
    buffer_capacity: int = wire.DEFAULT_CAPACITY
    lock_table_size: int = DEFAULT_TABLE_SIZE
    lanes: int = 1
    shuffle_seed: int | None = None
    debug_checks: bool = False


@dataclass
class SuperstepReport:
    """Per-superstep observability counters."""

    superstep: int
    scatters: list
    combines: list
    applies: list
    buffers_sent: list
    messages_sent: list
    messages_received: list
    active_scatter_total: int

    @property
    def total_messages_sent(self) -> int:
        return sum(self.messages_sent)

    @property
    def total_messages_received(self) -> int:
        return sum(self.messages_received)

    def to_dict(self) -> dict:
        return {
            "superstep": self.superstep,
            "scatters": list(self.scatters),
            "combines": list(self.combines),
            "applies": list(self.applies),
            "buffers_sent": list(self.buffers_sent),
            "messages_sent": list(self.messages_sent),
            "messages_received": list(self.messages_received),
            "active_scatter_total": self.active_scatter_total,
        }


class PartitionRuntime:
    """Mutable per-worker state: flat columns indexed by local vertex id.

    ``scatter_value`` spans masters and scatter agents; ``combine_value``
    (and ``combine_aux``) span masters and combiners; the two are always
    physically distinct arrays.  When a program aliases vertex and scatter
    data, ``vertex_value`` is a view of the master slice of
    ``scatter_value``.
    """

    def __init__(self, part: AgentGraphPartition, program: VertexProgram):
        self.part = part
        self.program = program
        n = part.master_count
        total = part.local_count
        dt = np.dtype(program.value_dtype)
        self.scatter_value = np.zeros(total, dtype=dt)
        if program.alias_vertex_scatter:
            self.vertex_value = self.scatter_value[:n]
        else:
            self.vertex_value = np.zeros(n, dtype=dt)
        self.combine_value = np.full(total, program.combine_identity, dtype=dt)
        self.vertex_aux = None
        self.combine_aux = None
        if program.track_aux:
            self.vertex_aux = np.full(n, program.aux_identity, dtype=np.uint64)
            self.combine_aux = np.full(total, program.aux_identity, dtype=np.uint64)
        self.active_scatter = np.zeros(n, dtype=bool)
        self.active_apply = np.zeros(n, dtype=bool)
        # Topology scratch reused every superstep.
        self.row_starts = part.csr.row_offsets[:-1].astype(np.int64)
        self.row_degrees = part.csr.out_degrees()
        self.weights = part.edge_weights
        self.out_degree = part.out_degree  # masters + scatter agents
        self.locks = None  # built on demand for scalar lanes

    # -- id translation ----------------------------------------------------
    def master_locals(self, gids: np.ndarray) -> np.ndarray:
        pos = np.searchsorted(self.part.master_gids, gids)
        ok = (pos < self.part.master_count) & (self.part.master_gids[np.minimum(pos, self.part.master_count - 1)] == gids)
        if not ok.all():
            missing = gids[~ok][0]
            raise RoutingFault(f"partition {self.part.index} owns no master {int(missing)}")
        return pos

    def scatter_locals(self, gids: np.ndarray) -> np.ndarray:
        sg = self.part.scatter_gids
        if len(sg) == 0:
            raise RoutingFault(f"partition {self.part.index} hosts no scatter agents")
        pos = np.searchsorted(sg, gids)
        ok = (pos < len(sg)) & (sg[np.minimum(pos, len(sg) - 1)] == gids)
        if not ok.all():
            missing = gids[~ok][0]
            raise RoutingFault(
                f"partition {self.part.index} hosts no scatter agent for {int(missing)}"
            )
        return pos + self.part.scatter_range[0]


@dataclass
class EngineState:
    runtimes: list
    program: VertexProgram
    config: EngineConfig
    superstep: int = 0
    _rng: object = field(default=None, repr=False)

    @property
    def k(self) -> int:
        return len(self.runtimes)

    def active_scatter_total(self) -> int:
        return int(sum(rt.active_scatter.sum() for rt in self.runtimes))

    def vertex_values(self) -> tuple[np.ndarray, np.ndarray]:
        """Global (gids, values) gathered from all partitions, sorted by gid."""
        gids = np.concatenate([rt.part.master_gids for rt in self.runtimes])
        vals = np.concatenate([rt.vertex_value for rt in self.runtimes])
        order = np.argsort(gids, kind="stable")
        return gids[order], vals[order]

    def vertex_aux_values(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.program.track_aux:
            raise ConfigurationError(f"program {self.program.name} tracks no aux column")
        gids = np.concatenate([rt.part.master_gids for rt in self.runtimes])
        vals = np.concatenate([rt.vertex_aux for rt in self.runtimes])
        order = np.argsort(gids, kind="stable")
        return gids[order], vals[order]


def _resolve_column(default, overrides: dict, gids: np.ndarray, dtype, what: str) -> np.ndarray:
    if callable(default):
        vals = np.asarray(default(gids), dtype=dtype)
        if len(vals) != len(gids):
            raise ConfigurationError(f"{what} initializer returned a misaligned column")
    elif default is not None:
        vals = np.full(len(gids), default, dtype=dtype)
    else:
        vals = None
    if vals is None:
        if overrides is None:
            raise ConfigurationError(f"no initial {what} given")
        vals = np.empty(len(gids), dtype=dtype)
        covered = np.zeros(len(gids), dtype=bool)
        lookup = {int(g): i for i, g in enumerate(gids.tolist())}
        for g, v in overrides.items():
            i = lookup.get(int(g))
            if i is not None:
                vals[i] = v
                covered[i] = True
        if not covered.all():
            missing = int(gids[~covered][0])
            raise ConfigurationError(f"missing initial {what} for master {missing}")
        return vals
    if overrides:
        lookup = {int(g): i for i, g in enumerate(gids.tolist())}
        for g, v in overrides.items():
            i = lookup.get(int(g))
            if i is not None:
                vals[i] = v
    return vals


def init_run(
    partitions: Sequence[AgentGraphPartition],
    program: VertexProgram,
    init: InitSpec,
    config: EngineConfig | None = None,
) -> EngineState:
    """Set up runtime state: combine slots at the identity, apply flags clear,
    superstep counter zero, scatter flags per the init's active set."""
    config = config or EngineConfig()
    if program.needs_weights and any(p.edge_weights is None for p in partitions):
        raise ConfigurationError(f"program {program.name} requires edge weights")
    runtimes = []
    active_set = None
    if init.active != "all":
        active_set = set(int(g) for g in init.active)
    for part in partitions:
        rt = PartitionRuntime(part, program)
        gids = part.master_gids
        n = part.master_count
        vv = _resolve_column(
            init.vertex_default, init.vertex_overrides, gids, program.value_dtype, "vertex_data"
        )
        rt.vertex_value[:] = vv
        if not program.alias_vertex_scatter:
            sd = init.scatter_default if init.scatter_default is not None else init.vertex_default
            so = init.scatter_overrides or init.vertex_overrides
            rt.scatter_value[:n] = _resolve_column(
                sd, so, gids, program.value_dtype, "scatter_data"
            )
        if program.track_aux and init.aux_default is not None:
            rt.vertex_aux[:] = np.full(n, init.aux_default, dtype=np.uint64)
        if active_set is None:
            rt.active_scatter[:] = True
        else:
            for i, g in enumerate(gids.tolist()):
                if g in active_set:
                    rt.active_scatter[i] = True
        runtimes.append(rt)
    rng = None
    if config.shuffle_seed is not None:
        rng = np.random.Generator(np.random.PCG64(config.shuffle_seed))
    return EngineState(runtimes=runtimes, program=program, config=config, _rng=rng)


# ---------------------------------------------------------------------------
# Folds.
# ---------------------------------------------------------------------------


def _fold_batch(rt: PartitionRuntime, tgt: np.ndarray, values: np.ndarray, aux) -> None:
    """Grouped combine of a message batch into local combine slots."""
    prog = rt.program
    col = rt.combine_value
    if prog.track_aux:
        u_tgt = np.unique(tgt)
        before = col[u_tgt].copy()
        np.minimum.at(col, tgt, values)
        changed = u_tgt[col[u_tgt] < before]
        rt.combine_aux[changed] = prog.aux_identity
        winners = values == col[tgt]
        np.minimum.at(rt.combine_aux, tgt[winners], aux[winners])
    elif prog.fold_kind() == "sum":
        col += np.bincount(tgt, weights=values, minlength=len(col)).astype(col.dtype, copy=False)
    else:
        np.minimum.at(col, tgt, values)


def _fold_scalar(rt: PartitionRuntime, tgt: int, value, aux, locks: StripedLockTable) -> None:
    prog = rt.program
    with locks.lock_for(tgt):
        if prog.track_aux:
            cur_v = rt.combine_value[tgt]
            cur_a = rt.combine_aux[tgt]
            if (value, aux) < (cur_v, cur_a):
                rt.combine_value[tgt] = value
                rt.combine_aux[tgt] = aux
        else:
            rt.combine_value[tgt] = prog.combine_fn(rt.combine_value[tgt], value)


def _mark_apply(rt: PartitionRuntime, tgt: np.ndarray) -> None:
    if rt.program.combine_activates_apply:
        n = rt.part.master_count
        masters = tgt[tgt < n]
        if len(masters):
            rt.active_apply[masters] = True


# ---------------------------------------------------------------------------
# Scatter expansion: emit payloads along the CSR rows of the given locals.
# ---------------------------------------------------------------------------


def _expand_rows(rt: PartitionRuntime, rows: np.ndarray):
    deg = rt.row_degrees[rows]
    total = int(deg.sum())
    if total == 0:
        return None
    starts = rt.row_starts[rows]
    reps = np.repeat(np.arange(len(rows)), deg)
    within = np.arange(total) - np.repeat(np.cumsum(deg) - deg, deg)
    edge_idx = starts[reps] + within
    src = rows[reps]
    return src, edge_idx


def _scatter_rows_vector(state: EngineState, rt: PartitionRuntime, rows: np.ndarray) -> tuple[int, int]:
    """Scatter along local out-edges of ``rows``; returns (scatter ops, folds)."""
    prog = state.program
    expanded = _expand_rows(rt, rows)
    if expanded is None:
        return 0, 0
    src, edge_idx = expanded
    w = rt.weights[edge_idx] if rt.weights is not None else None
    payload = prog.scatter_fn(rt.scatter_value[src], w, rt.out_degree[src])
    tgt = rt.part.csr.col_indices[edge_idx].astype(np.int64)
    aux = rt.part.id_index.local_to_global[src] if prog.track_aux else None
    _fold_batch(rt, tgt, payload, aux)
    _mark_apply(rt, tgt)
    return len(src), len(src)


def _scatter_rows_scalar(state: EngineState, rt: PartitionRuntime, rows: np.ndarray) -> tuple[int, int]:
    """Lane-pool variant: per-edge scatter with striped-lock combine."""
    prog = state.program
    if rt.locks is None:
        rt.locks = StripedLockTable(state.config.lock_table_size)
    locks = rt.locks
    cols = rt.part.csr.col_indices
    l2g = rt.part.id_index.local_to_global
    n = rt.part.master_count
    counter = [0]

    def work(chunk: np.ndarray) -> int:
        ops = 0
        for r in chunk.tolist():
            lo = int(rt.row_starts[r])
            hi = lo + int(rt.row_degrees[r])
            sv = rt.scatter_value[r : r + 1]
            od = rt.out_degree[r : r + 1]
            gid = int(l2g[r]) if prog.track_aux else 0
            for e in range(lo, hi):
                w = rt.weights[e : e + 1] if rt.weights is not None else None
                val = prog.scatter_fn(sv, w, od)[0]
                t = int(cols[e])
                _fold_scalar(rt, t, val, gid, locks)
                if t < n and prog.combine_activates_apply:
                    with locks.lock_for(t):
                        rt.active_apply[t] = True
                ops += 1
        return ops

    chunks = [c for c in np.array_split(rows, state.config.lanes) if len(c)]
    with ThreadPoolExecutor(max_workers=state.config.lanes) as pool:
        totals = list(pool.map(work, chunks))
    ops = sum(totals)
    return ops, ops


# ---------------------------------------------------------------------------
# Superstep driver.
# ---------------------------------------------------------------------------


def _worker_order(state: EngineState) -> list:
    order = list(range(state.k))
    if state._rng is not None:
        state._rng.shuffle(order)
    return order


def _maybe_shuffle_buffers(state: EngineState, blobs: list) -> list:
    if state._rng is not None and len(blobs) > 1:
        idx = state._rng.permutation(len(blobs))
        return [blobs[i] for i in idx]
    return blobs


def _maybe_permute_messages(state: EngineState, buf: wire.MessageBuffer) -> wire.MessageBuffer:
    if state._rng is None or buf.count < 2:
        return buf
    p = state._rng.permutation(buf.count)
    return wire.MessageBuffer(
        buf.op,
        buf.flag,
        buf.format_id,
        buf.dest[p],
        buf.data[p],
        None if buf.aux is None else buf.aux[p],
    )


def _send_grouped(
    state: EngineState,
    report_row: int,
    op: int,
    format_id: int,
    dest_part: np.ndarray,
    dest_gid: np.ndarray,
    values: np.ndarray,
    aux: np.ndarray | None,
    outboxes: list,
    report: SuperstepReport,
) -> None:
    """Group messages by destination partition and enqueue packed buffers."""
    order = np.argsort(dest_part, kind="stable")
    parts_sorted = dest_part[order]
    bounds = np.searchsorted(parts_sorted, np.arange(state.k + 1))
    for j in range(state.k):
        lo, hi = int(bounds[j]), int(bounds[j + 1])
        if lo == hi:
            continue
        sel = order[lo:hi]
        for blob in wire.pack_stream(
            op,
            0,
            format_id,
            dest_gid[sel],
            values[sel],
            None if aux is None else aux[sel],
            state.config.buffer_capacity,
        ):
            outboxes[j].append(blob)
            report.buffers_sent[report_row] += 1
        report.messages_sent[report_row] += hi - lo


def run_superstep(state: EngineState) -> SuperstepReport:
    """Execute one full superstep (scatter-combine phase, then apply phase)."""
    k = state.k
    prog = state.program
    state.superstep += 1
    report = SuperstepReport(
        superstep=state.superstep,
        scatters=[0] * k,
        combines=[0] * k,
        applies=[0] * k,
        buffers_sent=[0] * k,
        messages_sent=[0] * k,
        messages_received=[0] * k,
        active_scatter_total=0,
    )
    inboxes: list[list] = [[] for _ in range(k)]
    guard = None
    if state.config.debug_checks:
        guard = [rt.scatter_value[: rt.part.master_count].copy() for rt in state.runtimes]

    scatter_impl = _scatter_rows_vector if state.config.lanes <= 1 else _scatter_rows_scalar

    # Phase 1, wave A: local scatters plus agent updates.
    keep_active = bool(prog.assert_to_halt_fn())
    for i in _worker_order(state):
        rt = state.runtimes[i]
        act = np.flatnonzero(rt.active_scatter)
        if state._rng is not None and len(act) > 1:
            act = act[state._rng.permutation(len(act))]
        if len(act) == 0:
            continue
        ops, folds = scatter_impl(state, rt, act)
        report.scatters[i] += ops
        report.combines[i] += folds
        # One update message per (master, remote partition with its scatter).
        off = rt.part.scatter_placement_offsets
        cnt = off[act + 1] - off[act]
        if cnt.sum() > 0:
            reps = np.repeat(np.arange(len(act)), cnt)
            within = np.arange(int(cnt.sum())) - np.repeat(np.cumsum(cnt) - cnt, cnt)
            flat_idx = off[act][reps] + within
            dest_part = rt.part.scatter_placement[flat_idx]
            masters = act[reps]
            _send_grouped(
                state,
                i,
                wire.OP_SCATTER_UPDATE,
                prog.update_format,
                dest_part,
                rt.part.master_gids[masters],
                rt.scatter_value[masters],
                None,
                inboxes,
                report,
            )
        if not keep_active:
            rt.active_scatter[act] = False

    # Phase 1, wave B: deliver agent updates, agents relay locally.
    for j in _worker_order(state):
        rt = state.runtimes[j]
        blobs = _maybe_shuffle_buffers(state, inboxes[j])
        inboxes[j] = []
        for blob in blobs:
            buf = wire.unpack_buffer(blob)
            if buf.op != wire.OP_SCATTER_UPDATE:
                raise RoutingFault(f"unexpected op {buf.op} before combine wave")
            report.messages_received[j] += buf.count
            if buf.count == 0:
                continue
            buf = _maybe_permute_messages(state, buf)
            agents = rt.scatter_locals(buf.dest)
            rt.scatter_value[agents] = buf.data.astype(prog.value_dtype, copy=False)
            ops, folds = scatter_impl(state, rt, agents)
            report.scatters[j] += ops
            report.combines[j] += folds

    # Phase 1, wave C: combiner flush.
    for i in _worker_order(state):
        rt = state.runtimes[i]
        c_lo, c_hi = rt.part.combiner_range
        if c_hi == c_lo:
            continue
        slot = rt.combine_value[c_lo:c_hi]
        pending = np.flatnonzero(slot != prog.combine_identity)
        if len(pending) == 0:
            continue
        dest_gid = rt.part.combiner_gids[pending]
        dest_part = rt.part.combiner_owner[pending]
        values = slot[pending].copy()
        aux = rt.combine_aux[c_lo:c_hi][pending].copy() if prog.track_aux else None
        _send_grouped(
            state, i, wire.OP_COMBINE, prog.wire_format, dest_part, dest_gid, values, aux, inboxes, report
        )
        slot[pending] = prog.combine_identity
        if prog.track_aux:
            rt.combine_aux[c_lo:c_hi][pending] = prog.aux_identity

    # Phase 1, wave D: fold combine messages into masters.
    for j in _worker_order(state):
        rt = state.runtimes[j]
        blobs = _maybe_shuffle_buffers(state, inboxes[j])
        inboxes[j] = []
        for blob in blobs:
            buf = wire.unpack_buffer(blob)
            if buf.op != wire.OP_COMBINE:
                raise RoutingFault(f"unexpected op {buf.op} in combine wave")
            report.messages_received[j] += buf.count
            if buf.count == 0:
                continue
            buf = _maybe_permute_messages(state, buf)
            masters = rt.master_locals(buf.dest)
            values = buf.data.astype(prog.value_dtype, copy=False)
            _fold_batch(rt, masters, values, buf.aux)
            _mark_apply(rt, masters)
            report.combines[j] += buf.count

    if report.total_messages_sent != report.total_messages_received:
        raise RoutingFault(
            f"message conservation violated: sent {report.total_messages_sent}, "
            f"received {report.total_messages_received}"
        )
    if guard is not None:
        for rt, before in zip(state.runtimes, guard):
            if not np.array_equal(rt.scatter_value[: rt.part.master_count], before):
                raise AssertionError("master scatter_data changed during phase 1")

    # Phase 2: apply.
    for i in _worker_order(state):
        rt = state.runtimes[i]
        appl = np.flatnonzero(rt.active_apply)
        if len(appl) == 0:
            continue
        vd = rt.vertex_value[appl]
        cd = rt.combine_value[appl]
        if prog.track_aux:
            new_vd, new_sd, activate, new_aux = prog.apply_fn(
                vd, cd, rt.vertex_aux[appl], rt.combine_aux[appl]
            )
            rt.vertex_aux[appl] = new_aux
        else:
            new_vd, new_sd, activate = prog.apply_fn(vd, cd)
        rt.vertex_value[appl] = new_vd
        if new_sd is not None and not prog.alias_vertex_scatter:
            rt.scatter_value[appl] = new_sd
        rt.combine_value[appl] = prog.combine_identity
        if prog.track_aux:
            rt.combine_aux[appl] = prog.aux_identity
        rt.active_apply[appl] = False
        if activate is not None and activate.any():
            rt.active_scatter[appl[activate]] = True
        report.applies[i] += len(appl)

    if state.config.debug_checks:
        for rt in state.runtimes:
            c_lo, c_hi = rt.part.combiner_range
            if not (rt.combine_value[c_lo:c_hi] == prog.combine_identity).all():
                raise AssertionError("combiner slot off identity at superstep end")

    report.active_scatter_total = state.active_scatter_total()
    return report


def run_to_termination(
    state: EngineState,
    max_supersteps: int | None = None,
    checkpoint_every: int | None = None,
    checkpoint_path=None,
) -> list:
    """Loop supersteps until no vertex is scatter-active, or the cap hits.

    With ``checkpoint_every`` set, a snapshot is written to
    ``checkpoint_path`` at every matching superstep boundary.
    """
    from . import checkpoint as ckpt

    if checkpoint_every is not None and checkpoint_path is None:
        raise ParameterError("checkpoint interval given without a path")
    reports = []
    while True:
        report = run_superstep(state)
        reports.append(report)
        if checkpoint_every and state.superstep % checkpoint_every == 0:
            ckpt.save_checkpoint(state, checkpoint_path)
        if report.active_scatter_total == 0:
            break
        if max_supersteps is not None and state.superstep >= max_supersteps:
            break
    return reports
