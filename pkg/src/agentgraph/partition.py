"""Streaming k-way edge placement and agent-graph construction.

Placement assigns every edge of the input stream to one of k partitions,
either by hashing the source vertex or by a greedy heuristic that scores each
candidate partition with

    score(i) = f(u, i) + g(v, i) + (Max - Ne(i)) / (delta + Max - Min)

where f/g are 0/1 indicators for "partition i already holds an edge with this
source/target", Ne(i) is partition i's running edge count, Max/Min range over
all Ne, and delta = 1.0.  Ties go to the lowest partition index, and an edge
is scored against the pre-placement counts before the tables are updated.

Partition construction then extends each partition's subgraph with agent
vertices: a *combiner* stands in for a remote target (arbitrary in-edges, one
implicit out-edge to its master) and a *scatter* stands in for a remote
source (one implicit in-edge from its master, arbitrary out-edges).  Edges
from a combiner to a scatter never exist.  Masters take local ids 0..n-1 in
ascending global-id order, then scatters, then combiners, all dense.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ParameterError
from .graph import GID_DTYPE, CsrGraph, EdgeStream, IdIndex, build_csr
from .rng import mix64

MODES = ("hash", "greedy-oblivious", "greedy-coordinated")
DEFAULT_EPSILON = 0.05
DEFAULT_SYNC_INTERVAL = 4096
DELTA = 1.0


# ---------------------------------------------------------------------------
# Membership tables: exact dict of per-vertex partition bitmasks, or a fixed
# hashed mask table for memory-constrained runs (false positives possible when
# two vertices collide into one slot, never false negatives).
# ---------------------------------------------------------------------------


class MaskTable:
    """Approximate membership: 2**bits slots of merged partition masks.

    A lookup returns the union of masks of every vertex hashed to the slot,
    so the false-positive probability for one partition bit is roughly
    1 - (1 - 1/2**bits)**n_distinct.
    """

    __slots__ = ("mask", "slots")

    def __init__(self, bits: int):
        self.mask = (1 << bits) - 1
        self.slots = np.zeros(1 << bits, dtype=np.uint64)

    def get(self, gid: int, default: int = 0) -> int:
        return int(self.slots[int(mix64(gid)) & self.mask]) or default

    def __setitem__(self, gid: int, value: int) -> None:
        self.slots[int(mix64(gid)) & self.mask] = value

    def merge_from(self, other: "MaskTable") -> None:
        np.bitwise_or(self.slots, other.slots, out=self.slots)

    def clear(self) -> None:
        self.slots[:] = 0


@dataclass
class HeuristicState:
    """Greedy-placement tables for one loader (or the shared merge target).

    ``has_source[u]`` / ``has_target[v]`` hold k-bit partition membership
    masks; ``ne`` holds per-partition edge counts.
    """

    k: int
    epsilon: float = DEFAULT_EPSILON
    delta: float = DELTA
    approx_bits: int | None = None
    ne: list = field(default_factory=list)
    has_source: dict | MaskTable = None  # type: ignore[assignment]
    has_target: dict | MaskTable = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError("partition count must be >= 1")
        if not self.ne:
            self.ne = [0] * self.k
        if self.has_source is None:
            make = (lambda: MaskTable(self.approx_bits)) if self.approx_bits else dict
            self.has_source = make()
            self.has_target = make()

    def place(self, u: int, v: int) -> int:
        """Score all partitions for edge (u, v), update tables, return the pick."""
        ne = self.ne
        top = max(ne)
        inv = 1.0 / (self.delta + top - min(ne))
        mu = self.has_source.get(u, 0)
        mv = self.has_target.get(v, 0)
        best = -1.0
        pick = 0
        for i in range(self.k):
            s = ((mu >> i) & 1) + ((mv >> i) & 1) + (top - ne[i]) * inv
            if s > best:
                best = s
                pick = i
        bit = 1 << pick
        self.has_source[u] = mu | bit
        self.has_target[v] = mv | bit
        ne[pick] += 1
        return pick

    def merge_from(self, other: "HeuristicState") -> None:
        """Fold another state's tables into this one (coordinated sync point)."""
        for i in range(self.k):
            self.ne[i] += other.ne[i]
        if isinstance(self.has_source, MaskTable):
            self.has_source.merge_from(other.has_source)
            self.has_target.merge_from(other.has_target)
        else:
            for gid, m in other.has_source.items():
                self.has_source[gid] = self.has_source.get(gid, 0) | m
            for gid, m in other.has_target.items():
                self.has_target[gid] = self.has_target.get(gid, 0) | m

    def clear(self) -> None:
        self.ne = [0] * self.k
        if isinstance(self.has_source, MaskTable):
            self.has_source.clear()
            self.has_target.clear()
        else:
            self.has_source.clear()
            self.has_target.clear()


def greedy_place(u: int, v: int, state: HeuristicState) -> int:
    return state.place(u, v)


HASH_STREAM = 0x68


def hash_place(u: int, k: int) -> int:
    """Owner-of-source sharding: SplitMix64 finalizer of the gid, mod k."""
    return int(mix64(np.uint64(u))) % k


@dataclass(frozen=True)
class PlacementResult:
    """Per-edge partition assignment aligned with the input stream."""

    assignments: np.ndarray
    k: int
    mode: str
    loaders: int = 1
    sync_interval: int = DEFAULT_SYNC_INTERVAL
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        object.__setattr__(
            self, "assignments", np.ascontiguousarray(self.assignments, dtype=np.int32)
        )
        if len(self.assignments) and (
            self.assignments.min() < 0 or self.assignments.max() >= self.k
        ):
            raise ParameterError("placement index out of range")


def _place_block(
    us: list,
    vs: list,
    k: int,
    priv: HeuristicState,
    shared: HeuristicState | None,
    out: np.ndarray,
    pos: int,
) -> None:
    # Hand-inlined copy of HeuristicState.place for throughput; the single
    # loader path is checked against place() in tests.
    ne = priv.ne
    src = priv.has_source
    tgt = priv.has_target
    sget = src.get
    tget = tgt.get
    delta = priv.delta
    if shared is None:
        for j, u in enumerate(us):
            v = vs[j]
            top = max(ne)
            inv = 1.0 / (delta + top - min(ne))
            mu = sget(u, 0)
            mv = tget(v, 0)
            best = -1.0
            pick = 0
            for i in range(k):
                s = ((mu >> i) & 1) + ((mv >> i) & 1) + (top - ne[i]) * inv
                if s > best:
                    best = s
                    pick = i
            bit = 1 << pick
            src[u] = mu | bit
            tgt[v] = mv | bit
            ne[pick] += 1
            out[pos + j] = pick
    else:
        bs_get = shared.has_source.get
        bt_get = shared.has_target.get
        bne = shared.ne
        for j, u in enumerate(us):
            v = vs[j]
            comb = [ne[i] + bne[i] for i in range(k)]
            top = max(comb)
            inv = 1.0 / (delta + top - min(comb))
            mu = sget(u, 0) | bs_get(u, 0)
            mv = tget(v, 0) | bt_get(v, 0)
            best = -1.0
            pick = 0
            for i in range(k):
                s = ((mu >> i) & 1) + ((mv >> i) & 1) + (top - comb[i]) * inv
                if s > best:
                    best = s
                    pick = i
            bit = 1 << pick
            src[u] = mu | bit
            tgt[v] = mv | bit
            ne[pick] += 1
            out[pos + j] = pick


def partition_stream(
    edges: EdgeStream,
    k: int,
    mode: str = "greedy-coordinated",
    loaders: int = 1,
    sync_interval: int = DEFAULT_SYNC_INTERVAL,
    epsilon: float = DEFAULT_EPSILON,
    approx_bits: int | None = None,
) -> PlacementResult:
    """Assign every edge of the stream to one of k partitions.

    The stream is split into ``loaders`` contiguous chunks.  Oblivious mode
    places each chunk with a fully private HeuristicState.  Coordinated mode
    interleaves loaders round-robin in blocks of ``sync_interval`` edges and
    folds each loader's private tables into a shared table at every block
    boundary, so a loader sees the shared tables as of its block start plus
    its own unmerged updates.  Hash mode ignores all state.
    """
    if k < 1:
        raise ParameterError("partition count must be >= 1")
    if loaders < 1:
        raise ParameterError("loader count must be >= 1")
    if sync_interval < 1:
        raise ParameterError("sync interval must be >= 1")
    if mode not in MODES:
        raise ParameterError(f"unknown mode {mode!r}; expected one of {MODES}")
    m = len(edges)
    out = np.empty(m, dtype=np.int32)
    if m == 0:
        return PlacementResult(out, k, mode, loaders, sync_interval, epsilon)
    if mode == "hash":
        out[:] = (mix64(edges.src) % np.uint64(k)).astype(np.int32)
        return PlacementResult(out, k, mode, loaders, sync_interval, epsilon)

    bounds = np.linspace(0, m, loaders + 1).astype(np.int64)
    chunks = [(int(bounds[i]), int(bounds[i + 1])) for i in range(loaders)]
    coordinated = mode == "greedy-coordinated"
    shared = HeuristicState(k, epsilon, approx_bits=approx_bits) if coordinated else None
    privs = [HeuristicState(k, epsilon, approx_bits=approx_bits) for _ in range(loaders)]
    cursors = [lo for lo, _ in chunks]
    done = 0
    while done < loaders:
        done = 0
        for ld, (lo, hi) in enumerate(chunks):
            cur = cursors[ld]
            if cur >= hi:
                done += 1
                continue
            stop = min(cur + sync_interval, hi) if coordinated else hi
            us = edges.src[cur:stop].tolist()
            vs = edges.dst[cur:stop].tolist()
            _place_block(us, vs, k, privs[ld], shared, out, cur)
            cursors[ld] = stop
            if coordinated:
                shared.merge_from(privs[ld])
                privs[ld].clear()
    return PlacementResult(out, k, mode, loaders, sync_interval, epsilon)


# ---------------------------------------------------------------------------
# Ownership and agent-graph construction.
# ---------------------------------------------------------------------------


def _dense_indices(edges: EdgeStream) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Map endpoint gids onto dense positions in the sorted vertex-id array."""
    vids = edges.vertex_ids()
    if edges.num_vertices is not None:
        return vids, edges.src.astype(np.int64), edges.dst.astype(np.int64)
    return vids, np.searchsorted(vids, edges.src), np.searchsorted(vids, edges.dst)


def resolve_owners(
    edges: EdgeStream, placement: PlacementResult, vertex_ids: np.ndarray | None = None
) -> np.ndarray:
    """Pick each vertex's master partition.

    Ownership goes to the partition holding the majority of the vertex's
    incident edge placements, ties to the lowest partition index.  A vertex
    with no incident edges falls back to ``gid mod k``.
    """
    if vertex_ids is None:
        vertex_ids, gu, gv = _dense_indices(edges)
    else:
        gu = np.searchsorted(vertex_ids, edges.src)
        gv = np.searchsorted(vertex_ids, edges.dst)
    nv = len(vertex_ids)
    k = placement.k
    assign = placement.assignments.astype(np.int64)
    counts = np.bincount(gu * k + assign, minlength=nv * k)
    counts += np.bincount(gv * k + assign, minlength=nv * k)
    counts = counts.reshape(nv, k)
    owners = counts.argmax(axis=1).astype(np.int32)
    isolated = counts.sum(axis=1) == 0
    if isolated.any():
        owners[isolated] = (vertex_ids[isolated] % np.uint64(k)).astype(np.int32)
    return owners


def effective_assignment(
    edges: EdgeStream, placement: PlacementResult, owners: np.ndarray, gu: np.ndarray
) -> np.ndarray:
    """Final per-edge home: the streamed placement, except self-loops move to
    their vertex's owner partition so they never spawn agents."""
    assign = placement.assignments.copy()
    loops = edges.src == edges.dst
    if loops.any():
        assign[loops] = owners[gu[loops]]
    return assign


class PartitionIdIndex:
    """Role-qualified id translation for one partition.

    ``local_to_global`` covers every local id (agents map to their master's
    gid, so the array is not injective); the reverse maps are per role.
    """

    def __init__(self, master_gids: np.ndarray, scatter_gids: np.ndarray, combiner_gids: np.ndarray):
        self.local_to_global = np.concatenate([master_gids, scatter_gids, combiner_gids])
        n, s = len(master_gids), len(scatter_gids)
        self.master_local = IdIndex.from_globals(master_gids)
        self.scatter_base = n
        self.combiner_base = n + s
        self._scatter = {int(g): n + i for i, g in enumerate(scatter_gids.tolist())}
        self._combiner = {int(g): n + s + i for i, g in enumerate(combiner_gids.tolist())}

    def master_of(self, gid: int) -> int:
        return self.master_local.to_local(gid)

    def scatter_of(self, gid: int) -> int | None:
        return self._scatter.get(int(gid))

    def combiner_of(self, gid: int) -> int | None:
        return self._combiner.get(int(gid))


@dataclass
class AgentGraphPartition:
    """One partition of the agent-extended graph.

    ``csr`` holds the ordinary (non-implicit) edges over local ids; the
    implicit master<->agent edges are represented by ``scatter_placement``
    (per-master remote partitions holding a scatter of that master) and by
    the per-agent owner/gid tables.  ``out_degree`` records the whole-graph
    out-degree for every scatter-capable local (masters and scatter agents).
    """

    index: int
    k: int
    csr: CsrGraph
    master_gids: np.ndarray
    scatter_gids: np.ndarray
    scatter_owner: np.ndarray
    combiner_gids: np.ndarray
    combiner_owner: np.ndarray
    scatter_placement_offsets: np.ndarray
    scatter_placement: np.ndarray
    combiner_presence_offsets: np.ndarray
    combiner_presence: np.ndarray
    out_degree: np.ndarray
    edge_weights: np.ndarray | None
    total_vertices: int
    total_edges: int

    _id_index: PartitionIdIndex | None = field(default=None, repr=False, compare=False)

    @property
    def master_count(self) -> int:
        return len(self.master_gids)

    @property
    def scatter_count(self) -> int:
        return len(self.scatter_gids)

    @property
    def combiner_count(self) -> int:
        return len(self.combiner_gids)

    @property
    def local_count(self) -> int:
        return self.master_count + self.scatter_count + self.combiner_count

    @property
    def scatter_range(self) -> tuple[int, int]:
        n = self.master_count
        return n, n + self.scatter_count

    @property
    def combiner_range(self) -> tuple[int, int]:
        lo = self.master_count + self.scatter_count
        return lo, lo + self.combiner_count

    @property
    def id_index(self) -> PartitionIdIndex:
        if self._id_index is None:
            self._id_index = PartitionIdIndex(
                self.master_gids, self.scatter_gids, self.combiner_gids
            )
        return self._id_index

    def placement_of(self, master_local: int) -> np.ndarray:
        o = self.scatter_placement_offsets
        return self.scatter_placement[o[master_local] : o[master_local + 1]]

    def presence_of(self, master_local: int) -> np.ndarray:
        o = self.combiner_presence_offsets
        return self.combiner_presence[o[master_local] : o[master_local + 1]]


def _ragged(group_keys: np.ndarray, values: np.ndarray, n_groups: int) -> tuple[np.ndarray, np.ndarray]:
    """Pack (key, value) pairs into offsets+flat arrays ordered by key."""
    order = np.argsort(group_keys, kind="stable")
    counts = np.bincount(group_keys, minlength=n_groups)
    offsets = np.zeros(n_groups + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return offsets, values[order].astype(np.int32)


def build_agent_graph(
    edges: EdgeStream,
    placement: PlacementResult,
    owners: np.ndarray | None = None,
    validate: bool = True,
) -> list[AgentGraphPartition]:
    """Materialize all k agent-graph partitions for a placement.

    For every edge kept on partition i, a remote source appears as a scatter
    agent and a remote target as a combiner agent, created on demand (one per
    remote vertex per partition, however many parallel edges map to it).
    """
    k = placement.k
    if len(placement.assignments) != len(edges):
        raise ParameterError("placement is not aligned with the edge stream")
    vids, gu, gv = _dense_indices(edges)
    nv = len(vids)
    if owners is None:
        owners = resolve_owners(edges, placement, vids)
    elif len(owners) != nv:
        raise ParameterError(
            f"owners array has {len(owners)} entries for {nv} vertices"
        )
    if len(owners) and (np.min(owners) < 0 or np.max(owners) >= k):
        raise ParameterError("owner partition index out of range")
    assign = effective_assignment(edges, placement, owners, gu)
    global_out_degree = np.bincount(gu, minlength=nv)

    # (vertex, partition) pairs holding out-/in-edges of the vertex; agents
    # exist where the pair's partition is not the owner.
    su = np.unique(gu * k + assign)
    sv = np.unique(gv * k + assign)
    su_vert, su_part = su // k, (su % k).astype(np.int32)
    sv_vert, sv_part = sv // k, (sv % k).astype(np.int32)
    scat_mask = owners[su_vert] != su_part
    comb_mask = owners[sv_vert] != sv_part
    scat_vert, scat_part = su_vert[scat_mask], su_part[scat_mask]
    comb_vert, comb_part = sv_vert[comb_mask], sv_part[comb_mask]

    ew = edges.weight
    parts: list[AgentGraphPartition] = []
    order_by_part = np.argsort(assign, kind="stable")
    part_bounds = np.searchsorted(assign[order_by_part], np.arange(k + 1))
    for i in range(k):
        kept_idx = order_by_part[part_bounds[i] : part_bounds[i + 1]]
        ku = gu[kept_idx]
        kv = gv[kept_idx]
        masters = np.flatnonzero(owners == i)
        n = len(masters)
        sc_v = scat_vert[scat_part == i]  # ascending by construction of unique
        cb_v = comb_vert[comb_part == i]
        s, c = len(sc_v), len(cb_v)

        # Dense-vertex -> local-id translation for this partition.
        to_master = np.full(nv, -1, dtype=np.int64)
        to_master[masters] = np.arange(n)
        to_scatter = np.full(nv, -1, dtype=np.int64)
        to_scatter[sc_v] = n + np.arange(s)
        to_combiner = np.full(nv, -1, dtype=np.int64)
        to_combiner[cb_v] = n + s + np.arange(c)

        rows = np.where(owners[ku] == i, to_master[ku], to_scatter[ku])
        cols = np.where(owners[kv] == i, to_master[kv], to_combiner[kv])
        if (rows < 0).any() or (cols < 0).any():
            raise ParameterError("internal agent table inconsistency")
        csr, perm = build_csr(rows, cols, n + s + c)
        weights = None if ew is None else ew[kept_idx][perm]

        sp_sel = owners[scat_vert] == i
        sp_off, sp_flat = _ragged(
            to_master[scat_vert[sp_sel]].astype(np.int64), scat_part[sp_sel], n
        )
        cp_sel = owners[comb_vert] == i
        cp_off, cp_flat = _ragged(
            to_master[comb_vert[cp_sel]].astype(np.int64), comb_part[cp_sel], n
        )

        out_deg = np.concatenate(
            [global_out_degree[masters], global_out_degree[sc_v]]
        ).astype(np.int64)
        parts.append(
            AgentGraphPartition(
                index=i,
                k=k,
                csr=csr,
                master_gids=vids[masters],
                scatter_gids=vids[sc_v],
                scatter_owner=owners[sc_v].astype(np.int32),
                combiner_gids=vids[cb_v],
                combiner_owner=owners[cb_v].astype(np.int32),
                scatter_placement_offsets=sp_off,
                scatter_placement=sp_flat,
                combiner_presence_offsets=cp_off,
                combiner_presence=cp_flat,
                out_degree=out_deg,
                edge_weights=weights,
                total_vertices=nv,
                total_edges=len(edges),
            )
        )
    if validate:
        validate_partitions(parts, edges)
    return parts


def validate_partitions(parts: Sequence[AgentGraphPartition], edges: EdgeStream) -> None:
    """Assert the structural contract of the agent-graph model.

    Checks, per partition and globally: master sets partition the vertex set;
    ordinary edges are conserved; combiners have no explicit out-edges and at
    least one in-edge; scatters have at least one out-edge and no explicit
    in-edge (this also rules out combiner->scatter edges); recorded placement
    and presence tables mirror the realized agents; out-degree totals match.
    """
    vids = edges.vertex_ids()
    all_masters = np.concatenate([p.master_gids for p in parts])
    if len(all_masters) != len(vids) or not np.array_equal(np.sort(all_masters), vids):
        raise AssertionError("master sets do not partition the vertex set")
    total = sum(p.csr.edge_count for p in parts)
    if total != len(edges):
        raise AssertionError(f"ordinary edge conservation failed: {total} != {len(edges)}")
    deg_by_gid: dict[int, int] = {}
    placement_pairs = set()
    realized_scatters = set()
    presence_pairs = set()
    realized_combiners = set()
    for p in parts:
        n = p.master_count
        s_lo, s_hi = p.scatter_range
        c_lo, c_hi = p.combiner_range
        deg = p.csr.out_degrees()
        if (deg[c_lo:c_hi] != 0).any():
            raise AssertionError("combiner with explicit out-edges")
        if s_hi > s_lo and (deg[s_lo:s_hi] == 0).any():
            raise AssertionError("scatter agent with no out-edges")
        cols = p.csr.col_indices
        if len(cols):
            in_scatter = (cols >= s_lo) & (cols < s_hi)
            if in_scatter.any():
                raise AssertionError("explicit edge into a scatter agent")
        in_count = np.bincount(cols, minlength=p.local_count) if len(cols) else np.zeros(p.local_count, dtype=np.int64)
        if c_hi > c_lo and (in_count[c_lo:c_hi] == 0).any():
            raise AssertionError("combiner with no in-edges")
        if p.edge_weights is not None and len(p.edge_weights) != p.csr.edge_count:
            raise AssertionError("weight column misaligned with CSR")
        idx = p.id_index
        if len(idx.local_to_global) != p.local_count:
            raise AssertionError("id index size mismatch")
        for g in p.scatter_gids.tolist():
            realized_scatters.add((g, p.index))
        for g in p.combiner_gids.tolist():
            realized_combiners.add((g, p.index))
        for m, g in enumerate(p.master_gids.tolist()):
            for j in p.placement_of(m).tolist():
                placement_pairs.add((g, j))
            for j in p.presence_of(m).tolist():
                presence_pairs.add((g, j))
            deg_by_gid[g] = int(p.out_degree[m])
    if placement_pairs != realized_scatters:
        raise AssertionError("scatter_placement tables do not mirror realized scatter agents")
    if presence_pairs != realized_combiners:
        raise AssertionError("combiner_presence tables do not mirror realized combiners")
    # Sum of local out-degrees (master rows plus their scatter rows) must
    # reproduce the recorded global out-degree of every master.
    local_sum: dict[int, int] = {}
    for p in parts:
        s_hi = p.scatter_range[1]
        deg = p.csr.out_degrees()
        for g, d in zip(p.id_index.local_to_global[:s_hi].tolist(), deg[:s_hi].tolist()):
            local_sum[g] = local_sum.get(g, 0) + int(d)
    for g, expected in deg_by_gid.items():
        if local_sum.get(g, 0) != expected:
            raise AssertionError(f"global out-degree mismatch for vertex {g}")


# ---------------------------------------------------------------------------
# Quality metrics.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PartitionMetrics:
    """Communication-quality measures of one placement.

    ``equivalent_edge_cut_rate`` is communication edges over |E| and
    ``cut_factor`` communication edges over |V|; under the agent model the
    communication edges are the implicit agent edges (one per agent), while
    the plain sharding baseline pays one message per ordinary edge whose
    endpoints live on different owners.  ``vertexcut_cut_factor`` evaluates
    2*(#Replicas - |V|)/|V| on the same placement, counting a replica for
    every partition co-located with an incident edge of the vertex.
    """

    k: int
    mode: str
    total_vertices: int
    total_edges: int
    agent_count: int
    scatter_count: int
    combiner_count: int
    agent_rate: float
    equivalent_edge_cut_rate: float
    cut_factor: float
    scatter_share: float
    combiner_share: float
    edge_balance: float
    epsilon: float
    balance_satisfied: bool
    balance_warning: str | None
    vertexcut_cut_factor: float
    sharding_edge_cut_rate: float
    ne: tuple

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["ne"] = list(self.ne)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PartitionMetrics":
        d = dict(d)
        d["ne"] = tuple(d["ne"])
        return cls(**d)


def _metrics_from_counts(
    k: int,
    mode: str,
    nv: int,
    ne_total: int,
    scatters: int,
    combiners: int,
    replicas: int,
    cut_edges: int,
    per_part_edges: np.ndarray,
    epsilon: float,
) -> PartitionMetrics:
    if nv == 0:
        raise ParameterError("metrics are undefined for an empty vertex set")
    agents = scatters + combiners
    agent_rate = agents / nv
    sharding_rate = cut_edges / ne_total if ne_total else 0.0
    if mode == "hash":
        # The hash baseline models plain vertex sharding: one message per
        # cross-owner edge, no combining.
        comm_edges = cut_edges
    else:
        comm_edges = agents
    eq_rate = comm_edges / ne_total if ne_total else 0.0
    cut_factor = comm_edges / nv
    target = ne_total / k if k else 0.0
    balance = (per_part_edges.max() / target) if ne_total else 0.0
    balance_ok = balance <= 1.0 + epsilon
    warning = None
    if not balance_ok:
        warning = (
            f"edge balance {balance:.4f} exceeds (1+epsilon) = {1.0 + epsilon:.4f}; "
            "the greedy heuristic only softly encourages balance"
        )
    return PartitionMetrics(
        k=k,
        mode=mode,
        total_vertices=nv,
        total_edges=ne_total,
        agent_count=agents,
        scatter_count=scatters,
        combiner_count=combiners,
        agent_rate=agent_rate,
        equivalent_edge_cut_rate=eq_rate,
        cut_factor=cut_factor,
        scatter_share=scatters / agents if agents else 0.0,
        combiner_share=combiners / agents if agents else 0.0,
        edge_balance=float(balance),
        epsilon=epsilon,
        balance_satisfied=bool(balance_ok),
        balance_warning=warning,
        vertexcut_cut_factor=2.0 * (replicas - nv) / nv,
        sharding_edge_cut_rate=sharding_rate,
        ne=tuple(int(x) for x in per_part_edges),
    )


def compute_metrics(
    parts: Sequence[AgentGraphPartition], mode: str = "greedy", epsilon: float = DEFAULT_EPSILON
) -> PartitionMetrics:
    """Derive metrics from built partitions."""
    if not parts:
        raise ParameterError("no partitions given")
    nv = parts[0].total_vertices
    ne_total = parts[0].total_edges
    k = parts[0].k
    scatters = sum(p.scatter_count for p in parts)
    combiners = sum(p.combiner_count for p in parts)
    replicas = 0
    cut_edges = 0
    for p in parts:
        deg = p.csr.out_degrees()
        with_local_edge = set(np.flatnonzero(deg > 0).tolist())
        if len(p.csr.col_indices):
            with_local_edge.update(np.unique(p.csr.col_indices).tolist())
        gids = p.id_index.local_to_global
        replicas += len({int(gids[l]) for l in with_local_edge})
        # Owner of an edge's source is this partition for master rows, else
        # the scatter agent's recorded owner; symmetrically for targets.
        n = p.master_count
        s_lo, s_hi = p.scatter_range
        rows = np.repeat(np.arange(p.local_count), deg)
        cols = p.csr.col_indices.astype(np.int64)
        row_owner = np.where(rows < n, p.index, 0)
        if s_hi > s_lo:
            is_sc = rows >= s_lo  # combiner rows are empty, so rows < s_hi
            row_owner = np.where(is_sc, _safe_take(p.scatter_owner, rows - s_lo, is_sc), row_owner)
        col_owner = np.where(cols < n, p.index, 0)
        c_lo = p.combiner_range[0]
        is_cb = cols >= c_lo
        if is_cb.any():
            col_owner = np.where(is_cb, _safe_take(p.combiner_owner, cols - c_lo, is_cb), col_owner)
        cut_edges += int((row_owner != col_owner).sum())
    # Vertices with no incident edge anywhere still materialize at their owner,
    # contributing one replica each.
    gids_with_edges = set()
    for p in parts:
        deg = p.csr.out_degrees()
        locs = np.flatnonzero(deg > 0)
        interesting = set(locs.tolist())
        if len(p.csr.col_indices):
            interesting.update(np.unique(p.csr.col_indices).tolist())
        g = p.id_index.local_to_global
        gids_with_edges.update(int(g[l]) for l in interesting)
    replicas += nv - len(gids_with_edges)
    per_part = np.array([p.csr.edge_count for p in parts], dtype=np.int64)
    return _metrics_from_counts(
        k, mode, nv, ne_total, scatters, combiners, replicas, cut_edges, per_part, epsilon
    )


def _safe_take(values: np.ndarray, idx: np.ndarray, mask: np.ndarray) -> np.ndarray:
    out = np.zeros(len(idx), dtype=values.dtype if len(values) else np.int32)
    if mask.any() and len(values):
        out[mask] = values[idx[mask]]
    return out


def compute_placement_metrics(
    edges: EdgeStream,
    placement: PlacementResult,
    owners: np.ndarray | None = None,
    epsilon: float | None = None,
) -> PartitionMetrics:
    """Metrics straight from a placement, skipping partition materialization.

    Produces the same numbers as ``compute_metrics`` over
    ``build_agent_graph`` output; used for large streams where only the
    report is needed.
    """
    k = placement.k
    vids, gu, gv = _dense_indices(edges)
    nv = len(vids)
    if nv == 0:
        raise ParameterError("metrics are undefined for an empty vertex set")
    if owners is None:
        owners = resolve_owners(edges, placement, vids)
    assign = effective_assignment(edges, placement, owners, gu)
    su = np.unique(gu * k + assign)
    sv = np.unique(gv * k + assign)
    scatters = int((owners[su // k] != (su % k)).sum())
    combiners = int((owners[sv // k] != (sv % k)).sum())
    pair_union = np.unique(np.concatenate([su, sv]))
    verts_with_edges = len(np.unique(pair_union // k))
    replicas = len(pair_union) + (nv - verts_with_edges)
    cut_edges = int((owners[gu] != owners[gv]).sum())
    per_part = np.bincount(assign, minlength=k)
    return _metrics_from_counts(
        k,
        placement.mode,
        nv,
        len(edges),
        scatters,
        combiners,
        replicas,
        cut_edges,
        per_part,
        placement.epsilon if epsilon is None else epsilon,
    )
