"""Command-line interface: gen, partition, run, analyze.

Every command is deterministic under fixed flags and seeds; reports carry no
timestamps.  Exit codes: 0 success, 2 parameter error, 3 I/O error, 4 format
error, 5 configuration error, 1 anything unexpected.

Environment overrides: AGENTGRAPH_WORKERS (execution lanes per worker) and
AGENTGRAPH_BUFFER_CAPACITY (wire buffer bytes).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analyze as analyze_mod
from . import checkpoint as ckpt
from . import storage
from .engine import EngineConfig, init_run, run_to_termination
from .errors import AgentGraphError, ConfigurationError, InputError, ParameterError
from .graph import (
    EdgeStream,
    read_edge_list,
    read_edge_list_binary,
    write_edge_list,
    write_edge_list_binary,
)
from .partition import (
    DEFAULT_EPSILON,
    DEFAULT_SYNC_INTERVAL,
    MODES,
    build_agent_graph,
    compute_metrics,
    partition_stream,
)
from .programs import (
    cc_init,
    cc_program,
    pagerank_init,
    pagerank_program,
    sssp_init,
    sssp_program,
)
from .rmat import RmatParams, assign_weights, generate_rmat

log = logging.getLogger("agentgraph")

MODE_PRESETS = {
    # Named ingress presets: serial coordinated loading vs parallel oblivious.
    "gre-s": ("greedy-coordinated", 1),
    "gre-p": ("greedy-oblivious", 8),
}


@dataclass
class RunConfig:
    """Resolved options for one engine run."""

    app: str
    iterations: int
    source: int | None
    record_predecessor: bool
    damping: float
    base: float
    lanes: int
    buffer_capacity: int
    lock_table_size: int
    shuffle_seed: int | None
    checkpoint_interval: int | None
    checkpoint_path: str | None
    resume: str | None

    def engine_config(self) -> EngineConfig:
        return EngineConfig(
            buffer_capacity=self.buffer_capacity,
            lock_table_size=self.lock_table_size,
            lanes=self.lanes,
            shuffle_seed=self.shuffle_seed,
        )


def _parse_weight_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split(":")
        return int(lo), int(hi)
    except ValueError:
        raise ParameterError(f"expected LOW:HIGH weight range, got {text!r}") from None


def _env_int(name: str, fallback: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return fallback
    try:
        return int(raw)
    except ValueError:
        raise ParameterError(f"environment variable {name} must be an integer") from None


def cmd_gen(args) -> int:
    params = RmatParams(
        scale=args.scale,
        edge_factor=args.edge_factor,
        a=args.a,
        b=args.b,
        c=args.c,
        d=args.d,
        seed=args.seed,
    )
    stream = generate_rmat(params, permute_ids=args.permute)
    if args.weights:
        lo, hi = _parse_weight_range(args.weights)
        stream = assign_weights(stream, lo, hi, seed=args.seed)
    out = Path(args.output)
    try:
        if args.binary:
            write_edge_list_binary(stream, out)
        else:
            write_edge_list(stream, out)
    except OSError as exc:
        raise InputError(f"cannot write {out}: {exc}") from None
    print(f"generated |V|={params.num_vertices} |E|={params.num_edges} -> {out}")
    return 0


def _read_edges(path: str, weighted: bool, binary: bool) -> EdgeStream:
    reader = read_edge_list_binary if binary else read_edge_list
    return reader(path, weighted=weighted)


def _declare_vertices(stream: EdgeStream, vertices: int | None) -> EdgeStream:
    if vertices is None:
        return stream
    return EdgeStream(stream.src, stream.dst, stream.weight, num_vertices=vertices)


def _resolve_mode(mode: str, loaders: int | None) -> tuple[str, int]:
    if mode in MODE_PRESETS:
        preset_mode, preset_loaders = MODE_PRESETS[mode]
        return preset_mode, loaders if loaders is not None else preset_loaders
    if mode not in MODES:
        raise ParameterError(f"unknown mode {mode!r}")
    return mode, loaders if loaders is not None else 1


def _partition_pipeline(stream: EdgeStream, args):
    mode, loaders = _resolve_mode(args.mode, args.loaders)
    placement = partition_stream(
        stream,
        args.k,
        mode,
        loaders=loaders,
        sync_interval=args.sync_interval,
        epsilon=args.epsilon,
        approx_bits=args.approx_bits,
    )
    parts = build_agent_graph(stream, placement)
    metrics = compute_metrics(parts, mode=mode, epsilon=args.epsilon)
    return placement, parts, metrics


def cmd_partition(args) -> int:
    stream = _read_edges(args.input, args.weighted, args.binary)
    stream = _declare_vertices(stream, args.vertices)
    if args.symmetrize:
        stream = stream.symmetrized()
    placement, parts, metrics = _partition_pipeline(stream, args)
    manifest = storage.write_partition_set(
        args.output,
        parts,
        metrics,
        extra={
            "mode": placement.mode,
            "loaders": placement.loaders,
            "sync_interval": placement.sync_interval,
            "epsilon": placement.epsilon,
            "symmetrized": bool(args.symmetrize),
            "source_edge_list": str(args.input),
        },
    )
    if metrics.balance_warning:
        log.warning("%s", metrics.balance_warning)
    print(
        f"partitioned |V|={metrics.total_vertices} |E|={metrics.total_edges} into k={args.k} "
        f"({placement.mode}); agents={metrics.agent_count} "
        f"equiv_edge_cut_rate={metrics.equivalent_edge_cut_rate:.4f} "
        f"edge_balance={metrics.edge_balance:.4f} -> {manifest.parent}"
    )
    return 0


def _build_program(cfg: RunConfig):
    if cfg.app == "pagerank":
        return pagerank_program(cfg.damping, cfg.base), pagerank_init(cfg.base)
    if cfg.app == "sssp":
        if cfg.source is None:
            raise ParameterError("sssp requires --source")
        return (
            sssp_program(cfg.source, record_predecessor=cfg.record_predecessor),
            sssp_init(cfg.source),
        )
    if cfg.app == "cc":
        return cc_program(), cc_init()
    raise ParameterError(f"unknown app {cfg.app!r}")


def _load_run_partitions(args):
    """Either load a partition directory or partition an edge list in-process."""
    if args.partitions:
        parts, manifest = storage.read_partition_set(args.partitions)
        if args.app == "sssp" and not manifest.get("weighted"):
            raise ConfigurationError("sssp needs weighted partitions; re-partition with --weighted")
        if args.app == "cc" and not manifest.get("symmetrized"):
            raise ConfigurationError(
                "cc needs an undirected view; re-partition with --symmetrize "
                "or pass the edge list directly via -i"
            )
        return parts
    if not args.input:
        raise ParameterError("run needs either -p PARTITION_DIR or -i EDGE_LIST")
    stream = _read_edges(args.input, args.weighted, args.binary)
    stream = _declare_vertices(stream, args.vertices)
    if args.app == "sssp" and not stream.weighted:
        raise ConfigurationError("sssp needs edge weights; pass --weighted with a weighted list")
    if args.app == "cc":
        log.info("directed input: using the symmetrized view for connected components")
        stream = stream.symmetrized()
    _, parts, _ = _partition_pipeline(stream, args)
    return parts


def _write_results(state, path: Path, record_predecessor: bool) -> None:
    gids, values = state.vertex_values()
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["global_id", "value"])
        if values.dtype.kind == "f":
            for g, v in zip(gids.tolist(), values.tolist()):
                writer.writerow([g, repr(v)])
        else:
            for g, v in zip(gids.tolist(), values.tolist()):
                writer.writerow([g, v])
    if record_predecessor:
        pgids, preds = state.vertex_aux_values()
        side = path.with_suffix(path.suffix + ".pred")
        with side.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["global_id", "value"])
            for g, v in zip(pgids.tolist(), preds.tolist()):
                writer.writerow([g, v])


def cmd_run(args) -> int:
    cfg = RunConfig(
        app=args.app,
        iterations=args.iterations,
        source=args.source,
        record_predecessor=args.record_predecessor,
        damping=args.damping,
        base=args.base,
        lanes=_env_int("AGENTGRAPH_WORKERS", args.lanes),
        buffer_capacity=_env_int("AGENTGRAPH_BUFFER_CAPACITY", args.buffer_capacity),
        lock_table_size=args.lock_table_size,
        shuffle_seed=args.shuffle_seed,
        checkpoint_interval=args.checkpoint_interval,
        checkpoint_path=args.checkpoint_path,
        resume=args.resume,
    )
    parts = _load_run_partitions(args)
    program, init = _build_program(cfg)
    if cfg.resume:
        state = ckpt.restore_checkpoint(cfg.resume, parts, program, cfg.engine_config())
        log.info("resumed at superstep %d", state.superstep)
    else:
        state = init_run(parts, program, init, cfg.engine_config())
    cap = cfg.iterations if cfg.app == "pagerank" else args.max_supersteps
    reports = run_to_termination(
        state,
        max_supersteps=cap,
        checkpoint_every=cfg.checkpoint_interval,
        checkpoint_path=cfg.checkpoint_path,
    )
    out = Path(args.output)
    try:
        _write_results(state, out, cfg.record_predecessor and cfg.app == "sssp")
    except OSError as exc:
        raise InputError(f"cannot write {out}: {exc}") from None
    if args.report:
        with Path(args.report).open("w", encoding="utf-8") as fh:
            for rep in reports:
                fh.write(json.dumps(rep.to_dict(), sort_keys=True) + "\n")
    sent = sum(r.total_messages_sent for r in reports)
    print(
        f"{cfg.app}: {len(reports)} supersteps on k={state.k}, "
        f"{sent} wire messages -> {out}"
    )
    return 0


def cmd_analyze(args) -> int:
    if bool(args.metrics) == bool(args.results):
        raise ParameterError("analyze needs exactly one of --metrics or --results")
    if args.metrics:
        report = analyze_mod.compare_metrics(args.metrics)
        text = analyze_mod.render_metrics_table(report)
    else:
        report = analyze_mod.diff_results(args.results[0], args.results[1])
        text = analyze_mod.render_diff(report)
    if args.format == "json":
        rendered = json.dumps(report, indent=2, sort_keys=True)
    else:
        rendered = text
    if args.output:
        Path(args.output).write_text(rendered + "\n", encoding="utf-8")
    else:
        print(rendered)
    return 0


def _add_partition_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("-k", type=int, default=1, help="partition count")
    p.add_argument(
        "--mode",
        default="greedy-coordinated",
        help=f"{', '.join(MODES)}, or presets {', '.join(MODE_PRESETS)}",
    )
    p.add_argument("--loaders", type=int, default=None, help="parallel loader count")
    p.add_argument("--sync-interval", type=int, default=DEFAULT_SYNC_INTERVAL)
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON, help="imbalance factor")
    p.add_argument(
        "--approx-bits",
        type=int,
        default=None,
        help="use approximate membership tables of 2**BITS slots",
    )
    p.add_argument("--vertices", type=int, default=None, help="declare the universe [0, N)")
    p.add_argument("--weighted", action="store_true", help="edge list carries weights")
    p.add_argument("--binary", action="store_true", help="edge list is the binary format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agentgraph",
        description="Graph generation, streaming partitioning, scatter-combine runs, reports.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic power-law graph")
    g.add_argument("--scale", type=int, required=True, help="2**scale vertices")
    g.add_argument("--edge-factor", type=int, default=16)
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("-a", type=float, default=0.57)
    g.add_argument("-b", type=float, default=0.19)
    g.add_argument("-c", type=float, default=0.19)
    g.add_argument("-d", type=float, default=0.05)
    g.add_argument("--weights", default=None, metavar="LOW:HIGH")
    g.add_argument("--permute", action="store_true", help="apply a seeded id permutation")
    g.add_argument("--binary", action="store_true", help="write the binary record format")
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_gen)

    p = sub.add_parser("partition", help="place edges and build agent-graph partitions")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--symmetrize", action="store_true", help="emit both edge directions first")
    _add_partition_options(p)
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=cmd_partition)

    r = sub.add_parser("run", help="execute a vertex program")
    r.add_argument("-p", "--partitions", default=None, help="partition directory")
    r.add_argument("-i", "--input", default=None, help="edge list (one-shot partition+run)")
    _add_partition_options(r)
    r.add_argument("--app", required=True, choices=("pagerank", "sssp", "cc"))
    r.add_argument("--iterations", type=int, default=50, help="pagerank superstep cap")
    r.add_argument("--max-supersteps", type=int, default=None)
    r.add_argument("--source", type=int, default=None, help="sssp source vertex")
    r.add_argument("--record-predecessor", action="store_true")
    r.add_argument("--damping", type=float, default=0.85)
    r.add_argument("--base", type=float, default=0.15)
    r.add_argument("--lanes", type=int, default=1, help="execution lanes per worker")
    r.add_argument("--buffer-capacity", type=int, default=64 * 1024)
    r.add_argument("--lock-table-size", type=int, default=4096)
    r.add_argument("--shuffle-seed", type=int, default=None, help="scheduler shuffle seed")
    r.add_argument("--checkpoint-interval", type=int, default=None)
    r.add_argument("--checkpoint-path", default=None)
    r.add_argument("--resume", default=None, help="restore from a checkpoint file")
    r.add_argument("--report", default=None, help="write per-superstep JSON lines here")
    r.add_argument("-o", "--output", required=True, help="result CSV path")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("analyze", help="compare metrics reports or result columns")
    a.add_argument("--metrics", nargs="+", default=None, help="metrics JSON files")
    a.add_argument("--results", nargs=2, default=None, help="two result CSV files")
    a.add_argument("--format", choices=("text", "json"), default="text")
    a.add_argument("-o", "--output", default=None)
    a.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except AgentGraphError as exc:
        log.error("%s", exc)
        return exc.exit_code
    except OSError as exc:
        log.error("%s", exc)
        return InputError.exit_code


if __name__ == "__main__":
    sys.exit(main())
