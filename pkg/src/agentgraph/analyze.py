"""Comparison reports over metrics files and result columns.

Two report kinds: side-by-side partition-quality tables (cut rates, agent
skew, balance) and engine-vs-oracle result diffs (mismatch count, max
absolute error).  Each renders as machine JSON or aligned text.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import FormatError, InputError
from .oracle import read_result_csv
from .partition import PartitionMetrics

_METRIC_ROWS = (
    ("k", "k", "d"),
    ("mode", "mode", "s"),
    ("agent_count", "agents", "d"),
    ("scatter_share", "scatter share", "f"),
    ("combiner_share", "combiner share", "f"),
    ("agent_rate", "agent rate", "f"),
    ("equivalent_edge_cut_rate", "equiv edge-cut rate", "f"),
    ("cut_factor", "cut factor", "f"),
    ("vertexcut_cut_factor", "vertex-cut factor", "f"),
    ("sharding_edge_cut_rate", "sharding cut rate", "f"),
    ("edge_balance", "edge balance", "f"),
)


def load_metrics(path) -> PartitionMetrics:
    path = Path(path)
    if not path.exists():
        raise InputError(f"metrics file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from None
    try:
        return PartitionMetrics.from_dict(data)
    except TypeError as exc:
        raise FormatError(f"{path}: not a metrics report ({exc})") from None


def compare_metrics(paths: list) -> dict:
    """Columnar comparison of any number of metrics reports."""
    entries = [(str(p), load_metrics(p)) for p in paths]
    report = {"kind": "metrics-comparison", "columns": [name for name, _ in entries], "rows": {}}
    for key, label, _fmt in _METRIC_ROWS:
        report["rows"][key] = [getattr(m, key) for _, m in entries]
    report["balance_warnings"] = {
        name: m.balance_warning for name, m in entries if m.balance_warning
    }
    return report


def _format_cell(value, fmt: str) -> str:
    return f"{value:.6f}" if fmt == "f" else str(value)


def render_metrics_table(report: dict) -> str:
    names = [Path(c).parent.name or Path(c).name for c in report["columns"]]
    cell_max = max(
        len(_format_cell(v, fmt))
        for key, _, fmt in _METRIC_ROWS
        for v in report["rows"][key]
    )
    width = max(12, cell_max, *(len(n) for n in names)) + 2
    label_w = max(len(label) for _, label, _ in _METRIC_ROWS) + 2
    lines = [" " * label_w + "".join(n.rjust(width) for n in names)]
    for key, label, fmt in _METRIC_ROWS:
        cells = [_format_cell(v, fmt).rjust(width) for v in report["rows"][key]]
        lines.append(label.ljust(label_w) + "".join(cells))
    for name, warning in report.get("balance_warnings", {}).items():
        lines.append(f"warning [{name}]: {warning}")
    return "\n".join(lines)


def diff_results(path_a, path_b) -> dict:
    """Vertex-value diff between two (global_id,value) CSV files."""
    gids_a, vals_a = read_result_csv(path_a)
    gids_b, vals_b = read_result_csv(path_b)
    if len(gids_a) != len(gids_b) or not np.array_equal(np.sort(gids_a), np.sort(gids_b)):
        raise FormatError("result files cover different vertex sets")
    order_a = np.argsort(gids_a, kind="stable")
    order_b = np.argsort(gids_b, kind="stable")
    va = vals_a[order_a]
    vb = vals_b[order_b]
    if va.dtype.kind == "f" or vb.dtype.kind == "f":
        diff = np.abs(va.astype(np.float64) - vb.astype(np.float64))
        mismatches = int((diff > 0).sum())
        max_err = float(diff.max()) if len(diff) else 0.0
    else:
        neq = va != vb
        mismatches = int(neq.sum())
        # unsigned-safe absolute difference
        hi = np.maximum(va, vb)
        lo = np.minimum(va, vb)
        max_err = float((hi - lo).max()) if len(va) else 0.0
    return {
        "kind": "result-diff",
        "left": str(path_a),
        "right": str(path_b),
        "vertices": int(len(va)),
        "mismatch_count": mismatches,
        "max_abs_error": max_err,
    }


def render_diff(report: dict) -> str:
    return (
        f"compared {report['vertices']} vertices\n"
        f"  left : {report['left']}\n"
        f"  right: {report['right']}\n"
        f"  mismatches  : {report['mismatch_count']}\n"
        f"  max |error| : {report['max_abs_error']:.3e}"
    )
