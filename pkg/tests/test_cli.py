import json

import numpy as np
import pytest

from agentgraph.cli import main
from agentgraph.oracle import read_result_csv


def run_cli(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def graph_file(tmp_path):
    out = tmp_path / "g.txt"
    assert run_cli("gen", "--scale", 8, "--seed", 3, "--weights", "1:65535", "-o", out) == 0
    return out


@pytest.fixture
def partition_dir(tmp_path, graph_file):
    out = tmp_path / "parts"
    code = run_cli(
        "partition", "-i", graph_file, "--weighted", "-k", 4,
        "--mode", "gre-s", "--vertices", 256, "-o", out,
    )
    assert code == 0
    return out


class TestGen:
    def test_writes_summary_and_file(self, graph_file, capsys):
        assert graph_file.exists()

    def test_deterministic_artifacts(self, tmp_path):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        run_cli("gen", "--scale", 6, "--seed", 9, "-o", a)
        run_cli("gen", "--scale", 6, "--seed", 9, "-o", b)
        assert a.read_bytes() == b.read_bytes()

    def test_binary_output(self, tmp_path):
        out = tmp_path / "g.bin"
        assert run_cli("gen", "--scale", 5, "--seed", 1, "--binary", "-o", out) == 0
        assert out.stat().st_size == 16 * 32 * 16

    def test_scale_zero_is_parameter_error(self, tmp_path):
        assert run_cli("gen", "--scale", 0, "-o", tmp_path / "x.txt") == 2

    def test_bad_weight_range(self, tmp_path):
        assert run_cli("gen", "--scale", 3, "--weights", "nope", "-o", tmp_path / "x") == 2


class TestPartition:
    def test_outputs(self, partition_dir):
        manifest = json.loads((partition_dir / "manifest.json").read_text())
        assert manifest["k"] == 4 and manifest["weighted"]
        assert len(list(partition_dir.glob("part-*.agp"))) == 4
        metrics = json.loads((partition_dir / "metrics.json").read_text())
        assert metrics["agent_count"] > 0
        assert metrics["k"] == 4

    def test_missing_input_is_io_error(self, tmp_path):
        assert run_cli("partition", "-i", tmp_path / "none.txt", "-k", 2, "-o", tmp_path / "p") == 3

    def test_malformed_input_is_format_error(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("0 zebra\n")
        assert run_cli("partition", "-i", bad, "-k", 2, "-o", tmp_path / "p") == 4

    def test_hash_mode_metrics(self, tmp_path, graph_file):
        out = tmp_path / "ph"
        assert run_cli(
            "partition", "-i", graph_file, "--weighted", "-k", 4,
            "--mode", "hash", "--vertices", 256, "-o", out,
        ) == 0
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["mode"] == "hash"

    def test_unknown_mode(self, tmp_path, graph_file):
        assert run_cli(
            "partition", "-i", graph_file, "-k", 2, "--mode", "magic", "-o", tmp_path / "p"
        ) == 2

    def test_unknown_flag_exits_2(self, tmp_path, graph_file):
        with pytest.raises(SystemExit) as exc:
            run_cli("partition", "-i", graph_file, "--wat", "-o", tmp_path / "p")
        assert exc.value.code == 2


class TestRun:
    def test_pagerank_superstep_cap(self, tmp_path, partition_dir):
        out = tmp_path / "pr.csv"
        report = tmp_path / "pr.jsonl"
        code = run_cli(
            "run", "-p", partition_dir, "--app", "pagerank", "--iterations", 12,
            "-o", out, "--report", report,
        )
        assert code == 0
        lines = report.read_text().strip().splitlines()
        assert len(lines) == 12
        first = json.loads(lines[0])
        assert first["superstep"] == 1
        assert sum(first["messages_sent"]) == sum(first["messages_received"])

    def test_sssp_with_predecessors(self, tmp_path, partition_dir):
        out = tmp_path / "sssp.csv"
        code = run_cli(
            "run", "-p", partition_dir, "--app", "sssp", "--source", 0,
            "--record-predecessor", "-o", out,
        )
        assert code == 0
        gids, dist = read_result_csv(out)
        assert len(gids) == 256
        assert out.with_suffix(".csv.pred").exists()

    def test_sssp_on_unweighted_partitions_is_configuration_error(self, tmp_path, graph_file):
        pdir = tmp_path / "unweighted"
        run_cli("partition", "-i", graph_file, "-k", 2, "-o", pdir)  # weights ignored
        assert run_cli(
            "run", "-p", pdir, "--app", "sssp", "--source", 0, "-o", tmp_path / "x.csv"
        ) == 5

    def test_sssp_without_source_is_parameter_error(self, tmp_path, partition_dir):
        assert run_cli(
            "run", "-p", partition_dir, "--app", "sssp", "-o", tmp_path / "x.csv"
        ) == 2

    def test_cc_on_directed_partitions_is_configuration_error(self, tmp_path, partition_dir):
        assert run_cli(
            "run", "-p", partition_dir, "--app", "cc", "-o", tmp_path / "cc.csv"
        ) == 5

    def test_cc_one_shot_symmetrizes(self, tmp_path, graph_file, caplog):
        import logging

        caplog.set_level(logging.INFO, logger="agentgraph")
        out = tmp_path / "cc.csv"
        code = run_cli(
            "run", "-i", graph_file, "--weighted", "-k", 4, "--vertices", 256,
            "--app", "cc", "-o", out,
        )
        assert code == 0
        assert any("symmetrized" in r.message for r in caplog.records)
        gids, labels = read_result_csv(out)
        assert (labels <= gids).all()

    def test_cc_on_symmetrized_partitions(self, tmp_path, graph_file):
        pdir = tmp_path / "sym"
        run_cli(
            "partition", "-i", graph_file, "--weighted", "--symmetrize",
            "-k", 2, "--vertices", 256, "-o", pdir,
        )
        assert run_cli("run", "-p", pdir, "--app", "cc", "-o", tmp_path / "cc.csv") == 0

    def test_checkpoint_and_resume(self, tmp_path, partition_dir):
        snap = tmp_path / "snap.ckpt"
        full = tmp_path / "full.csv"
        run_cli(
            "run", "-p", partition_dir, "--app", "sssp", "--source", 0, "-o", full,
        )
        partial = tmp_path / "partial.csv"
        run_cli(
            "run", "-p", partition_dir, "--app", "sssp", "--source", 0,
            "--max-supersteps", 3, "--checkpoint-interval", 3,
            "--checkpoint-path", snap, "-o", partial,
        )
        resumed = tmp_path / "resumed.csv"
        code = run_cli(
            "run", "-p", partition_dir, "--app", "sssp", "--source", 0,
            "--resume", snap, "-o", resumed,
        )
        assert code == 0
        assert resumed.read_bytes() == full.read_bytes()

    def test_deterministic_results(self, tmp_path, partition_dir):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            run_cli("run", "-p", partition_dir, "--app", "pagerank",
                    "--iterations", 5, "-o", out)
        assert a.read_bytes() == b.read_bytes()

    def test_env_overrides(self, tmp_path, partition_dir, monkeypatch):
        monkeypatch.setenv("AGENTGRAPH_BUFFER_CAPACITY", "256")
        monkeypatch.setenv("AGENTGRAPH_WORKERS", "2")
        out = tmp_path / "pr.csv"
        assert run_cli(
            "run", "-p", partition_dir, "--app", "pagerank", "--iterations", 2, "-o", out
        ) == 0


class TestAnalyze:
    def test_metrics_comparison(self, tmp_path, graph_file, capsys):
        greedy, hashed = tmp_path / "pg", tmp_path / "ph"
        run_cli("partition", "-i", graph_file, "--weighted", "-k", 4,
                "--vertices", 256, "-o", greedy)
        run_cli("partition", "-i", graph_file, "--weighted", "-k", 4,
                "--mode", "hash", "--vertices", 256, "-o", hashed)
        code = run_cli("analyze", "--metrics", greedy / "metrics.json", hashed / "metrics.json")
        assert code == 0
        table = capsys.readouterr().out
        assert "equiv edge-cut rate" in table
        assert "scatter share" in table

    def test_results_diff_identical(self, tmp_path, partition_dir, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            run_cli("run", "-p", partition_dir, "--app", "sssp", "--source", 0, "-o", out)
        code = run_cli("analyze", "--results", a, b, "--format", "json",
                       "-o", tmp_path / "diff.json")
        assert code == 0
        diff = json.loads((tmp_path / "diff.json").read_text())
        assert diff["mismatch_count"] == 0 and diff["max_abs_error"] == 0

    def test_requires_exactly_one_input_kind(self, tmp_path):
        assert run_cli("analyze") == 2

    def test_schema_mismatch_is_format_error(self, tmp_path, partition_dir):
        a = tmp_path / "a.csv"
        run_cli("run", "-p", partition_dir, "--app", "sssp", "--source", 0, "-o", a)
        other = tmp_path / "other.csv"
        other.write_text("global_id,value\n999999,1\n")
        assert run_cli("analyze", "--results", a, other) == 4
