"""Tests for the kbr CLI: parsing, exit codes, and offline (--mock) command runs."""

from __future__ import annotations

import json

import pytest

import kbr
from runstore.store import RunStore
from tests.helpers import read_lines

QUERY_ROWS = [
    {"id": "q000", "question": "question q000: who plays here?", "answer": "houston astros",
     "image": "https://images.invalid/0.jpg", "source": "infoseek"},
    {"id": "q001", "question": "question q001: what bird is this?", "answer": "a robin",
     "image": "https://images.invalid/1.jpg", "source": "okvqa"},
    {"id": "q002", "question": "question q002: which city is shown?", "answer": "paris",
     "image": "https://images.invalid/2.jpg", "source": "infoseek", "gold_query": "eiffel tower city"},
    {"id": "q003", "question": "question q003: what sport is played?", "answer": "baseball",
     "image": "https://images.invalid/3.jpg", "source": "okvqa"},
]


@pytest.fixture
def queries_file(tmp_path):
    path = tmp_path / "dyn.jsonl"
    path.write_text("".join(json.dumps(row) + "\n" for row in QUERY_ROWS), encoding="utf-8")
    return path


@pytest.fixture
def run_dir(tmp_path):
    return tmp_path / "run"


def _run(command: str, run_dir, *extra: str) -> int:
    return kbr.main([command, "--mock", "--run-dir", str(run_dir), *extra])


# =============================================================================
# Parsing and exit codes
# =============================================================================


class TestParser:
    def test_no_command_is_usage_error(self, capsys):
        assert kbr.main([]) == 1

    def test_unknown_command(self):
        with pytest.raises(SystemExit) as excinfo:
            kbr.main(["frobnicate"])
        assert excinfo.value.code == 1

    def test_bad_flag_value(self, queries_file):
        with pytest.raises(SystemExit) as excinfo:
            kbr.main(["answer", "--queries", str(queries_file), "--modes", "none,sometimes"])
        assert excinfo.value.code == 1

    def test_modes_parsed(self, queries_file):
        args = kbr.build_parser().parse_args(["answer", "--queries", str(queries_file), "--modes", "none, skb"])
        assert args.modes == ["none", "skb"]

    def test_sweep_default_grid(self, queries_file):
        args = kbr.build_parser().parse_args(["sweep", "--queries", str(queries_file)])
        assert args.grid == "1:5:0.5"

    def test_common_options_on_every_command(self, queries_file):
        args = kbr.build_parser().parse_args(["gate", "--queries", str(queries_file), "-j", "2", "--resume"])
        assert (args.parallelism, args.resume, args.mock, args.variant) == (2, True, False, "skb")

    def test_missing_config_is_fatal(self, run_dir, tmp_path):
        code = kbr.main(["stats", "--config", str(tmp_path / "absent.yaml"), "--run-dir", str(run_dir)])
        assert code == 3


# =============================================================================
# Dataset commands
# =============================================================================


class TestDatasetCommands:
    def test_build_dataset_writes_outputs(self, queries_file, run_dir, capsys):
        assert _run("build-dataset", run_dir, "--queries", str(queries_file), "-R", "2") == 0
        store = RunStore(run_dir)
        judged = read_lines(store.dataset_dir / "judged.jsonl")
        assert [row["query_id"] for row in judged] == ["q000", "q001", "q002", "q003"]
        assert "Avg. Score ± std." in capsys.readouterr().out
        assert store.manifest.latest("build-dataset").status == "complete"

    def test_label_then_export(self, queries_file, run_dir):
        assert _run("build-dataset", run_dir, "--queries", str(queries_file), "-R", "2") == 0
        assert _run("label", run_dir) == 0
        store = RunStore(run_dir)
        labels = read_lines(store.labels_path)
        assert [row["epsilon_used"] for row in labels] == [4.0] * 4

        assert _run("export-sft", run_dir, "--queries", str(queries_file), "--variant", "soft") == 0
        records = read_lines(store.sft_dir / "soft.jsonl")
        assert len(records) == 4
        assert (store.sft_dir / "soft.manifest.json").exists()

    def test_human_labels(self, queries_file, run_dir, tmp_path):
        human = tmp_path / "human.csv"
        human.write_text("query_id,label\nq000,true\nq001,false\n", encoding="utf-8")
        assert _run("label", run_dir, "--human", str(human), "--queries", str(queries_file)) == 0
        labels = read_lines(RunStore(run_dir).labels_path)
        assert [(row["query_id"], row["hard"], row["origin"]) for row in labels] == [
            ("q000", True, "human"),
            ("q001", False, "human"),
        ]

    def test_query_human_labels_need_explicit_flag(self, tmp_path, run_dir, caplog):
        annotated = [{**row, "human_label": i % 2 == 0} for i, row in enumerate(QUERY_ROWS[:3])] + QUERY_ROWS[3:]
        path = tmp_path / "annotated.jsonl"
        path.write_text("".join(json.dumps(row) + "\n" for row in annotated), encoding="utf-8")
        store = RunStore(run_dir)

        assert _run("build-dataset", run_dir, "--queries", str(path), "-R", "2") == 0
        assert _run("label", run_dir, "--queries", str(path), "--epsilon", "3.0") == 0
        labels = read_lines(store.labels_path)
        assert [(row["origin"], row["epsilon_used"]) for row in labels] == [("judged", 3.0)] * 4
        assert "pass --from-queries" in caplog.text

        assert _run("label", run_dir, "--queries", str(path), "--from-queries") == 0
        labels = read_lines(store.labels_path)
        assert [(row["query_id"], row["hard"], row["origin"]) for row in labels] == [
            ("q000", True, "human"),
            ("q001", False, "human"),
            ("q002", True, "human"),
        ]

    def test_from_queries_needs_query_file(self, run_dir):
        assert _run("label", run_dir, "--from-queries") == 1

    def test_from_queries_excludes_human_file(self, queries_file, run_dir, tmp_path):
        with pytest.raises(SystemExit) as excinfo:
            _run("label", run_dir, "--queries", str(queries_file), "--from-queries", "--human", str(tmp_path / "h.csv"))
        assert excinfo.value.code == 1


# =============================================================================
# Gate, answer, eval
# =============================================================================


class TestGateCommand:
    def test_skb_threshold_in_manifest(self, queries_file, run_dir, capsys):
        assert _run("gate", run_dir, "--queries", str(queries_file), "--variant", "skb") == 0
        store = RunStore(run_dir)
        assert store.manifest.latest("gate-skb").params["epsilon"] == 4.5
        assert len(read_lines(store.gate_dir / "skb.jsonl")) == 4
        assert "search ratio" in capsys.readouterr().out

    def test_hkb_has_no_threshold(self, queries_file, run_dir):
        assert _run("gate", run_dir, "--queries", str(queries_file), "--variant", "hkb") == 0
        assert RunStore(run_dir).manifest.latest("gate-hkb").params["epsilon"] is None


class TestSweepCommand:
    def test_default_grid_rows(self, queries_file, run_dir):
        assert _run("sweep", run_dir, "--queries", str(queries_file)) == 0
        lines = (RunStore(run_dir).eval_dir / "sweep.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "epsilon,ratio,llm,token_acc"
        assert len(lines) == 10
        assert lines[1].startswith("1,100.00,")


@pytest.mark.slow
class TestEndToEnd:
    def test_answer_then_eval(self, queries_file, run_dir, capsys):
        assert _run("answer", run_dir, "--queries", str(queries_file), "--modes", "none,all,hkb,skb") == 0
        store = RunStore(run_dir)
        for mode in ("none", "all", "hkb", "skb"):
            assert len(read_lines(store.answers_dir("dyn") / f"{mode}.jsonl")) == 4
        assert (store.answers_dir("dyn") / "timing.csv").exists()

        assert _run("eval", run_dir, "--queries", str(queries_file)) == 0
        table = (store.eval_dir / "report.txt").read_text(encoding="utf-8")
        assert table.startswith("dyn")
        assert "No RAG" in table and "SKB" in table
        assert len(read_lines(store.eval_dir / "scores.jsonl")) == 16
