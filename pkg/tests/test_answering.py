"""Tests for the answering package: run modes, gated answer identity, timing, benchmark files."""

from __future__ import annotations

import csv

import pytest

from answering import AnswerOrchestrator, AnswerRecord, load_answers, run_benchmark, summarize_timing
from errors import ConfigurationError, InputValidationError, ScoreRangeError, TransportError
from evaluation import score_answers, summarize_scores
from gateway.backends import mock_reply_text
from gateway.types import MockReply
from runstore.store import RunStore
from sources.queries import index_queries
from tests.helpers import make_gatekeeper, make_gateway, make_queries, make_query, make_retriever, query_id_of

MODES = ("none", "all", "hkb", "skb")


def _orchestrator(cfg, gateway=None, retriever="default"):
    gateway = gateway or make_gateway()
    return AnswerOrchestrator(
        gateway,
        cfg.templates,
        cfg.profile("answerer"),
        make_gatekeeper(gateway, cfg),
        make_retriever() if retriever == "default" else retriever,
    )


def _mode_answers(orch, queries, mode, epsilon=None):
    return {q.id: orch.answer(q, mode, epsilon) for q in queries}


# =============================================================================
# Single-query answering
# =============================================================================


class TestAnswer:
    def test_none_mode(self, cfg):
        record = _orchestrator(cfg).answer(make_query(images=["https://images.invalid/1.jpg"]), "none")
        assert record.answer_text.startswith("mock answer ")
        assert not record.retrieved
        assert (record.prebuild_ms, record.context_hash) == (0.0, None)

    def test_all_mode_retrieves(self, cfg):
        record = _orchestrator(cfg).answer(make_query(images=["https://images.invalid/1.jpg"]), "all")
        assert record.retrieved and record.context_hash
        assert record.retrieval_ms > 0

    def test_skb_above_scale_matches_no_rag(self, cfg):
        orch = _orchestrator(cfg)
        queries = make_queries(10)
        plain = _mode_answers(orch, queries, "none")
        gated = _mode_answers(orch, queries, "skb", epsilon=5.5)
        assert all(not r.retrieved for r in gated.values())
        assert {k: r.answer_text for k, r in gated.items()} == {k: r.answer_text for k, r in plain.items()}

    def test_skb_at_floor_matches_all_rag(self, cfg):
        orch = _orchestrator(cfg)
        queries = make_queries(10)
        rag = _mode_answers(orch, queries, "all")
        gated = _mode_answers(orch, queries, "skb", epsilon=1.0)
        assert {k: r.answer_text for k, r in gated.items()} == {k: r.answer_text for k, r in rag.items()}

    def test_retrieval_without_provider(self, cfg):
        with pytest.raises(ConfigurationError):
            _orchestrator(cfg, retriever=None).answer(make_query(), "all")

    def test_unknown_mode(self, cfg):
        with pytest.raises(ConfigurationError):
            _orchestrator(cfg).answer(make_query(), "sometimes")

    def test_answer_decoding_is_greedy(self, cfg):
        seen = []

        def responder(request, digest):
            seen.append(request)
            return mock_reply_text(request, digest)

        _orchestrator(cfg, make_gateway(responder=responder)).answer(make_query(), "none")
        assert seen[0].overrides == {"temperature": 0.0, "top_p": 1.0}
        assert seen[0].profile.name == "answerer"

    def test_rag_prompt_carries_context(self, cfg):
        seen = []

        def responder(request, digest):
            seen.append(request.message.as_text())
            return "ok"

        _orchestrator(cfg, make_gateway(responder=responder)).answer(make_query(gold_query="astros roster"), "all")
        assert "Search results:" in seen[0]
        assert "Result 1 for astros roster" in seen[0]


def _gated_identity(cfg, n):
    orch = _orchestrator(cfg)
    queries = make_queries(n)
    plain = _mode_answers(orch, queries, "none")
    rag = _mode_answers(orch, queries, "all")
    for mode, eps in (("hkb", None), ("skb", 3.0), ("prompt", None)):
        gated = _mode_answers(orch, queries, mode, eps)
        for qid, record in gated.items():
            expected = rag[qid] if record.retrieved else plain[qid]
            assert record.answer_text == expected.answer_text


class TestGatedIdentity:
    def test_small_dataset(self, cfg):
        _gated_identity(cfg, 40)

    def test_gated_metrics_are_the_per_item_mixture(self, cfg, store):
        gateway = make_gateway()
        orch = _orchestrator(cfg, gateway)
        queries = make_queries(40)
        answers = {mode: _mode_answers(orch, queries, mode, 3.0 if mode == "skb" else None) for mode in MODES}
        rows = [record for by_id in answers.values() for record in by_id.values()]
        run = score_answers(
            rows, index_queries(queries), cfg.profile("judge"), cfg.scale, gateway, cfg.templates, store, "cfg",
        )
        scored = {(s.mode, s.query_id): s for s in run.scores}
        for mode in ("hkb", "skb"):
            gated = [scored[mode, q.id] for q in queries]
            assert {s.retrieved for s in gated} == {True, False}
            mixture = [scored["all" if s.retrieved else "none", s.query_id] for s in gated]
            got, expected = summarize_scores(gated), summarize_scores(mixture)
            assert got.llm_score == pytest.approx(expected.llm_score, abs=1e-9)
            assert got.token_acc == pytest.approx(expected.token_acc, abs=1e-9)
            assert got.search_ratio == pytest.approx(100.0 * sum(s.retrieved for s in gated) / len(gated))

    @pytest.mark.slow
    def test_six_hundred_items(self, cfg):
        _gated_identity(cfg, 600)


# =============================================================================
# Timing
# =============================================================================


def _timed_responder(request, digest):
    if request.expect == "verdict":
        return MockReply(text="True", latency_ms=30.0)
    if request.expect == "score":
        return MockReply(text="1.5", latency_ms=25.0)
    return MockReply(text="astros", latency_ms=1000.0)


class TestTiming:
    def test_prebuild_excludes_answer_generation(self, cfg):
        orch = _orchestrator(cfg, make_gateway(responder=_timed_responder))
        record = orch.answer(make_query(gold_query="astros"), "hkb")
        assert record.retrieved
        assert record.gate_ms == 30.0
        assert record.prebuild_ms == record.gate_ms + record.retrieval_ms
        assert record.answer_ms == 1000.0

    def test_ungated_modes_spend_nothing_before_answering(self, cfg):
        orch = _orchestrator(cfg, make_gateway(responder=_timed_responder))
        assert orch.answer(make_query(), "none").prebuild_ms == 0.0
        record = orch.answer(make_query(gold_query="astros"), "all")
        assert record.gate_ms == 0.0 and record.prebuild_ms == record.retrieval_ms

    def test_skb_not_retrieving_costs_gate_only(self, cfg):
        orch = _orchestrator(cfg, make_gateway(responder=_timed_responder))
        record = orch.answer(make_query(), "skb", epsilon=4.5)
        assert not record.retrieved
        assert (record.gate_ms, record.prebuild_ms) == (25.0, 25.0)

    def test_summary(self):
        records = [
            AnswerRecord(query_id=f"q{i}", mode="hkb", answer_text="a", retrieved=i % 2 == 0,
                         gate_ms=10.0, prebuild_ms=10.0, answer_ms=100.0)
            for i in range(4)
        ]
        timing = summarize_timing("hkb", records, failures=1)
        assert (timing.n, timing.retrieved, timing.failures) == (4, 2, 1)
        assert (timing.total_prebuild_ms, timing.mean_prebuild_ms) == (40.0, 10.0)
        assert timing.mean_answer_ms == 100.0

    def test_summary_of_nothing(self):
        assert summarize_timing("none", []).mean_prebuild_ms == 0.0

    def test_record_accounting_enforced(self):
        with pytest.raises(ValueError):
            AnswerRecord(query_id="q", mode="none", answer_text="a", retrieved=False, retrieval_ms=5.0, prebuild_ms=5.0)
        with pytest.raises(ValueError):
            AnswerRecord(query_id="q", mode="hkb", answer_text="a", retrieved=True, gate_ms=5.0, prebuild_ms=1.0)


# =============================================================================
# run_benchmark
# =============================================================================


def _bench(cfg, store, gateway=None, **kwargs):
    orch = _orchestrator(cfg, gateway)
    return run_benchmark(make_queries(6), "dyn", MODES, orch, store, cfg.config_hash(), **kwargs)


class TestRunBenchmark:
    def test_files_per_mode(self, cfg, store):
        run = _bench(cfg, store, parallelism=4)
        for mode in MODES:
            rows = load_answers(store, "dyn", mode)
            assert [r.query_id for r in rows] == [f"q{i:03d}" for i in range(6)]
            assert {r.mode for r in rows} == {mode}
        assert run.failures == 0
        with (store.answers_dir("dyn") / "timing.csv").open(encoding="utf-8") as f:
            table = list(csv.DictReader(f))
        assert [row["mode"] for row in table] == list(MODES)
        assert table[1]["retrieved"] == "6"

    def test_failed_rows_logged_and_left_out(self, cfg, store):
        def responder(request, digest):
            if request.expect == "answer" and query_id_of(request) == "q003":
                raise TransportError("answerer down")
            return mock_reply_text(request, digest)

        run = _bench(cfg, store, make_gateway(responder=responder))
        assert run.failed["none"] == ["q003"]
        assert "q003" not in [r.query_id for r in run.records["all"]]
        assert run.timing[0].failures == 1
        assert {e["query_id"] for e in store.errors.entries()} == {"q003"}

    def test_resume_matches_uninterrupted(self, cfg, tmp_path):
        baseline = RunStore(tmp_path / "baseline")
        _bench(cfg, baseline)

        def responder(request, digest):
            if request.expect == "answer" and query_id_of(request) in ("q001", "q004"):
                raise TransportError("answerer down")
            return mock_reply_text(request, digest)

        store = RunStore(tmp_path / "run")
        _bench(cfg, store, make_gateway(responder=responder))
        gateway = make_gateway()
        _bench(cfg, store, gateway, resume=True)
        for mode in MODES:
            path = f"{mode}.jsonl"
            assert (store.answers_dir("dyn") / path).read_bytes() == (baseline.answers_dir("dyn") / path).read_bytes()

    def test_skb_epsilon_checked(self, cfg, store):
        with pytest.raises(ScoreRangeError):
            _bench(cfg, store, epsilon=7.0)

    def test_empty_dataset(self, cfg, store):
        with pytest.raises(InputValidationError):
            run_benchmark([], "dyn", MODES, _orchestrator(cfg), store, cfg.config_hash())

    def test_timing_keeps_earlier_modes(self, cfg, store):
        orch = _orchestrator(cfg)
        queries = make_queries(6)
        run_benchmark(queries, "dyn", ("none", "all"), orch, store, cfg.config_hash())
        run_benchmark(queries, "dyn", ("hkb", "none"), orch, store, cfg.config_hash())
        with (store.answers_dir("dyn") / "timing.csv").open(encoding="utf-8") as f:
            table = list(csv.DictReader(f))
        assert [row["mode"] for row in table] == ["none", "all", "hkb"]
        assert table[1]["retrieved"] == "6"
