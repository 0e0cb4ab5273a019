"""Tests for the evaluation package: metrics, scoring, sweep, held-in accuracy, judge agreement, report."""

from __future__ import annotations

import random
from collections import Counter

import pytest

from answering.types import AnswerRecord
from boundary.types import ScoreScale
from dataset.labels import build_labels
from errors import InputValidationError, IntegrityError, ScoreRangeError
from evaluation import (
    AnswerScore,
    emit_report,
    epsilon_sweep,
    format_report_table,
    held_in_accuracy,
    judge_consistency,
    label_targets,
    llm_metric,
    normalize_answer,
    parse_grid,
    predict_held_in,
    rescale_score,
    score_answers,
    search_ratio,
    summarize_scores,
    token_accuracy,
)
from evaluation.report import ReportCell, report_csv
from evaluation.sweep import sweep_csv
from gate.types import GateDecision
from tests.helpers import make_gatekeeper, make_gateway, make_judged, make_profile, make_query, query_id_of

SCALE = ScoreScale()
VOCAB = ["the", "houston", "astros", "red", "sox", "a", "team", "of", "baseball", "paris"]


def _oracle_accuracy(pred: list[str], gold: list[str]) -> float:
    if not pred:
        return 0.0
    remaining = Counter(gold)
    hits = 0
    for token in pred:
        if remaining[token] > 0:
            remaining[token] -= 1
            hits += 1
    return 100.0 * hits / len(pred)


# =============================================================================
# Metrics
# =============================================================================


class TestTokenAccuracy:
    def test_article_counts_against_prediction(self):
        assert token_accuracy("the houston astros", "houston astros") == pytest.approx(66.67, abs=0.01)

    def test_exact_match(self):
        assert token_accuracy("Houston Astros!", "houston astros") == 100.0

    def test_empty_prediction(self):
        assert token_accuracy("", "houston astros") == 0.0

    def test_repeated_tokens_counted_once_each(self):
        assert token_accuracy("astros astros", "houston astros") == 50.0

    def test_normalize(self):
        assert normalize_answer("  The  Houston,\tAstros. ") == "the houston astros"

    def test_random_pairs_match_oracle(self):
        rng = random.Random(200)
        for _ in range(200):
            pred = [rng.choice(VOCAB) for _ in range(rng.randint(0, 6))]
            gold = [rng.choice(VOCAB) for _ in range(rng.randint(1, 6))]
            expected = _oracle_accuracy(pred, gold)
            assert token_accuracy(" ".join(pred), " ".join(gold)) == pytest.approx(expected)


class TestLlmMetric:
    @pytest.mark.parametrize("score,expected", [(1.0, 0.0), (3.0, 50.0), (5.0, 100.0), (4.2, 80.0)])
    def test_rescale(self, score, expected):
        assert rescale_score(score, SCALE) == pytest.approx(expected)

    def test_rescale_out_of_range(self):
        with pytest.raises(ScoreRangeError):
            rescale_score(5.5, SCALE)

    @pytest.mark.parametrize("reply,expected", [("1", 0.0), ("3", 50.0), ("5", 100.0)])
    def test_judged_prediction(self, cfg, reply, expected):
        gw = make_gateway(responder=lambda req, d: reply)
        assert llm_metric("astros", make_query(), cfg.profile("judge"), SCALE, gw, cfg.templates) == expected

    def test_unparsable_reply(self, cfg):
        gw = make_gateway(responder=lambda req, d: "no comment")
        assert llm_metric("astros", make_query(), cfg.profile("judge"), SCALE, gw, cfg.templates) is None


class TestSearchRatio:
    def test_decisions_and_flags(self):
        decisions = [GateDecision(query_id=f"q{i}", variant="all", retrieve=True) for i in range(3)]
        decisions.append(GateDecision(query_id="q9", variant="none", retrieve=False))
        assert search_ratio(decisions) == 75.0
        assert search_ratio([True, False]) == 50.0

    def test_empty(self):
        with pytest.raises(InputValidationError):
            search_ratio([])


# =============================================================================
# Scoring and judge agreement
# =============================================================================


def _answers(mode: str, n: int = 4, dataset: str = "dyn") -> list[AnswerRecord]:
    return [
        AnswerRecord(query_id=f"q{i:03d}", dataset=dataset, mode=mode, answer_text="houston astros", retrieved=mode == "all")
        for i in range(n)
    ]


def _score(qid, mode, llm, token=50.0, retrieved=None, judge="judge", dataset="dyn") -> AnswerScore:
    return AnswerScore(
        query_id=qid, dataset=dataset, mode=mode, judge=judge,
        retrieved=(mode == "all") if retrieved is None else retrieved, llm_score=llm, token_acc=token,
    )


class TestScoreAnswers:
    def test_rows_scored(self, cfg, store):
        queries = {f"q{i:03d}": make_query(f"q{i:03d}") for i in range(4)}
        gw = make_gateway(responder=lambda req, d: "4.2")
        run = score_answers(_answers("none"), queries, cfg.profile("judge"), SCALE, gw, cfg.templates, store, "cfg")
        assert [s.llm_score for s in run.scores] == [pytest.approx(80.0)] * 4
        assert {s.token_acc for s in run.scores} == {100.0}
        assert run.failed == []

    def test_unknown_query(self, cfg, store):
        with pytest.raises(IntegrityError):
            score_answers(_answers("none"), {}, cfg.profile("judge"), SCALE, make_gateway(), cfg.templates, store, "cfg")

    def test_merge_into_scores_file(self, cfg, store, tmp_path):
        queries = {f"q{i:03d}": make_query(f"q{i:03d}") for i in range(4)}
        out = tmp_path / "scores.jsonl"
        gw = make_gateway()
        for mode in ("none", "all", "none"):
            score_answers(_answers(mode), queries, cfg.profile("judge"), SCALE, gw, cfg.templates, store, "cfg", out=out)
        assert len(out.read_text(encoding="utf-8").splitlines()) == 8


class TestJudgeConsistency:
    def test_gap_between_two_judges(self, cfg, store):
        queries = {f"q{i:03d}": make_query(f"q{i:03d}") for i in range(5)}
        judge_a = make_profile("judge-a")
        judge_b = make_profile("judge-b")

        def responder(request, digest):
            return "3.0" if request.profile.name == "judge-a" else "3.4"

        gw = make_gateway(responder=responder)
        answers = _answers("none", 5) + _answers("all", 5)
        a = score_answers(answers, queries, judge_a, SCALE, gw, cfg.templates, store, "cfg").scores
        b = score_answers(answers, queries, judge_b, SCALE, gw, cfg.templates, store, "cfg").scores
        report = judge_consistency(a, b)
        assert (report.judge_a, report.judge_b) == ("judge-a", "judge-b")
        assert [(r.mode, r.n) for r in report.rows] == [("all", 5), ("none", 5)]
        assert report.max_gap == pytest.approx(10.0)

    def test_only_shared_rows_count(self):
        a = [_score("q1", "none", 50.0, judge="a"), _score("q2", "none", 100.0, judge="a")]
        b = [_score("q1", "none", 60.0, judge="b")]
        report = judge_consistency(a, b)
        assert report.rows[0].n == 1 and report.max_gap == pytest.approx(10.0)

    def test_no_overlap(self):
        with pytest.raises(InputValidationError):
            judge_consistency([_score("q1", "none", 50.0, judge="a")], [_score("q2", "none", 50.0, judge="b")])

    def test_mixed_judges_rejected(self):
        a = [_score("q1", "none", 50.0, judge="a"), _score("q2", "none", 50.0, judge="c")]
        with pytest.raises(InputValidationError):
            judge_consistency(a, [_score("q1", "none", 50.0, judge="b")])


# =============================================================================
# Held-in accuracy
# =============================================================================


class TestHeldIn:
    def test_direct_examples(self):
        labels = {"q1": True, "q2": False, "q3": True}
        assert held_in_accuracy({"q1": True, "q2": False, "q3": True}, labels).accuracy == 100.0
        result = held_in_accuracy({"q1": True, "q2": True, "q3": None}, labels)
        assert (result.correct, result.unparsable) == (1, 1)
        assert result.accuracy == pytest.approx(100.0 / 3)

    def test_soft_tolerance(self):
        labels = {"q1": 4.18, "q2": 2.0}
        result = held_in_accuracy({"q1": 4.6, "q2": 2.6}, labels, variant="soft", tolerance=0.5)
        assert (result.correct, result.tolerance) == (1, 0.5)

    def test_misaligned_ids(self):
        with pytest.raises(IntegrityError):
            held_in_accuracy({"q1": True}, {"q2": True})

    def _setup(self, cfg):
        means = {f"q{i:03d}": 1.0 + 0.2 * i for i in range(20)}
        labels = build_labels([make_judged(qid, [m]) for qid, m in means.items()], epsilon=4.0)
        queries = {qid: make_query(qid) for qid in means}
        return labels, queries

    @pytest.mark.parametrize("flip,expected", [(False, 100.0), (True, 0.0)])
    def test_memorizing_and_flipped_models(self, cfg, flip, expected):
        labels, queries = self._setup(cfg)
        targets = label_targets(labels, "hard")

        def responder(request, digest):
            verdict = targets[query_id_of(request)] != flip
            return "true" if verdict else "false"

        keeper = make_gatekeeper(make_gateway(responder=responder), cfg)
        preds = predict_held_in(queries, list(targets), keeper, "hard")
        assert held_in_accuracy(preds, targets).accuracy == expected

    def test_soft_model_within_tolerance(self, cfg):
        labels, queries = self._setup(cfg)
        targets = label_targets(labels, "soft")
        keeper = make_gatekeeper(make_gateway(responder=lambda req, d: f"{targets[query_id_of(req)] + 0.3:.2f}"), cfg)
        preds = predict_held_in(queries, list(targets), keeper, "soft")
        assert held_in_accuracy(preds, targets, "soft").accuracy == 100.0

    def test_unparsable_output_is_wrong(self, cfg):
        labels, queries = self._setup(cfg)
        targets = label_targets(labels, "hard")
        keeper = make_gatekeeper(make_gateway(responder=lambda req, d: "dunno"), cfg)
        preds = predict_held_in(queries, list(targets), keeper, "hard")
        result = held_in_accuracy(preds, targets)
        assert (result.accuracy, result.unparsable) == (0.0, 20)

    def test_unknown_query(self, cfg):
        keeper = make_gatekeeper(make_gateway(), cfg)
        with pytest.raises(IntegrityError):
            predict_held_in({}, ["q1"], keeper, "hard")


# =============================================================================
# Sweep
# =============================================================================


class TestParseGrid:
    def test_default(self):
        assert parse_grid() == [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0]

    def test_range_string(self):
        assert parse_grid("1:2:0.25") == [1.0, 1.25, 1.5, 1.75, 2.0]

    def test_comma_list(self):
        assert parse_grid("4.5, 3.0,3.0") == [3.0, 4.5]

    @pytest.mark.parametrize("spec", ["1:5:0", "5:1:0.5", "a:b:c", (1.0, 2.0)])
    def test_bad_grid(self, spec):
        with pytest.raises(InputValidationError):
            parse_grid(spec)


def _sweep_inputs(n=30, seed=5):
    rng = random.Random(seed)
    decisions, plain, rag = [], [], []
    for i in range(n):
        qid = f"q{i:03d}"
        score = round(rng.uniform(1.0, 5.0), 1)
        decisions.append(GateDecision(query_id=qid, variant="skb", verdict=score, epsilon=4.5, retrieve=score >= 4.5))
        plain.append(_score(qid, "none", rng.choice([0.0, 25.0, 50.0]), token=rng.choice([0.0, 50.0])))
        rag.append(_score(qid, "all", rng.choice([50.0, 75.0, 100.0]), token=rng.choice([50.0, 100.0])))
    return decisions, plain, rag


class TestEpsilonSweep:
    def test_endpoints_equal_ungated_runs(self):
        decisions, plain, rag = _sweep_inputs()
        rows = epsilon_sweep(decisions, plain, rag, [1.0, 5.5], SCALE)
        all_rag, no_rag = summarize_scores(rag), summarize_scores(plain)
        assert (rows[0].search_ratio, rows[0].llm_score, rows[0].token_acc) == (100.0, all_rag.llm_score, all_rag.token_acc)
        assert (rows[1].search_ratio, rows[1].llm_score, rows[1].token_acc) == (0.0, no_rag.llm_score, no_rag.token_acc)

    def test_ratio_non_increasing_over_grid(self):
        decisions, plain, rag = _sweep_inputs()
        rows = epsilon_sweep(decisions, plain, rag, parse_grid("1:5:0.1"), SCALE)
        assert len(rows) == 41
        ratios = [r.search_ratio for r in rows]
        assert all(a >= b for a, b in zip(ratios, ratios[1:]))

    def test_fallback_always_retrieves(self):
        decisions, plain, rag = _sweep_inputs(n=2)
        decisions[0] = GateDecision(query_id="q000", variant="skb", raw_output="??", epsilon=4.5, retrieve=True, fallback_used=True)
        (row,) = epsilon_sweep(decisions, plain, rag, [6.0], SCALE)
        assert row.search_ratio == 50.0

    def test_missing_queries_ignored(self):
        decisions, plain, rag = _sweep_inputs(n=4)
        (row,) = epsilon_sweep(decisions, plain[:3], rag, [3.0], SCALE)
        assert row.n == 3

    def test_hard_decision_rejected(self):
        _, plain, rag = _sweep_inputs(n=1)
        hard = [GateDecision(query_id="q000", variant="hkb", verdict=True, retrieve=True)]
        with pytest.raises(IntegrityError):
            epsilon_sweep(hard, plain, rag, [3.0], SCALE)

    def test_threshold_out_of_range(self):
        decisions, plain, rag = _sweep_inputs(n=2)
        with pytest.raises(ScoreRangeError):
            epsilon_sweep(decisions, plain, rag, [0.5], SCALE)

    def test_csv(self):
        decisions, plain, rag = _sweep_inputs(n=4)
        text = sweep_csv(epsilon_sweep(decisions, plain, rag, parse_grid(), SCALE))
        lines = text.splitlines()
        assert lines[0] == "epsilon,ratio,llm,token_acc"
        assert len(lines) == 10
        assert lines[1].startswith("1,100.00,")


# =============================================================================
# Report
# =============================================================================


class TestReport:
    def _scores(self):
        scores = []
        for mode, llm, retrieved in (("skb", 80.0, None), ("none", 40.0, False), ("all", 90.0, True), ("hkb", 60.0, None)):
            for i in range(4):
                flag = retrieved if retrieved is not None else i % 2 == 0
                scores.append(_score(f"q{i}", mode, llm, token=50.0, retrieved=flag))
        return scores

    def test_cells_in_mode_order(self):
        report = emit_report(self._scores(), failures={("dyn", "hkb"): 2})
        assert [c.mode for c in report.cells] == ["none", "all", "hkb", "skb"]
        hkb = report.cell("dyn", "hkb")
        assert (hkb.llm_score, hkb.search_ratio, hkb.failures) == (60.0, 50.0, 2)

    def test_unevaluated_rows_not_in_llm_mean(self):
        scores = [_score("q1", "none", 100.0, retrieved=False), _score("q2", "none", None, retrieved=False)]
        cell = emit_report(scores).cell("dyn", "none")
        assert (cell.llm_score, cell.evaluated, cell.n) == (100.0, 1, 2)

    def test_table_has_ratio_column_per_mode(self):
        table = format_report_table(emit_report(self._scores(), failures={("dyn", "skb"): 1}))
        header, _, llm_row, acc_row, failed = table.strip().splitlines()
        assert header.split()[:4] == ["dyn", "No", "RAG", "%"]
        assert header.count("%") == 4
        assert "HKB" in header and "SKB" in header
        assert llm_row.split()[1:5] == ["40.00", "0.00", "90.00", "100.00"]
        assert acc_row.startswith("Acc.")
        assert failed == "failed rows: skb=1"

    def test_csv(self):
        lines = report_csv(emit_report(self._scores())).splitlines()
        assert lines[0] == "dataset,mode,llm,token_acc,search_ratio,n,evaluated,failures"
        assert lines[1] == "dyn,none,40.0000,50.0000,0.00,4,4,0"

    def test_degenerate_modes_checked(self):
        with pytest.raises(ValueError):
            ReportCell(dataset="d", mode="none", llm_score=1.0, token_acc=1.0, search_ratio=10.0, n=1, evaluated=1)
