"""Answer metrics, threshold sweeps, held-in accuracy, judge agreement and reports."""

from .consistency import ConsistencyReport, judge_consistency
from .held_in import HeldInResult, held_in_accuracy, label_targets, predict_held_in
from .metrics import llm_metric, normalize_answer, rescale_score, search_ratio, token_accuracy
from .report import EvalReport, ReportCell, emit_report, format_report_table
from .scoring import AnswerScore, MetricSummary, score_answers, summarize_scores
from .sweep import SweepRow, epsilon_sweep, parse_grid

__all__ = [
    "AnswerScore",
    "ConsistencyReport",
    "EvalReport",
    "HeldInResult",
    "MetricSummary",
    "ReportCell",
    "SweepRow",
    "emit_report",
    "epsilon_sweep",
    "format_report_table",
    "held_in_accuracy",
    "judge_consistency",
    "label_targets",
    "llm_metric",
    "normalize_answer",
    "parse_grid",
    "predict_held_in",
    "rescale_score",
    "score_answers",
    "search_ratio",
    "summarize_scores",
    "token_accuracy",
]
