"""Answering under the five run modes and benchmark timing."""

from .benchmark import BenchmarkRun, load_answers, run_benchmark, summarize_timing
from .orchestrator import AnswerOrchestrator
from .types import AnswerMode, AnswerRecord, ModeTiming

__all__ = [
    "AnswerMode",
    "AnswerOrchestrator",
    "AnswerRecord",
    "BenchmarkRun",
    "ModeTiming",
    "load_answers",
    "run_benchmark",
    "summarize_timing",
]
