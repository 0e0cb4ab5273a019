"""Answer records and per-mode timing summaries."""

from __future__ import annotations

from pydantic import BaseModel, Field, model_validator

from gate.types import GateVariant

AnswerMode = GateVariant


class AnswerRecord(BaseModel):
    """One answer under one run mode.

    ``prebuild_ms`` is everything spent before answer generation starts:
    the gate call plus retrieval. Answer generation is in ``answer_ms``.
    """

    query_id: str
    dataset: str = ""
    mode: AnswerMode
    answer_text: str
    retrieved: bool
    gate_ms: float = Field(default=0.0, ge=0.0)
    retrieval_ms: float = Field(default=0.0, ge=0.0)
    prebuild_ms: float = Field(default=0.0, ge=0.0)
    answer_ms: float = Field(default=0.0, ge=0.0)
    context_hash: str | None = None
    gate_verdict: bool | float | None = None
    gate_fallback: bool = False

    @model_validator(mode="after")
    def _check_accounting(self) -> AnswerRecord:
        if not self.retrieved and (self.retrieval_ms != 0.0 or self.context_hash is not None):
            raise ValueError(f"{self.query_id}/{self.mode}: no retrieval but retrieval time or context recorded")
        if self.prebuild_ms != self.gate_ms + self.retrieval_ms:
            raise ValueError(f"{self.query_id}/{self.mode}: prebuild_ms must equal gate_ms + retrieval_ms")
        return self


class ModeTiming(BaseModel):
    """Timing summary row for ``answers/<dataset>/timing.csv``."""

    mode: AnswerMode
    n: int
    retrieved: int
    total_prebuild_ms: float
    mean_prebuild_ms: float
    total_answer_ms: float
    mean_answer_ms: float
    failures: int = 0
