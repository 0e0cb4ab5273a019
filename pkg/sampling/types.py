"""Records produced by R-fold sampling and judge scoring."""

from __future__ import annotations

import math

from pydantic import BaseModel, Field, model_validator


class Sample(BaseModel):
    index: int = Field(ge=0)
    text: str
    latency_ms: float = Field(default=0.0, ge=0.0)


class SampleSet(BaseModel):
    """R sampled answers for one query; ``error`` is set when some draws failed."""

    query_id: str
    source: str = ""
    requested_R: int = Field(ge=1)
    samples: list[Sample] = Field(default_factory=list)
    error: str | None = None

    @model_validator(mode="after")
    def _check_indices(self) -> SampleSet:
        indices = [s.index for s in self.samples]
        if len(set(indices)) != len(indices):
            raise ValueError(f"sample set {self.query_id}: duplicate indices")
        if any(i >= self.requested_R for i in indices):
            raise ValueError(f"sample set {self.query_id}: index beyond requested_R={self.requested_R}")
        return self

    @property
    def complete(self) -> bool:
        return len(self.samples) == self.requested_R


class JudgeScore(BaseModel):
    """Judge verdict on one sample; ``score`` is None when no reply parsed."""

    index: int = Field(ge=0)
    score: float | None = None
    raw: str = ""
    attempts: int = 1

    @property
    def valid(self) -> bool:
        return self.score is not None


class JudgedQuery(BaseModel):
    query_id: str
    source: str = ""
    scores: list[JudgeScore] = Field(default_factory=list)
    valid_count: int = Field(ge=0)
    invalid_count: int = Field(ge=0)
    mean_score: float

    @model_validator(mode="after")
    def _check_mean(self) -> JudgedQuery:
        valid = [s.score for s in self.scores if s.score is not None]
        if len(valid) != self.valid_count or len(self.scores) - len(valid) != self.invalid_count:
            raise ValueError(f"judged query {self.query_id}: counts disagree with scores")
        if valid and not math.isclose(self.mean_score, math.fsum(valid) / len(valid), abs_tol=1e-9):
            raise ValueError(f"judged query {self.query_id}: mean_score is not the mean of valid scores")
        return self


class DroppedQuery(BaseModel):
    query_id: str
    source: str = ""
    stage: str
    reason: str
