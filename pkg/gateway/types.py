"""Request and response records for generation endpoints."""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from boundary.prompts import RenderedMessage
from pipeline_config import DecodingParams, EndpointProfile

# What kind of reply a request expects; lets the mock answer in the right shape
Expectation = Literal["answer", "score", "verdict"]


class GenerationRequest(BaseModel):
    """One call: profile, rendered message, decoding overrides, sample index."""

    profile: EndpointProfile
    message: RenderedMessage
    overrides: dict[str, Any] = Field(default_factory=dict)
    sample_index: int = Field(default=0, ge=0)
    expect: Expectation = "answer"

    model_config = ConfigDict(frozen=True)

    @property
    def decoding(self) -> DecodingParams:
        return self.profile.decoding.merged(self.overrides)


class GenerationResponse(BaseModel):
    text: str
    finish_reason: str = "stop"
    latency_ms: float = Field(default=0.0, ge=0.0)
    cached: bool = False
    digest: str = ""
    metadata: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_text(self) -> GenerationResponse:
        if not self.text and self.finish_reason == "stop":
            raise ValueError("empty generation with a successful finish reason")
        return self


class MockReply(BaseModel):
    """Reply returned by a custom mock responder."""

    text: str
    latency_ms: float = Field(default=0.0, ge=0.0)
