"""Search results and the query they were retrieved for."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field, model_validator

from boundary.types import ImageRef


class Snippet(BaseModel):
    title: str = ""
    text: str = ""
    url: str = ""


class IssuedQuery(BaseModel):
    """What was sent to the provider: a text query or an image."""

    kind: Literal["text", "image"]
    text: str | None = None
    image: ImageRef | None = None

    @model_validator(mode="after")
    def _check_kind(self) -> IssuedQuery:
        if self.kind == "text" and not (self.text or "").strip():
            raise ValueError("text search needs non-empty query text")
        if self.kind == "image" and self.image is None:
            raise ValueError("image search needs an image ref")
        return self

    def describe(self) -> str:
        if self.kind == "text":
            return self.text or ""
        return f"image:{self.image.describe()}"


class ProviderResult(BaseModel):
    """Raw provider output before it is bound to a query."""

    snippets: list[Snippet] = Field(default_factory=list)
    images: list[ImageRef] = Field(default_factory=list)
    duration_ms: float = Field(default=0.0, ge=0.0)


class RetrievedContext(BaseModel):
    query_id: str = ""
    provider: str
    issued: IssuedQuery
    snippets: list[Snippet] = Field(default_factory=list)
    images: list[ImageRef] = Field(default_factory=list)
    duration_ms: float = Field(default=0.0, ge=0.0)
    cached: bool = False
