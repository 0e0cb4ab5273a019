"""Core domain types: score scale, queries, image refs, boundary labels.

These types are shared by every stage. Stage-specific records
(``SampleSet``, ``GateDecision``, ``AnswerRecord``...) live next to the
code that produces them.
"""

from __future__ import annotations

import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from config import SCORE_CORRECT, SCORE_WRONG
from errors import ScoreRangeError

# Absorbs float noise from means of in-range values
_RANGE_SLACK = 1e-9


class ScoreScale(BaseModel):
    """Judge rubric endpoints: ``s_w`` (wrong answer) < ``s_c`` (correct answer)."""

    s_w: float = SCORE_WRONG
    s_c: float = SCORE_CORRECT

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_order(self) -> ScoreScale:
        if not (math.isfinite(self.s_w) and math.isfinite(self.s_c)) or self.s_w >= self.s_c:
            raise ValueError(f"score scale needs s_w < s_c, got ({self.s_w}, {self.s_c})")
        return self

    def contains(self, value: float) -> bool:
        return self.s_w - _RANGE_SLACK <= value <= self.s_c + _RANGE_SLACK

    def check(self, value: float, what: str = "score") -> float:
        """Return ``value`` clipped onto the scale; raise if it is really outside."""
        if not math.isfinite(value) or not self.contains(value):
            raise ScoreRangeError(f"{what}={value} outside [{self.s_w}, {self.s_c}]")
        return min(max(value, self.s_w), self.s_c)

    def clamp(self, value: float) -> float:
        return min(max(value, self.s_w), self.s_c)


class ImageRef(BaseModel):
    """Reference to one query image: a URI/path or an inline base64 payload."""

    uri: str | None = None
    data: str | None = None
    media_type: str | None = None

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_kind(self) -> ImageRef:
        if (self.uri is None) == (self.data is None):
            raise ValueError("image ref needs exactly one of 'uri' or 'data'")
        if self.data is not None and not self.media_type:
            raise ValueError("inline image ref needs a media_type")
        return self

    @property
    def inline(self) -> bool:
        return self.data is not None

    def describe(self) -> str:
        """Short text form used when an image is rendered as a link."""
        if self.uri is not None:
            return self.uri
        return f"inline:{self.media_type}"


class QueryRecord(BaseModel):
    """One VQA item: text query, image refs, gold answer.

    Attributes:
        id: Unique within a dataset.
        source: Dataset tag (infoseek, okvqa, dynvqa-en, mix, ...).
        text: Text query q_t.
        images: Image refs q_i.
        gold_answer: Reference answer a.
        gold_query: Annotated retrieval query (Dyn-VQA), used verbatim for text search.
        human_label: Annotated "search needed" flag, when present.
    """

    id: str
    source: str = ""
    text: str = ""
    images: list[ImageRef] = Field(default_factory=list)
    gold_answer: str = ""
    gold_query: str | None = None
    human_label: bool | None = None

    model_config = ConfigDict(extra="ignore")

    @model_validator(mode="before")
    @classmethod
    def _accept_aliases(cls, values):
        """Accept common dataset spellings (question/answer/image) on ingestion."""
        if not isinstance(values, dict):
            return values
        values = dict(values)
        if "text" not in values and "question" in values:
            values["text"] = values.pop("question")
        if "gold_answer" not in values and "answer" in values:
            values["gold_answer"] = values.pop("answer")
        if "images" not in values and "image" in values:
            image = values.pop("image")
            values["images"] = [] if image is None else [image]
        images = values.get("images") or []
        values["images"] = [{"uri": i} if isinstance(i, str) else i for i in images]
        return values

    @model_validator(mode="after")
    def _check_content(self) -> QueryRecord:
        if not self.id:
            raise ValueError("query id must be non-empty")
        if not self.has_content:
            raise ValueError(f"query {self.id!r} has neither text nor images")
        return self

    @property
    def has_content(self) -> bool:
        return bool(self.text.strip()) or bool(self.images)


LabelOrigin = Literal["judged", "human"]


class BoundaryLabel(BaseModel):
    """Hard and soft knowledge-boundary label for one query.

    ``hard`` is True when the query lies outside the boundary (search
    needed). Human-imported labels carry no ``mean_score``/``soft``.
    """

    query_id: str
    source: str = ""
    mean_score: float | None = None
    hard: bool
    soft: float | None = None
    epsilon_used: float | None = None
    origin: LabelOrigin = "judged"

    @model_validator(mode="after")
    def _check_consistency(self) -> BoundaryLabel:
        if self.origin == "judged":
            if self.mean_score is None or self.soft is None or self.epsilon_used is None:
                raise ValueError("judged label needs mean_score, soft and epsilon_used")
            if self.hard != (self.mean_score < self.epsilon_used):
                raise ValueError(
                    f"label {self.query_id}: hard={self.hard} disagrees with "
                    f"mean_score={self.mean_score} < epsilon={self.epsilon_used}"
                )
        return self
