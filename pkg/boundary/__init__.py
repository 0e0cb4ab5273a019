"""Core domain: score scale, query records, labels, prompt rendering."""

from .prompts import (
    Dialect,
    PromptTemplate,
    PromptTooLongError,
    RenderedMessage,
    Segment,
    TemplateLibrary,
    render_prompt,
)
from .scale import DEFAULT_SCALE, flip_score, hard_label
from .types import BoundaryLabel, ImageRef, QueryRecord, ScoreScale

__all__ = [
    "BoundaryLabel",
    "DEFAULT_SCALE",
    "Dialect",
    "ImageRef",
    "PromptTemplate",
    "PromptTooLongError",
    "QueryRecord",
    "RenderedMessage",
    "ScoreScale",
    "Segment",
    "TemplateLibrary",
    "flip_score",
    "hard_label",
    "render_prompt",
]
