"""Prompt templates, dialects and rendering.

Templates live in ``configs/templates.yaml``::

    dialects:
      plain: {st_1: "", st_2: "", image_placement: link}
    templates:
      hard:
        default: |-
          ... {st_1} Text question: {question} <Image>: {image} {st_2}
        qwen-vl: |-
          ...per-dialect override...

Placeholders: ``{question}``, ``{image}``, ``{st_1}``, ``{st_2}``,
``{prediction}``, ``{gold}``, ``{context}``. Literal braces are written
``{{`` / ``}}``.
"""

from __future__ import annotations

import hashlib
import logging
import string
from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from config import DEFAULT_DIALECT, PROMPT_CHAR_BUDGET, TemplateVariant
from errors import ConfigurationError, InputValidationError

from .types import ImageRef, QueryRecord

logger = logging.getLogger(__name__)

DEFAULT_TEMPLATES_PATH = Path(__file__).parent.parent / "configs" / "templates.yaml"

KNOWN_PLACEHOLDERS = frozenset({"question", "image", "st_1", "st_2", "prediction", "gold", "context"})

# Placeholders each variant must contain
REQUIRED_PLACEHOLDERS: dict[TemplateVariant, frozenset[str]] = {
    TemplateVariant.HARD: frozenset({"question", "image"}),
    TemplateVariant.SOFT: frozenset({"question", "image"}),
    TemplateVariant.PROMPT_BASELINE: frozenset({"question", "image"}),
    TemplateVariant.JUDGE: frozenset({"question", "prediction", "gold"}),
    TemplateVariant.ANSWER: frozenset({"question", "image"}),
    TemplateVariant.ANSWER_RAG: frozenset({"question", "image", "context"}),
}

# Placeholders filled from caller-supplied values rather than the query
EXTRA_PLACEHOLDERS = frozenset({"prediction", "gold", "context"})


class PromptTooLongError(InputValidationError):
    """Rendered prompt text exceeds the configured character budget."""


class Dialect(BaseModel):
    """Per-endpoint rendering of special tokens and image slots.

    ``image_placement="link"`` writes image refs into the text (the SFT
    form); ``"segment"`` emits real image segments at the slot.
    """

    name: str = DEFAULT_DIALECT
    st_1: str = ""
    st_2: str = ""
    image_placement: Literal["link", "segment"] = "link"
    image_token: str = "<image>"

    model_config = ConfigDict(frozen=True)


class Segment(BaseModel):
    """One piece of a rendered message: text or an image."""

    kind: Literal["text", "image"]
    text: str | None = None
    image: ImageRef | None = None

    model_config = ConfigDict(frozen=True)


class RenderedMessage(BaseModel):
    """Ordered text and image segments forming one user turn."""

    segments: list[Segment] = Field(default_factory=list)

    model_config = ConfigDict(frozen=True)

    @property
    def images(self) -> list[ImageRef]:
        return [s.image for s in self.segments if s.kind == "image" and s.image is not None]

    def is_empty(self) -> bool:
        return not any((s.kind == "image") or (s.text or "").strip() for s in self.segments)

    def as_text(self, image_token: str = "<image>") -> str:
        """Flatten to text, writing ``image_token`` for each image segment."""
        return "".join((s.text or "") if s.kind == "text" else image_token for s in self.segments)

    def with_images(self, images: list[ImageRef]) -> RenderedMessage:
        """Return a copy with extra image segments appended."""
        extra = [Segment(kind="image", image=ref) for ref in images]
        return RenderedMessage(segments=[*self.segments, *extra])


class PromptTemplate(BaseModel):
    variant: TemplateVariant
    body: str
    dialect: Dialect = Field(default_factory=Dialect)

    model_config = ConfigDict(frozen=True)

    @property
    def digest(self) -> str:
        """Content hash recorded in manifests."""
        payload = self.body + "\0" + self.dialect.model_dump_json()
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def template_fields(body: str) -> list[str]:
    """Return placeholder names in order of appearance.

    Raises:
        ConfigurationError: On malformed braces or format specs/indexing.
    """
    names: list[str] = []
    try:
        parsed = list(string.Formatter().parse(body))
    except ValueError as exc:
        raise ConfigurationError(f"malformed template body: {exc}") from exc
    for _literal, field, spec, conversion in parsed:
        if field is None:
            continue
        if spec or conversion or not field.isidentifier():
            raise ConfigurationError(f"unsupported placeholder {{{field}}} in template")
        names.append(field)
    return names


def validate_template(variant: TemplateVariant, body: str) -> None:
    """Check placeholders: known names only, each at most once, required ones present.

    Raises:
        ConfigurationError: If the body breaks any of those rules.
    """
    names = template_fields(body)
    unknown = sorted(set(names) - KNOWN_PLACEHOLDERS)
    if unknown:
        raise ConfigurationError(f"{variant.value} template uses unknown placeholders: {unknown}")
    duplicated = sorted({n for n in names if names.count(n) > 1})
    if duplicated:
        raise ConfigurationError(f"{variant.value} template repeats placeholders: {duplicated}")
    missing = sorted(REQUIRED_PLACEHOLDERS[variant] - set(names))
    if missing:
        raise ConfigurationError(f"{variant.value} template lacks placeholders: {missing}")


class TemplateLibrary:
    """Templates keyed by variant and dialect, loaded from YAML."""

    def __init__(self, dialects: dict[str, Dialect], bodies: dict[TemplateVariant, dict[str, str]]):
        if DEFAULT_DIALECT not in dialects:
            dialects = {DEFAULT_DIALECT: Dialect(name=DEFAULT_DIALECT), **dialects}
        self.dialects = dialects
        self.bodies = bodies
        for variant, by_dialect in bodies.items():
            if "default" not in by_dialect:
                raise ConfigurationError(f"template {variant.value} has no 'default' body")
            for dialect_name, body in by_dialect.items():
                if dialect_name != "default" and dialect_name not in dialects:
                    raise ConfigurationError(
                        f"template {variant.value} names unknown dialect {dialect_name!r}"
                    )
                validate_template(variant, body)

    @classmethod
    def load(cls, path: Path | str = DEFAULT_TEMPLATES_PATH) -> TemplateLibrary:
        path = Path(path)
        try:
            raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigurationError(f"cannot read templates from {path}: {exc}") from exc

        dialects: dict[str, Dialect] = {}
        for name, spec in (raw.get("dialects") or {}).items():
            try:
                dialects[name] = Dialect(name=name, **(spec or {}))
            except ValidationError as exc:
                raise ConfigurationError(f"dialect {name!r}: {exc}") from exc

        bodies: dict[TemplateVariant, dict[str, str]] = {}
        for key, entry in (raw.get("templates") or {}).items():
            try:
                variant = TemplateVariant(key)
            except ValueError as exc:
                raise ConfigurationError(f"unknown template variant {key!r}") from exc
            if isinstance(entry, str):
                entry = {"default": entry}
            bodies[variant] = {str(k): str(v) for k, v in entry.items()}

        missing = [v.value for v in TemplateVariant if v not in bodies]
        if missing:
            raise ConfigurationError(f"templates file {path} lacks variants: {missing}")
        logger.debug("Loaded %d templates and %d dialects from %s", len(bodies), len(dialects), path)
        return cls(dialects, bodies)

    def dialect(self, name: str | None) -> Dialect:
        name = name or DEFAULT_DIALECT
        try:
            return self.dialects[name]
        except KeyError:
            raise ConfigurationError(f"unknown dialect {name!r}") from None

    def get(self, variant: TemplateVariant, dialect: str | None = None) -> PromptTemplate:
        dia = self.dialect(dialect)
        by_dialect = self.bodies[variant]
        body = by_dialect.get(dia.name, by_dialect["default"])
        return PromptTemplate(variant=variant, body=body, dialect=dia)

    def digests(self, dialect: str | None = None) -> dict[str, str]:
        return {v.value: self.get(v, dialect).digest for v in TemplateVariant}


def _merge_text(segments: list[Segment]) -> list[Segment]:
    merged: list[Segment] = []
    for seg in segments:
        if seg.kind == "text" and not seg.text:
            continue
        if seg.kind == "text" and merged and merged[-1].kind == "text":
            merged[-1] = Segment(kind="text", text=(merged[-1].text or "") + (seg.text or ""))
        else:
            merged.append(seg)
    return merged


def render_prompt(
    template: PromptTemplate,
    query: QueryRecord,
    extra: dict[str, str] | None = None,
    char_budget: int = PROMPT_CHAR_BUDGET,
) -> RenderedMessage:
    """Fill a template for one query.

    The template body is copied verbatim with ``{question}`` replaced by
    the query text, ``{image}`` by one slot per image ref and the dialect
    tokens applied. ``extra`` supplies ``prediction``/``gold``/``context``.

    Raises:
        InputValidationError: Query has neither text nor images, a needed
            extra value is missing, or the text exceeds ``char_budget``.
        ConfigurationError: Template uses unknown or repeated placeholders.
    """
    if not query.has_content:
        raise InputValidationError(f"query {query.id!r} has neither text nor images")
    validate_template(template.variant, template.body)
    extra = extra or {}
    dialect = template.dialect

    segments: list[Segment] = []
    for literal, field, _spec, _conv in string.Formatter().parse(template.body):
        if literal:
            segments.append(Segment(kind="text", text=literal))
        if field is None:
            continue
        if field == "question":
            segments.append(Segment(kind="text", text=query.text))
        elif field == "st_1":
            segments.append(Segment(kind="text", text=dialect.st_1))
        elif field == "st_2":
            segments.append(Segment(kind="text", text=dialect.st_2))
        elif field == "image":
            if dialect.image_placement == "link":
                links = " ".join(ref.describe() for ref in query.images)
                segments.append(Segment(kind="text", text=links))
            else:
                segments.extend(Segment(kind="image", image=ref) for ref in query.images)
        elif field in EXTRA_PLACEHOLDERS:
            if field not in extra:
                raise InputValidationError(
                    f"{template.variant.value} template needs a value for {{{field}}}"
                )
            segments.append(Segment(kind="text", text=extra[field]))

    message = RenderedMessage(segments=_merge_text(segments))
    text_len = sum(len(s.text or "") for s in message.segments)
    if text_len > char_budget:
        raise PromptTooLongError(
            f"prompt for {query.id!r} is {text_len} characters, budget is {char_budget}"
        )
    return message
