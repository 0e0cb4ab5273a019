"""YAML run configuration: endpoint profiles, roles, search providers, thresholds.

Loaded once per CLI invocation from ``--config`` (default
``configs/default.yaml``). Values not given in the file fall back to the
constants in ``config.py``. Secrets are never stored here: profiles name
the environment variable holding a key (``auth_env``).
"""

from __future__ import annotations

import hashlib
import json
import logging
from functools import cached_property
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, ValidationError, model_validator

from boundary.prompts import DEFAULT_TEMPLATES_PATH, TemplateLibrary
from boundary.types import ScoreScale
from config import (
    CONTEXT_CHAR_BUDGET,
    DEFAULT_DIALECT,
    EPSILON_OVERSHOOT,
    GATEWAY_BACKOFF_BASE_SECONDS,
    GATEWAY_BACKOFF_CAP_SECONDS,
    GATEWAY_MAX_IN_FLIGHT,
    GATEWAY_MAX_RETRIES,
    GATEWAY_REQUESTS_PER_SECOND,
    GATEWAY_TIMEOUT_SECONDS,
    JUDGE_PARSE_RETRIES,
    LABEL_EPSILON,
    MIN_VALID_SCORES,
    PROMPT_CHAR_BUDGET,
    SAMPLE_COUNT,
    SAMPLING_TEMPERATURE,
    SAMPLING_TOP_P,
    SEARCH_CACHE_MAX_AGE,
    SEARCH_TOP_K,
    SKB_EPSILON,
    RetrievalPolicy,
)
from errors import ConfigurationError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).parent / "configs" / "default.yaml"

MockStyle = Literal["answer", "score", "verdict"]


class RateLimit(BaseModel):
    requests_per_second: PositiveFloat = GATEWAY_REQUESTS_PER_SECOND
    max_in_flight: PositiveInt = GATEWAY_MAX_IN_FLIGHT

    model_config = ConfigDict(frozen=True)


class DecodingParams(BaseModel):
    """Decoding parameters; ``None`` means "endpoint default"."""

    temperature: float | None = SAMPLING_TEMPERATURE
    top_p: float | None = SAMPLING_TOP_P
    top_k: int | None = None
    max_tokens: int | None = None
    seed: int | None = None

    model_config = ConfigDict(frozen=True, extra="forbid")

    def merged(self, overrides: dict[str, Any] | None) -> DecodingParams:
        if not overrides:
            return self
        try:
            return DecodingParams.model_validate({**self.model_dump(), **overrides})
        except ValidationError as exc:
            raise ConfigurationError(f"bad decoding overrides {overrides}: {exc}") from exc

    def resolved(self) -> dict[str, Any]:
        """Non-null parameters, sorted by name."""
        return {k: v for k, v in sorted(self.model_dump().items()) if v is not None}


class EndpointProfile(BaseModel):
    """One generation endpoint (sampled VLLM, judge, boundary model, answerer)."""

    name: str
    backend: Literal["http", "mock"] = "http"
    base_url: str = ""
    model_name: str
    auth_env: str | None = None
    decoding: DecodingParams = Field(default_factory=DecodingParams)
    rate_limit: RateLimit = Field(default_factory=RateLimit)
    dialect: str = DEFAULT_DIALECT
    timeout_seconds: PositiveFloat = GATEWAY_TIMEOUT_SECONDS
    # Reply format forced on the mock backend; otherwise chosen per request
    mock_style: MockStyle | None = None

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_backend(self) -> EndpointProfile:
        if self.backend == "http" and not self.base_url:
            raise ValueError(f"profile {self.name!r}: http backend needs base_url")
        return self


class SearchProviderConfig(BaseModel):
    name: str
    kind: Literal["http", "fixture", "mock"] = "http"
    base_url: str = ""
    auth_env: str | None = None
    fixture_dir: Path | None = None
    # Fixed query parameters sent with every request (e.g. {"engine": "google_lens"})
    params: dict[str, str] = Field(default_factory=dict)
    top_k: PositiveInt = SEARCH_TOP_K
    rate_limit: RateLimit = Field(default_factory=RateLimit)
    cache_max_age_seconds: float | None = SEARCH_CACHE_MAX_AGE
    timeout_seconds: PositiveFloat = GATEWAY_TIMEOUT_SECONDS

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_kind(self) -> SearchProviderConfig:
        if self.kind == "http" and not self.base_url:
            raise ValueError(f"search provider {self.name!r}: http kind needs base_url")
        if self.kind == "fixture" and self.fixture_dir is None:
            raise ValueError(f"search provider {self.name!r}: fixture kind needs fixture_dir")
        return self


class Roles(BaseModel):
    """Which profile plays which part. Boundary and answerer are independent."""

    sampler: str
    judge: str
    boundary_hard: str
    boundary_soft: str
    answerer: str
    consistency_judge: str | None = None


class RetryPolicy(BaseModel):
    max_retries: int = Field(default=GATEWAY_MAX_RETRIES, ge=0)
    backoff_base_seconds: float = Field(default=GATEWAY_BACKOFF_BASE_SECONDS, ge=0)
    backoff_cap_seconds: float = Field(default=GATEWAY_BACKOFF_CAP_SECONDS, ge=0)


class PipelineConfig(BaseModel):
    scale: ScoreScale = Field(default_factory=ScoreScale)
    label_epsilon: float = LABEL_EPSILON
    skb_epsilon: float = SKB_EPSILON
    sample_count: PositiveInt = SAMPLE_COUNT
    judge_parse_retries: int = Field(default=JUDGE_PARSE_RETRIES, ge=0)
    min_valid_scores: PositiveInt = MIN_VALID_SCORES
    templates_path: Path = DEFAULT_TEMPLATES_PATH
    prompt_char_budget: PositiveInt = PROMPT_CHAR_BUDGET
    context_char_budget: PositiveInt = CONTEXT_CHAR_BUDGET
    retrieval_policy: RetrievalPolicy = RetrievalPolicy.GOLD_IF_PRESENT
    retry: RetryPolicy = Field(default_factory=RetryPolicy)
    profiles: dict[str, EndpointProfile]
    roles: Roles
    search_providers: dict[str, SearchProviderConfig] = Field(default_factory=dict)
    text_search: str | None = None
    image_search: str | None = None

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @model_validator(mode="before")
    @classmethod
    def _fill_names(cls, values: Any) -> Any:
        """Let YAML omit ``name`` inside keyed profile/provider maps."""
        if not isinstance(values, dict):
            return values
        values = dict(values)
        for key in ("profiles", "search_providers"):
            entries = values.get(key) or {}
            values[key] = {
                name: ({"name": name, **spec} if isinstance(spec, dict) else spec)
                for name, spec in entries.items()
            }
        return values

    @model_validator(mode="after")
    def _check_refs(self) -> PipelineConfig:
        for role, name in self.roles.model_dump().items():
            if name is not None and name not in self.profiles:
                raise ValueError(f"role {role} refers to unknown profile {name!r}")
        for which in ("text_search", "image_search"):
            name = getattr(self, which)
            if name is not None and name not in self.search_providers:
                raise ValueError(f"{which} refers to unknown provider {name!r}")
        if not self.scale.contains(self.label_epsilon):
            raise ValueError(f"label_epsilon {self.label_epsilon} outside the score scale")
        if not (self.scale.s_w <= self.skb_epsilon <= self.scale.s_c + EPSILON_OVERSHOOT):
            raise ValueError(f"skb_epsilon {self.skb_epsilon} outside the allowed range")
        return self

    # -------------------------------------------------------------------------
    # Loading
    # -------------------------------------------------------------------------

    @classmethod
    def load(cls, path: Path | str | None = None) -> PipelineConfig:
        """Load and validate a YAML config. Relative paths resolve against its directory."""
        path = Path(path) if path else DEFAULT_CONFIG_PATH
        try:
            raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        base = path.parent
        if "templates_path" in raw:
            raw["templates_path"] = base / raw["templates_path"]
        for spec in (raw.get("search_providers") or {}).values():
            if isinstance(spec, dict) and spec.get("fixture_dir"):
                spec["fixture_dir"] = base / spec["fixture_dir"]
        try:
            cfg = cls.model_validate(raw)
        except ValidationError as exc:
            raise ConfigurationError(f"invalid config {path}:\n{exc}") from exc
        logger.debug("Loaded config %s (%d profiles)", path, len(cfg.profiles))
        return cfg

    @cached_property
    def templates(self) -> TemplateLibrary:
        return TemplateLibrary.load(self.templates_path)

    # -------------------------------------------------------------------------
    # Lookups
    # -------------------------------------------------------------------------

    def profile(self, name_or_role: str) -> EndpointProfile:
        """Resolve a profile by role name (``judge``...) or by profile name."""
        name = getattr(self.roles, name_or_role, None) if name_or_role in Roles.model_fields else None
        name = name or name_or_role
        try:
            return self.profiles[name]
        except KeyError:
            raise ConfigurationError(f"unknown profile or role {name_or_role!r}") from None

    def provider(self, name: str) -> SearchProviderConfig:
        try:
            return self.search_providers[name]
        except KeyError:
            raise ConfigurationError(f"unknown search provider {name!r}") from None

    def secret_env_names(self) -> list[str]:
        names = {p.auth_env for p in self.profiles.values() if p.auth_env}
        names |= {p.auth_env for p in self.search_providers.values() if p.auth_env}
        return sorted(names)

    # -------------------------------------------------------------------------
    # Identity
    # -------------------------------------------------------------------------

    def canonical_json(self) -> str:
        data = self.model_dump(mode="json", exclude={"templates_path"})
        return json.dumps(data, sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        """SHA-256 over the canonical config plus the template file bytes."""
        h = hashlib.sha256(self.canonical_json().encode("utf-8"))
        try:
            h.update(Path(self.templates_path).read_bytes())
        except OSError as exc:
            raise ConfigurationError(f"cannot read templates {self.templates_path}: {exc}") from exc
        return h.hexdigest()

    def with_mock(self) -> PipelineConfig:
        """Copy with every backend and search provider swapped for the deterministic mocks."""
        profiles = {
            name: p.model_copy(update={"backend": "mock", "auth_env": None})
            for name, p in self.profiles.items()
        }
        providers = {
            name: p.model_copy(update={"kind": "mock", "auth_env": None})
            for name, p in self.search_providers.items()
        }
        if not providers:
            providers = {"mock": SearchProviderConfig(name="mock", kind="mock")}
        text = self.text_search if self.text_search in providers else next(iter(providers))
        image = self.image_search if self.image_search in providers else next(iter(providers))
        return self.model_copy(update={
            "profiles": profiles,
            "search_providers": providers,
            "text_search": text,
            "image_search": image,
        })
