"""Boundary-model queries, output parsing and the retrieval indicator."""

from __future__ import annotations

import logging
import re

from boundary.prompts import TemplateLibrary, render_prompt
from boundary.types import QueryRecord, ScoreScale
from config import EPSILON_OVERSHOOT, GREEDY_DECODING, SKB_EPSILON, TemplateVariant
from errors import ConfigurationError, ParseFailure, ScoreRangeError
from gateway.client import ModelGateway
from gateway.types import Expectation, GenerationRequest, GenerationResponse
from pipeline_config import EndpointProfile
from sampling.judge import NUMBER_RE

from .types import GateDecision, GateVariant

logger = logging.getLogger(__name__)

_FIRST_WORD_RE = re.compile(r"[A-Za-z]+")


def parse_verdict(text: str) -> bool:
    """Leading token as true/false, ignoring case and punctuation.

    Raises:
        ParseFailure: The leading word is neither true nor false.
    """
    match = _FIRST_WORD_RE.search(text or "")
    word = match.group().lower() if match else ""
    if word == "true":
        return True
    if word == "false":
        return False
    raise ParseFailure(f"not a true/false verdict: {text[:40]!r}")


def parse_soft_score(text: str, scale: ScoreScale) -> float:
    """First decimal number clamped onto the scale.

    Raises:
        ParseFailure: No number in the output.
    """
    match = NUMBER_RE.search(text or "")
    if match is None:
        raise ParseFailure(f"no score in boundary output: {text[:40]!r}")
    return scale.clamp(float(match.group()))


def check_skb_epsilon(epsilon: float, scale: ScoreScale) -> float:
    """SKB thresholds may exceed ``s_c`` by up to ``EPSILON_OVERSHOOT`` (disables retrieval)."""
    if not (scale.s_w <= epsilon <= scale.s_c + EPSILON_OVERSHOOT):
        raise ScoreRangeError(
            f"skb epsilon {epsilon} outside [{scale.s_w}, {scale.s_c + EPSILON_OVERSHOOT}]"
        )
    return epsilon


class Gatekeeper:
    """Decides per query whether to retrieve.

    Boundary calls use greedy decoding whatever the profile defaults are.
    """

    def __init__(
        self,
        gateway: ModelGateway,
        templates: TemplateLibrary,
        scale: ScoreScale,
        hard_profile: EndpointProfile | None = None,
        soft_profile: EndpointProfile | None = None,
        sampled_profile: EndpointProfile | None = None,
        default_epsilon: float = SKB_EPSILON,
    ):
        self.gateway = gateway
        self.templates = templates
        self.scale = scale
        self.hard_profile = hard_profile
        self.soft_profile = soft_profile
        self.sampled_profile = sampled_profile
        self.default_epsilon = default_epsilon

    def _ask(
        self,
        query: QueryRecord,
        variant: TemplateVariant,
        profile: EndpointProfile | None,
        expect: Expectation,
    ) -> GenerationResponse:
        if profile is None:
            raise ConfigurationError(f"no profile configured for {variant.value} gating")
        message = render_prompt(self.templates.get(variant, profile.dialect), query)
        return self.gateway.generate(GenerationRequest(
            profile=profile,
            message=message,
            overrides=dict(GREEDY_DECODING),
            expect=expect,
        ))

    # -------------------------------------------------------------------------
    # Raw predictions
    # -------------------------------------------------------------------------

    def predict_hard(self, query: QueryRecord, profile: EndpointProfile | None = None) -> bool:
        """HKB verdict: True means search needed. Raises ParseFailure on other output."""
        response = self._ask(query, TemplateVariant.HARD, profile or self.hard_profile, "verdict")
        return parse_verdict(response.text)

    def predict_soft(self, query: QueryRecord, profile: EndpointProfile | None = None) -> float:
        """SKB score on the scale. Raises ParseFailure when no number is found."""
        response = self._ask(query, TemplateVariant.SOFT, profile or self.soft_profile, "score")
        return parse_soft_score(response.text, self.scale)

    def prompt_based_decide(self, query: QueryRecord, profile: EndpointProfile | None = None) -> GateDecision:
        """Ask the sampled model itself; unparsable output means no search (flagged)."""
        response = self._ask(query, TemplateVariant.PROMPT_BASELINE, profile or self.sampled_profile, "verdict")
        try:
            verdict: bool | None = parse_verdict(response.text)
            fallback = False
        except ParseFailure:
            logger.warning("Query %s: prompt baseline output unparsable, assuming no search", query.id)
            verdict, fallback = None, True
        return GateDecision(
            query_id=query.id,
            variant="prompt",
            raw_output=response.text,
            verdict=verdict,
            retrieve=bool(verdict),
            duration_ms=response.latency_ms,
            fallback_used=fallback,
        )

    # -------------------------------------------------------------------------
    # Indicator
    # -------------------------------------------------------------------------

    def decide(self, query: QueryRecord, variant: GateVariant, epsilon: float | None = None) -> GateDecision:
        """Route one query.

        hkb retrieves iff the verdict is true; skb iff the score >= epsilon.
        Unparsable boundary output retrieves (``fallback_used``). The
        duration covers the boundary call only.

        Raises:
            ScoreRangeError: skb epsilon outside the allowed range.
            GatewayError: Boundary endpoint failed after retries.
        """
        if variant == "none":
            return GateDecision(query_id=query.id, variant="none", retrieve=False)
        if variant == "all":
            return GateDecision(query_id=query.id, variant="all", retrieve=True)
        if variant == "prompt":
            return self.prompt_based_decide(query)

        if variant == "hkb":
            response = self._ask(query, TemplateVariant.HARD, self.hard_profile, "verdict")
            try:
                verdict: bool | float = parse_verdict(response.text)
            except ParseFailure:
                return self._fallback(query, variant, response, None)
            return GateDecision(
                query_id=query.id,
                variant="hkb",
                raw_output=response.text,
                verdict=verdict,
                retrieve=bool(verdict),
                duration_ms=response.latency_ms,
            )

        eps = check_skb_epsilon(self.default_epsilon if epsilon is None else epsilon, self.scale)
        response = self._ask(query, TemplateVariant.SOFT, self.soft_profile, "score")
        try:
            score = parse_soft_score(response.text, self.scale)
        except ParseFailure:
            return self._fallback(query, variant, response, eps)
        return GateDecision(
            query_id=query.id,
            variant="skb",
            raw_output=response.text,
            verdict=score,
            epsilon=eps,
            retrieve=score >= eps,
            duration_ms=response.latency_ms,
        )

    @staticmethod
    def _fallback(
        query: QueryRecord,
        variant: GateVariant,
        response: GenerationResponse,
        epsilon: float | None,
    ) -> GateDecision:
        logger.warning("Query %s: unparsable %s output %r, retrieving", query.id, variant, response.text[:40])
        return GateDecision(
            query_id=query.id,
            variant=variant,
            raw_output=response.text,
            epsilon=epsilon,
            retrieve=True,
            duration_ms=response.latency_ms,
            fallback_used=True,
        )
