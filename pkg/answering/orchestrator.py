"""Answer a query with or without retrieved context, as the gate decides."""

from __future__ import annotations

import hashlib
import logging

from boundary.prompts import RenderedMessage, TemplateLibrary, render_prompt
from boundary.types import QueryRecord
from config import CONTEXT_CHAR_BUDGET, GREEDY_DECODING, PROMPT_CHAR_BUDGET, TemplateVariant
from errors import ConfigurationError
from gate.gatekeeper import Gatekeeper
from gate.types import GATE_VARIANTS, GateDecision
from gateway.client import ModelGateway
from gateway.types import GenerationRequest
from pipeline_config import EndpointProfile
from retrieval.context import assemble_context
from retrieval.search import Retriever
from retrieval.types import RetrievedContext

from .types import AnswerMode, AnswerRecord

logger = logging.getLogger(__name__)


def context_digest(context: str, ctx: RetrievedContext) -> str:
    h = hashlib.sha256(context.encode("utf-8"))
    for ref in ctx.images:
        h.update(b"\0" + ref.describe().encode("utf-8"))
    return h.hexdigest()


class AnswerOrchestrator:
    """Runs the five answer modes over one answering profile.

    ``none`` decodes from the query alone, ``all`` always retrieves, and
    ``prompt``/``hkb``/``skb`` ask the gatekeeper first. Both decodings are
    greedy and go through the shared gateway cache, so a gated answer is
    the same text as the matching ungated one.
    """

    def __init__(
        self,
        gateway: ModelGateway,
        templates: TemplateLibrary,
        answer_profile: EndpointProfile,
        gatekeeper: Gatekeeper,
        retriever: Retriever | None,
        context_budget: int = CONTEXT_CHAR_BUDGET,
        prompt_budget: int = PROMPT_CHAR_BUDGET,
    ):
        self.gateway = gateway
        self.templates = templates
        self.answer_profile = answer_profile
        self.gatekeeper = gatekeeper
        self.retriever = retriever
        self.context_budget = context_budget
        self.prompt_budget = prompt_budget

    def plain_message(self, query: QueryRecord) -> RenderedMessage:
        template = self.templates.get(TemplateVariant.ANSWER, self.answer_profile.dialect)
        return render_prompt(template, query, {}, self.prompt_budget)

    def rag_message(self, query: QueryRecord, ctx: RetrievedContext) -> tuple[RenderedMessage, str]:
        """Answer prompt with the assembled context, plus retrieved images.

        Link dialects list the retrieved image refs in the context text;
        segment dialects attach them as extra image segments.
        """
        context = assemble_context(ctx, self.context_budget)
        template = self.templates.get(TemplateVariant.ANSWER_RAG, self.answer_profile.dialect)
        if ctx.images and template.dialect.image_placement == "link":
            links = "\n".join(ref.describe() for ref in ctx.images)
            extended = f"{context}\nImages:\n{links}"
            if len(extended) <= self.context_budget:
                context = extended
        message = render_prompt(template, query, {"context": context}, self.prompt_budget)
        if ctx.images and template.dialect.image_placement == "segment":
            message = message.with_images(ctx.images)
        return message, context_digest(context, ctx)

    def _decode(self, message: RenderedMessage) -> tuple[str, float]:
        response = self.gateway.generate(GenerationRequest(
            profile=self.answer_profile,
            message=message,
            overrides=dict(GREEDY_DECODING),
            expect="answer",
        ))
        return response.text, response.latency_ms

    def _gate(self, query: QueryRecord, mode: AnswerMode, epsilon: float | None) -> GateDecision:
        if mode not in GATE_VARIANTS:
            raise ConfigurationError(f"unknown answer mode {mode!r}")
        return self.gatekeeper.decide(query, mode, epsilon)

    def answer(self, query: QueryRecord, mode: AnswerMode, epsilon: float | None = None, dataset: str = "") -> AnswerRecord:
        """Gate, retrieve when told to, then decode.

        Raises:
            GatewayError: Boundary or answering endpoint failed.
            SearchError: Retrieval failed for a query routed to search.
            IngestionError: A query image cannot be read.
        """
        decision = self._gate(query, mode, epsilon)
        retrieval_ms = 0.0
        context_hash: str | None = None
        if decision.retrieve:
            if self.retriever is None:
                raise ConfigurationError("retrieval requested but no search provider is configured")
            ctx = self.retriever.retrieve(query)
            retrieval_ms = ctx.duration_ms
            message, context_hash = self.rag_message(query, ctx)
        else:
            message = self.plain_message(query)

        text, answer_ms = self._decode(message)
        logger.debug("Query %s [%s]: retrieve=%s", query.id, mode, decision.retrieve)
        return AnswerRecord(
            query_id=query.id,
            dataset=dataset,
            mode=mode,
            answer_text=text,
            retrieved=decision.retrieve,
            gate_ms=decision.duration_ms,
            retrieval_ms=retrieval_ms,
            prebuild_ms=decision.duration_ms + retrieval_ms,
            answer_ms=answer_ms,
            context_hash=context_hash,
            gate_verdict=decision.verdict,
            gate_fallback=decision.fallback_used,
        )
