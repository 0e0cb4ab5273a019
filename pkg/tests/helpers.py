"""Shared test helpers: factories and fakes reused across test modules."""

from __future__ import annotations

import json
import math
import re
from pathlib import Path

from boundary.types import QueryRecord
from gate.gatekeeper import Gatekeeper
from gateway.backends import Responder
from gateway.cache import ResponseCache
from gateway.client import ModelGateway
from gateway.types import GenerationRequest
from pipeline_config import EndpointProfile, PipelineConfig, RetryPolicy, SearchProviderConfig
from retrieval.providers import MockSearchProvider
from retrieval.search import Retriever, SearchClient
from sampling.types import JudgedQuery, JudgeScore

NO_RETRY = RetryPolicy(max_retries=0, backoff_base_seconds=0.0, backoff_cap_seconds=0.0)

_QID_RE = re.compile(r"\bquestion (q\d+)\b")


def no_sleep(_seconds: float) -> None:
    pass


def mock_config() -> PipelineConfig:
    return PipelineConfig.load().with_mock()


def make_query(
    qid: str = "q001",
    text: str | None = None,
    source: str = "mix",
    gold: str = "houston astros",
    images: list[str] | None = None,
    gold_query: str | None = None,
    human_label: bool | None = None,
) -> QueryRecord:
    """Factory for a QueryRecord whose text names its id (``question q001 ...``)."""
    return QueryRecord(
        id=qid,
        source=source,
        text=f"question {qid}: which team is shown?" if text is None else text,
        images=[{"uri": uri} for uri in (images or [])],
        gold_answer=gold,
        gold_query=gold_query,
        human_label=human_label,
    )


def make_queries(n: int, sources: tuple[str, ...] = ("infoseek", "okvqa"), with_images: bool = True) -> list[QueryRecord]:
    """``n`` queries spread round-robin over ``sources``, ids q000, q001, ..."""
    return [
        make_query(
            f"q{i:03d}",
            source=sources[i % len(sources)],
            images=[f"https://images.invalid/{i}.jpg"] if with_images else None,
        )
        for i in range(n)
    ]


def query_id_of(request: GenerationRequest) -> str:
    """Recover the query id a rendered prompt was built from."""
    match = _QID_RE.search(request.message.as_text())
    return match.group(1) if match else ""


def make_profile(name: str = "mock", mock_style: str | None = None, **kwargs) -> EndpointProfile:
    return EndpointProfile(
        name=name,
        backend="mock",
        model_name=kwargs.pop("model_name", f"{name}-model"),
        mock_style=mock_style,
        **kwargs,
    )


def make_gateway(
    cache_dir: Path | None = None,
    responder: Responder | None = None,
    retry: RetryPolicy = NO_RETRY,
    **kwargs,
) -> ModelGateway:
    """Gateway over the mock backend that never sleeps."""
    return ModelGateway(
        cache=ResponseCache(cache_dir) if cache_dir is not None else None,
        mock_responder=responder,
        retry=retry,
        sleep=no_sleep,
        **kwargs,
    )


def make_gatekeeper(gateway: ModelGateway, cfg: PipelineConfig) -> Gatekeeper:
    return Gatekeeper(
        gateway,
        cfg.templates,
        cfg.scale,
        hard_profile=cfg.profile("boundary_hard"),
        soft_profile=cfg.profile("boundary_soft"),
        sampled_profile=cfg.profile("sampler"),
        default_epsilon=cfg.skb_epsilon,
    )


def make_search_client(name: str = "mock", top_k: int = 5, **kwargs) -> SearchClient:
    provider_cfg = SearchProviderConfig(name=name, kind="mock", top_k=top_k)
    return SearchClient(MockSearchProvider(name), provider_cfg, retry=NO_RETRY, sleep=no_sleep, **kwargs)


def make_retriever() -> Retriever:
    client = make_search_client()
    return Retriever(client, client)


def make_judged(qid: str, scores: list[float | None], source: str = "mix") -> JudgedQuery:
    """JudgedQuery whose mean is the mean of the non-None ``scores``."""
    entries = [JudgeScore(index=i, score=s, raw="" if s is None else str(s)) for i, s in enumerate(scores)]
    valid = [s for s in scores if s is not None]
    return JudgedQuery(
        query_id=qid,
        source=source,
        scores=entries,
        valid_count=len(valid),
        invalid_count=len(scores) - len(valid),
        mean_score=math.fsum(valid) / len(valid),
    )


def write_queries(path: Path, queries: list[QueryRecord]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(q.model_dump_json(exclude_none=True) + "\n" for q in queries), encoding="utf-8")
    return path


def read_lines(path: Path) -> list[dict]:
    return [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
