"""Per-invocation wiring: config, run store, gateway, gatekeeper, retriever."""

from __future__ import annotations

import argparse
import logging
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

from boundary.types import QueryRecord
from gate.gatekeeper import Gatekeeper
from gateway.cache import ResponseCache
from gateway.client import ModelGateway
from logging_utils import configure_logging
from pipeline_config import PipelineConfig
from retrieval.providers import build_provider
from retrieval.search import Retriever, SearchCache, SearchClient
from runstore.store import RunStore
from sources.cache import ImageCache
from sources.images import ImageResolver
from sources.queries import load_queries

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARTIAL = 2
EXIT_FATAL = 3


def exit_code(failures: int) -> int:
    return EXIT_PARTIAL if failures else EXIT_OK


@dataclass
class Runtime:
    args: argparse.Namespace
    cfg: PipelineConfig
    store: RunStore
    resolver: ImageResolver
    gateway: ModelGateway

    @property
    def config_hash(self) -> str:
        return self.cfg.config_hash()

    def queries(self) -> list[QueryRecord]:
        return load_queries(self.args.queries, getattr(self.args, "source", None))

    def dataset_name(self) -> str:
        return getattr(self.args, "dataset", None) or Path(self.args.queries).stem

    def gatekeeper(self, boundary_profile: str | None = None) -> Gatekeeper:
        """Gatekeeper over the configured roles; ``boundary_profile`` replaces both boundary roles."""
        cfg = self.cfg
        override = cfg.profile(boundary_profile) if boundary_profile else None
        return Gatekeeper(
            self.gateway,
            cfg.templates,
            cfg.scale,
            hard_profile=override or cfg.profile("boundary_hard"),
            soft_profile=override or cfg.profile("boundary_soft"),
            sampled_profile=cfg.profile("sampler"),
            default_epsilon=cfg.skb_epsilon,
        )

    def _search_client(self, name: str | None) -> SearchClient | None:
        if name is None:
            return None
        provider_cfg = self.cfg.provider(name)
        return SearchClient(
            build_provider(provider_cfg),
            provider_cfg,
            resolver=self.resolver,
            cache=SearchCache(self.store.search_dir, provider_cfg.cache_max_age_seconds),
            retry=self.cfg.retry,
        )

    def retriever(self) -> Retriever | None:
        text = self._search_client(self.cfg.text_search)
        image = self._search_client(self.cfg.image_search)
        if text is None and image is None:
            return None
        return Retriever(text, image, self.cfg.retrieval_policy)


@contextmanager
def open_runtime(args: argparse.Namespace) -> Iterator[Runtime]:
    """Load the config, lock the run directory and build the gateway.

    ``--mock`` swaps every backend and provider for the offline mocks and
    leaves remote images as links.
    """
    cfg = PipelineConfig.load(args.config)
    if args.mock:
        cfg = cfg.with_mock()
    configure_logging(
        getattr(args, "log_level", None),
        getattr(args, "verbose", 0),
        getattr(args, "quiet", 0),
        secret_env_names=cfg.secret_env_names(),
    )
    store = RunStore(args.run_dir)
    queries = getattr(args, "queries", None)
    with store.lock():
        resolver = ImageResolver(
            base_dir=Path(queries).parent if queries else None,
            cache=ImageCache(store.images_dir),
            fetch_remote=not args.mock,
        )
        gateway = ModelGateway(
            cache=ResponseCache(store.responses_dir),
            resolver=resolver,
            call_log=store.calls,
            retry=cfg.retry,
        )
        logger.debug("Run %s in %s (config %s)", store.run_id, store.root, cfg.config_hash()[:12])
        try:
            yield Runtime(args=args, cfg=cfg, store=store, resolver=resolver, gateway=gateway)
        finally:
            gateway.close()
