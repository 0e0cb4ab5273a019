"""Tests for the gateway package: mock backend, cache key, response cache, HTTP backend, throttle."""

from __future__ import annotations

import json
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor

import httpx
import pytest

from boundary.prompts import RenderedMessage, Segment
from errors import (
    AuthError,
    CacheConflictError,
    InputValidationError,
    MalformedReplyError,
    RateLimitExhaustedError,
    TransportError,
)
from gateway.backends import mock_reply_text
from gateway.cache import ResponseCache, cache_key
from gateway.throttle import Throttle, backoff_delay
from gateway.types import GenerationRequest, GenerationResponse, MockReply
from pipeline_config import EndpointProfile, RateLimit, RetryPolicy
from runstore.jsonl import JsonlLog
from sources.images import ImageResolver
from tests.helpers import make_gateway, make_profile, no_sleep


def _message(text: str = "What is shown?", images: tuple[str, ...] = ()) -> RenderedMessage:
    segments = [Segment(kind="text", text=text)]
    segments += [Segment(kind="image", image={"uri": uri}) for uri in images]
    return RenderedMessage(segments=segments)


def _request(profile=None, **kwargs) -> GenerationRequest:
    return GenerationRequest(profile=profile or make_profile(), message=kwargs.pop("message", _message()), **kwargs)


# =============================================================================
# cache_key
# =============================================================================


class TestCacheKey:
    def test_identical_requests(self):
        assert cache_key(_request()) == cache_key(_request())

    def test_sample_index_is_keyed(self):
        assert cache_key(_request(sample_index=0)) != cache_key(_request(sample_index=1))

    def test_temperature_is_keyed(self):
        a = _request(overrides={"temperature": 0.1})
        b = _request(overrides={"temperature": 0.2})
        assert cache_key(a) != cache_key(b)

    def test_profile_name_is_not_keyed(self):
        a = _request(make_profile("a", model_name="shared"))
        b = _request(make_profile("b", model_name="shared"))
        assert cache_key(a) == cache_key(b)

    def test_backend_is_keyed(self):
        offline = _request(make_profile("a", model_name="shared"))
        live = _request(EndpointProfile(name="b", backend="http", base_url="http://model.test/v1", model_name="shared"))
        assert cache_key(offline) != cache_key(live)

    def test_image_content_is_keyed(self, tmp_path):
        (tmp_path / "a.bin").write_bytes(b"one")
        (tmp_path / "b.bin").write_bytes(b"two")
        resolver = ImageResolver(base_dir=tmp_path)
        a = _request(message=_message(images=("a.bin",)))
        b = _request(message=_message(images=("b.bin",)))
        assert cache_key(a, resolver) != cache_key(b, resolver)


# =============================================================================
# Mock backend through the gateway
# =============================================================================


class TestMockBackend:
    def test_output_is_function_of_request(self):
        gw = make_gateway()
        assert gw.generate(_request()).text == gw.generate(_request()).text

    def test_default_styles(self):
        gw = make_gateway()
        answer = gw.generate(_request(expect="answer")).text
        score = gw.generate(_request(expect="score")).text
        verdict = gw.generate(_request(expect="verdict")).text
        assert answer.startswith("mock answer ")
        assert 1.0 <= float(score) <= 5.0
        assert verdict in ("True", "False")

    def test_profile_style_overrides_expectation(self):
        request = _request(make_profile(mock_style="verdict"), expect="score")
        assert mock_reply_text(request, "0" * 64) == "False"

    def test_custom_responder_and_latency(self):
        gw = make_gateway(responder=lambda req, digest: MockReply(text="42", latency_ms=12.5))
        response = gw.generate(_request())
        assert (response.text, response.latency_ms) == ("42", 12.5)

    def test_empty_message_rejected(self):
        gw = make_gateway()
        with pytest.raises(InputValidationError):
            gw.generate(_request(message=RenderedMessage(segments=[Segment(kind="text", text="  ")])))

    def test_transport_error_after_retries(self):
        calls = []

        def failing(req, digest):
            calls.append(digest)
            raise TransportError("unreachable")

        gw = make_gateway(responder=failing, retry=RetryPolicy(max_retries=2))
        with pytest.raises(TransportError):
            gw.generate(_request())
        assert len(calls) == 3


# =============================================================================
# Response cache
# =============================================================================


class TestResponseCache:
    def test_second_call_served_from_cache(self, tmp_path):
        log = JsonlLog(tmp_path / "calls.jsonl")
        gw = make_gateway(tmp_path / "cache", call_log=log)
        first = gw.generate(_request())
        second = gw.generate(_request())
        assert second.cached and not first.cached
        assert second.text == first.text
        assert gw.backend_calls == 1
        assert [e["cached"] for e in log.entries()] == [False, True]

    def test_cache_survives_new_gateway(self, tmp_path):
        make_gateway(tmp_path / "cache").generate(_request())
        gw = make_gateway(tmp_path / "cache")
        assert gw.generate(_request()).cached
        assert gw.backend_calls == 0

    def test_identical_put_is_noop(self, tmp_path):
        cache = ResponseCache(tmp_path)
        cache.put("ab" * 32, GenerationResponse(text="x"))
        cache.put("ab" * 32, GenerationResponse(text="x", latency_ms=9.0))
        assert cache.get("ab" * 32).text == "x"

    def test_conflicting_put_raises(self, tmp_path):
        cache = ResponseCache(tmp_path)
        cache.put("ab" * 32, GenerationResponse(text="x"))
        with pytest.raises(CacheConflictError):
            cache.put("ab" * 32, GenerationResponse(text="y"))

    def test_corrupt_record_is_a_miss(self, tmp_path):
        cache = ResponseCache(tmp_path)
        path = cache.path_for("cd" * 32)
        path.parent.mkdir(parents=True)
        path.write_text("{not json", encoding="utf-8")
        assert cache.get("cd" * 32) is None


# =============================================================================
# HTTP chat backend
# =============================================================================


def _http_profile(**kwargs) -> EndpointProfile:
    return EndpointProfile(
        name="remote",
        backend="http",
        base_url=kwargs.pop("base_url", "http://model.test/v1"),
        model_name="remote-vl",
        auth_env=kwargs.pop("auth_env", "KB_TEST_KEY"),
        **kwargs,
    )


def _completion(text: str = "Paris") -> dict:
    return {"model": "remote-vl", "choices": [{"message": {"content": text}, "finish_reason": "stop"}]}


class _Endpoint:
    """Scripted chat endpoint: replies are consumed in order, the last one repeats."""

    def __init__(self, *replies: tuple[int, dict | None]):
        self.replies = list(replies)
        self.requests: list[httpx.Request] = []

    def __call__(self, request: httpx.Request) -> httpx.Response:
        self.requests.append(request)
        status, body = self.replies.pop(0) if len(self.replies) > 1 else self.replies[0]
        return httpx.Response(status, json=body) if body is not None else httpx.Response(status)

    def gateway(self, retries: int = 2, **kwargs):
        client = httpx.Client(transport=httpx.MockTransport(self))
        return make_gateway(http_client=client, retry=RetryPolicy(max_retries=retries), **kwargs)


class TestHttpBackend:
    @pytest.fixture(autouse=True)
    def _key(self, monkeypatch):
        monkeypatch.setenv("KB_TEST_KEY", "sk-test")

    def test_payload_and_auth(self):
        endpoint = _Endpoint((200, _completion()))
        request = _request(_http_profile(), message=_message(images=("https://img.test/a.jpg",)), sample_index=3)
        response = endpoint.gateway().generate(request)

        sent = endpoint.requests[0]
        body = json.loads(sent.content)
        assert response.text == "Paris"
        assert str(sent.url) == "http://model.test/v1/chat/completions"
        assert sent.headers["Authorization"] == "Bearer sk-test"
        assert body["model"] == "remote-vl"
        assert body["messages"][0]["content"] == [
            {"type": "text", "text": "What is shown?"},
            {"type": "image_url", "image_url": {"url": "https://img.test/a.jpg"}},
        ]

    def test_seed_offset_by_sample_index(self):
        endpoint = _Endpoint((200, _completion()))
        profile = _http_profile(decoding={"seed": 100})
        endpoint.gateway().generate(_request(profile, sample_index=4))
        assert json.loads(endpoint.requests[0].content)["seed"] == 104

    def test_missing_key(self, monkeypatch):
        monkeypatch.delenv("KB_TEST_KEY")
        endpoint = _Endpoint((200, _completion()))
        with pytest.raises(AuthError):
            endpoint.gateway().generate(_request(_http_profile()))
        assert endpoint.requests == []

    def test_rejected_credentials_not_retried(self):
        endpoint = _Endpoint((401, None))
        with pytest.raises(AuthError):
            endpoint.gateway().generate(_request(_http_profile()))
        assert len(endpoint.requests) == 1

    def test_server_error_then_success(self):
        endpoint = _Endpoint((503, None), (200, _completion("ok")))
        assert endpoint.gateway().generate(_request(_http_profile())).text == "ok"
        assert len(endpoint.requests) == 2

    def test_persistent_429(self, tmp_path):
        endpoint = _Endpoint((429, None))
        log = JsonlLog(tmp_path / "calls.jsonl")
        with pytest.raises(RateLimitExhaustedError):
            endpoint.gateway(retries=2, call_log=log).generate(_request(_http_profile()))
        assert len(endpoint.requests) == 3
        assert log.entries()[-1]["status"] == "RateLimitExhaustedError"

    def test_not_a_completion(self):
        endpoint = _Endpoint((200, {"error": "nope"}))
        with pytest.raises(MalformedReplyError):
            endpoint.gateway().generate(_request(_http_profile()))

    def test_unreachable_endpoint(self):
        def refuse(request):
            raise httpx.ConnectError("connection refused", request=request)

        client = httpx.Client(transport=httpx.MockTransport(refuse))
        gw = make_gateway(http_client=client, retry=RetryPolicy(max_retries=1))
        with pytest.raises(TransportError):
            gw.generate(_request(_http_profile()))

    def test_cached_mock_reply_not_served_to_http(self, tmp_path):
        endpoint = _Endpoint((200, _completion("REAL")))
        cache_dir = tmp_path / "cache"
        mocked = make_gateway(cache_dir).generate(_request(make_profile("offline", model_name="remote-vl")))
        assert mocked.text.startswith("mock answer")

        live = endpoint.gateway(cache_dir=cache_dir).generate(_request(_http_profile()))
        assert live.text == "REAL"
        assert not live.cached
        assert len(endpoint.requests) == 1

    def test_http_servers_keyed_apart(self, tmp_path):
        endpoint = _Endpoint((200, _completion("REAL")))
        gw = endpoint.gateway(cache_dir=tmp_path / "cache")
        gw.generate(_request(_http_profile()))
        gw.generate(_request(_http_profile(base_url="http://other.test/v1")))
        assert len(endpoint.requests) == 2


# =============================================================================
# Throttle
# =============================================================================


class TestThrottle:
    def test_spacing_between_starts(self):
        slept: list[float] = []
        throttle = Throttle(10.0, 1, clock=lambda: 0.0, sleep=slept.append)
        for _ in range(3):
            with throttle.slot():
                pass
        assert slept == pytest.approx([0.1, 0.2])

    def test_in_flight_window_honoured(self):
        profile = make_profile(rate_limit=RateLimit(requests_per_second=1000, max_in_flight=2))
        gate = threading.Lock()
        active = [0, 0]

        def slow(req, digest):
            with gate:
                active[0] += 1
                active[1] = max(active[1], active[0])
            time.sleep(0.01)
            with gate:
                active[0] -= 1
            return "ok"

        gw = make_gateway(responder=slow)
        with ThreadPoolExecutor(max_workers=8) as pool:
            list(pool.map(lambda i: gw.generate(_request(profile, sample_index=i)), range(16)))
        assert gw.throttle(profile).peak_in_flight <= 2
        assert active[1] <= 2

    def test_invalid_limits(self):
        with pytest.raises(ValueError):
            Throttle(0, 1, sleep=no_sleep)


class TestBackoff:
    def test_bounds(self):
        rng = random.Random(7)
        for attempt in range(6):
            t = min(20.0, 0.5 * 2 ** attempt)
            assert 0.5 * t <= backoff_delay(attempt, 0.5, 20.0, rng) <= t

    def test_cap(self):
        assert backoff_delay(30, 0.5, 20.0, random.Random(1)) <= 20.0
