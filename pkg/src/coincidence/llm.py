"""Chat-completion client for querying external language models.

One request per (input set, query) pair: a single user message, temperature 0.
The API key is read from a named environment variable and nowhere else.
"""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import httpx

from .prompts import RenderedPrompt
from .responders import Judgment, ResponseParser, parse_response

log = logging.getLogger(__name__)

RETRY_STATUS = {408, 409, 425, 429, 500, 502, 503, 504}


class LMError(RuntimeError):
    pass


class EndpointUnreachable(LMError):
    pass


class AuthFailure(LMError):
    pass


class ExhaustedRetries(LMError):
    pass


class RequestRejected(LMError):
    """A 4xx validation error; never retried."""


@dataclass(frozen=True)
class LMEndpointConfig:
    base_url: str
    model_name: str
    api_key_env_var: str = "OPENAI_API_KEY"
    temperature: float = 0.0
    max_concurrent_requests: int = 4
    max_attempts: int = 5
    backoff_initial: float = 1.0
    backoff_factor: float = 2.0
    backoff_max: float = 30.0
    timeout: float = 60.0

    def __post_init__(self):
        if self.temperature != 0:
            raise ValueError("greedy decoding only: temperature must be 0")
        if self.max_concurrent_requests < 1:
            raise ValueError("max_concurrent_requests must be >= 1")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")

    def backoff(self, attempt: int) -> float:
        """Delay before retry number ``attempt`` (1-based)."""
        return min(self.backoff_max, self.backoff_initial * self.backoff_factor ** (attempt - 1))


@dataclass(frozen=True)
class Completion:
    text: str
    attempts: int


class ChatClient:
    def __init__(self, config: LMEndpointConfig, *, transport: Optional[httpx.BaseTransport] = None,
                 sleep: Callable[[float], None] = time.sleep):
        self.config = config
        self._key = os.environ.get(config.api_key_env_var)
        if not self._key:
            raise AuthFailure(f"environment variable {config.api_key_env_var} is not set")
        self._sleep = sleep
        self._http = httpx.Client(
            base_url=config.base_url.rstrip("/"),
            timeout=config.timeout,
            transport=transport,
            headers={"Authorization": f"Bearer {self._key}"},
        )

    def close(self):
        self._http.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def complete(self, prompt: str) -> Completion:
        cfg = self.config
        payload = {
            "model": cfg.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": cfg.temperature,
        }
        transport_failures = 0
        last = None
        for attempt in range(1, cfg.max_attempts + 1):
            try:
                resp = self._http.post("/chat/completions", json=payload)
            except httpx.TransportError as exc:
                transport_failures += 1
                last = exc
                log.warning("attempt %d: transport error %s", attempt, exc)
            else:
                if resp.status_code == 200:
                    try:
                        text = resp.json()["choices"][0]["message"]["content"]
                    except (ValueError, KeyError, IndexError, TypeError) as exc:
                        raise RequestRejected(f"malformed completion body: {resp.text[:200]}") from exc
                    if attempt > 1:
                        log.info("completed after %d attempts", attempt)
                    return Completion(text or "", attempt)
                if resp.status_code in (401, 403):
                    raise AuthFailure(f"HTTP {resp.status_code}: {resp.text[:200]}")
                if resp.status_code not in RETRY_STATUS:
                    raise RequestRejected(f"HTTP {resp.status_code}: {resp.text[:200]}")
                last = resp
                log.warning("attempt %d: HTTP %d", attempt, resp.status_code)
            if attempt < cfg.max_attempts:
                self._sleep(self._delay(attempt, last))
        if transport_failures == cfg.max_attempts:
            raise EndpointUnreachable(f"{cfg.base_url}: {last}")
        raise ExhaustedRetries(f"gave up after {cfg.max_attempts} attempts (last: {last})")

    def _delay(self, attempt, last) -> float:
        if isinstance(last, httpx.Response):
            retry_after = last.headers.get("retry-after")
            if retry_after:
                try:
                    return min(self.config.backoff_max, float(retry_after))
                except ValueError:
                    pass
        return self.config.backoff(attempt)


def lm_responder(config: LMEndpointConfig, rendered_prompt: RenderedPrompt, **client_kwargs) -> str:
    """Send one prompt and return the assistant text."""
    with ChatClient(config, **client_kwargs) as client:
        return client.complete(rendered_prompt.text).text


@dataclass(frozen=True)
class Failure:
    set_id: str
    query: object
    error: str
    message: str

    def record(self) -> dict:
        return {"set_id": self.set_id, "query": self.query, "error": self.error, "message": self.message}


def collect(client: ChatClient, prompts: Iterable[RenderedPrompt], responder_name: str,
            parser: ResponseParser | None = None,
            on_result: Callable[[object], None] | None = None) -> tuple[list[Judgment], list[Failure]]:
    """Query every prompt with at most ``max_concurrent_requests`` in flight.

    Per-pair failures are returned, not raised. Results come back sorted by
    (set_id, query) regardless of completion order.
    """
    parse = parser or parse_response
    prompts = list(prompts)

    def one(p: RenderedPrompt):
        try:
            c = client.complete(p.text)
        except LMError as exc:
            return Failure(p.set_id, p.query, type(exc).__name__, str(exc))
        return Judgment(responder_name, p.set_id, p.query, parse(c.text), c.text, c.attempts)

    judgments, failures = [], []
    with ThreadPoolExecutor(max_workers=client.config.max_concurrent_requests) as pool:
        for result in pool.map(one, prompts):
            if on_result is not None:
                on_result(result)
            (failures if isinstance(result, Failure) else judgments).append(result)
    judgments.sort(key=lambda j: (j.set_id, str(j.query)))
    failures.sort(key=lambda f: (f.set_id, str(f.query)))
    return judgments, failures
