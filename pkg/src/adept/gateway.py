"""Uniform text-generation interface with strict budget accounting.

One gateway fronts either a remote OpenAI-compatible chat endpoint or a
deterministic offline backend.  Every issued completion charges the ledger
exactly once; transport retries never do.
"""

from __future__ import annotations

import hashlib
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .errors import BudgetExhausted, FixtureMissing, ProviderError

log = logging.getLogger(__name__)

PHASES = ("cold_start", "mutation", "crossover", "repair", "role_analysis")

ENV_BASE_URL = "ADEPT_LLM_BASE_URL"
ENV_MODEL = "ADEPT_LLM_MODEL"
ENV_API_KEY = "ADEPT_LLM_API_KEY"


def prompt_key(prompt: str) -> str:
    return hashlib.sha256(prompt.encode()).hexdigest()[:12]


@dataclass
class GenerationRequest:
    prompt: str
    template_tag: str
    phase: str = "mutation"
    temperature: float = 0.8
    max_tokens: int = 4096


@dataclass
class GenerationResponse:
    text: str
    latency_s: float = 0.0
    prompt_tokens: int | None = None
    completion_tokens: int | None = None
    provider: str = "mock"


class BudgetLedger:
    """Monotone call counter with per-phase tallies; thread-safe."""

    def __init__(self, limit: int = 500, used: int = 0, by_phase: dict[str, int] | None = None):
        self.limit = limit
        self.used = used
        self.by_phase: dict[str, int] = {p: 0 for p in PHASES}
        if by_phase:
            self.by_phase.update(by_phase)
        self._lock = threading.Lock()

    def charge(self, phase: str) -> None:
        if phase not in self.by_phase:
            raise ValueError(f"unknown budget phase {phase!r}")
        with self._lock:
            if self.used >= self.limit:
                raise BudgetExhausted(f"llm call budget of {self.limit} exhausted")
            self.used += 1
            self.by_phase[phase] += 1

    def remaining(self) -> int:
        return self.limit - self.used

    def snapshot(self) -> dict:
        return {"limit": self.limit, "used": self.used, "by_phase": dict(self.by_phase)}

    @classmethod
    def restore(cls, doc: dict) -> "BudgetLedger":
        return cls(limit=doc["limit"], used=doc["used"], by_phase=doc["by_phase"])


class MockBackend:
    """Deterministic offline backend.

    Exactly one source of responses is used, in priority order:
      * ``responder``: callable ``(GenerationRequest) -> str`` (stateless,
        resume-safe);
      * ``scenario``: ordered list of response texts, consumed sequentially
        (``start_index`` fast-forwards after a resume);
      * ``fixtures_dir``: files named ``<template_tag>__<hash12>.txt`` keyed
        by the prompt's stable hash.
    """

    def __init__(
        self,
        responder=None,
        scenario: list[str] | None = None,
        fixtures_dir: str | Path | None = None,
        start_index: int = 0,
    ):
        if responder is None and scenario is None and fixtures_dir is None:
            raise ValueError("mock backend needs a responder, scenario, or fixtures dir")
        self._responder = responder
        self._scenario = list(scenario) if scenario is not None else None
        self._index = start_index
        self._fixtures = Path(fixtures_dir) if fixtures_dir is not None else None

    def generate(self, request: GenerationRequest) -> GenerationResponse:
        if self._responder is not None:
            return GenerationResponse(text=self._responder(request))
        if self._scenario is not None:
            if self._index >= len(self._scenario):
                raise FixtureMissing(f"scenario exhausted after {self._index} responses")
            text = self._scenario[self._index]
            self._index += 1
            return GenerationResponse(text=text)
        name = f"{request.template_tag}__{prompt_key(request.prompt)}.txt"
        path = self._fixtures / name
        if not path.exists():
            raise FixtureMissing(f"no fixture {name} under {self._fixtures}")
        return GenerationResponse(text=path.read_text())

    @staticmethod
    def load_scenario(path: str | Path) -> list[str]:
        """Scenario manifest: one response per block, blocks separated by a
        line holding only ``===``."""
        raw = Path(path).read_text()
        return [block.strip("\n") for block in raw.split("\n===\n")]


class RemoteBackend:
    """OpenAI-compatible chat-completions client.

    Endpoint, model and key come from ``ADEPT_LLM_BASE_URL``,
    ``ADEPT_LLM_MODEL`` and ``ADEPT_LLM_API_KEY`` unless given explicitly.
    """

    def __init__(
        self,
        base_url: str | None = None,
        model: str | None = None,
        api_key: str | None = None,
        transport_retries: int = 3,
        timeout_s: float = 120.0,
        max_in_flight: int = 4,
    ):
        self.base_url = (base_url or os.environ.get(ENV_BASE_URL, "")).rstrip("/")
        self.model = model or os.environ.get(ENV_MODEL, "")
        self.api_key = api_key or os.environ.get(ENV_API_KEY, "")
        if not self.base_url or not self.model:
            raise ProviderError("remote backend requires a base URL and model name")
        self.transport_retries = transport_retries
        self.timeout_s = timeout_s
        self._gate = threading.Semaphore(max_in_flight)

    def generate(self, request: GenerationRequest) -> GenerationResponse:
        import requests

        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        url = f"{self.base_url}/chat/completions"
        last_error: Exception | None = None
        for attempt in range(self.transport_retries + 1):
            start = time.monotonic()
            try:
                with self._gate:
                    resp = requests.post(url, json=payload, headers=headers, timeout=self.timeout_s)
            except requests.RequestException as exc:
                last_error = exc
                log.warning("transport error (attempt %d): %s", attempt + 1, exc)
                time.sleep(min(2.0 * 2**attempt, 20.0))
                continue
            if resp.status_code >= 500:
                last_error = ProviderError(f"server error {resp.status_code}", resp.status_code)
                time.sleep(min(2.0 * 2**attempt, 20.0))
                continue
            if resp.status_code != 200:
                raise ProviderError(f"provider returned {resp.status_code}: {resp.text[:200]}", resp.status_code)
            doc = resp.json()
            text = doc["choices"][0]["message"]["content"]
            usage = doc.get("usage", {})
            if not text:
                raise ProviderError("provider returned an empty completion")
            return GenerationResponse(
                text=text,
                latency_s=time.monotonic() - start,
                prompt_tokens=usage.get("prompt_tokens"),
                completion_tokens=usage.get("completion_tokens"),
                provider=self.model,
            )
        raise ProviderError(f"transport failed after {self.transport_retries + 1} attempts: {last_error}")


@dataclass
class Gateway:
    """Backend plus ledger.  ``complete`` is the convenience most callers use."""

    backend: object
    ledger: BudgetLedger = field(default_factory=BudgetLedger)

    def generate(self, request: GenerationRequest) -> GenerationResponse:
        if self.ledger.remaining() <= 0:
            raise BudgetExhausted(f"llm call budget of {self.ledger.limit} exhausted")
        response = self.backend.generate(request)
        self.ledger.charge(request.phase)
        return response

    def complete(self, prompt: str, *, tag: str, phase: str, temperature: float = 0.8) -> str:
        return self.generate(
            GenerationRequest(prompt=prompt, template_tag=tag, phase=phase, temperature=temperature)
        ).text

    def remaining(self) -> int:
        return self.ledger.remaining()
