"""Completion providers and structured-response parsing.

The gateway treats a provider as a plain text-in/text-out completion
function. Three implementations ship: a deterministic scripted provider for
offline tests (matcher/response pairs, optionally strict), an HTTP provider
for live chat/completion endpoints, and an instrumenting wrapper that
records every outbound payload so tests can assert nothing sequence-like
ever left the process.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import httpx

from .errors import (
    MissingKey,
    NoObjectFound,
    ProviderTimeout,
    ProviderTransport,
    ScriptMiss,
    StructuredParseError,
    UnparsableResponse,
    WrongValueShape,
)
from .prompts import PromptBundle


@dataclass(frozen=True)
class ProviderConfig:
    endpoint: str | None = None
    model: str | None = None
    timeout_seconds: float = 30.0
    max_retries: int = 0
    temperature: float = 0.0  # most deterministic setting by default

    def __post_init__(self):
        if self.timeout_seconds <= 0:
            raise ValueError("timeout must be > 0")
        if self.max_retries < 0:
            raise ValueError("max retries must be >= 0")


def config_from_env(env: dict[str, str] | None = None) -> ProviderConfig:
    e = env if env is not None else os.environ
    return ProviderConfig(
        endpoint=e.get("CRISPRFLOW_PROVIDER_URL"),
        model=e.get("CRISPRFLOW_PROVIDER_MODEL"),
        timeout_seconds=float(e.get("CRISPRFLOW_PROVIDER_TIMEOUT", "30")),
        max_retries=int(e.get("CRISPRFLOW_PROVIDER_RETRIES", "0")),
        temperature=float(e.get("CRISPRFLOW_PROVIDER_TEMPERATURE", "0")),
    )


class CompletionProvider(Protocol):
    def complete(self, prompt: str) -> str: ...


@dataclass(frozen=True)
class ScriptEntry:
    response: str
    contains: tuple[str, ...] = ()
    name: str | None = None

    def matches(self, prompt: str) -> bool:
        return all(needle in prompt for needle in self.contains)


class ScriptedProvider:
    """Canned responses selected by substring matchers over the prompt.

    Non-strict mode returns the first matching entry; strict mode requires
    exactly one entry to match. An unmatched prompt is always a
    :class:`ScriptMiss` (a provider cannot invent text).
    """

    def __init__(self, entries: list[ScriptEntry], strict: bool = False):
        self.entries = list(entries)
        self.strict = strict
        self.calls: list[str] = []
        self._lock = threading.Lock()

    @classmethod
    def from_pairs(cls, pairs: list[tuple[list[str] | str, str]], strict: bool = False) -> "ScriptedProvider":
        entries = []
        for matcher, response in pairs:
            contains = (matcher,) if isinstance(matcher, str) else tuple(matcher)
            entries.append(ScriptEntry(response=response, contains=contains))
        return cls(entries, strict=strict)

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedProvider":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if isinstance(data, list):
            strict, raw_entries = False, data
        else:
            strict = bool(data.get("strict", False))
            raw_entries = data.get("entries", [])
        entries = [
            ScriptEntry(
                response=item["response"],
                contains=tuple(item.get("contains", [])),
                name=item.get("name"),
            )
            for item in raw_entries
        ]
        return cls(entries, strict=strict)

    def complete(self, prompt: str) -> str:
        with self._lock:
            self.calls.append(prompt)
            matches = [e for e in self.entries if e.matches(prompt)]
            if self.strict and len(matches) > 1:
                names = [m.name or f"#{self.entries.index(m)}" for m in matches]
                raise ScriptMiss(f"strict script matched {len(matches)} entries: {names}")
            if not matches:
                head = prompt[:120].replace("\n", " ")
                raise ScriptMiss(f"no script entry matches prompt starting: {head!r}")
            return matches[0].response


class HttpProvider:
    """Chat/completion endpoint speaking the common messages JSON shape."""

    def __init__(self, config: ProviderConfig, api_key: str | None = None):
        if not config.endpoint:
            raise ValueError("HTTP provider needs an endpoint")
        self.config = config
        self.api_key = api_key if api_key is not None else os.environ.get("CRISPRFLOW_PROVIDER_KEY")

    def complete(self, prompt: str) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
        }
        try:
            response = httpx.post(
                self.config.endpoint,
                json=body,
                headers=headers,
                timeout=self.config.timeout_seconds,
            )
        except httpx.TimeoutException as exc:
            raise ProviderTimeout(str(exc)) from exc
        except httpx.HTTPError as exc:
            raise ProviderTransport(str(exc)) from exc
        if response.status_code >= 400:
            raise ProviderTransport(f"provider returned HTTP {response.status_code}")
        try:
            payload = response.json()
            return payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ProviderTransport(f"unexpected provider response shape: {exc}") from exc


class InstrumentedProvider:
    """Delegating wrapper that records every payload handed to the provider."""

    def __init__(self, inner: CompletionProvider, sink: list[str] | None = None):
        self.inner = inner
        self.payloads: list[str] = []
        self._sink = sink

    def complete(self, prompt: str) -> str:
        self.payloads.append(prompt)
        if self._sink is not None:
            self._sink.append(prompt)
        return self.inner.complete(prompt)


def complete(bundle: PromptBundle, provider: CompletionProvider, config: ProviderConfig | None = None) -> str:
    """Send a filter-clean bundle, retrying transport failures and timeouts."""
    cfg = config or ProviderConfig()
    attempts = cfg.max_retries + 1
    last: Exception | None = None
    for _ in range(attempts):
        try:
            return provider.complete(bundle.filled_text)
        except (ProviderTransport, ProviderTimeout) as exc:
            last = exc
    assert last is not None
    raise last


def parse_structured(raw: str, schema: set[str] | frozenset[str]) -> dict:
    """Extract the first JSON object in ``raw`` and check the required keys.

    Surrounding prose and code fences are ignored: parsing starts at each
    ``{`` until one position yields a valid object. Required keys must be
    present with string or list-of-string values.
    """
    decoder = json.JSONDecoder()
    obj = None
    pos = raw.find("{")
    while pos != -1:
        try:
            candidate, _ = decoder.raw_decode(raw, pos)
        except ValueError:
            pos = raw.find("{", pos + 1)
            continue
        if isinstance(candidate, dict):
            obj = candidate
            break
        pos = raw.find("{", pos + 1)
    if obj is None:
        raise NoObjectFound("no JSON object found in provider response")
    for key in sorted(schema):
        if key not in obj:
            raise MissingKey(key)
        value = obj[key]
        if isinstance(value, str):
            continue
        if isinstance(value, list) and all(isinstance(item, str) for item in value):
            continue
        raise WrongValueShape(f"key {key!r} must be a string or list of strings")
    return obj


_REPAIR_SUFFIX = (
    "\n\nYour previous response could not be parsed ({error}). "
    "Respond again with only the JSON object in the required response format."
)


def complete_structured(
    bundle: PromptBundle,
    schema: set[str] | frozenset[str],
    provider: CompletionProvider,
    config: ProviderConfig | None = None,
) -> dict:
    """complete() + parse, with a single repair reprompt on parse failure."""
    raw = complete(bundle, provider, config)
    try:
        return parse_structured(raw, schema)
    except StructuredParseError as first_error:
        repair = PromptBundle(
            template_id=f"{bundle.template_id}+repair",
            filled_text=bundle.filled_text + _REPAIR_SUFFIX.format(error=first_error),
            placeholders=bundle.placeholders,
        )
        raw = complete(repair, provider, config)
        try:
            return parse_structured(raw, schema)
        except StructuredParseError as second_error:
            raise UnparsableResponse(
                f"provider response unparsable after repair reprompt: {second_error}"
            ) from second_error
