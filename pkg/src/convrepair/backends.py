"""Chat-completion backends: a real HTTP client and a deterministic scripted one.

The wire format mirrors the common chat-completions JSON shape (messages
array of {role, content}; response with choices[0].message.content plus
usage counts) so the HTTP backend is a drop-in for hosted endpoints.
"""
from __future__ import annotations

import json
import os
import time
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable

import requests

from .errors import (
    ContextOverflowError,
    RateLimitError,
    ScriptError,
    TransportError,
)


class ChatRole(str, Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class ChatMessage:
    role: ChatRole
    content: str

    def __post_init__(self) -> None:
        if not self.content:
            raise ValueError("message content must be non-empty")


@dataclass(frozen=True)
class TokenUsage:
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def __add__(self, other: "TokenUsage") -> "TokenUsage":
        return TokenUsage(
            self.prompt_tokens + other.prompt_tokens,
            self.completion_tokens + other.completion_tokens,
        )

    @property
    def total(self) -> int:
        return self.prompt_tokens + self.completion_tokens


def estimate_tokens(text: str) -> int:
    """Deterministic, approximate token count: ceil(utf-8 bytes / 4)."""
    return -(-len(text.encode("utf-8")) // 4)


@dataclass
class BackendConfig:
    kind: str = "scripted"
    model_name: str = "gpt-3.5-turbo-0301"
    temperature: float = 1.0
    endpoint: str = ""
    api_key_env: str = "CONVREPAIR_API_KEY"
    script_path: str | None = None
    max_context_tokens: int = 16384
    retries: int = 3
    seed: int = 0
    # Not stated by the upstream defaults; exposed but unvalidated.
    top_p: float = 1.0
    max_output_tokens: int = 512

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_context_tokens <= 0:
            raise ValueError("max_context_tokens must be > 0")


def _check_context(messages: list[ChatMessage], limit: int) -> int:
    total = sum(estimate_tokens(m.content) for m in messages)
    if total > limit:
        raise ContextOverflowError(
            f"conversation of ~{total} tokens exceeds context window of {limit}"
        )
    return total


DEFAULT_SCRIPT_REPLY = "I am unable to suggest a fix for this bug."


@dataclass(frozen=True)
class ScriptRule:
    turn: int | None
    contains: str | None
    reply: str

    def matches(self, turn: int, messages: list[ChatMessage]) -> bool:
        if self.turn is not None and self.turn != turn:
            return False
        if self.contains is not None:
            user_text = "\n".join(
                m.content for m in messages if m.role is ChatRole.USER
            )
            if self.contains not in user_text:
                return False
        return True


def _parse_rules(raw: object, source: str) -> list[ScriptRule]:
    if not isinstance(raw, list):
        raise ScriptError(f"{source}: script must be a JSON array of rules")
    rules = []
    for index, entry in enumerate(raw):
        if not isinstance(entry, dict) or "reply" not in entry:
            raise ScriptError(f"{source}: rule {index} must be an object with a 'reply'")
        match = entry.get("match", {})
        if not isinstance(match, dict):
            raise ScriptError(f"{source}: rule {index} has a non-object 'match'")
        turn = match.get("turn")
        contains = match.get("contains")
        if turn is not None and not isinstance(turn, int):
            raise ScriptError(f"{source}: rule {index} 'turn' must be an integer")
        if contains is not None and not isinstance(contains, str):
            raise ScriptError(f"{source}: rule {index} 'contains' must be a string")
        rules.append(ScriptRule(turn=turn, contains=contains, reply=str(entry["reply"])))
    return rules


class ScriptedBackend:
    """Deterministic test double: replies chosen by first-matching rule.

    ``turn`` counts queries within one session (one bug's repair); the
    counter is keyed per session id so concurrent repairs do not interfere.
    """

    def __init__(self, rules: list[ScriptRule], config: BackendConfig | None = None):
        self.rules = rules
        self.config = config or BackendConfig(kind="scripted")
        self._turns: defaultdict[str, int] = defaultdict(int)

    def complete(
        self, messages: list[ChatMessage], session_id: str = "default"
    ) -> tuple[ChatMessage, TokenUsage]:
        prompt_tokens = _check_context(messages, self.config.max_context_tokens)
        self._turns[session_id] += 1
        turn = self._turns[session_id]
        reply = DEFAULT_SCRIPT_REPLY
        for rule in self.rules:
            if rule.matches(turn, messages):
                reply = rule.reply
                break
        usage = TokenUsage(prompt_tokens, estimate_tokens(reply))
        return ChatMessage(ChatRole.ASSISTANT, reply), usage


def scripted_oracle(
    script: str | Path, config: BackendConfig | None = None
) -> ScriptedBackend:
    """Build a scripted backend from a JSON rule file."""
    script = Path(script)
    try:
        raw = json.loads(script.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ScriptError(f"cannot load script {script}: {exc}") from exc
    return ScriptedBackend(_parse_rules(raw, str(script)), config)


class HttpBackend:
    """Chat-completions HTTP client with retries and usage accounting.

    The API key is read only from the environment variable named in the
    config and is never logged or persisted.
    """

    def __init__(
        self,
        config: BackendConfig,
        session: requests.Session | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if not config.endpoint:
            raise ValueError("http backend requires an endpoint URL")
        self.config = config
        self._session = session or requests.Session()
        self._sleep = sleep

    def complete(
        self, messages: list[ChatMessage], session_id: str = "default"
    ) -> tuple[ChatMessage, TokenUsage]:
        cfg = self.config
        estimated = _check_context(messages, cfg.max_context_tokens)
        payload = {
            "model": cfg.model_name,
            "messages": [{"role": m.role.value, "content": m.content} for m in messages],
            "temperature": cfg.temperature,
            "top_p": cfg.top_p,
            "max_tokens": cfg.max_output_tokens,
        }
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(cfg.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"

        last_error: Exception | None = None
        rate_limited = False
        for attempt in range(cfg.retries):
            if attempt:
                self._sleep(2 ** (attempt - 1))
            try:
                resp = self._session.post(
                    cfg.endpoint, json=payload, headers=headers, timeout=120
                )
            except requests.RequestException as exc:
                last_error = exc
                continue
            if resp.status_code == 429:
                rate_limited = True
                last_error = RateLimitError("rate limited by backend")
                continue
            if resp.status_code >= 500:
                last_error = TransportError(f"server error HTTP {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise TransportError(f"HTTP {resp.status_code}: {resp.text[:500]}")
            return self._parse_response(resp.json(), estimated)
        if rate_limited:
            raise RateLimitError(f"giving up after {cfg.retries} attempts: {last_error}")
        raise TransportError(f"giving up after {cfg.retries} attempts: {last_error}")

    def _parse_response(
        self, body: dict, estimated_prompt: int
    ) -> tuple[ChatMessage, TokenUsage]:
        try:
            content = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed backend response: {exc}") from exc
        usage = body.get("usage") or {}
        # Backend-reported usage takes precedence over the heuristic counter.
        prompt = int(usage.get("prompt_tokens", estimated_prompt))
        completion = int(usage.get("completion_tokens", estimate_tokens(content)))
        return ChatMessage(ChatRole.ASSISTANT, content), TokenUsage(prompt, completion)


def make_backend(config: BackendConfig):
    if config.kind == "scripted":
        if not config.script_path:
            raise ScriptError("scripted backend requires script_path")
        return scripted_oracle(config.script_path, config)
    if config.kind == "http":
        return HttpBackend(config)
    raise ValueError(f"unknown backend kind {config.kind!r}")
