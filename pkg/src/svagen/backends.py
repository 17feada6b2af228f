"""Chat-completion backends behind one minimal contract.

Agents only ever see `complete(messages) -> text`. The scripted backend
replays canned responses for offline runs and tests; the HTTP backend talks
to any OpenAI-style chat-completions endpoint.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from typing import Protocol

Message = dict[str, str]  # {"role": "system"|"user", "content": str}


class BackendError(RuntimeError):
    """The backend could not produce a response."""


class ChatBackend(Protocol):
    supports_files: bool
    supports_images: bool

    def complete(self, messages: list[Message]) -> str: ...


@dataclass
class ScriptEntry:
    response: str
    match: str | None = None  # substring the prompt must contain, if set


class ScriptedBackend:
    """Deterministic replay backend.

    Responses are consumed in order; an entry with a `match` substring is
    only eligible when the rendered prompt contains it, which lets one
    script serve interleaved per-signal calls. Raises BackendError when no
    entry is eligible (script exhausted or mismatched).
    """

    supports_files = False
    supports_images = False

    def __init__(self, entries: list[ScriptEntry]) -> None:
        self._entries = list(entries)
        self._lock = threading.Lock()
        self.calls = 0

    @classmethod
    def from_responses(cls, responses: list[str]) -> ScriptedBackend:
        return cls([ScriptEntry(response=r) for r in responses])

    @classmethod
    def from_file(cls, path: str) -> ScriptedBackend:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
        entries = [ScriptEntry(response=e["response"], match=e.get("match")) for e in raw]
        return cls(entries)

    def remaining(self) -> int:
        return len(self._entries)

    def complete(self, messages: list[Message]) -> str:
        prompt_text = "\n".join(m["content"] for m in messages)
        with self._lock:
            self.calls += 1
            for i, entry in enumerate(self._entries):
                if entry.match is None or entry.match in prompt_text:
                    self._entries.pop(i)
                    return entry.response
        raise BackendError(
            "scripted backend exhausted: no canned response matches the prompt"
        )


@dataclass
class HttpBackendConfig:
    endpoint: str
    model: str
    api_key_env: str = "SVAGEN_API_KEY"
    timeout_s: float = 120.0
    temperature: float | None = None
    supports_images: bool = False


class HttpChatBackend:
    """OpenAI-style chat-completions client.

    The API key is read from the environment variable named in the config;
    it never appears in config files. Request body: {model, messages[,
    temperature]}; response: choices[0].message.content.
    """

    supports_files = False

    def __init__(self, config: HttpBackendConfig, session=None) -> None:
        self.config = config
        self.supports_images = config.supports_images
        if session is None:
            import requests

            session = requests.Session()
        self._session = session

    def complete(self, messages: list[Message]) -> str:
        key = os.environ.get(self.config.api_key_env, "")
        if not key:
            raise BackendError(
                f"API key environment variable {self.config.api_key_env} is not set"
            )
        body: dict = {"model": self.config.model, "messages": messages}
        if self.config.temperature is not None:
            body["temperature"] = self.config.temperature
        try:
            resp = self._session.post(
                self.config.endpoint,
                json=body,
                headers={"Authorization": f"Bearer {key}"},
                timeout=self.config.timeout_s,
            )
        except Exception as err:  # connection errors, timeouts
            raise BackendError(f"chat completion request failed: {err}") from err
        if resp.status_code != 200:
            raise BackendError(
                f"chat completion request returned HTTP {resp.status_code}"
            )
        try:
            text = resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as err:
            raise BackendError(f"malformed chat completion response: {err}") from err
        if not isinstance(text, str) or not text:
            raise BackendError("chat completion response carried no text")
        return text
