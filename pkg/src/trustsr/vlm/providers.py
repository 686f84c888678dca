"""VLM provider interface, scripted/replay providers, and traffic recording.

All provider traffic can be recorded to a JSON-lines replay log keyed by a
content hash of the request, and replayed later without any network.  Tests
run exclusively from scripts or replays.
"""

from __future__ import annotations

import hashlib
import json
import re
import os
import time
from base64 import b64encode
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol, Sequence, runtime_checkable

import requests

from ..errors import (
    ConfigError,
    FormatError,
    IoError,
    NetworkError,
    ProtocolError,
    ProviderError,
    TimeoutError,
)
from ..image import Image, content_hash, encode_png

DEFAULT_MAX_IN_FLIGHT = 4
_RETRIES = 3
_BACKOFF_BASE = 0.25  # seconds


@runtime_checkable
class VlmProvider(Protocol):
    """Answers one natural-language prompt about a batch of images."""

    provider_id: str
    max_in_flight: int

    def ask(self, images: Sequence[Image], prompt: str) -> str: ...


def request_key(provider_id: str, prompt: str, images: Sequence[Image]) -> str:
    """Content hash identifying one (provider, prompt, image batch) request."""
    h = hashlib.sha256()
    h.update(provider_id.encode())
    h.update(b"\x00")
    h.update(prompt.encode())
    for img in images:
        h.update(b"\x00")
        h.update(content_hash(img).encode())
    return h.hexdigest()


@dataclass
class ScriptedVlmProvider:
    """Test double driven by a plain function of (images, prompt)."""

    provider_id: str
    script: Callable[[Sequence[Image], str], str]
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT

    def ask(self, images: Sequence[Image], prompt: str) -> str:
        return self.script(images, prompt)


class RecordingVlmProvider:
    """Wraps a live provider and appends every exchange to a replay log."""

    def __init__(self, inner: VlmProvider, log_path: str | Path):
        self.inner = inner
        self.provider_id = inner.provider_id
        self.max_in_flight = inner.max_in_flight
        self.log_path = Path(log_path)
        self.log_path.parent.mkdir(parents=True, exist_ok=True)

    def ask(self, images: Sequence[Image], prompt: str) -> str:
        response = self.inner.ask(images, prompt)
        entry = {
            "key": request_key(self.provider_id, prompt, images),
            "provider_id": self.provider_id,
            "prompt": prompt,
            "image_hashes": [content_hash(img) for img in images],
            "response": response,
            "timestamp": time.time(),
        }
        with self.log_path.open("a") as fh:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
        return response


class ReplayVlmProvider:
    """Serves recorded responses; any unseen request is an error.

    ``provider_id`` must match the id used during recording, because it is
    part of the request key.
    """

    def __init__(self, provider_id: str, log_path: str | Path,
                 max_in_flight: int = DEFAULT_MAX_IN_FLIGHT):
        self.provider_id = provider_id
        self.max_in_flight = max_in_flight
        self.log_path = Path(log_path)
        self._responses: dict[str, str] = {}
        try:
            text = self.log_path.read_text()
        except OSError as exc:
            raise IoError(f"cannot read replay log {self.log_path}: {exc}") from exc
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                entry = json.loads(line)
                self._responses[entry["key"]] = entry["response"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise FormatError(
                    f"{self.log_path}:{lineno}: malformed replay entry: {exc}"
                ) from exc

    def __len__(self) -> int:
        return len(self._responses)

    def ask(self, images: Sequence[Image], prompt: str) -> str:
        key = request_key(self.provider_id, prompt, images)
        try:
            return self._responses[key]
        except KeyError:
            raise ProviderError(
                f"replay log {self.log_path} has no response for provider "
                f"{self.provider_id!r}, prompt {prompt!r} ({len(images)} images)"
            ) from None


class HttpVlmProvider:
    """Generic JSON-over-HTTP provider client.

    Posts ``{"model": ..., "prompt": ..., "images_b64": [...]}`` to the
    configured endpoint and expects ``{"text": ...}`` back.  Credentials are
    read from the environment variable named in the provider config and sent
    as a bearer token; retries follow the same transient-failure policy as
    the embedding client.
    """

    def __init__(
        self,
        provider_id: str,
        endpoint: str,
        model: str = "",
        auth_env: str | None = None,
        timeout: float = 60.0,
        max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
    ):
        self.provider_id = provider_id
        self.endpoint = endpoint
        self.model = model
        self.timeout = timeout
        self.max_in_flight = max_in_flight
        self._headers = {}
        if auth_env:
            token = os.environ.get(auth_env)
            if not token:
                raise ConfigError(
                    f"provider {provider_id!r} needs credentials in ${auth_env}"
                )
            self._headers["Authorization"] = f"Bearer {token}"

    def ask(self, images: Sequence[Image], prompt: str) -> str:
        payload = {
            "model": self.model,
            "prompt": prompt,
            "images_b64": [b64encode(encode_png(img)).decode("ascii") for img in images],
        }
        last: Exception | None = None
        for attempt in range(_RETRIES):
            if attempt:
                time.sleep(_BACKOFF_BASE * 2 ** (attempt - 1))
            try:
                resp = requests.post(
                    self.endpoint, json=payload, headers=self._headers,
                    timeout=self.timeout,
                )
            except requests.Timeout as exc:
                last = TimeoutError(f"{self.endpoint}: timed out")
                last.__cause__ = exc
                continue
            except requests.RequestException as exc:
                last = NetworkError(f"{self.endpoint}: {exc}")
                last.__cause__ = exc
                continue
            if resp.status_code >= 500:
                last = NetworkError(f"{self.endpoint}: server error {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise ProtocolError(
                    f"{self.endpoint}: HTTP {resp.status_code}: {resp.text[:200]}"
                )
            try:
                return str(resp.json()["text"])
            except (ValueError, KeyError, TypeError) as exc:
                raise ProtocolError(
                    f"{self.endpoint}: response missing 'text' field"
                ) from exc
        assert last is not None
        raise last


def load_provider_config(path: str | Path) -> HttpVlmProvider:
    """Build an HTTP provider from its JSON config file.

    Config schema: ``{"provider_id": str, "endpoint": URL, "model": str,
    "auth_env": str}``.  API keys are only ever read from the named
    environment variable, never from the file.
    """
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except OSError as exc:
        raise IoError(f"cannot read provider config {p}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"provider config {p} is not valid JSON: {exc}") from exc
    try:
        provider_id = str(doc["provider_id"])
        endpoint = str(doc["endpoint"])
    except KeyError as exc:
        raise FormatError(f"provider config {p} missing key {exc}") from exc
    auth_env = doc.get("auth_env")
    if auth_env is None:
        # conventional credential variable; only used when actually set
        candidate = "TRUSTSR_API_KEY_" + re.sub(r"[^A-Za-z0-9]+", "_", provider_id).upper()
        if candidate in os.environ:
            auth_env = candidate
    return HttpVlmProvider(
        provider_id=provider_id,
        endpoint=endpoint,
        model=str(doc.get("model", "")),
        auth_env=auth_env,
    )
