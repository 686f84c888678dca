"""Image-embedding providers and cosine similarity.

The semantic component of the trustworthiness score only needs *some*
deterministic image encoder behind a uniform interface.  This module
provides the interface, a seeded offline provider for hermetic tests, an
HTTP client for a real encoder sidecar, and a content-addressed disk cache
that can wrap either.
"""

from __future__ import annotations

import math
import logging
import os
import re
import struct
import tempfile
import time
from base64 import b64encode
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, runtime_checkable

import cv2
import numpy as np
import requests

from . import errors
from .image import Image, content_hash, encode_png, to_grayscale

log = logging.getLogger(__name__)

CACHE_MAGIC = b"TSREMB01"
_FINGERPRINT_SIDE = 16
_RETRIES = 3
_BACKOFF_BASE = 0.25  # seconds


@dataclass(frozen=True)
class Embedding:
    """A fixed-dimension feature vector from one provider."""

    vector: np.ndarray
    provider_id: str

    def __post_init__(self) -> None:
        vec = np.asarray(self.vector, dtype=np.float64).ravel()
        if vec.size < 1:
            raise errors.DimensionMismatch("embedding vector is empty")
        if not np.all(np.isfinite(vec)):
            raise errors.EmbeddingError("embedding vector contains non-finite values")
        vec.setflags(write=False)
        object.__setattr__(self, "vector", vec)

    @property
    def dim(self) -> int:
        return int(self.vector.size)


@runtime_checkable
class EmbeddingProvider(Protocol):
    """Deterministic image-to-vector map, safe under concurrent calls."""

    provider_id: str

    def embed(self, image: Image) -> Embedding: ...


def cosine_similarity(a: Embedding, b: Embedding) -> float:
    """Cosine of the angle between two embeddings, clamped to [-1, 1].

    The norm product is evaluated as sqrt(dot(a,a) * dot(b,b)) so that
    identical vectors yield exactly 1.0.
    """
    if a.dim != b.dim:
        raise errors.DimensionMismatch(f"dims differ: {a.dim} vs {b.dim}")
    naa = float(np.dot(a.vector, a.vector))
    nbb = float(np.dot(b.vector, b.vector))
    if naa == 0.0 or nbb == 0.0:
        raise errors.ZeroVector("cosine similarity undefined for zero vectors")
    value = float(np.dot(a.vector, b.vector) / math.sqrt(naa * nbb))
    return min(1.0, max(-1.0, value))


class MockEmbeddingProvider:
    """Seeded offline provider for tests and dry runs.

    The image is reduced to a 16x16 area-averaged luminance fingerprint and
    expanded through a fixed random affine map, so identical images embed
    identically and small pixel perturbations move the vector proportionally.
    The affine bias keeps the vector away from zero even for constant images.
    """

    def __init__(self, dim: int = 64, seed: int = 0):
        if dim < 2:
            raise ValueError("mock provider needs dim >= 2")
        self.provider_id = f"mock-d{dim}-s{seed}"
        self.dim = dim
        self.seed = seed
        rng = np.random.default_rng(seed)
        n = _FINGERPRINT_SIDE * _FINGERPRINT_SIDE + 1
        self._projection = rng.standard_normal((dim, n)) / np.sqrt(n)

    def embed(self, image: Image) -> Embedding:
        plane = to_grayscale(image).plane()
        finger = cv2.resize(
            plane,
            (_FINGERPRINT_SIDE, _FINGERPRINT_SIDE),
            interpolation=cv2.INTER_AREA,
        )
        x = np.append(finger.ravel() - 0.5, 1.0)
        return Embedding(self._projection @ x, self.provider_id)


def mock_provider(dim: int = 64, seed: int = 0) -> MockEmbeddingProvider:
    return MockEmbeddingProvider(dim=dim, seed=seed)


class RemoteEmbeddingProvider:
    """Client for the ``POST /embed`` wire contract of an encoder sidecar.

    Fetches ``GET /health`` once at construction to learn the provider id
    and dimension, then posts canonical PNG bytes per image.  Transient
    failures (connection errors, timeouts, 5xx) are retried up to three
    times with exponential backoff.
    """

    def __init__(self, endpoint: str, timeout: float = 10.0):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        health = self._request("get", f"{self.endpoint}/health")
        try:
            self.provider_id = str(health["provider_id"])
            self.dim = int(health["dim"])
        except (KeyError, TypeError, ValueError) as exc:
            raise errors.ProtocolError(f"malformed /health response: {health!r}") from exc

    def _request(self, method: str, url: str, payload: dict | None = None) -> dict:
        last: Exception | None = None
        for attempt in range(_RETRIES):
            if attempt:
                time.sleep(_BACKOFF_BASE * 2 ** (attempt - 1))
            try:
                resp = requests.request(method, url, json=payload, timeout=self.timeout)
            except requests.Timeout as exc:
                last = errors.TimeoutError(f"{url}: timed out after {self.timeout}s")
                last.__cause__ = exc
                continue
            except requests.RequestException as exc:
                last = errors.NetworkError(f"{url}: {exc}")
                last.__cause__ = exc
                continue
            if resp.status_code >= 500:
                last = errors.NetworkError(f"{url}: server error {resp.status_code}")
                continue
            if resp.status_code != 200:
                try:
                    detail = resp.json().get("error", resp.text)
                except ValueError:
                    detail = resp.text
                raise errors.ProtocolError(f"{url}: HTTP {resp.status_code}: {detail}")
            try:
                return resp.json()
            except ValueError as exc:
                raise errors.ProtocolError(f"{url}: response is not JSON") from exc
        assert last is not None
        raise last

    def embed(self, image: Image) -> Embedding:
        payload = {
            "image_b64": b64encode(encode_png(image)).decode("ascii"),
            "format": "png",
        }
        doc = self._request("post", f"{self.endpoint}/embed", payload)
        try:
            provider_id = str(doc["provider_id"])
            dim = int(doc["dim"])
            vector = np.asarray(doc["vector"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise errors.ProtocolError(f"malformed /embed response: {doc!r}") from exc
        if vector.ndim != 1 or vector.size != dim:
            raise errors.ProtocolError(
                f"vector length {vector.size} does not match declared dim {dim}"
            )
        if dim != self.dim:
            raise errors.ProtocolError(
                f"dim changed across calls: health said {self.dim}, got {dim}"
            )
        return Embedding(vector, provider_id)


def remote_provider(endpoint: str, timeout: float = 10.0) -> RemoteEmbeddingProvider:
    return RemoteEmbeddingProvider(endpoint, timeout=timeout)


class CachedEmbeddingProvider:
    """Content-addressed disk cache around another provider.

    Keys combine the inner provider id with the hash of the image's
    canonical PNG bytes.  Entries are little-endian float32 vectors behind
    an 8-byte magic and a 32-bit dimension; vectors returned on a miss are
    rounded to float32 first so hits and misses are bit-identical.  Cache
    write failures degrade to pass-through with a logged warning.
    """

    def __init__(self, inner: EmbeddingProvider, cache_dir: str | Path):
        self.inner = inner
        self.provider_id = inner.provider_id
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self._prefix = re.sub(r"[^A-Za-z0-9._-]+", "_", inner.provider_id)

    def _entry_path(self, image: Image) -> Path:
        return self.cache_dir / f"{self._prefix}-{content_hash(image)}.emb"

    def _read(self, path: Path) -> np.ndarray | None:
        try:
            blob = path.read_bytes()
        except FileNotFoundError:
            return None
        except OSError as exc:
            log.warning("embedding cache read failed for %s: %s", path, exc)
            return None
        if len(blob) < 12 or blob[:8] != CACHE_MAGIC:
            log.warning("embedding cache entry %s is corrupt; recomputing", path)
            return None
        (dim,) = struct.unpack("<I", blob[8:12])
        payload = blob[12:]
        if len(payload) != 4 * dim:
            log.warning("embedding cache entry %s is truncated; recomputing", path)
            return None
        return np.frombuffer(payload, dtype="<f4").astype(np.float64)

    def _write(self, path: Path, vector: np.ndarray) -> None:
        blob = CACHE_MAGIC + struct.pack("<I", vector.size)
        blob += vector.astype("<f4").tobytes()
        try:
            fd, tmp = tempfile.mkstemp(dir=self.cache_dir, suffix=".tmp")
            with os.fdopen(fd, "wb") as fh:
                fh.write(blob)
            os.replace(tmp, path)
        except OSError as exc:
            log.warning("embedding cache write failed for %s: %s", path, exc)

    def embed(self, image: Image) -> Embedding:
        path = self._entry_path(image)
        vector = self._read(path)
        if vector is None:
            fresh = self.inner.embed(image)
            # Round through the storage precision so a later cache hit
            # returns exactly what this call returns.
            vector = fresh.vector.astype(np.float32).astype(np.float64)
            self._write(path, vector)
        return Embedding(vector, self.provider_id)


def cached(inner: EmbeddingProvider, cache_dir: str | Path) -> CachedEmbeddingProvider:
    return CachedEmbeddingProvider(inner, cache_dir)
