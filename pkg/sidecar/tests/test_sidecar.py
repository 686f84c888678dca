"""Sidecar contract tests against a really-running HTTP server.

Includes the end-to-end acceptance check that drives the primary package's
remote embedding provider against this service.
"""

from __future__ import annotations

import socket
import threading
import time
from base64 import b64encode

import numpy as np
import pytest
import requests
import uvicorn

from trustsr_sidecar import SidecarConfig, create_app


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture(scope="module")
def sidecar_url():
    port = _free_port()
    config = SidecarConfig(port=port, max_image_bytes=256 * 1024)
    server = uvicorn.Server(
        uvicorn.Config(create_app(config), host="127.0.0.1", port=port,
                       log_level="error")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    url = f"http://127.0.0.1:{port}"
    deadline = time.monotonic() + 15
    while time.monotonic() < deadline:
        try:
            if requests.get(f"{url}/health", timeout=1).status_code == 200:
                break
        except requests.RequestException:
            time.sleep(0.05)
    else:
        raise RuntimeError("sidecar did not come up")
    yield url
    server.should_exit = True
    thread.join(timeout=10)


def _png_b64(seed: int = 0, side: int = 48) -> str:
    import cv2

    rng = np.random.default_rng(seed)
    arr = (rng.random((side, side, 3)) * 255).astype(np.uint8)
    ok, buf = cv2.imencode(".png", arr)
    assert ok
    return b64encode(buf.tobytes()).decode("ascii")


def _embed(url: str, image_b64: str) -> requests.Response:
    return requests.post(
        f"{url}/embed", json={"image_b64": image_b64, "format": "png"}, timeout=10
    )


class TestWireContract:
    def test_valid_png_gets_dim_consistent_vector(self, sidecar_url):
        health = requests.get(f"{sidecar_url}/health", timeout=5).json()
        resp = _embed(sidecar_url, _png_b64(1))
        assert resp.status_code == 200
        doc = resp.json()
        assert doc["provider_id"] == health["provider_id"]
        assert doc["dim"] == health["dim"] == len(doc["vector"])

    def test_distinct_images_distinct_vectors(self, sidecar_url):
        a = np.asarray(_embed(sidecar_url, _png_b64(1)).json()["vector"])
        b = np.asarray(_embed(sidecar_url, _png_b64(2)).json()["vector"])
        assert not np.allclose(a, b)

    def test_truncated_base64_is_400(self, sidecar_url):
        resp = _embed(sidecar_url, _png_b64(1)[:-3] + "!!")
        assert resp.status_code == 400
        assert "error" in resp.json()

    def test_missing_field_is_400(self, sidecar_url):
        resp = requests.post(f"{sidecar_url}/embed", json={"format": "png"}, timeout=5)
        assert resp.status_code == 400
        assert "error" in resp.json()

    def test_wrong_format_is_400(self, sidecar_url):
        resp = requests.post(
            f"{sidecar_url}/embed",
            json={"image_b64": _png_b64(1), "format": "jpeg"},
            timeout=5,
        )
        assert resp.status_code == 400

    def test_non_image_payload_is_400(self, sidecar_url):
        resp = _embed(sidecar_url, b64encode(b"not a png at all").decode())
        assert resp.status_code == 400

    def test_oversize_is_413(self, sidecar_url):
        resp = _embed(sidecar_url, _png_b64(3, side=640))
        assert resp.status_code == 413
        assert "error" in resp.json()


class TestAcceptance:
    def test_sidecar_contract(self, sidecar_url):
        # determinism: repeated embeddings of identical bytes
        payload = _png_b64(7)
        first = np.asarray(_embed(sidecar_url, payload).json()["vector"])
        for _ in range(3):
            again = np.asarray(_embed(sidecar_url, payload).json()["vector"])
            assert np.abs(again - first).max() < 1e-6

        # health dim equals every response's vector length
        health = requests.get(f"{sidecar_url}/health", timeout=5).json()
        for seed in (1, 2, 3):
            doc = _embed(sidecar_url, _png_b64(seed)).json()
            assert doc["dim"] == health["dim"] == len(doc["vector"])

        # end-to-end through the primary package's remote provider
        from trustsr.embedding import cosine_similarity, remote_provider
        from trustsr.image import Image

        provider = remote_provider(sidecar_url, timeout=10.0)
        rng = np.random.default_rng(4)
        image = Image(rng.random((48, 48, 3)))
        self_similarity = cosine_similarity(provider.embed(image), provider.embed(image))
        assert abs(self_similarity - 1.0) < 1e-6
        print(
            "\n[ACCEPTANCE] sidecar contract (determinism, dim consistency, "
            f"S_CLIP(x,x)={self_similarity:.9f}): PASS"
        )
