"""FastAPI application implementing the /embed wire contract.

``POST /embed`` takes ``{"image_b64": str, "format": "png"}`` and returns
``{"provider_id": str, "dim": int, "vector": [float, ...]}``.  Malformed
bodies get 400, oversize payloads 413, inference failures 500, always with
an ``{"error": str}`` body.  ``GET /health`` reports the provider id and
dimension, which stay constant for the process lifetime.
"""

from __future__ import annotations

import binascii
from base64 import b64decode
from dataclasses import dataclass

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .encoder import ImageDecodeError, build_encoder

DEFAULT_MAX_IMAGE_BYTES = 32 * 1024 * 1024


@dataclass(frozen=True)
class SidecarConfig:
    model: str = "hashed"
    dim: int = 512
    host: str = "127.0.0.1"
    port: int = 8750
    max_image_bytes: int = DEFAULT_MAX_IMAGE_BYTES


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def create_app(config: SidecarConfig | None = None) -> FastAPI:
    config = config or SidecarConfig()
    encoder = build_encoder(config.model, dim=config.dim)
    app = FastAPI(title="trustsr embedding sidecar")

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return _error(400, f"malformed request body: {exc.errors()[:1]}")

    @app.get("/health")
    def health() -> dict:
        return {"provider_id": encoder.model_id, "dim": encoder.dim}

    @app.post("/embed")
    async def embed(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error(400, "request body is not valid JSON")
        if not isinstance(body, dict) or "image_b64" not in body:
            return _error(400, "request body needs an 'image_b64' field")
        image_format = body.get("format", "png")
        if image_format != "png":
            return _error(400, f"unsupported format {image_format!r}")
        image_b64 = body["image_b64"]
        if not isinstance(image_b64, str):
            return _error(400, "'image_b64' must be a base64 string")
        if len(image_b64) * 3 // 4 > config.max_image_bytes:
            return _error(413, f"image exceeds {config.max_image_bytes} bytes")
        try:
            png_bytes = b64decode(image_b64, validate=True)
        except (binascii.Error, ValueError):
            return _error(400, "'image_b64' is not valid base64")
        if len(png_bytes) > config.max_image_bytes:
            return _error(413, f"image exceeds {config.max_image_bytes} bytes")
        try:
            vector = encoder.encode(png_bytes)
        except ImageDecodeError as exc:
            return _error(400, str(exc))
        except Exception as exc:  # inference failure
            return _error(500, f"embedding failed: {exc}")
        return {
            "provider_id": encoder.model_id,
            "dim": encoder.dim,
            "vector": vector.tolist(),
        }

    return app
