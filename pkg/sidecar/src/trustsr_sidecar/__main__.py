"""Launch the embedding sidecar: ``python -m trustsr_sidecar`` or ``trustsr-sidecar``."""

from __future__ import annotations

import argparse
import os

import uvicorn

from .app import DEFAULT_MAX_IMAGE_BYTES, SidecarConfig, create_app


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description="trustsr embedding sidecar")
    parser.add_argument("--host", default=os.environ.get("SIDECAR_HOST", "127.0.0.1"))
    parser.add_argument(
        "--port", type=int, default=int(os.environ.get("SIDECAR_PORT", "8750"))
    )
    parser.add_argument(
        "--model",
        default=os.environ.get("SIDECAR_MODEL", "hashed"),
        help="'hashed' (self-contained, deterministic) or a "
        "sentence-transformers CLIP model name",
    )
    parser.add_argument("--dim", type=int, default=512,
                        help="output dimension for the hashed backend")
    parser.add_argument("--max-image-bytes", type=int,
                        default=DEFAULT_MAX_IMAGE_BYTES)
    args = parser.parse_args(argv)
    config = SidecarConfig(
        model=args.model,
        dim=args.dim,
        host=args.host,
        port=args.port,
        max_image_bytes=args.max_image_bytes,
    )
    uvicorn.run(create_app(config), host=config.host, port=config.port,
                log_level="warning")


if __name__ == "__main__":
    main()
