"""trustsr-sidecar: HTTP image-embedding service for the /embed contract."""

from .app import SidecarConfig, create_app
from .encoder import ClipEncoder, HashedFeatureEncoder, build_encoder

__version__ = "0.1.0"

__all__ = [
    "SidecarConfig",
    "create_app",
    "ClipEncoder",
    "HashedFeatureEncoder",
    "build_encoder",
]
