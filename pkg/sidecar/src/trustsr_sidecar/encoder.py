"""Image encoders behind the sidecar.

Two backends share one interface (``model_id``, ``dim``, ``encode(png_bytes)``):

* ``hashed``: a self-contained deterministic encoder.  Block statistics and
  gradient histograms of the canonically preprocessed image are expanded
  through a fixed random projection.  No model weights, no downloads,
  bit-reproducible, which is what the contract actually demands.
* ``clip``: a real pretrained image encoder through sentence-transformers,
  available when that package and its weights are installed.

Both apply their own canonical preprocessing, so clients never need to know
about model-specific resizing.
"""

from __future__ import annotations

import numpy as np

_CROP_SIDE = 224
_GRID = 16
_HIST_BINS = 16
_PROJECTION_SEED = 90210


class ImageDecodeError(ValueError):
    """PNG bytes could not be decoded into pixels."""


def _decode_png(png_bytes: bytes) -> np.ndarray:
    import cv2

    buf = np.frombuffer(png_bytes, dtype=np.uint8)
    arr = cv2.imdecode(buf, cv2.IMREAD_UNCHANGED)
    if arr is None:
        raise ImageDecodeError("payload is not a decodable image")
    if arr.dtype == np.uint8:
        scale = 255.0
    elif arr.dtype == np.uint16:
        scale = 65535.0
    else:
        raise ImageDecodeError(f"unsupported sample type {arr.dtype}")
    data = arr.astype(np.float64) / scale
    if data.ndim == 2:
        data = np.stack([data] * 3, axis=-1)
    elif data.ndim == 3 and data.shape[2] >= 3:
        data = data[:, :, 2::-1]  # BGR(A) -> RGB, alpha dropped
    else:
        raise ImageDecodeError(f"unsupported channel layout {arr.shape}")
    return np.clip(data, 0.0, 1.0)


def _center_crop_224(data: np.ndarray) -> np.ndarray:
    """Aspect-preserving resize to a 224 short side, then center crop."""
    import cv2

    h, w = data.shape[:2]
    scale = _CROP_SIDE / min(h, w)
    new_w = max(_CROP_SIDE, int(round(w * scale)))
    new_h = max(_CROP_SIDE, int(round(h * scale)))
    interp = cv2.INTER_AREA if scale < 1 else cv2.INTER_LINEAR
    resized = cv2.resize(data, (new_w, new_h), interpolation=interp)
    top = (new_h - _CROP_SIDE) // 2
    left = (new_w - _CROP_SIDE) // 2
    return resized[top : top + _CROP_SIDE, left : left + _CROP_SIDE]


class HashedFeatureEncoder:
    """Deterministic stand-in for a learned image encoder.

    Features: 16x16 luminance block means, per-channel 4x4 block means, a
    gradient-magnitude histogram, and a bias term, expanded to ``dim``
    through a seeded Gaussian projection and L2-normalized.  Identical bytes
    embed bit-identically.
    """

    def __init__(self, dim: int = 512):
        if dim < 8:
            raise ValueError("dim must be >= 8")
        self.model_id = "hashed-v1"
        self.dim = dim
        n_features = _GRID * _GRID + 3 * 16 + _HIST_BINS + 1
        rng = np.random.default_rng(_PROJECTION_SEED)
        self._projection = rng.standard_normal((dim, n_features)) / np.sqrt(n_features)

    def _features(self, data: np.ndarray) -> np.ndarray:
        import cv2

        crop = _center_crop_224(data)
        gray = crop @ np.array([0.299, 0.587, 0.114])
        blocks = cv2.resize(gray, (_GRID, _GRID), interpolation=cv2.INTER_AREA)
        color = cv2.resize(crop, (4, 4), interpolation=cv2.INTER_AREA)
        gx = np.diff(gray, axis=1, prepend=gray[:, :1])
        gy = np.diff(gray, axis=0, prepend=gray[:1, :])
        magnitude = np.hypot(gx, gy)
        hist, _ = np.histogram(magnitude, bins=_HIST_BINS, range=(0.0, 1.5))
        hist = hist / magnitude.size
        return np.concatenate(
            [blocks.ravel() - 0.5, color.ravel() - 0.5, hist, [1.0]]
        )

    def encode(self, png_bytes: bytes) -> np.ndarray:
        vector = self._projection @ self._features(_decode_png(png_bytes))
        norm = float(np.linalg.norm(vector))
        if norm == 0.0:  # unreachable thanks to the bias term
            raise RuntimeError("encoder produced a zero vector")
        return vector / norm


class ClipEncoder:
    """Pretrained CLIP-class encoder via sentence-transformers (optional)."""

    def __init__(self, model_name: str = "clip-ViT-B-32"):
        from sentence_transformers import SentenceTransformer  # deferred, heavy

        self._model = SentenceTransformer(model_name)
        self.model_id = model_name
        probe = self.encode(_blank_png())
        self.dim = int(probe.size)

    def encode(self, png_bytes: bytes) -> np.ndarray:
        import io

        from PIL import Image as PilImage

        image = PilImage.open(io.BytesIO(png_bytes)).convert("RGB")
        return np.asarray(self._model.encode(image), dtype=np.float64)


def _blank_png() -> bytes:
    import cv2

    ok, buf = cv2.imencode(".png", np.zeros((8, 8, 3), dtype=np.uint8))
    assert ok
    return buf.tobytes()


def build_encoder(model: str = "hashed", dim: int = 512):
    """Instantiate an encoder backend by name."""
    if model == "hashed":
        return HashedFeatureEncoder(dim=dim)
    return ClipEncoder(model)
