"""Pixel-domain primitives: image values, I/O, grayscale, PSNR, ensembling, tiling.

Every image in this package is a height x width x channels array of float64
samples in [0, 1].  Conversion to and from integer pixel formats happens only
here, at the I/O boundary, so that all metric math runs on one numeric
convention.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from .errors import EmptyInput, FormatError, IoError, ShapeMismatch

#: BT.601 luma weights used for RGB -> grayscale reduction.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_PNM_MAGICS = (b"P5", b"P6")
# Fixed compression level keeps repeated encodes byte-identical.
_PNG_PARAMS = [cv2.IMWRITE_PNG_COMPRESSION, 6]
_RANGE_SLOP = 1e-9


class PerfectMatch:
    """Sentinel returned by :func:`psnr` when the two images are identical.

    Returned instead of ``inf`` so callers cannot accidentally feed a
    non-number into downstream arithmetic.
    """

    __slots__ = ()

    def __repr__(self) -> str:
        return "PerfectMatch"


PERFECT_MATCH = PerfectMatch()


@dataclass(frozen=True, eq=False)
class Image:
    """An immutable float image.

    ``data`` is a (height, width, channels) float64 array with every sample
    in [0, 1] and channels either 1 (grayscale) or 3 (RGB).  2-D input is
    promoted to a single-channel image.
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ShapeMismatch(
                f"expected (H, W, 1|3) image data, got shape {np.shape(self.data)}"
            )
        if arr.size == 0:
            raise ShapeMismatch("image has zero pixels")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image contains non-finite samples")
        lo, hi = float(arr.min()), float(arr.max())
        if lo < -_RANGE_SLOP or hi > 1.0 + _RANGE_SLOP:
            raise ValueError(f"image samples outside [0, 1]: min={lo}, max={hi}")
        if lo < 0.0 or hi > 1.0:
            arr = np.clip(arr, 0.0, 1.0)
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape  # type: ignore[return-value]

    def plane(self) -> np.ndarray:
        """The 2-D sample array of a single-channel image."""
        if self.channels != 1:
            raise ShapeMismatch(f"plane() needs 1 channel, image has {self.channels}")
        return self.data[:, :, 0]


def _require_same_shape(a: Image, b: Image, what: str) -> None:
    if a.shape != b.shape:
        raise ShapeMismatch(f"{what}: shapes differ, {a.shape} vs {b.shape}")


# --- file I/O -------------------------------------------------------------


def _sniff_format(path: Path) -> bytes:
    try:
        with path.open("rb") as fh:
            return fh.read(8)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def load_image(path: str | Path) -> Image:
    """Load an 8- or 16-bit PNG/PPM/PGM file as a float image in [0, 1].

    8-bit sample ``v`` maps to ``v / 255``; 16-bit to ``v / 65535``.  Other
    containers (JPEG in particular) and bit depths are rejected.
    """
    p = Path(path)
    head = _sniff_format(p)
    if not (head.startswith(_PNG_MAGIC) or head[:2] in _PNM_MAGICS):
        raise FormatError(f"{p}: not a PNG or binary PPM/PGM file")
    arr = cv2.imread(str(p), cv2.IMREAD_UNCHANGED)
    if arr is None:
        raise FormatError(f"{p}: could not decode image data")
    if arr.dtype == np.uint8:
        scale = 255.0
    elif arr.dtype == np.uint16:
        scale = 65535.0
    else:
        raise FormatError(f"{p}: unsupported sample type {arr.dtype}")
    if arr.ndim == 2:
        data = arr.astype(np.float64)[:, :, np.newaxis]
    elif arr.ndim == 3 and arr.shape[2] == 3:
        data = arr[:, :, ::-1].astype(np.float64)  # BGR -> RGB
    else:
        raise FormatError(f"{p}: unsupported channel layout {arr.shape}")
    return Image(np.clip(data / scale, 0.0, 1.0))


def _to_int_pixels(img: Image, bit_depth: int) -> np.ndarray:
    if bit_depth == 8:
        q = np.rint(img.data * 255.0).astype(np.uint8)
    elif bit_depth == 16:
        q = np.rint(img.data * 65535.0).astype(np.uint16)
    else:
        raise ValueError(f"bit_depth must be 8 or 16, got {bit_depth}")
    if img.channels == 3:
        return np.ascontiguousarray(q[:, :, ::-1])  # RGB -> BGR
    return q[:, :, 0]


def save_image(img: Image, path: str | Path, bit_depth: int = 8) -> None:
    """Write ``img`` as PNG or binary PPM/PGM, chosen by file extension."""
    p = Path(path)
    pixels = _to_int_pixels(img, bit_depth)
    params = _PNG_PARAMS if p.suffix.lower() == ".png" else []
    if not cv2.imwrite(str(p), pixels, params):
        raise IoError(f"could not write image to {p}")


def encode_png(img: Image, bit_depth: int = 16) -> bytes:
    """Deterministically encode ``img`` as PNG bytes.

    This is the canonical byte form of an image: it is what gets posted to
    embedding endpoints and what content hashes are computed over.
    """
    ok, buf = cv2.imencode(".png", _to_int_pixels(img, bit_depth), _PNG_PARAMS)
    if not ok:
        raise FormatError("PNG encoding failed")
    return buf.tobytes()


def content_hash(img: Image) -> str:
    """SHA-256 hex digest of the canonical PNG encoding of ``img``."""
    return hashlib.sha256(encode_png(img)).hexdigest()


# --- pixel operations -----------------------------------------------------


def to_grayscale(img: Image) -> Image:
    """Reduce an RGB image with BT.601 luma weights; grayscale passes through."""
    if img.channels == 1:
        return img
    w = np.asarray(LUMA_WEIGHTS)
    return Image(img.data @ w)


def psnr(a: Image, b: Image) -> float | PerfectMatch:
    """Peak signal-to-noise ratio in dB over all samples, peak value 1.0.

    Identical images have zero MSE, for which the :data:`PERFECT_MATCH`
    sentinel is returned rather than an infinite float.
    """
    _require_same_shape(a, b, "psnr")
    mse = float(np.mean((a.data - b.data) ** 2))
    if mse == 0.0:
        return PERFECT_MATCH
    return -10.0 * math.log10(mse)


def ensemble_average(candidates: list[Image]) -> Image:
    """Pixel-wise arithmetic mean of same-shape images."""
    if not candidates:
        raise EmptyInput("ensemble_average needs at least one image")
    first = candidates[0]
    for other in candidates[1:]:
        _require_same_shape(first, other, "ensemble_average")
    stack = np.stack([img.data for img in candidates])
    return Image(np.clip(stack.mean(axis=0), 0.0, 1.0))


def tile_mnist(digit: Image, repeats: int = 18, target: int = 128) -> Image:
    """Tile a 7x7 digit into a ``target`` x ``target`` grid image.

    The digit is repeated ``repeats`` times in each direction and the last
    rows and columns of the resulting grid are replicated to pad out to the
    target side (18 repeats of 7 gives 126, so rows 126 and 127 copy rows
    124 and 125, and likewise for columns).
    """
    if digit.channels != 1 or digit.height != 7 or digit.width != 7:
        raise ShapeMismatch(
            f"tile_mnist expects a 7x7 single-channel digit, got {digit.shape}"
        )
    base = 7 * repeats
    pad = target - base
    if pad < 0 or pad > base:
        raise ValueError(
            f"target {target} incompatible with {repeats} repeats of a 7px tile"
        )
    grid = np.tile(digit.plane(), (repeats, repeats))
    out = np.empty((target, target), dtype=np.float64)
    out[:base, :base] = grid
    if pad:
        out[base:, :base] = grid[base - pad : base, :]
        out[:base, base:] = grid[:, base - pad : base]
        out[base:, base:] = grid[base - pad : base, base - pad : base]
    return Image(out)


# --- sample sets ----------------------------------------------------------


@dataclass
class SampleSet:
    """A named collection of same-shape candidate images for one scene."""

    scene_id: str
    candidates: list[tuple[str, Image]]
    reference: Image | None = None
    source_manifest: Path | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        ids = [cid for cid, _ in self.candidates]
        if len(set(ids)) != len(ids):
            dupes = sorted({c for c in ids if ids.count(c) > 1})
            raise ValueError(f"duplicate candidate ids in {self.scene_id}: {dupes}")
        shapes = {img.shape for _, img in self.candidates}
        if len(shapes) > 1:
            raise ShapeMismatch(
                f"candidates in {self.scene_id} differ in shape: {sorted(shapes)}"
            )

    def __len__(self) -> int:
        return len(self.candidates)

    @property
    def candidate_ids(self) -> list[str]:
        return [cid for cid, _ in self.candidates]

    def image(self, candidate_id: str) -> Image:
        for cid, img in self.candidates:
            if cid == candidate_id:
                return img
        raise KeyError(candidate_id)


def load_sample_set(manifest_path: str | Path) -> SampleSet:
    """Load a sample set from its JSON manifest.

    The manifest format is ``{"scene_id": str, "reference": path|null,
    "candidates": [{"id": str, "path": str}, ...]}`` with image paths
    resolved relative to the manifest's directory.  Unknown top-level keys
    (``truth_order`` from ladder manifests, for instance) are preserved in
    ``metadata``.
    """
    p = Path(manifest_path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise IoError(f"cannot read manifest {p}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"manifest {p} is not valid JSON: {exc}") from exc
    for key in ("scene_id", "candidates"):
        if key not in doc:
            raise FormatError(f"manifest {p} missing required key {key!r}")
    root = p.parent
    candidates = []
    for entry in doc["candidates"]:
        if "id" not in entry or "path" not in entry:
            raise FormatError(f"manifest {p}: candidate entries need id and path")
        candidates.append((str(entry["id"]), load_image(root / entry["path"])))
    reference = None
    if doc.get("reference"):
        reference = load_image(root / doc["reference"])
    metadata = {
        k: v for k, v in doc.items() if k not in ("scene_id", "reference", "candidates")
    }
    return SampleSet(
        scene_id=str(doc["scene_id"]),
        candidates=candidates,
        reference=reference,
        source_manifest=p,
        metadata=metadata,
    )


def save_sample_set(
    sample_set: SampleSet,
    directory: str | Path,
    manifest_name: str = "manifest.json",
    bit_depth: int = 8,
) -> Path:
    """Write a sample set's images and manifest under ``directory``."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for cid, img in sample_set.candidates:
        fname = f"{cid}.png"
        save_image(img, root / fname, bit_depth=bit_depth)
        entries.append({"id": cid, "path": fname})
    doc: dict = {"scene_id": sample_set.scene_id, "candidates": entries}
    if sample_set.reference is not None:
        save_image(sample_set.reference, root / "reference.png", bit_depth=bit_depth)
        doc["reference"] = "reference.png"
    else:
        doc["reference"] = None
    doc.update(sample_set.metadata)
    manifest = root / manifest_name
    manifest.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return manifest
