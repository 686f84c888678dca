"""Desk-scale validation generators: degradations, ladders, MOS correlation.

A degradation ladder derives a sequence of candidates from one reference
with strictly increasing distortion severity, which gives a known
ground-truth quality ordering to validate rankings against without any
external dataset.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.ndimage import correlate1d

from .errors import BadSpec, IoError, JoinError, ZeroVariance
from .image import Image, SampleSet
from .stats import pearson


class DegradationKind(str, Enum):
    GAUSSIAN_BLUR = "gaussian_blur"
    ADDITIVE_GAUSSIAN_NOISE = "additive_gaussian_noise"
    PIXELATE = "pixelate"
    INTENSITY_QUANTIZE = "intensity_quantize"


#: Fixed wavelet divisor for ladder ranking.  Min-max normalization spans
#: the wavelet term across the whole ladder no matter how small the raw
#: spread is, which structurally inverts rankings for detail-removing
#: degradations (blur, pixelation): the mildest rung keeps the most detail
#: and would eat the full penalty.  A fixed scale keeps the artifact term
#: proportionate; 1.0 maps heavy noise (sigma 0.3 -> raw ~0.5) to a strong
#: penalty while photographic detail (~0.04) stays where it belongs.
LADDER_WAVELET_SCALE = 1.0


@dataclass(frozen=True)
class DegradationSpec:
    """One distortion: kind plus its kind-specific strength.

    Strength semantics: blur takes sigma in pixels, noise takes sigma in
    intensity units, pixelation takes the block size in pixels, and
    quantization takes the number of intensity levels (>= 2).  ``seed``
    only matters for the stochastic noise kind.
    """

    kind: DegradationKind
    strength: float
    seed: int = 0

    def __post_init__(self) -> None:
        if self.strength <= 0:
            raise BadSpec(f"strength must be positive, got {self.strength}")
        if self.kind == DegradationKind.INTENSITY_QUANTIZE and self.strength < 2:
            raise BadSpec("quantization needs at least 2 levels")


def _gaussian_taps(sigma: float) -> np.ndarray:
    radius = max(1, math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    taps = np.exp(-(x**2) / (2.0 * sigma**2))
    return taps / taps.sum()


def _blur(plane_stack: np.ndarray, sigma: float) -> np.ndarray:
    taps = _gaussian_taps(sigma)
    out = correlate1d(plane_stack, taps, axis=0, mode="nearest")
    return correlate1d(out, taps, axis=1, mode="nearest")


def _pixelate(data: np.ndarray, block: int) -> np.ndarray:
    h, w = data.shape[:2]
    row_edges = np.arange(0, h, block)
    col_edges = np.arange(0, w, block)
    # Mean per block via reduceat, then stretch back out to pixel size.
    sums = np.add.reduceat(np.add.reduceat(data, row_edges, axis=0), col_edges, axis=1)
    row_counts = np.diff(np.append(row_edges, h))
    col_counts = np.diff(np.append(col_edges, w))
    means = sums / (row_counts[:, None, None] * col_counts[None, :, None])
    return np.repeat(np.repeat(means, row_counts, axis=0), col_counts, axis=1)


def _quantize(data: np.ndarray, levels: int) -> np.ndarray:
    # Uniform mid-rise: bin the unit interval into `levels` cells and map
    # each sample to its cell midpoint.
    bins = np.minimum((data * levels).astype(np.int64), levels - 1)
    return (bins + 0.5) / levels


def degrade(img: Image, spec: DegradationSpec) -> Image:
    """Apply one distortion; deterministic given ``(img, spec)``."""
    data = img.data
    if spec.kind == DegradationKind.GAUSSIAN_BLUR:
        out = _blur(data, spec.strength)
    elif spec.kind == DegradationKind.ADDITIVE_GAUSSIAN_NOISE:
        rng = np.random.default_rng(spec.seed)
        out = data + rng.normal(0.0, spec.strength, size=data.shape)
    elif spec.kind == DegradationKind.PIXELATE:
        block = int(round(spec.strength))
        if block < 1:
            raise BadSpec(f"pixelation block must be >= 1px, got {spec.strength}")
        out = _pixelate(data, block)
    elif spec.kind == DegradationKind.INTENSITY_QUANTIZE:
        out = _quantize(data, int(round(spec.strength)))
    else:  # pragma: no cover - enum is closed
        raise BadSpec(f"unknown degradation kind {spec.kind!r}")
    return Image(np.clip(out, 0.0, 1.0))


def quantize_levels_for_severity(severity: float) -> int:
    """Map a ladder severity to a level count (more severe = fewer levels)."""
    return max(2, int(round(256.0 / severity)))


def build_ladder(
    reference: Image,
    kind: DegradationKind,
    strengths: Sequence[float],
    scene_id: str = "ladder",
    seed: int = 0,
) -> SampleSet:
    """Candidates of strictly increasing severity, mildest first.

    The returned set's ``metadata["truth_order"]`` lists candidate ids from
    best to worst expected quality, i.e. in ascending strength order.  For
    quantization, strength is interpreted as a coarseness divisor and
    translated through :func:`quantize_levels_for_severity`, because a raw
    level count runs opposite to severity.
    """
    if len(strengths) < 2:
        raise BadSpec("a ladder needs at least two strengths")
    if any(b <= a for a, b in zip(strengths, strengths[1:])):
        raise BadSpec(f"strengths must be strictly ascending, got {list(strengths)}")
    candidates = []
    for i, strength in enumerate(strengths):
        if kind == DegradationKind.INTENSITY_QUANTIZE:
            spec = DegradationSpec(kind, quantize_levels_for_severity(strength), seed)
        else:
            spec = DegradationSpec(kind, strength, seed=seed + i)
        candidates.append((f"rung{i:02d}", degrade(reference, spec)))
    truth_order = [cid for cid, _ in candidates]
    return SampleSet(
        scene_id=scene_id,
        candidates=candidates,
        reference=reference,
        metadata={
            "truth_order": truth_order,
            "kind": kind.value,
            "strengths": list(strengths),
            "seed": seed,
        },
    )


def kendall_tau(ranking: Sequence[str], truth: Sequence[str]) -> float:
    """Kendall rank correlation between two orderings of the same ids."""
    if sorted(ranking) != sorted(truth):
        raise ValueError("orderings must contain the same ids")
    n = len(truth)
    if n < 2:
        raise ValueError("need at least two items")
    position = {cid: i for i, cid in enumerate(ranking)}
    concordant = discordant = 0
    for i in range(n):
        for j in range(i + 1, n):
            if position[truth[i]] < position[truth[j]]:
                concordant += 1
            else:
                discordant += 1
    return (concordant - discordant) / (n * (n - 1) / 2)


# --- MOS ingestion and correlation -----------------------------------------


def load_mos_csv(path: str | Path) -> dict[str, float]:
    """Read an ``image_id,mos`` CSV into a mapping."""
    p = Path(path)
    try:
        with p.open(newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or {"image_id", "mos"} - set(reader.fieldnames):
                raise JoinError(f"{p}: MOS CSV needs image_id and mos columns")
            out = {}
            for row in reader:
                out[row["image_id"]] = float(row["mos"])
    except OSError as exc:
        raise IoError(f"cannot read MOS CSV {p}: {exc}") from exc
    except ValueError as exc:
        raise JoinError(f"{p}: non-numeric MOS value: {exc}") from exc
    if not out:
        raise JoinError(f"{p}: MOS CSV has no rows")
    return out


def mos_correlation(
    scores: Mapping[str, float],
    mos: Mapping[str, float],
    scenes: Mapping[str, str] | None = None,
) -> dict:
    """Pearson correlation between metric scores and MOS, joined on id.

    Returns the overall coefficient plus one per scene group when a
    ``scenes`` mapping (image id -> scene id) is supplied.  Groups that are
    degenerate (fewer than two images, or zero variance) report ``None``.
    """
    common = sorted(set(scores) & set(mos))
    if len(common) < 2:
        raise JoinError(
            f"need at least two joinable image ids, found {len(common)}"
        )
    metric = [scores[i] for i in common]
    ratings = [mos[i] for i in common]
    report: dict = {
        "n": len(common),
        "overall": pearson(metric, ratings),
        "per_scene": {},
    }
    if scenes:
        groups: dict[str, list[str]] = {}
        for image_id in common:
            groups.setdefault(scenes.get(image_id, "unknown"), []).append(image_id)
        for scene, ids in sorted(groups.items()):
            if len(ids) < 2:
                report["per_scene"][scene] = None
                continue
            try:
                report["per_scene"][scene] = pearson(
                    [scores[i] for i in ids], [mos[i] for i in ids]
                )
            except ZeroVariance:
                report["per_scene"][scene] = None
    return report


# --- synthetic textured references ------------------------------------------


def textured_references(count: int = 5, side: int = 96, seed: int = 7) -> list[Image]:
    """Deterministic textured test images with edge and detail structure.

    Piecewise-smooth content (gratings, soft blobs, step edges, ramps) with
    only a light broadband component, so the detail energy sits in the
    photographic range rather than looking like pure noise, while blur,
    noise, pixelation and quantization all measurably move the edge and
    wavelet metrics.
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:side, 0:side] / float(side)
    images = []
    for k in range(count):
        freq = 3 + k
        grating = 0.5 + 0.5 * np.sin(2 * np.pi * (freq * xx + (k % 3 + 1) * yy))
        blobs = np.zeros((side, side))
        for _ in range(6):
            cy, cx = rng.random(2)
            radius = 0.08 + 0.12 * rng.random()
            blobs += rng.random() * np.exp(
                -((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * radius**2)
            )
        blobs /= max(blobs.max(), 1e-9)
        steps = ((xx > 0.3 + 0.1 * k) & (yy > 0.45)).astype(float)
        steps += 0.5 * ((xx + yy) > 1.1)
        steps /= max(steps.max(), 1e-9)
        grain = _blur(rng.random((side, side))[:, :, None], 1.0)[:, :, 0]
        grain = (grain - grain.min()) / (grain.max() - grain.min() + 1e-12)
        ramp = (xx + 2 * yy) / 3.0
        mix = (
            0.34 * grating
            + 0.22 * blobs
            + 0.18 * steps
            + 0.12 * grain
            + 0.14 * ramp
        )
        images.append(Image(np.clip(mix, 0.0, 1.0)))
    return images
