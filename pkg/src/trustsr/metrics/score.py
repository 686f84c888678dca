"""Trustworthiness scoring: component metrics, normalization, weighting.

The trustworthiness score (TWS) of a candidate against a reference combines
three normalized components: embedding cosine similarity (semantic
agreement), SSIM between Sobel edge maps (structural fidelity), and the
wavelet detail energy of the candidate (artifact penalty):

    tws = lambda_clip * s_clip + lambda_edge * s_edge - lambda_wavelet * s_wavelet
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

from ..embedding import Embedding, EmbeddingProvider, cosine_similarity
from ..errors import EmptyInput, MissingReference, ShapeMismatch
from ..image import Image, SampleSet, to_grayscale
from .edges import sobel_edge_map
from .ssim import ssim
from .wavelet import WaveletConfig, s_wavelet_raw


@dataclass(frozen=True)
class TwsWeights:
    """Non-negative component weights; defaults follow the tuned setting."""

    lambda_clip: float = 0.2
    lambda_edge: float = 0.3
    lambda_wavelet: float = 0.5

    def __post_init__(self) -> None:
        for name in ("lambda_clip", "lambda_edge", "lambda_wavelet"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def as_dict(self) -> dict[str, float]:
        return {
            "lambda_clip": self.lambda_clip,
            "lambda_edge": self.lambda_edge,
            "lambda_wavelet": self.lambda_wavelet,
        }


class WeightConfig(NamedTuple):
    """A named weight configuration, one row of an ablation sweep."""

    name: str
    weights: TwsWeights


#: Ablation grid: the tuned configuration, equal weights, and each
#: component removed in turn (remaining mass redistributed).
DEFAULT_ABLATION_GRID: tuple[WeightConfig, ...] = (
    WeightConfig("all_components", TwsWeights(0.2, 0.3, 0.5)),
    WeightConfig("equal_weights", TwsWeights(1 / 3, 1 / 3, 1 / 3)),
    WeightConfig("no_clip", TwsWeights(0.0, 0.4, 0.6)),
    WeightConfig("no_edge", TwsWeights(0.3, 0.0, 0.7)),
    WeightConfig("no_wavelet", TwsWeights(0.5, 0.5, 0.0)),
)


@dataclass
class TwsBreakdown:
    """Per-candidate record of raw and normalized components plus the score."""

    candidate_id: str
    s_clip_raw: float
    s_edge_raw: float
    s_wavelet_raw: float
    s_clip: float | None = None
    s_edge: float | None = None
    s_wavelet: float | None = None
    tws: float | None = None

    def as_dict(self) -> dict:
        return {
            "candidate_id": self.candidate_id,
            "s_clip_raw": self.s_clip_raw,
            "s_edge_raw": self.s_edge_raw,
            "s_wavelet_raw": self.s_wavelet_raw,
            "s_clip": self.s_clip,
            "s_edge": self.s_edge,
            "s_wavelet": self.s_wavelet,
            "tws": self.tws,
        }


def s_edge(hr: Image, sr: Image) -> float:
    """SSIM between the Sobel edge maps of two same-shape images."""
    if hr.shape != sr.shape:
        raise ShapeMismatch(f"s_edge: shapes differ, {hr.shape} vs {sr.shape}")
    return ssim(
        sobel_edge_map(to_grayscale(hr)),
        sobel_edge_map(to_grayscale(sr)),
    )


def _clamp01(value: float) -> float:
    return min(1.0, max(0.0, value))


def normalize_components(
    breakdowns: Sequence[TwsBreakdown],
    wavelet_scale: float | None = None,
) -> list[TwsBreakdown]:
    """Fill the normalized component fields of a batch of breakdowns.

    The cosine and edge components are clamped to [0, 1]; they already live
    there by construction for genuine candidates.  Wavelet energy has no
    intrinsic scale, so by default it is min-max normalized over the batch
    being ranked (a single candidate, or an all-equal batch, maps to 0).
    Passing ``wavelet_scale`` switches to a fixed divisor,
    ``clamp(raw / scale)``, which keeps scores comparable across scenes.
    """
    if not breakdowns:
        raise EmptyInput("normalize_components needs at least one breakdown")
    if wavelet_scale is not None and wavelet_scale <= 0:
        raise ValueError("wavelet_scale must be positive")
    raws = [bd.s_wavelet_raw for bd in breakdowns]
    lo, hi = min(raws), max(raws)
    span = hi - lo
    out = []
    for bd in breakdowns:
        if wavelet_scale is not None:
            wav = _clamp01(bd.s_wavelet_raw / wavelet_scale)
        elif span == 0.0:
            wav = 0.0
        else:
            wav = (bd.s_wavelet_raw - lo) / span
        out.append(
            replace(
                bd,
                s_clip=_clamp01(bd.s_clip_raw),
                s_edge=_clamp01(bd.s_edge_raw),
                s_wavelet=wav,
            )
        )
    return out


def combine(breakdown: TwsBreakdown, weights: TwsWeights) -> float:
    """Weighted combination of the normalized components."""
    if None in (breakdown.s_clip, breakdown.s_edge, breakdown.s_wavelet):
        raise ValueError("breakdown not normalized; call normalize_components first")
    return (
        weights.lambda_clip * breakdown.s_clip
        + weights.lambda_edge * breakdown.s_edge
        - weights.lambda_wavelet * breakdown.s_wavelet
    )


def raw_components(
    reference: Image,
    sample_set: SampleSet,
    provider: EmbeddingProvider,
    cfg: WaveletConfig | None = None,
    jobs: int = 1,
) -> list[TwsBreakdown]:
    """Raw per-candidate components against ``reference``, in set order.

    Candidates are independent, so ``jobs`` > 1 scores them on a thread
    pool; the output order stays the sample-set order either way.
    """
    cfg = cfg or WaveletConfig()
    ref_embedding: Embedding = provider.embed(reference)
    for cid, img in sample_set.candidates:
        if img.shape != reference.shape:
            raise ShapeMismatch(
                f"candidate {cid}: shape {img.shape} differs from "
                f"reference {reference.shape}"
            )

    def score_one(entry: tuple[str, Image]) -> TwsBreakdown:
        cid, img = entry
        return TwsBreakdown(
            candidate_id=cid,
            s_clip_raw=cosine_similarity(ref_embedding, provider.embed(img)),
            s_edge_raw=s_edge(reference, img),
            s_wavelet_raw=s_wavelet_raw(img, cfg),
        )

    if jobs <= 1:
        return [score_one(entry) for entry in sample_set.candidates]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(score_one, sample_set.candidates))


def tws(
    reference: Image | None,
    sample_set: SampleSet,
    weights: TwsWeights | None = None,
    provider: EmbeddingProvider | None = None,
    cfg: WaveletConfig | None = None,
    wavelet_scale: float | None = None,
    jobs: int = 1,
) -> list[TwsBreakdown]:
    """Score every candidate in ``sample_set`` against the reference.

    ``reference`` defaults to the sample set's own reference image.  The
    result is sorted by descending score with ties broken by ascending
    candidate id, so repeated runs rank identically.
    """
    if reference is None:
        reference = sample_set.reference
    if reference is None:
        raise MissingReference(f"sample set {sample_set.scene_id} has no reference")
    if provider is None:
        raise ValueError("an embedding provider is required")
    weights = weights or TwsWeights()
    breakdowns = raw_components(reference, sample_set, provider, cfg, jobs=jobs)
    breakdowns = normalize_components(breakdowns, wavelet_scale=wavelet_scale)
    for bd in breakdowns:
        bd.tws = combine(bd, weights)
    breakdowns.sort(key=lambda bd: (-bd.tws, bd.candidate_id))
    return breakdowns


def ablation_sweep(
    sample_set: SampleSet,
    configs: Sequence[WeightConfig] | None = None,
    provider: EmbeddingProvider | None = None,
    cfg: WaveletConfig | None = None,
    reference: Image | None = None,
    wavelet_scale: float | None = None,
    jobs: int = 1,
) -> list[dict]:
    """Mean score per weight configuration over one candidate set.

    Components are computed once and recombined per configuration.  Each row
    carries the configuration, the mean score, and the induced ranking.
    """
    if configs is None:
        configs = DEFAULT_ABLATION_GRID
    if not configs:
        raise EmptyInput("ablation_sweep needs at least one configuration")
    if reference is None:
        reference = sample_set.reference
    if reference is None:
        raise MissingReference(f"sample set {sample_set.scene_id} has no reference")
    if provider is None:
        raise ValueError("an embedding provider is required")
    breakdowns = normalize_components(
        raw_components(reference, sample_set, provider, cfg, jobs=jobs),
        wavelet_scale=wavelet_scale,
    )
    rows = []
    for entry in configs:
        if isinstance(entry, WeightConfig):
            name, weights = entry
        else:
            weights = entry
            name = (
                f"clip{weights.lambda_clip:g}"
                f"_edge{weights.lambda_edge:g}"
                f"_wavelet{weights.lambda_wavelet:g}"
            )
        scored = sorted(
            ((combine(bd, weights), bd.candidate_id) for bd in breakdowns),
            key=lambda item: (-item[0], item[1]),
        )
        rows.append(
            {
                "name": name,
                **weights.as_dict(),
                "mean_tws": sum(s for s, _ in scored) / len(scored),
                "ranking": [cid for _, cid in scored],
            }
        )
    return rows
