"""Prompt-ensembled candidate selection.

Two tasks drive the pipeline: information identification (what digit or
letter does a candidate show) and artifact detection (which candidate looks
cleanest).  Identification runs per candidate per prompt; artifact ranking
submits the candidates in fixed-order batches and reads the designated best
pick from the final batch's response.  The overall two-stage pipeline
filters candidates by identification confidence first and ranks the
survivors second, then pixel-averages the top k.
"""

from __future__ import annotations

import re
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from ..errors import EmptyAfterFilter, NoConfidenceData, ParseError
from ..image import Image, SampleSet, ensemble_average
from .prompts import PromptAxis, PromptPool
from .providers import VlmProvider

DEFAULT_CONFIDENCE_PROMPT = (
    "On a scale of 1 to 100, how certain are you that this number is a {label}?"
)
DEFAULT_CONFIDENCE_THRESHOLD = 80.0
DEFAULT_BATCH_SIZE = 10
DEFAULT_TOP_K = 5

_BATCH_IMAGE_RE = re.compile(r"batch\s*#?\s*(\d+)\b.{0,40}?\bimage\s*#?\s*(\d+)", re.I | re.S)
_TOKEN_RE = re.compile(r"[A-Za-z]+|\d+")


@dataclass
class VlmVerdict:
    """One provider response to one prompt about one candidate."""

    candidate_id: str
    prompt_index: int
    raw_text: str
    parsed_label: str | None
    confidence: float | None
    provider_id: str
    timestamp: float


@dataclass
class SelectionResult:
    """Ranked candidates plus the evidence behind the ranking."""

    ranked: list[str]
    top_k: list[str]
    top_1: str
    per_prompt_choices: dict[int, str]
    label_histogram: dict[str, int]
    warnings: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "ranked": self.ranked,
            "top_k": self.top_k,
            "top_1": self.top_1,
            "per_prompt_choices": {str(k): v for k, v in self.per_prompt_choices.items()},
            "label_histogram": dict(sorted(self.label_histogram.items())),
            "warnings": self.warnings,
        }


def parse_label(text: str) -> str | None:
    """Extract the answered label from free-form text.

    The first standalone integer token wins; if the text contains no
    integer at all, the first single-letter token is used instead.  Returns
    ``None`` when neither occurs.
    """
    letter = None
    for token in _TOKEN_RE.findall(text):
        if token.isdigit():
            return token
        if letter is None and len(token) == 1:
            letter = token
    return letter


def parse_confidence(text: str) -> float | None:
    """First integer token in [1, 100], or None."""
    for token in _TOKEN_RE.findall(text):
        if token.isdigit() and 1 <= int(token) <= 100:
            return float(token)
    return None


def _run_indexed(tasks, worker, jobs: int, max_in_flight: int):
    """Run ``worker`` over tasks, preserving task order in the result."""
    width = max(1, min(jobs, max_in_flight))
    if width == 1:
        return [worker(task) for task in tasks]
    with ThreadPoolExecutor(max_workers=width) as pool:
        return list(pool.map(worker, tasks))


def identify_label(
    sample_set: SampleSet,
    pool: PromptPool,
    provider: VlmProvider,
    jobs: int = 1,
) -> list[VlmVerdict]:
    """Ask every information prompt about every candidate individually."""
    if pool.axis != PromptAxis.INFORMATION:
        raise ValueError(f"identify_label needs an information pool, got {pool.axis}")
    tasks = [
        (cid, img, p_idx, prompt)
        for cid, img in sample_set.candidates
        for p_idx, prompt in enumerate(pool.prompts)
    ]

    def worker(task):
        cid, img, p_idx, prompt = task
        text = provider.ask([img], prompt)
        return VlmVerdict(
            candidate_id=cid,
            prompt_index=p_idx,
            raw_text=text,
            parsed_label=parse_label(text),
            confidence=None,
            provider_id=provider.provider_id,
            timestamp=time.time(),
        )

    return _run_indexed(tasks, worker, jobs, provider.max_in_flight)


def label_histogram(verdicts: Sequence[VlmVerdict]) -> dict[str, int]:
    """Count parsed labels over a batch of verdicts (unparsed ones skipped)."""
    return dict(Counter(v.parsed_label for v in verdicts if v.parsed_label is not None))


def majority_label(verdicts: Sequence[VlmVerdict]) -> str | None:
    """Most frequent parsed label; ties break to the lexicographically first."""
    histogram = label_histogram(verdicts)
    if not histogram:
        return None
    return min(histogram, key=lambda lbl: (-histogram[lbl], lbl))


def confidence_probe(
    sample_set: SampleSet,
    target_label: str,
    provider: VlmProvider,
    template: str = DEFAULT_CONFIDENCE_PROMPT,
    jobs: int = 1,
) -> list[VlmVerdict]:
    """Ask for a 1-100 certainty that each candidate shows ``target_label``."""
    prompt = template.format(label=target_label)

    def worker(task):
        cid, img = task
        text = provider.ask([img], prompt)
        return VlmVerdict(
            candidate_id=cid,
            prompt_index=0,
            raw_text=text,
            parsed_label=target_label,
            confidence=parse_confidence(text),
            provider_id=provider.provider_id,
            timestamp=time.time(),
        )

    return _run_indexed(list(sample_set.candidates), worker, jobs, provider.max_in_flight)


def confidence_filter(
    verdicts: Sequence[VlmVerdict],
    target_label: str,
    threshold: float,
) -> list[str]:
    """Candidates whose mean confidence for ``target_label`` clears the bar.

    Order follows the first appearance of each candidate in ``verdicts``.
    An empty result is a legitimate outcome and is left to the caller to
    flag; verdicts with no confidence at all raise
    :class:`NoConfidenceData`.
    """
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    order: list[str] = []
    for v in verdicts:
        if v.parsed_label != target_label or v.confidence is None:
            continue
        if v.candidate_id not in counts:
            order.append(v.candidate_id)
            sums[v.candidate_id] = 0.0
            counts[v.candidate_id] = 0
        sums[v.candidate_id] += v.confidence
        counts[v.candidate_id] += 1
    if not counts:
        raise NoConfidenceData(
            f"no verdict carries a confidence for label {target_label!r}"
        )
    return [cid for cid in order if sums[cid] / counts[cid] >= threshold]


def _batch_prompt(prompt: str, batch_no: int, batches: int, total: int) -> str:
    framing = (
        f"I will provide a total of {total} images in {batches} batches. "
        f"This is batch {batch_no} of {batches}. {prompt}"
    )
    if batch_no == batches:
        framing += (
            " After reviewing all of the images, select the single best image"
            " and give its batch and image number."
        )
    return framing


def parse_choice(text: str, candidate_ids: Sequence[str], batch_size: int) -> str:
    """Resolve which candidate a response designates as best.

    Tried in order: an explicit "batch B ... image I" reference (both
    1-based), a verbatim candidate id, then a bare integer taken as a
    1-based global candidate index.  A response naming nothing raises
    :class:`ParseError`.
    """
    m = _BATCH_IMAGE_RE.search(text)
    if m:
        batch_no, image_no = int(m.group(1)), int(m.group(2))
        index = (batch_no - 1) * batch_size + (image_no - 1)
        if 0 <= index < len(candidate_ids):
            return candidate_ids[index]
        raise ParseError(
            f"response points at batch {batch_no} image {image_no}, outside the"
            f" {len(candidate_ids)} submitted candidates"
        )
    mentions = [
        (text.find(cid), cid)
        for cid in candidate_ids
        if re.search(rf"(?<![A-Za-z0-9_]){re.escape(cid)}(?![A-Za-z0-9_])", text)
    ]
    if mentions:
        return min(mentions)[1]
    for token in _TOKEN_RE.findall(text):
        if token.isdigit():
            index = int(token) - 1
            if 0 <= index < len(candidate_ids):
                return candidate_ids[index]
    raise ParseError(f"response names no candidate: {text[:120]!r}")


def rank_by_prompt_choices(
    sample_set: SampleSet,
    prompts: Sequence[str],
    provider: VlmProvider,
    batch_size: int = DEFAULT_BATCH_SIZE,
    k: int = DEFAULT_TOP_K,
    jobs: int = 1,
) -> SelectionResult:
    """Rank candidates by how often each prompt designates them best.

    For every prompt the candidates go out in fixed-order batches of
    ``batch_size``; the response to the final batch carries the prompt's
    designated best.  Candidates never designated rank last, ordered by id,
    with a warning recorded.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    ids = sample_set.candidate_ids
    images = [img for _, img in sample_set.candidates]
    batches = [images[i : i + batch_size] for i in range(0, len(images), batch_size)]

    def worker(p_idx_prompt):
        p_idx, prompt = p_idx_prompt
        final_text = ""
        for b_no, batch in enumerate(batches, start=1):
            final_text = provider.ask(
                batch, _batch_prompt(prompt, b_no, len(batches), len(images))
            )
        return p_idx, parse_choice(final_text, ids, batch_size)

    choices = dict(
        _run_indexed(list(enumerate(prompts)), worker, jobs, provider.max_in_flight)
    )
    frequency = Counter(choices.values())
    ranked = sorted(ids, key=lambda cid: (-frequency[cid], cid))
    warnings = []
    never_chosen = len(ids) - len(frequency)
    if never_chosen:
        warnings.append(
            f"{never_chosen} of {len(ids)} candidates were never designated best"
            " by any prompt; they rank last by id"
        )
    return SelectionResult(
        ranked=ranked,
        top_k=ranked[: min(k, len(ranked))],
        top_1=ranked[0],
        per_prompt_choices=choices,
        label_histogram={cid: frequency[cid] for cid in frequency},
        warnings=warnings,
    )


def artifact_rank(
    sample_set: SampleSet,
    pool: PromptPool,
    provider: VlmProvider,
    batch_size: int = DEFAULT_BATCH_SIZE,
    k: int = DEFAULT_TOP_K,
    jobs: int = 1,
) -> SelectionResult:
    """Artifact-axis wrapper around :func:`rank_by_prompt_choices`."""
    if pool.axis != PromptAxis.ARTIFACT:
        raise ValueError(f"artifact_rank needs an artifact pool, got {pool.axis}")
    return rank_by_prompt_choices(
        sample_set, pool.prompts, provider, batch_size=batch_size, k=k, jobs=jobs
    )


def two_stage_pipeline(
    sample_set: SampleSet,
    info_pool: PromptPool,
    artifact_pool: PromptPool,
    info_provider: VlmProvider,
    artifact_provider: VlmProvider,
    k: int = DEFAULT_TOP_K,
    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD,
    batch_size: int = DEFAULT_BATCH_SIZE,
    jobs: int = 1,
) -> tuple[SelectionResult, Image]:
    """Identify, confidence-filter, artifact-rank, then ensemble the top k.

    Stage one assigns the set its majority label and keeps the candidates
    whose mean stated confidence for that label clears the threshold.
    Stage two ranks the survivors on the artifact axis; the top k (clamped
    to the survivor count) are pixel-averaged into the output image.
    """
    verdicts = identify_label(sample_set, info_pool, info_provider, jobs=jobs)
    histogram = label_histogram(verdicts)
    label = majority_label(verdicts)
    if label is None:
        raise EmptyAfterFilter("no candidate produced a parseable label", histogram)
    probes = confidence_probe(sample_set, label, info_provider, jobs=jobs)
    survivors = confidence_filter(probes, label, confidence_threshold)
    if not survivors:
        raise EmptyAfterFilter(
            f"no candidate reached confidence {confidence_threshold} for"
            f" label {label!r}",
            histogram,
        )
    surviving_set = SampleSet(
        scene_id=sample_set.scene_id,
        candidates=[(cid, sample_set.image(cid)) for cid in survivors],
        reference=sample_set.reference,
        metadata=dict(sample_set.metadata),
    )
    result = artifact_rank(
        surviving_set, artifact_pool, artifact_provider,
        batch_size=batch_size, k=k, jobs=jobs,
    )
    result.label_histogram = histogram
    ensembled = ensemble_average([surviving_set.image(cid) for cid in result.top_k])
    return result, ensembled
