"""Prompt-robustness statistics: consistency and human agreement.

A provider is consistent on an image when every prompt in the pool makes it
pick the same candidate.  Human agreement compares the provider's
prompt-ensemble choice (the mode over prompts) against the human mode
choice per scene, with a top-k overlap fraction reported alongside.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from ..errors import FormatError, IoError, MissingHumanData
from ..image import SampleSet
from .prompts import PromptPool
from .providers import VlmProvider
from .select import SelectionResult, rank_by_prompt_choices


def prompt_consistency(per_image_choices: Mapping[str, Mapping[int, str]]) -> float:
    """Percentage of images whose per-prompt choices all coincide."""
    if not per_image_choices:
        raise ValueError("need choices for at least one image")
    consistent = 0
    for image_id, choices in per_image_choices.items():
        if len(choices) < 2:
            raise ValueError(
                f"image {image_id!r} has {len(choices)} per-prompt choices;"
                " consistency needs at least two prompts"
            )
        if len(set(choices.values())) == 1:
            consistent += 1
    return 100.0 * consistent / len(per_image_choices)


@dataclass
class HumanSelections:
    """Ranked per-participant selections for each scene."""

    #: scene_id -> list of (participant_id, rank, candidate_id)
    rows: dict[str, list[tuple[str, int, str]]]

    def scenes(self) -> set[str]:
        return set(self.rows)

    def mode_choice(self, scene_id: str) -> str:
        """Most frequent rank-1 pick; ties break by candidate id."""
        votes = Counter(
            cid for _, rank, cid in self._scene(scene_id) if rank == 1
        )
        if not votes:
            raise MissingHumanData(f"scene {scene_id!r} has no rank-1 selections")
        return min(votes, key=lambda cid: (-votes[cid], cid))

    def top_k(self, scene_id: str, k: int) -> list[str]:
        """Candidates ordered by votes at rank 1, then rank 2, and so on."""
        by_candidate: dict[str, Counter] = {}
        max_rank = 0
        for _, rank, cid in self._scene(scene_id):
            by_candidate.setdefault(cid, Counter())[rank] += 1
            max_rank = max(max_rank, rank)
        ranks = range(1, max_rank + 1)
        ordered = sorted(
            by_candidate,
            key=lambda cid: tuple(-by_candidate[cid][r] for r in ranks) + (cid,),
        )
        return ordered[:k]

    def _scene(self, scene_id: str) -> list[tuple[str, int, str]]:
        try:
            return self.rows[scene_id]
        except KeyError:
            raise MissingHumanData(f"no human selections for scene {scene_id!r}") from None


def load_human_csv(path: str | Path) -> HumanSelections:
    """Read a ``scene_id,participant_id,rank,candidate_id`` CSV."""
    p = Path(path)
    required = {"scene_id", "participant_id", "rank", "candidate_id"}
    rows: dict[str, list[tuple[str, int, str]]] = {}
    try:
        with p.open(newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or required - set(reader.fieldnames):
                raise FormatError(f"{p}: human CSV needs columns {sorted(required)}")
            for row in reader:
                rows.setdefault(row["scene_id"], []).append(
                    (row["participant_id"], int(row["rank"]), row["candidate_id"])
                )
    except OSError as exc:
        raise IoError(f"cannot read human CSV {p}: {exc}") from exc
    except ValueError as exc:
        raise FormatError(f"{p}: non-integer rank: {exc}") from exc
    if not rows:
        raise FormatError(f"{p}: human CSV has no rows")
    return HumanSelections(rows)


def human_agreement(
    vlm_selections: Mapping[str, SelectionResult],
    human: HumanSelections,
    k: int = 5,
) -> dict:
    """Agreement between provider and human selections, per scene set.

    ``agreement_pct`` counts scenes where the provider's mode choice equals
    the human mode choice; ``topk_overlap_pct`` is the mean intersection
    fraction of the two top-k lists.
    """
    if not vlm_selections:
        raise ValueError("need at least one scene selection")
    missing = sorted(set(vlm_selections) - human.scenes())
    if missing:
        raise MissingHumanData(f"human CSV lacks scenes: {missing}")
    matches = 0
    overlap_total = 0.0
    for scene_id, result in vlm_selections.items():
        if result.top_1 == human.mode_choice(scene_id):
            matches += 1
        human_top = set(human.top_k(scene_id, k))
        overlap_total += len(human_top & set(result.top_k[:k])) / k
    n = len(vlm_selections)
    return {
        "n_scenes": n,
        "agreement_pct": 100.0 * matches / n,
        "topk_overlap_pct": 100.0 * overlap_total / n,
        "k": k,
    }


def selection_runs(
    scenes: Sequence[SampleSet],
    pool: PromptPool,
    provider: VlmProvider,
    batch_size: int = 10,
    k: int = 5,
    jobs: int = 1,
) -> dict[str, SelectionResult]:
    """Run per-prompt selection over every scene with one prompt pool.

    Both evaluation axes use the same batched selection protocol; only the
    prompt wording differs.
    """
    return {
        scene.scene_id: rank_by_prompt_choices(
            scene, pool.prompts, provider, batch_size=batch_size, k=k, jobs=jobs
        )
        for scene in scenes
    }


def robustness_row(
    provider: VlmProvider,
    scenes: Sequence[SampleSet],
    info_pool: PromptPool,
    artifact_pool: PromptPool,
    human_info: HumanSelections | None = None,
    human_artifact: HumanSelections | None = None,
    batch_size: int = 10,
    k: int = 5,
    jobs: int = 1,
) -> dict:
    """One report row: consistency and agreement on both axes.

    Missing human data leaves the agreement cells null rather than failing
    the run.
    """
    row: dict = {"provider_id": provider.provider_id, "warnings": []}
    for axis_name, pool, human in (
        ("info", info_pool, human_info),
        ("artifact", artifact_pool, human_artifact),
    ):
        results = selection_runs(
            scenes, pool, provider, batch_size=batch_size, k=k, jobs=jobs
        )
        choices = {sid: res.per_prompt_choices for sid, res in results.items()}
        row[f"consistency_{axis_name}"] = prompt_consistency(choices)
        row[f"agreement_{axis_name}"] = None
        row[f"topk_overlap_{axis_name}"] = None
        if human is None:
            row["warnings"].append(
                f"{axis_name}: no human selections supplied; agreement is null"
            )
            continue
        try:
            agreement = human_agreement(results, human, k=k)
        except MissingHumanData as exc:
            row["warnings"].append(f"{axis_name}: {exc}; agreement is null")
            continue
        row[f"agreement_{axis_name}"] = agreement["agreement_pct"]
        row[f"topk_overlap_{axis_name}"] = agreement["topk_overlap_pct"]
    return row
