"""VLM-driven candidate selection: prompts, providers, pipeline, statistics."""

from .prompts import (
    ARTIFACT_PROMPTS,
    INFORMATION_PROMPTS,
    PromptAxis,
    PromptPool,
    default_pool,
)
from .providers import (
    HttpVlmProvider,
    RecordingVlmProvider,
    ReplayVlmProvider,
    ScriptedVlmProvider,
    VlmProvider,
    load_provider_config,
    request_key,
)
from .robustness import (
    HumanSelections,
    human_agreement,
    load_human_csv,
    prompt_consistency,
    robustness_row,
    selection_runs,
)
from .select import (
    SelectionResult,
    VlmVerdict,
    artifact_rank,
    confidence_filter,
    confidence_probe,
    identify_label,
    label_histogram,
    majority_label,
    parse_choice,
    parse_confidence,
    parse_label,
    rank_by_prompt_choices,
    two_stage_pipeline,
)

__all__ = [
    "ARTIFACT_PROMPTS",
    "INFORMATION_PROMPTS",
    "PromptAxis",
    "PromptPool",
    "default_pool",
    "HttpVlmProvider",
    "RecordingVlmProvider",
    "ReplayVlmProvider",
    "ScriptedVlmProvider",
    "VlmProvider",
    "load_provider_config",
    "request_key",
    "HumanSelections",
    "human_agreement",
    "load_human_csv",
    "prompt_consistency",
    "robustness_row",
    "selection_runs",
    "SelectionResult",
    "VlmVerdict",
    "artifact_rank",
    "confidence_filter",
    "confidence_probe",
    "identify_label",
    "label_histogram",
    "majority_label",
    "parse_choice",
    "parse_confidence",
    "parse_label",
    "rank_by_prompt_choices",
    "two_stage_pipeline",
]
