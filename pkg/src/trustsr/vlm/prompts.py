"""Built-in prompt pools for the two evaluation axes.

Each axis ships twenty semantically equivalent phrasings; querying a
provider with the whole pool and aggregating the answers damps sensitivity
to any single wording.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class PromptAxis(str, Enum):
    INFORMATION = "information"
    ARTIFACT = "artifact"


@dataclass(frozen=True)
class PromptPool:
    axis: PromptAxis
    prompts: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.prompts:
            raise ValueError("a prompt pool cannot be empty")
        if len(set(self.prompts)) != len(self.prompts):
            raise ValueError("prompt pool entries must be unique")

    def __len__(self) -> int:
        return len(self.prompts)


INFORMATION_PROMPTS: tuple[str, ...] = (
    "What is the digit in this image?",
    "Can you identify the number?",
    "Which number is shown here?",
    "Please read the digit.",
    "What number is visible?",
    "Can you tell which number appears?",
    "Read the digit from the image.",
    "Identify the number in this picture.",
    "What does the digit look like?",
    "What is written in the image?",
    "Is there a digit shown here?",
    "Recognize the number in this image.",
    "What number can you see?",
    "What digit does the image contain?",
    "Tell me the number you observe.",
    "What's the printed number?",
    "Do you recognize a digit?",
    "Read the numeral in this image.",
    "What digit do you detect?",
    "State the digit shown in the image.",
)

ARTIFACT_PROMPTS: tuple[str, ...] = (
    "Does this image contain visual artifacts?",
    "Is the image clean and artifact-free?",
    "Can you spot any distortions?",
    "Are there imperfections in this image?",
    "How clean is the image?",
    "Does this image look realistic?",
    "Rate the visual clarity of the image.",
    "Is the output free of compression artifacts?",
    "Do you notice any artifacts?",
    "Are there visible distortions or glitches?",
    "Comment on the image’s realism.",
    "Does the image appear sharp and clear?",
    "Is this image blurry or distorted?",
    "Does the output seem natural and artifact-free?",
    "Are there distracting visual flaws?",
    "Is the image degraded in any way?",
    "How visually appealing is this image?",
    "Are there any unwanted textures or glitches?",
    "Would you consider this image clean?",
    "Is this result free of visual anomalies?",
)


def default_pool(axis: PromptAxis) -> PromptPool:
    if axis == PromptAxis.INFORMATION:
        return PromptPool(PromptAxis.INFORMATION, INFORMATION_PROMPTS)
    return PromptPool(PromptAxis.ARTIFACT, ARTIFACT_PROMPTS)
