"""Captioner prompt rendering and triplet parsing.

The captioner is asked for three descriptions of increasing length, separated
by newlines; each answer must start with the fixed prefix and mention the
entity tag. ``parse_caption_triplet`` enforces that contract and reports the
offending answer index on failure.
"""

from __future__ import annotations

from vividforge.core import CaptionLength
from vividforge.errors import (
    EmptyTagError,
    MissingPrefixError,
    MissingTagError,
    WrongAnswerCountError,
)

CAPTION_PREFIX = "The video shows"
ANSWER_SEPARATOR = "\n"

CAPTION_PROMPT_TEMPLATE = (
    "Now you are the 'text prompt creator'. "
    "Let's think step by step, from simple to complex to describe the center "
    "object {tag}, your response should return three answers. "
    "Use \\n as a separator in the answer"
    "The first answer is to describe the center object {tag} in two or three "
    "phrases. "
    "This answer must start with 'The video shows' and must contain {tag}. "
    "The second answer is to describe the center object {tag} in a clear and "
    "concise manner using two or three sentences. "
    "This answer must start with 'The video shows' and must contain {tag}. "
    "The third answer is to describe the center object {tag} in detail. "
    "This answer must start with 'The video shows' and must contain {tag}."
)

CAPTION_LENGTH_ORDER = (CaptionLength.SHORT, CaptionLength.MEDIUM, CaptionLength.LONG)


def render_caption_prompt(tag: str) -> str:
    """Fill the captioner prompt with the entity tag. Deterministic."""
    if not tag:
        raise EmptyTagError("caption prompt needs a non-empty tag")
    return CAPTION_PROMPT_TEMPLATE.replace("{tag}", tag)


def parse_caption_triplet(text: str, tag: str) -> tuple[str, str, str]:
    """Split captioner output into (short, medium, long), enforcing the contract.

    Answers are separated by newlines; blank lines are ignored. Raises
    WrongAnswerCountError / MissingPrefixError / MissingTagError, the latter
    two carrying the 1-based answer index.
    """
    answers = [line.strip() for line in text.split(ANSWER_SEPARATOR) if line.strip()]
    if len(answers) != 3:
        raise WrongAnswerCountError(len(answers))
    for index, answer in enumerate(answers, start=1):
        if not answer.startswith(CAPTION_PREFIX):
            raise MissingPrefixError(index)
        if tag not in answer:
            raise MissingTagError(index)
    return answers[0], answers[1], answers[2]
