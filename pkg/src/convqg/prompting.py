"""Assembly of the question-generation model input string.

The layout is fixed: ``Answer: <answer>, <rationale> Context: <sentences>
[SEP] <history>`` with single-space joins and exactly one ``[SEP]`` token,
omitted entirely when there is no history.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import ConvqgError
from .relevance import turn_text


class EmptyWindowError(ConvqgError):
    """Raised when a prompt is assembled from an empty sentence window."""


@dataclass(frozen=True)
class PromptSpec:
    answer: str
    rationale: str
    window_sentences: tuple[str, ...]
    history: tuple[tuple[str, str], ...]

    @classmethod
    def of(
        cls,
        answer: str,
        rationale: str,
        window_sentences: Sequence[str],
        history: Sequence[tuple[str, str]],
    ) -> "PromptSpec":
        return cls(
            answer=answer,
            rationale=rationale,
            window_sentences=tuple(window_sentences),
            history=tuple((q, a) for q, a in history),
        )


def serialize_history(turns: Sequence[tuple[str, str]]) -> str:
    """Render turns oldest-to-newest as "q a" pairs joined by single spaces."""
    return " ".join(turn_text(q, a) for q, a in turns)


def assemble_prompt(spec: PromptSpec) -> str:
    if not spec.window_sentences:
        raise EmptyWindowError("cannot assemble a prompt from an empty window")
    context = " ".join(spec.window_sentences)
    prompt = f"Answer: {spec.answer}, {spec.rationale} Context: {context}"
    if spec.history:
        prompt += f" [SEP] {serialize_history(spec.history)}"
    return prompt
