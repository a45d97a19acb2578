"""Data model for contexts, conversations and rationales, plus CoQA ingestion.

Sentence segmentation is rule-based and deterministic: a sentence ends at
'.', '!' or '?' followed by whitespace, unless the '.' closes a known
abbreviation. Offsets always index into the raw context string, end
exclusive, so ``raw_text[s.char_start:s.char_end] == s.text`` holds for
every sentence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Iterator, Optional, Sequence

from .errors import ConvqgError


class EmptyContext(ConvqgError):
    """Raised when a context is empty or whitespace-only."""


class ParseError(ConvqgError):
    """Raised when an input document is not valid JSON."""


class SchemaError(ConvqgError):
    """Raised when a JSON document does not follow the expected schema."""


class LocateError(ConvqgError):
    """Raised when a rationale span overlaps no sentence."""


_TERMINATORS = (".", "!", "?")

# Words whose trailing period never ends a sentence.
_ABBREVIATIONS = frozenset(
    {"Mr.", "Mrs.", "Ms.", "Dr.", "St.", "vs.", "e.g.", "i.e.", "U.S."}
)


@dataclass(frozen=True)
class Sentence:
    """One context sentence with its character span in the raw text."""

    index: int
    text: str
    char_start: int
    char_end: int

    @property
    def span(self) -> tuple[int, int]:
        return (self.char_start, self.char_end)


@dataclass(frozen=True)
class ContextDoc:
    """A referential context segmented into offset-indexed sentences."""

    raw_text: str
    sentences: tuple[Sentence, ...]

    @property
    def m(self) -> int:
        return len(self.sentences)

    @classmethod
    def from_text(cls, raw_text: str) -> "ContextDoc":
        return cls(raw_text=raw_text, sentences=tuple(split_sentences(raw_text)))


@dataclass(frozen=True)
class QATurn:
    """One question-answer turn, optionally anchored to a context span."""

    turn_id: int
    question: str
    answer: str
    rationale_text: str = ""
    rationale_span: Optional[tuple[int, int]] = None


@dataclass(frozen=True)
class Conversation:
    id: str
    context: ContextDoc
    turns: tuple[QATurn, ...]

    def __post_init__(self) -> None:
        for i, turn in enumerate(self.turns):
            if turn.turn_id != i + 1:
                raise SchemaError(
                    f"conversation {self.id!r}: turn_ids must run 1..{len(self.turns)}, "
                    f"got {turn.turn_id} at position {i}"
                )


@dataclass(frozen=True)
class TurnTask:
    """Input for generating the question of turn ``n``.

    In answer-aware mode the target answer and rationale are given; in
    answer-unaware mode both are absent and must be chosen by the pipeline.
    """

    context: ContextDoc
    history: tuple[QATurn, ...]
    mode: str  # "answer-aware" | "answer-unaware"
    n: int
    target_answer: Optional[str] = None
    rationale_text: Optional[str] = None
    rationale_span: Optional[tuple[int, int]] = None

    def __post_init__(self) -> None:
        if self.mode not in ("answer-aware", "answer-unaware"):
            raise ValueError(f"unknown task mode {self.mode!r}")
        if len(self.history) != self.n - 1:
            raise ValueError(
                f"history length {len(self.history)} does not match n={self.n}"
            )
        if self.mode == "answer-aware":
            if self.target_answer is None or self.rationale_text is None:
                raise ValueError("answer-aware task requires target_answer and rationale")


def split_sentences(raw_text: str) -> list[Sentence]:
    """Segment raw text into sentences with exact character spans.

    Splits after '.', '!' or '?' followed by whitespace, except when the
    period closes an abbreviation from the fixed list. Whitespace between
    sentences is left in inter-sentence gaps; every non-whitespace
    character is covered by exactly one sentence span.
    """
    if not raw_text.strip():
        raise EmptyContext("context is empty or whitespace-only")

    boundaries: list[int] = []
    for i, ch in enumerate(raw_text[:-1]):
        if ch in _TERMINATORS and raw_text[i + 1].isspace():
            if ch == "." and _ends_with_abbreviation(raw_text, i):
                continue
            boundaries.append(i + 1)

    sentences: list[Sentence] = []
    seg_start = 0
    for boundary in boundaries + [len(raw_text)]:
        start, end = _trim_span(raw_text, seg_start, boundary)
        if start < end:
            sentences.append(
                Sentence(
                    index=len(sentences),
                    text=raw_text[start:end],
                    char_start=start,
                    char_end=end,
                )
            )
        seg_start = boundary
    return sentences


def _ends_with_abbreviation(text: str, period_idx: int) -> bool:
    # Token = maximal non-whitespace run ending at the period (inclusive).
    start = period_idx
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    return text[start : period_idx + 1] in _ABBREVIATIONS


def _trim_span(text: str, start: int, end: int) -> tuple[int, int]:
    while start < end and text[start].isspace():
        start += 1
    while end > start and text[end - 1].isspace():
        end -= 1
    return start, end


def parse_coqa(document: str) -> list[Conversation]:
    """Parse a CoQA-format JSON document into Conversations.

    Accepts either the full-file shape ``{"data": [record, ...]}`` or a
    bare list of records. Questions and answers are zipped by turn_id;
    a negative span_start (CoQA's unanswerable marker) yields a turn
    without a rationale span while keeping the rationale text.
    """
    try:
        payload = json.loads(document)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e}") from e

    if isinstance(payload, dict) and "data" in payload:
        records = payload["data"]
    elif isinstance(payload, dict) and "story" in payload:
        records = [payload]
    elif isinstance(payload, list):
        records = payload
    else:
        raise SchemaError("document is neither a CoQA file object nor a record list")
    if not isinstance(records, list):
        raise SchemaError('"data" must be a list of conversation records')

    return [_parse_record(record, position) for position, record in enumerate(records)]


def _parse_record(record: object, position: int) -> Conversation:
    if not isinstance(record, dict):
        raise SchemaError(f"record {position} is not an object")
    conv_id = str(record.get("id", position))
    story = record.get("story")
    if not isinstance(story, str):
        raise SchemaError(f"conversation {conv_id!r}: missing or non-string story")
    questions = record.get("questions")
    answers = record.get("answers")
    if not isinstance(questions, list) or not isinstance(answers, list):
        raise SchemaError(f"conversation {conv_id!r}: questions/answers must be lists")

    try:
        q_by_turn = {int(q["turn_id"]): q for q in questions}
        a_by_turn = {int(a["turn_id"]): a for a in answers}
    except (TypeError, KeyError) as e:
        raise SchemaError(f"conversation {conv_id!r}: malformed turn entries") from e

    if set(q_by_turn) != set(a_by_turn):
        raise SchemaError(
            f"conversation {conv_id!r}: question turn_ids {sorted(q_by_turn)} "
            f"do not match answer turn_ids {sorted(a_by_turn)}"
        )
    expected = list(range(1, len(q_by_turn) + 1))
    if sorted(q_by_turn) != expected:
        raise SchemaError(
            f"conversation {conv_id!r}: turn_ids must be consecutive from 1, "
            f"got {sorted(q_by_turn)}"
        )

    context = ContextDoc.from_text(story)
    turns = []
    for turn_id in expected:
        q = q_by_turn[turn_id]
        a = a_by_turn[turn_id]
        turns.append(
            QATurn(
                turn_id=turn_id,
                question=str(q.get("input_text", "")),
                answer=str(a.get("input_text", "")),
                rationale_text=str(a.get("span_text", "")),
                rationale_span=_parse_span(a, len(story)),
            )
        )
    return Conversation(id=conv_id, context=context, turns=tuple(turns))


def _parse_span(answer: dict, story_len: int) -> Optional[tuple[int, int]]:
    start = answer.get("span_start")
    end = answer.get("span_end")
    if not isinstance(start, int) or not isinstance(end, int):
        return None
    if start < 0:  # CoQA marks unanswerable turns with span_start = -1
        return None
    end = min(end, story_len)
    if start >= end:
        return None
    return (start, end)


def locate_rationale(context: ContextDoc, span: tuple[int, int]) -> int:
    """Index of the sentence with maximal character overlap with ``span``.

    Ties break toward the smaller index. A span that overlaps no sentence
    (it falls entirely into an inter-sentence gap) raises LocateError.
    """
    start, end = span
    if start >= end:
        raise ValueError(f"empty span {span}")
    if start < 0 or end > len(context.raw_text):
        raise ValueError(f"span {span} outside raw_text of length {len(context.raw_text)}")

    best_idx = -1
    best_overlap = 0
    for sent in context.sentences:
        overlap = min(end, sent.char_end) - max(start, sent.char_start)
        if overlap > best_overlap:
            best_overlap = overlap
            best_idx = sent.index
    if best_idx < 0:
        raise LocateError(f"span {span} overlaps no sentence")
    return best_idx


def history_prefix(conv: Conversation, n: int) -> tuple[QATurn, ...]:
    """Turns 1..n-1 of a conversation; empty at the first turn."""
    if n < 1 or n > len(conv.turns) + 1:
        raise IndexError(f"turn index {n} out of range for {len(conv.turns)} turns")
    return conv.turns[: n - 1]


def conversation_to_coqa_record(conv: Conversation) -> dict:
    """Serialize a Conversation back to one CoQA-format record."""
    questions = [
        {"input_text": t.question, "turn_id": t.turn_id} for t in conv.turns
    ]
    answers = []
    for t in conv.turns:
        span = t.rationale_span if t.rationale_span is not None else (-1, -1)
        answers.append(
            {
                "input_text": t.answer,
                "span_text": t.rationale_text,
                "span_start": span[0],
                "span_end": span[1],
                "turn_id": t.turn_id,
            }
        )
    return {
        "id": conv.id,
        "story": conv.context.raw_text,
        "questions": questions,
        "answers": answers,
    }


def conversations_to_coqa_json(conversations: Sequence[Conversation]) -> str:
    records = [conversation_to_coqa_record(c) for c in conversations]
    return json.dumps({"version": 1, "data": records}, indent=2, ensure_ascii=False)


def fixture_path() -> str:
    """Filesystem path of the bundled two-conversation CoQA mini-fixture."""
    return str(resources.files("convqg.data").joinpath("coqa_fixture.json"))


def load_fixture() -> list[Conversation]:
    with open(fixture_path(), encoding="utf-8") as fh:
        return parse_coqa(fh.read())


def iter_eligible_turns(conv: Conversation) -> Iterator[tuple[int, int]]:
    """Yield (turn index n, rationale sentence index) for selectable turns.

    A turn is selectable when it has non-empty history (n >= 2) and a
    rationale span that maps onto a sentence.
    """
    for turn in conv.turns:
        if turn.turn_id < 2 or turn.rationale_span is None:
            continue
        try:
            c_s = locate_rationale(conv.context, turn.rationale_span)
        except LocateError:
            continue
        yield turn.turn_id, c_s
