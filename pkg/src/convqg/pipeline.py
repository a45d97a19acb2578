"""Orchestration of answer-aware generation and the answer-unaware loop.

The answer-aware path embeds the context sentences and history turns,
builds the relevance matrix, shortens both via the configured selection
strategy (turns without history route to the static five-sentence
window), assembles the prompt and calls the generator.

The answer-unaware loop walks the context front to back: pick the
earliest unused rationale sentence, extract candidate answer spans,
generate a question per candidate, and keep the first one whose
predicted answer matches the candidate. A rationale whose candidates are
all rejected is marked used and skipped so the loop always terminates.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import Optional

from . import selector
from .corpus import ContextDoc, QATurn, TurnTask, locate_rationale
from .errors import ConvqgError
from .prompting import PromptSpec, assemble_prompt
from .relevance import build_relevance_matrix, turn_text
from .selector import Selection, SelectionParams
from .services import ServiceSuite

_ARTICLES = frozenset({"a", "an", "the"})


class Exhausted(ConvqgError):
    """No unused rationale sentence remains; the conversation is over."""


@dataclass
class ConversationState:
    """Mutable per-conversation state of the answer-unaware loop."""

    context: ContextDoc
    generated_turns: list[QATurn] = field(default_factory=list)
    used_rationale_sentences: set[int] = field(default_factory=set)
    used_answers: set[str] = field(default_factory=set)

    @classmethod
    def fresh(cls, context: ContextDoc) -> "ConversationState":
        return cls(context=context)


@dataclass(frozen=True)
class CandidateAnswers:
    rationale_index: int
    spans: tuple[str, ...]


@dataclass(frozen=True)
class FilterResult:
    accepted: bool
    predicted: str
    reason: Optional[str] = None


def normalize_answer(text: str) -> str:
    """Lowercase, strip punctuation and articles, collapse whitespace."""
    lowered = text.lower()
    no_punct = "".join(ch for ch in lowered if ch not in string.punctuation)
    return " ".join(w for w in no_punct.split() if w not in _ARTICLES)


def build_turn_prompt(
    task: TurnTask, params: SelectionParams, suite: ServiceSuite
) -> tuple[str, Selection, int]:
    """Selection plus assembled prompt for one answer-aware turn.

    Returns (prompt, selection, rationale sentence index). Turns with an
    empty history skip embedding entirely and use the static window.
    """
    if task.rationale_span is None:
        raise ValueError(f"turn {task.n}: rationale span required for selection")
    c_s = locate_rationale(task.context, task.rationale_span)
    sentences = task.context.sentences

    if not task.history:
        ws, u = selector.static_five_window(len(sentences), c_s + 1)
        selection = Selection(ws, u, 0, 0.0, fallback=False)
    else:
        texts = [s.text for s in sentences]
        texts += [turn_text(t.question, t.answer) for t in task.history]
        embeddings = suite.embedder.embed_batch(texts)
        T = build_relevance_matrix(embeddings[: len(sentences)], embeddings[len(sentences):])
        selection = selector.select(T, c_s, params)

    window = tuple(s.text for s in sentences[selection.window_start : selection.window_end])
    suffix = task.history[len(task.history) - selection.k :] if selection.k else ()
    prompt = assemble_prompt(
        PromptSpec(
            answer=task.target_answer or "",
            rationale=task.rationale_text or "",
            window_sentences=window,
            history=tuple((t.question, t.answer) for t in suffix),
        )
    )
    return prompt, selection, c_s


def answer_aware_generate(
    task: TurnTask, params: SelectionParams, suite: ServiceSuite
) -> str:
    """Generate the next question for an answer-aware turn."""
    try:
        prompt, _, _ = build_turn_prompt(task, params, suite)
        return suite.generator.generate(prompt)
    except ConvqgError as e:
        raise type(e)(f"turn {task.n}: {e}") from e


def select_next_rationale(state: ConversationState) -> int:
    """Earliest context sentence not yet used as a rationale."""
    for sent in state.context.sentences:
        if sent.index not in state.used_rationale_sentences:
            return sent.index
    raise Exhausted("every context sentence has been used as a rationale")


def extract_candidate_answers(
    state: ConversationState, rationale_idx: int, suite: ServiceSuite
) -> CandidateAnswers:
    """Candidate answer spans within a rationale sentence, minus answers
    already used in previous turns."""
    sentence = state.context.sentences[rationale_idx]
    spans = suite.extractor.extract_spans(sentence.text)
    kept = tuple(s for s in spans if normalize_answer(s) not in state.used_answers)
    return CandidateAnswers(rationale_index=rationale_idx, spans=kept)


def filter_question(
    question: str, target_answer: str, context_text: str, suite: ServiceSuite
) -> FilterResult:
    """Accept the question only if the QA model's answer matches the target."""
    if not question or not target_answer:
        raise ValueError("question and target answer must be non-empty")
    predicted = suite.qa.answer(question, context_text)
    if normalize_answer(predicted) == normalize_answer(target_answer):
        return FilterResult(accepted=True, predicted=predicted)
    return FilterResult(accepted=False, predicted=predicted, reason="answer-mismatch")


def answer_unaware_step(
    state: ConversationState,
    params: SelectionParams,
    suite: ServiceSuite,
    use_ae: bool = True,
    use_qf: bool = True,
) -> Optional[tuple[str, str, int]]:
    """Try to produce one accepted (question, answer, rationale index) triple.

    Advances to the earliest unused rationale sentence and tries each
    candidate answer in extraction order. The rationale is marked used
    whether or not a candidate was accepted; None means the caller should
    simply try again (the next call moves to the next sentence).
    """
    idx = select_next_rationale(state)
    state.used_rationale_sentences.add(idx)
    sentence = state.context.sentences[idx]

    if use_ae:
        candidates = extract_candidate_answers(state, idx, suite)
    else:
        # Ablation: the rationale sentence itself stands in for the answer span.
        spans = tuple(
            s for s in (sentence.text,) if normalize_answer(s) not in state.used_answers
        )
        candidates = CandidateAnswers(rationale_index=idx, spans=spans)

    for candidate in candidates.spans:
        task = TurnTask(
            context=state.context,
            history=tuple(state.generated_turns),
            mode="answer-aware",
            n=len(state.generated_turns) + 1,
            target_answer=candidate,
            rationale_text=sentence.text,
            rationale_span=sentence.span,
        )
        question = answer_aware_generate(task, params, suite)
        if use_qf:
            verdict = filter_question(question, candidate, state.context.raw_text, suite)
            if not verdict.accepted:
                continue
        state.generated_turns.append(
            QATurn(
                turn_id=len(state.generated_turns) + 1,
                question=question,
                answer=candidate,
                rationale_text=sentence.text,
                rationale_span=sentence.span,
            )
        )
        state.used_answers.add(normalize_answer(candidate))
        return question, candidate, idx
    return None


def run_conversation(
    context: ContextDoc,
    max_turns: int,
    params: SelectionParams,
    suite: ServiceSuite,
    use_ae: bool = True,
    use_qf: bool = True,
) -> list[QATurn]:
    """Generate up to ``max_turns`` accepted turns for a context."""
    if max_turns < 1:
        raise ValueError("max_turns must be >= 1")
    state = ConversationState.fresh(context)
    while len(state.generated_turns) < max_turns:
        try:
            answer_unaware_step(state, params, suite, use_ae=use_ae, use_qf=use_qf)
        except Exhausted:
            break
    return list(state.generated_turns)
