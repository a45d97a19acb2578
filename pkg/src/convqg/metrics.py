"""Corpus-level BLEU 1-4, ROUGE-L F, and selection-size statistics.

BLEU follows the classic corpus formulation: clipped modified n-gram
precisions pooled over the whole corpus, geometric mean over orders
1..n, times the brevity penalty exp(1 - r/c) when the hypothesis corpus
is shorter than the reference corpus. No smoothing: a zero precision at
any order zeroes the cumulative score for that order and above.

Tokenization is the caller's job; the CLI uses lowercase whitespace
splitting throughout so reported numbers are reproducible.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

from . import selector
from .corpus import Conversation, iter_eligible_turns
from .errors import ConvqgError
from .relevance import build_relevance_matrix, turn_text
from .selector import SelectionParams
from .services import Embedder


class EmptyCorpus(ConvqgError):
    """Raised when a metric or statistic gets nothing to aggregate."""


class EmptyInput(ConvqgError):
    """Raised for an empty reference or hypothesis."""


@dataclass(frozen=True)
class BleuReport:
    b1: float
    b2: float
    b3: float
    b4: float
    brevity_penalty: float
    hypothesis_length: int
    reference_length: int
    precisions: tuple[float, ...]

    def scores(self) -> tuple[float, float, float, float]:
        return (self.b1, self.b2, self.b3, self.b4)


@dataclass(frozen=True)
class SelectionStats:
    p: float
    avg_sentences: float
    avg_turns: float
    count: int


def tokenize(text: str) -> list[str]:
    """Lowercase whitespace tokenization used for all n-gram metrics."""
    return text.lower().split()


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(
    references: Sequence[Sequence[str]],
    hypotheses: Sequence[Sequence[str]],
    max_n: int = 4,
) -> BleuReport:
    """Corpus BLEU with one reference per hypothesis segment."""
    if len(references) != len(hypotheses):
        raise ValueError(
            f"{len(references)} references vs {len(hypotheses)} hypotheses"
        )
    if not references:
        raise EmptyCorpus("cannot score an empty corpus")

    clipped = [0] * max_n
    totals = [0] * max_n
    hyp_len = 0
    ref_len = 0
    for ref, hyp in zip(references, hypotheses):
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, max_n + 1):
            hyp_counts = _ngrams(hyp, n)
            if not hyp_counts:
                continue
            ref_counts = _ngrams(ref, n)
            totals[n - 1] += sum(hyp_counts.values())
            clipped[n - 1] += sum(
                min(count, ref_counts[gram]) for gram, count in hyp_counts.items()
            )

    precisions = tuple(
        clipped[i] / totals[i] if totals[i] else 0.0 for i in range(max_n)
    )
    if hyp_len == 0:
        bp = 0.0
    elif hyp_len >= ref_len:
        bp = 1.0
    else:
        bp = math.exp(1.0 - ref_len / hyp_len)

    scores = []
    for n in range(1, max_n + 1):
        if any(precisions[i] == 0.0 for i in range(n)):
            scores.append(0.0)
        else:
            mean_log = sum(math.log(precisions[i]) for i in range(n)) / n
            scores.append(bp * math.exp(mean_log))
    return BleuReport(
        b1=scores[0],
        b2=scores[1] if max_n >= 2 else 0.0,
        b3=scores[2] if max_n >= 3 else 0.0,
        b4=scores[3] if max_n >= 4 else 0.0,
        brevity_penalty=bp,
        hypothesis_length=hyp_len,
        reference_length=ref_len,
        precisions=precisions,
    )


def rouge_l(reference: Sequence[str], hypothesis: Sequence[str]) -> float:
    """LCS-based F score; symmetric in its arguments by construction."""
    if not reference or not hypothesis:
        raise EmptyInput("reference and hypothesis must be non-empty")
    lcs = _lcs_length(reference, hypothesis)
    if lcs == 0:
        return 0.0
    precision = lcs / len(hypothesis)
    recall = lcs / len(reference)
    return 2.0 * precision * recall / (precision + recall)


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[len(b)]


def selection_stats(
    conversations: Sequence[Conversation],
    embedder: Embedder,
    p: float,
    mode: str = "cohs",
    k_fixed: int = 3,
) -> SelectionStats:
    """Average selected window and suffix sizes over every eligible turn.

    Eligible turns have non-empty history and a locatable rationale.
    Fallback selections contribute their full window and suffix sizes.
    """
    params = SelectionParams(p=p, mode=mode, k_fixed=k_fixed)
    total_u = 0
    total_k = 0
    count = 0
    for conv in conversations:
        selections = conversation_selections(conv, embedder, params)
        for _, _, chosen in selections:
            total_u += chosen.u
            total_k += chosen.k
            count += 1
    if count == 0:
        raise EmptyCorpus("no eligible turns (need history plus locatable rationale)")
    return SelectionStats(
        p=p, avg_sentences=total_u / count, avg_turns=total_k / count, count=count
    )


def conversation_selections(
    conv: Conversation,
    embedder: Embedder,
    params: SelectionParams,
) -> list[tuple[int, int, selector.Selection]]:
    """Run the selector on every eligible turn of one conversation.

    Returns (turn index, rationale sentence index, Selection) triples.
    Embeds each sentence and turn once and reuses the full relevance
    matrix across turns by slicing history columns.
    """
    eligible = list(iter_eligible_turns(conv))
    if not eligible:
        return []
    max_n = max(n for n, _ in eligible)
    texts = [s.text for s in conv.context.sentences]
    texts += [turn_text(t.question, t.answer) for t in conv.turns[: max_n - 1]]
    embeddings = embedder.embed_batch(texts)
    m = conv.context.m
    T_full = build_relevance_matrix(embeddings[:m], embeddings[m:])

    out = []
    for n, c_s in eligible:
        T = T_full.first_cols(n - 1)
        out.append((n, c_s, selector.select(T, c_s, params)))
    return out
