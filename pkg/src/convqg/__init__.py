"""convqg: shorten context and dialogue history, then generate questions.

The library scores every (context sentence, history turn) pair by cosine
relevance and jointly picks the smallest contiguous sentence window and
history suffix whose summed relevance reaches a threshold p. Around that
core sit a CoQA-format corpus model, a wire protocol for the four
external model services (with deterministic in-process stubs), the
answer-aware and answer-unaware generation pipelines, n-gram evaluation
metrics, and a CLI.
"""

from .corpus import (
    ContextDoc,
    Conversation,
    QATurn,
    Sentence,
    TurnTask,
    locate_rationale,
    parse_coqa,
    split_sentences,
)
from .relevance import Embedding, RelevanceMatrix, build_relevance_matrix, cosine
from .selector import (
    Selection,
    SelectionParams,
    cohs_select,
    dyn_cs_select,
    dyn_hs_select,
    oracle_select,
    select,
    static_five_window,
)
from .services import ServiceEndpoint, ServiceSuite, make_stub_suite
from .pipeline import answer_aware_generate, run_conversation
from .metrics import corpus_bleu, rouge_l, selection_stats

__version__ = "0.1.0"

__all__ = [
    "ContextDoc",
    "Conversation",
    "QATurn",
    "Sentence",
    "TurnTask",
    "locate_rationale",
    "parse_coqa",
    "split_sentences",
    "Embedding",
    "RelevanceMatrix",
    "build_relevance_matrix",
    "cosine",
    "Selection",
    "SelectionParams",
    "cohs_select",
    "dyn_cs_select",
    "dyn_hs_select",
    "oracle_select",
    "select",
    "static_five_window",
    "ServiceEndpoint",
    "ServiceSuite",
    "make_stub_suite",
    "answer_aware_generate",
    "run_conversation",
    "corpus_bleu",
    "rouge_l",
    "selection_stats",
    "__version__",
]
