"""Command-line surface for batch experimentation.

Subcommands:

    select    per-turn selection records as JSON-lines
    analyze   average selection sizes over a threshold list (table/TSV/JSON/PNG)
    prompt    assembled generation prompt for one turn
    pipeline  answer-unaware conversation generation over a raw context
    eval      BLEU 1-4 and ROUGE-L for line-aligned reference/hypothesis files

Endpoints accept either a base URL or ``stub:<seed>`` for the built-in
deterministic stubs. Exit codes: 0 success, 1 internal error, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional, Sequence

from . import corpus, metrics, pipeline, report
from .errors import ConvqgError
from .corpus import EmptyContext, ParseError, SchemaError
from .metrics import EmptyCorpus, EmptyInput
from .selector import MODES, SelectionParams
from .services import ServiceSuite, suite_from_specs


class UsageError(ConvqgError):
    """Configuration or input problem; maps to exit code 2."""


# Keys a JSON config file may provide per command; flags always win.
_CONFIG_KEYS = (
    "dataset", "p", "p_list", "mode", "k_fixed", "embedder", "generator",
    "qa", "extractor", "max_turns", "out", "turns", "no_ae", "no_qf",
)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        return args.handler(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ParseError, SchemaError, EmptyContext, FileNotFoundError, IsADirectoryError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ConvqgError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convqg",
        description="Context/history shortening and conversational question generation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_select = sub.add_parser("select", help="per-turn selection records as JSON-lines")
    _add_common(p_select, dataset=True)
    p_select.add_argument("--turns", default="all",
                          help='filter: "all", "CONV_ID" or "CONV_ID:TURN"')
    p_select.add_argument("--out", default=None, help="output path (default stdout)")
    p_select.set_defaults(handler=_cmd_select)

    p_analyze = sub.add_parser("analyze", help="average selection sizes per threshold")
    _add_common(p_analyze, dataset=True, p_flag=False)
    p_analyze.add_argument("--p-list", dest="p_list", default="1,2,3,5,7,10,inf",
                           help="comma-separated thresholds; 'inf' keeps everything")
    p_analyze.add_argument("--out", default=None,
                           help="output prefix; writes PREFIX.json/.tsv/.png")
    p_analyze.set_defaults(handler=_cmd_analyze)

    p_prompt = sub.add_parser("prompt", help="assembled generation prompt for one turn")
    _add_common(p_prompt, dataset=True)
    p_prompt.add_argument("--conversation", required=True, help="conversation id")
    p_prompt.add_argument("--turn", type=int, required=True, help="turn index (1-based)")
    p_prompt.set_defaults(handler=_cmd_prompt)

    p_pipe = sub.add_parser("pipeline", help="generate a conversation for a raw context")
    _add_common(p_pipe)
    p_pipe.add_argument("--context", required=True, help="path of a plain-text context file")
    p_pipe.add_argument("--max-turns", dest="max_turns", type=int, default=5)
    p_pipe.add_argument("--no-ae", dest="no_ae", action="store_true",
                        help="use the rationale sentence itself as the answer span")
    p_pipe.add_argument("--no-qf", dest="no_qf", action="store_true",
                        help="skip question filtering")
    p_pipe.add_argument("--out", default=None, help="output path (default stdout)")
    p_pipe.set_defaults(handler=_cmd_pipeline)

    p_eval = sub.add_parser("eval", help="BLEU 1-4 and ROUGE-L over aligned files")
    p_eval.add_argument("--references", required=True)
    p_eval.add_argument("--hypotheses", required=True)
    p_eval.add_argument("--out", default=None,
                        help="output prefix; writes PREFIX.json/.tsv/.png")
    p_eval.add_argument("--config", default=None, help="JSON config file; flags win")
    p_eval.set_defaults(handler=_cmd_eval)

    return parser


def _add_common(p: argparse.ArgumentParser, dataset: bool = False, p_flag: bool = True) -> None:
    if dataset:
        p.add_argument("--dataset", required=True, help="CoQA-format JSON file")
    if p_flag:
        p.add_argument("--p", default="5", help='relevance threshold (float or "inf")')
    p.add_argument("--mode", default="cohs", choices=MODES)
    p.add_argument("--k-fixed", dest="k_fixed", type=int, default=3,
                   help="history turns frozen by dyn_cs")
    p.add_argument("--embedder", default="stub:7", help="URL or stub:<seed>")
    p.add_argument("--generator", default="stub:7", help="URL or stub:<seed>")
    p.add_argument("--qa", default="stub:7", help="URL or stub:<seed>")
    p.add_argument("--extractor", default="stub:7", help="URL or stub:<seed>")
    p.add_argument("--config", default=None, help="JSON config file; flags win")


def _apply_config(args: argparse.Namespace) -> None:
    path = getattr(args, "config", None)
    if not path:
        return
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"config file {path!r} is not valid JSON: {e}") from e
    if not isinstance(cfg, dict):
        raise UsageError(f"config file {path!r} must contain a JSON object")
    parser_defaults = _build_parser()
    for key, value in cfg.items():
        if key not in _CONFIG_KEYS:
            raise UsageError(f"unknown config key {key!r}")
        if not hasattr(args, key):
            continue
        # A flag explicitly given on the command line keeps its value; we
        # detect that by re-parsing defaults for this command.
        if getattr(args, key) == _default_for(parser_defaults, args.command, key):
            setattr(args, key, value)


def _default_for(parser: argparse.ArgumentParser, command: str, key: str):
    sub_actions = [a for a in parser._actions if isinstance(a, argparse._SubParsersAction)]
    cmd_parser = sub_actions[0].choices[command]
    return cmd_parser.get_default(key)


def _parse_p(raw) -> float:
    if isinstance(raw, (int, float)):
        value = float(raw)
    else:
        text = str(raw).strip().lower()
        if text in ("inf", "infinity"):
            return math.inf
        try:
            value = float(text)
        except ValueError:
            raise UsageError(f'bad threshold {raw!r}; expected a float or "inf"') from None
    if math.isnan(value) or value < 0:
        raise UsageError(f"threshold must be >= 0, got {raw!r}")
    return value


def _params(args: argparse.Namespace) -> SelectionParams:
    return SelectionParams(p=_parse_p(args.p), mode=args.mode, k_fixed=args.k_fixed)


def _suite(args: argparse.Namespace) -> ServiceSuite:
    try:
        return suite_from_specs(args.embedder, args.generator, args.qa, args.extractor)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _load_dataset(path: str) -> list[corpus.Conversation]:
    try:
        with open(path, encoding="utf-8") as fh:
            return corpus.parse_coqa(fh.read())
    except FileNotFoundError:
        raise UsageError(f"dataset not found: {path}") from None


def _write_or_print(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --- commands ----------------------------------------------------------------

def _cmd_select(args: argparse.Namespace) -> int:
    conversations = _load_dataset(args.dataset)
    targets = _filter_turns(conversations, args.turns)
    params = _params(args)
    suite = _suite(args)
    lines = []
    for conv, only_turn in targets:
        for n, _, chosen in metrics.conversation_selections(conv, suite.embedder, params):
            if only_turn is not None and n != only_turn:
                continue
            lines.append(json.dumps({
                "conversation_id": conv.id,
                "turn": n,
                "window_start": chosen.window_start,
                "u": chosen.u,
                "k": chosen.k,
                "sum": chosen.achieved_sum,
                "fallback": chosen.fallback,
            }))
    _write_or_print("".join(line + "\n" for line in lines), args.out)
    return 0


def _filter_turns(
    conversations: list[corpus.Conversation], spec: str
) -> list[tuple[corpus.Conversation, Optional[int]]]:
    if spec == "all":
        return [(c, None) for c in conversations]
    conv_id, _, turn = spec.partition(":")
    selected = [c for c in conversations if c.id == conv_id]
    if not selected:
        raise UsageError(f"conversation {conv_id!r} not found in dataset")
    only: Optional[int] = None
    if turn:
        try:
            only = int(turn)
        except ValueError:
            raise UsageError(f"bad --turns spec {spec!r}") from None
    return [(c, only) for c in selected]


def _cmd_analyze(args: argparse.Namespace) -> int:
    conversations = _load_dataset(args.dataset)
    suite = _suite(args)
    p_values = [_parse_p(tok) for tok in str(args.p_list).split(",") if tok.strip()]
    if not p_values:
        raise UsageError("empty --p-list")
    rows = [
        metrics.selection_stats(conversations, suite.embedder, p,
                                mode=args.mode, k_fixed=args.k_fixed)
        for p in p_values
    ]
    print(report.format_stats_table(rows))
    if args.out:
        with open(args.out + ".json", "w", encoding="utf-8") as fh:
            fh.write(report.stats_to_json(rows, args.mode))
        with open(args.out + ".tsv", "w", encoding="utf-8") as fh:
            fh.write(report.stats_to_tsv(rows))
        report.render_stats_figure(rows, args.mode, args.out + ".png")
    return 0


def _cmd_prompt(args: argparse.Namespace) -> int:
    conversations = _load_dataset(args.dataset)
    matches = [c for c in conversations if c.id == args.conversation]
    if not matches:
        raise UsageError(f"conversation {args.conversation!r} not found")
    conv = matches[0]
    n = args.turn
    if n < 1 or n > len(conv.turns):
        raise UsageError(f"turn {n} out of range (conversation has {len(conv.turns)})")
    history = corpus.history_prefix(conv, n)
    turn = conv.turns[n - 1]
    if turn.rationale_span is None:
        raise UsageError(f"turn {n} has no rationale span; cannot anchor a selection")
    task = corpus.TurnTask(
        context=conv.context,
        history=history,
        mode="answer-aware",
        n=n,
        target_answer=turn.answer,
        rationale_text=turn.rationale_text,
        rationale_span=turn.rationale_span,
    )
    prompt, _, _ = pipeline.build_turn_prompt(task, _params(args), _suite(args))
    print(prompt)
    return 0


def _cmd_pipeline(args: argparse.Namespace) -> int:
    try:
        with open(args.context, encoding="utf-8") as fh:
            raw_text = fh.read()
    except FileNotFoundError:
        raise UsageError(f"context file not found: {args.context}") from None
    if args.max_turns < 1:
        raise UsageError("--max-turns must be >= 1")
    context = corpus.ContextDoc.from_text(raw_text)
    turns = pipeline.run_conversation(
        context, args.max_turns, _params(args), _suite(args),
        use_ae=not args.no_ae, use_qf=not args.no_qf,
    )
    conv = corpus.Conversation(id="generated", context=context, turns=tuple(turns))
    payload = corpus.conversations_to_coqa_json([conv]) + "\n"
    _write_or_print(payload, args.out)
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    refs = _read_lines(args.references)
    hyps = _read_lines(args.hypotheses)
    if len(refs) != len(hyps):
        raise UsageError(
            f"{len(refs)} references vs {len(hyps)} hypotheses; files must align"
        )
    if not refs:
        raise UsageError("empty evaluation files")
    ref_tokens = [metrics.tokenize(r) for r in refs]
    hyp_tokens = [metrics.tokenize(h) for h in hyps]
    try:
        bleu = metrics.corpus_bleu(ref_tokens, hyp_tokens)
        rouge_scores = [
            metrics.rouge_l(r, h) if r and h else 0.0
            for r, h in zip(ref_tokens, hyp_tokens)
        ]
    except (EmptyCorpus, EmptyInput) as e:
        raise UsageError(str(e)) from e
    rouge = sum(rouge_scores) / len(rouge_scores)
    print(report.format_eval_table(bleu, rouge))
    if args.out:
        with open(args.out + ".json", "w", encoding="utf-8") as fh:
            fh.write(report.eval_to_json(bleu, rouge))
        with open(args.out + ".tsv", "w", encoding="utf-8") as fh:
            fh.write(report.eval_to_tsv(bleu, rouge))
        report.render_eval_figure(bleu, rouge, args.out + ".png")
    return 0


def _read_lines(path: str) -> list[str]:
    try:
        with open(path, encoding="utf-8") as fh:
            return [line.rstrip("\n") for line in fh]
    except FileNotFoundError:
        raise UsageError(f"file not found: {path}") from None


if __name__ == "__main__":
    sys.exit(main())
