"""Report rendering: aligned text tables, delimited files, JSON, figures.

Figures are rendered headlessly to PNG next to the delimited output so a
batch run leaves a browsable record of every analysis.
"""

from __future__ import annotations

import json
import math
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .metrics import BleuReport, SelectionStats  # noqa: E402


def _fmt_p(p: float) -> str:
    if math.isinf(p):
        return "inf"
    return f"{p:g}"


def format_stats_table(rows: Sequence[SelectionStats]) -> str:
    """Aligned-column table of average window/suffix sizes per threshold."""
    header = f"{'p':>8}  {'avg #S':>8}  {'avg #P':>8}  {'turns':>6}"
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{_fmt_p(row.p):>8}  {row.avg_sentences:>8.2f}  {row.avg_turns:>8.2f}  {row.count:>6}"
        )
    return "\n".join(lines)


def stats_to_json(rows: Sequence[SelectionStats], mode: str) -> str:
    payload = {
        "mode": mode,
        "rows": [
            {
                "p": _fmt_p(row.p),
                "avg_sentences": row.avg_sentences,
                "avg_turns": row.avg_turns,
                "count": row.count,
            }
            for row in rows
        ],
    }
    return json.dumps(payload, indent=2)


def stats_to_tsv(rows: Sequence[SelectionStats]) -> str:
    lines = ["p\tavg_sentences\tavg_turns\tcount"]
    for row in rows:
        lines.append(
            f"{_fmt_p(row.p)}\t{row.avg_sentences:.6f}\t{row.avg_turns:.6f}\t{row.count}"
        )
    return "\n".join(lines) + "\n"


def render_stats_figure(rows: Sequence[SelectionStats], mode: str, path: str) -> None:
    """Average window and suffix sizes against the threshold p.

    Infinite-p rows are drawn as horizontal reference lines since they sit
    at the full context/history sizes.
    """
    finite = [r for r in rows if math.isfinite(r.p)]
    infinite = [r for r in rows if math.isinf(r.p)]

    fig, ax = plt.subplots(figsize=(6, 4))
    if finite:
        ps = [r.p for r in finite]
        ax.plot(ps, [r.avg_sentences for r in finite], marker="o", label="avg #sentences")
        ax.plot(ps, [r.avg_turns for r in finite], marker="s", label="avg #prev. turns")
    for r in infinite:
        ax.axhline(r.avg_sentences, linestyle="--", color="C0", alpha=0.6)
        ax.axhline(r.avg_turns, linestyle="--", color="C1", alpha=0.6)
    ax.set_xlabel("threshold p")
    ax.set_ylabel("average selected size")
    ax.set_title(f"Selection sizes vs threshold ({mode})")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def format_eval_table(report: BleuReport, rouge: float) -> str:
    header = f"{'metric':<10}  {'score':>8}"
    lines = [header, "-" * len(header)]
    for name, score in zip(("BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4"), report.scores()):
        lines.append(f"{name:<10}  {score:>8.4f}")
    lines.append(f"{'ROUGE-L':<10}  {rouge:>8.4f}")
    lines.append(f"{'BP':<10}  {report.brevity_penalty:>8.4f}")
    return "\n".join(lines)


def eval_to_json(report: BleuReport, rouge: float) -> str:
    payload = {
        "bleu1": report.b1,
        "bleu2": report.b2,
        "bleu3": report.b3,
        "bleu4": report.b4,
        "rouge_l": rouge,
        "brevity_penalty": report.brevity_penalty,
        "precisions": list(report.precisions),
        "hypothesis_length": report.hypothesis_length,
        "reference_length": report.reference_length,
    }
    return json.dumps(payload, indent=2)


def eval_to_tsv(report: BleuReport, rouge: float) -> str:
    rows = [
        ("bleu1", report.b1),
        ("bleu2", report.b2),
        ("bleu3", report.b3),
        ("bleu4", report.b4),
        ("rouge_l", rouge),
        ("brevity_penalty", report.brevity_penalty),
    ]
    return "metric\tscore\n" + "".join(f"{k}\t{v:.6f}\n" for k, v in rows)


def render_eval_figure(report: BleuReport, rouge: float, path: str) -> None:
    names = ["BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4", "ROUGE-L"]
    values = list(report.scores()) + [rouge]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(names, values, color=["C0"] * 4 + ["C2"])
    ax.set_ylim(0.0, 1.0)
    ax.set_ylabel("score")
    ax.set_title("n-gram overlap metrics")
    for i, v in enumerate(values):
        ax.text(i, v + 0.01, f"{v:.3f}", ha="center", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
