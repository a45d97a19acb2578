"""Embeddings, cosine relevance, and the sentence-by-turn relevance matrix.

This module never runs a model: embeddings arrive from a service or a
file. All arithmetic is 64-bit; cosine values are clamped into [-1, 1] so
downstream threshold sums never see rounding artifacts above 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import ConvqgError

BOUND_EPS = 1e-9


class DimError(ConvqgError):
    """Raised when embedding dimensions do not match."""


class ZeroVectorError(ConvqgError):
    """Raised for an all-zero embedding; it signals a broken embedder."""


class FormatError(ConvqgError):
    """Raised when a persisted matrix or embedding file is malformed."""


@dataclass(frozen=True)
class Embedding:
    vector: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.vector) < 1:
            raise ValueError("embedding must have at least one component")
        if not all(math.isfinite(x) for x in self.vector):
            raise ValueError("embedding components must be finite")

    @property
    def dim(self) -> int:
        return len(self.vector)

    @classmethod
    def of(cls, values: Iterable[float]) -> "Embedding":
        return cls(vector=tuple(float(x) for x in values))


@dataclass(frozen=True)
class RelevanceMatrix:
    """Row-major matrix of cosine relevances, rows = sentences, cols = turns."""

    rows: int
    cols: int
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.rows < 0 or self.cols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        if len(self.values) != self.rows * self.cols:
            raise ValueError(
                f"expected {self.rows * self.cols} values, got {len(self.values)}"
            )
        for v in self.values:
            if not math.isfinite(v):
                raise ValueError(f"relevance value {v!r} is not finite")

    def check_cosine_bounds(self) -> "RelevanceMatrix":
        """Assert every value lies in [-1, 1] up to rounding slack."""
        for v in self.values:
            if abs(v) > 1.0 + BOUND_EPS:
                raise ValueError(f"relevance value {v!r} outside [-1, 1]")
        return self

    def at(self, i: int, j: int) -> float:
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"({i}, {j}) outside {self.rows}x{self.cols} matrix")
        return self.values[i * self.cols + j]

    def row(self, i: int) -> tuple[float, ...]:
        if not (0 <= i < self.rows):
            raise IndexError(f"row {i} outside {self.rows}x{self.cols} matrix")
        return self.values[i * self.cols : (i + 1) * self.cols]

    def first_cols(self, h: int) -> "RelevanceMatrix":
        """Submatrix keeping the first ``h`` history columns of every row."""
        if not (0 <= h <= self.cols):
            raise IndexError(f"cannot take first {h} of {self.cols} columns")
        if h == self.cols:
            return self
        values = tuple(
            self.values[i * self.cols + j] for i in range(self.rows) for j in range(h)
        )
        return RelevanceMatrix(rows=self.rows, cols=h, values=values)


def cosine(a: Embedding, b: Embedding) -> float:
    """Cosine similarity of two embeddings, clamped into [-1, 1].

    Each vector is prescaled by its largest component so extreme
    magnitudes neither overflow nor underflow the norm.
    """
    if a.dim != b.dim:
        raise DimError(f"dimension mismatch: {a.dim} vs {b.dim}")
    a_max = max(abs(x) for x in a.vector)
    b_max = max(abs(y) for y in b.vector)
    if a_max == 0.0 or b_max == 0.0:
        raise ZeroVectorError("cosine undefined for an all-zero vector")
    dot = 0.0
    norm_a = 0.0
    norm_b = 0.0
    for x, y in zip(a.vector, b.vector):
        xs = x / a_max
        ys = y / b_max
        dot += xs * ys
        norm_a += xs * xs
        norm_b += ys * ys
    value = dot / (math.sqrt(norm_a) * math.sqrt(norm_b))
    return max(-1.0, min(1.0, value))


def turn_text(q: str, a: str) -> str:
    """Text representation of a history turn: question and answer joined."""
    if not q:
        raise ValueError("question must be non-empty")
    return f"{q} {a}" if a else q


def build_relevance_matrix(
    sentence_embs: Sequence[Embedding], turn_embs: Sequence[Embedding]
) -> RelevanceMatrix:
    """Matrix of cosines between every sentence and every history turn.

    Empty history yields an m x 0 matrix. Cosine errors are re-raised with
    the offending (row, column) coordinates attached.
    """
    if not sentence_embs:
        raise ValueError("need at least one sentence embedding")
    values: list[float] = []
    for i, sent in enumerate(sentence_embs):
        for j, turn in enumerate(turn_embs):
            try:
                values.append(cosine(sent, turn))
            except ConvqgError as e:
                raise type(e)(f"at T[{i}][{j}]: {e}") from e
    matrix = RelevanceMatrix(
        rows=len(sentence_embs), cols=len(turn_embs), values=tuple(values)
    )
    return matrix.check_cosine_bounds()


def store_matrix(matrix: RelevanceMatrix, path: str) -> None:
    payload = {"rows": matrix.rows, "cols": matrix.cols, "data": list(matrix.values)}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_matrix(path: str) -> RelevanceMatrix:
    with open(path, encoding="utf-8") as fh:
        raw = fh.read()
    try:
        payload = json.loads(raw)
    except json.JSONDecodeError as e:
        raise FormatError(f"matrix file {path!r} is not valid JSON: {e}") from e
    if not isinstance(payload, dict):
        raise FormatError(f"matrix file {path!r}: expected a JSON object")
    try:
        rows = int(payload["rows"])
        cols = int(payload["cols"])
        data = payload["data"]
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"matrix file {path!r}: missing rows/cols/data") from e
    if not isinstance(data, list):
        raise FormatError(f"matrix file {path!r}: data must be a list")
    try:
        return RelevanceMatrix(rows=rows, cols=cols, values=tuple(float(v) for v in data))
    except (TypeError, ValueError) as e:
        raise FormatError(f"matrix file {path!r}: {e}") from e


def store_embeddings(embeddings: Mapping[str, Embedding], path: str) -> None:
    """Write embeddings as JSON-lines: one {"id", "vector"} object per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for key, emb in embeddings.items():
            fh.write(json.dumps({"id": key, "vector": list(emb.vector)}))
            fh.write("\n")


def load_embeddings(path: str) -> dict[str, Embedding]:
    out: dict[str, Embedding] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                out[str(obj["id"])] = Embedding.of(obj["vector"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise FormatError(f"{path!r} line {lineno}: {e}") from e
    return out
