"""Joint shortening of context and history by summed-relevance thresholds.

Four strategies over a relevance matrix T (m sentences x h history turns):

* ``cohs``   — shortest contiguous sentence window containing the rationale
               sentence plus shortest history suffix whose joint relevance
               sum reaches the threshold p, minimizing window + suffix size.
* ``dyn_cs`` — history frozen to the last k turns, shortest window only.
* ``dyn_hs`` — full context frozen, shortest history suffix only.
* ``static`` — fixed five-sentence window around the rationale sentence.

The fast paths screen candidates with a 2-D prefix-sum table; the reported
achieved_sum of the winner is always recomputed with the plain row-major
double loop so it is bit-identical to the brute-force oracle's.

Tie-breaking among (u, k) pairs with equal minimal u + k: larger achieved
sum first, then smaller k, then smaller window start. Infeasible instances
(total relevance below p) fall back to the full window and full suffix
with ``fallback=True`` instead of raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import ConvqgError
from .relevance import RelevanceMatrix

SUM_TOLERANCE = 1e-9

MODES = ("cohs", "dyn_cs", "dyn_hs", "static")


class EmptyHistoryError(ConvqgError):
    """Raised by history-dependent strategies when there is no history.

    Callers should route such turns to the static five-sentence window.
    """


@dataclass(frozen=True)
class SelectionParams:
    p: float
    mode: str = "cohs"
    k_fixed: int = 3  # history length frozen by dyn_cs

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown selection mode {self.mode!r}")
        if math.isnan(self.p) or self.p < 0:
            raise ValueError("threshold p must be >= 0 (math.inf allowed)")
        if self.mode == "dyn_cs" and self.k_fixed < 1:
            raise ValueError("k_fixed must be >= 1 for dyn_cs")


@dataclass(frozen=True)
class Selection:
    """A chosen sentence window [window_start, window_start + u) and the
    history suffix of the last k turns."""

    window_start: int
    u: int
    k: int
    achieved_sum: float
    fallback: bool

    @property
    def window_end(self) -> int:
        return self.window_start + self.u

    def window_indices(self) -> range:
        return range(self.window_start, self.window_start + self.u)


@dataclass(frozen=True)
class PrefixSumTable:
    """(m+1) x (h+1) cumulative sums; P[i][j] covers the top-left i x j block."""

    rows: int
    cols: int
    table: tuple[tuple[float, ...], ...]


def prefix_sums(T: RelevanceMatrix) -> PrefixSumTable:
    m, h = T.rows, T.cols
    table = [[0.0] * (h + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        row_prev = table[i - 1]
        row_cur = table[i]
        base = (i - 1) * h
        for j in range(1, h + 1):
            row_cur[j] = (
                row_prev[j] + row_cur[j - 1] - row_prev[j - 1] + T.values[base + j - 1]
            )
    return PrefixSumTable(rows=m, cols=h, table=tuple(tuple(r) for r in table))


def window_sum(P: PrefixSumTable, rows: tuple[int, int], cols: tuple[int, int]) -> float:
    """Sum of T over rows [i1, i2) x cols [j1, j2) in O(1)."""
    i1, i2 = rows
    j1, j2 = cols
    if not (0 <= i1 <= i2 <= P.rows and 0 <= j1 <= j2 <= P.cols):
        raise IndexError(f"range rows={rows} cols={cols} outside {P.rows}x{P.cols}")
    t = P.table
    return t[i2][j2] - t[i1][j2] - t[i2][j1] + t[i1][j1]


def naive_window_sum(T: RelevanceMatrix, i1: int, i2: int, j1: int, j2: int) -> float:
    """Plain row-major double-loop sum; the reference summation order."""
    total = 0.0
    for i in range(i1, i2):
        base = i * T.cols
        for j in range(j1, j2):
            total += T.values[base + j]
    return total


def _feasible(value: float, p: float) -> bool:
    return value >= p - SUM_TOLERANCE


def _check_instance(T: RelevanceMatrix, c_s: int) -> None:
    if T.cols < 1:
        raise EmptyHistoryError(
            "no history turns; route this turn to static_five_window"
        )
    if not (0 <= c_s < T.rows):
        raise IndexError(f"rationale sentence {c_s} outside {T.rows} sentences")


def cohs_select(T: RelevanceMatrix, c_s: int, p: float) -> Selection:
    """Joint minimal window + suffix with relevance sum >= p.

    The window must contain sentence ``c_s`` and the suffix must contain
    the last history turn. Returns the full-window, full-suffix fallback
    when no pair reaches p.
    """
    _check_instance(T, c_s)
    m, h = T.rows, T.cols
    P = prefix_sums(T)
    t = P.table

    best_total: Optional[int] = None
    candidates: list[tuple[int, int, int]] = []  # (ws, we, k) at best_total
    for ws in range(c_s + 1):
        for we in range(c_s + 1, m + 1):
            u = we - ws
            if best_total is not None and u + 1 > best_total:
                continue
            row_hi = t[we]
            row_lo = t[ws]
            for k in range(1, h + 1):
                total = u + k
                if best_total is not None and total > best_total:
                    break
                j1 = h - k
                value = row_hi[h] - row_lo[h] - row_hi[j1] + row_lo[j1]
                if not _feasible(value, p):
                    continue
                if best_total is None or total < best_total:
                    best_total = total
                    candidates = [(ws, we, k)]
                elif total == best_total:
                    candidates.append((ws, we, k))

    if best_total is None:
        return Selection(0, m, h, naive_window_sum(T, 0, m, 0, h), fallback=True)
    return _pick_winner(T, candidates)


def dyn_cs_select(T: RelevanceMatrix, c_s: int, p: float, k_fixed: int = 3) -> Selection:
    """Shortest window containing ``c_s`` with the history frozen to the
    last min(k_fixed, h) turns.

    p = 0 returns exactly the rationale sentence regardless of T. When no
    window reaches p the fallback fixes the window to all m sentences.
    """
    _check_instance(T, c_s)
    if k_fixed < 1:
        raise ValueError("k_fixed must be >= 1")
    m, h = T.rows, T.cols
    k = min(k_fixed, h)
    j1 = h - k
    if p == 0.0:
        return Selection(c_s, 1, k, naive_window_sum(T, c_s, c_s + 1, j1, h), fallback=False)

    P = prefix_sums(T)
    t = P.table
    best_u: Optional[int] = None
    candidates: list[tuple[int, int, int]] = []
    for ws in range(c_s + 1):
        for we in range(c_s + 1, m + 1):
            u = we - ws
            if best_u is not None and u > best_u:
                continue
            value = t[we][h] - t[ws][h] - t[we][j1] + t[ws][j1]
            if not _feasible(value, p):
                continue
            if best_u is None or u < best_u:
                best_u = u
                candidates = [(ws, we, k)]
            elif u == best_u:
                candidates.append((ws, we, k))

    if best_u is None:
        return Selection(0, m, k, naive_window_sum(T, 0, m, j1, h), fallback=True)
    return _pick_winner(T, candidates)


def dyn_hs_select(T: RelevanceMatrix, p: float) -> Selection:
    """Shortest history suffix whose sum with the full context reaches p.

    p = 0 selects no history at all (k = 0); infeasible thresholds fall
    back to the full suffix. An empty history yields k = 0 without error.
    """
    m, h = T.rows, T.cols
    if p == 0.0:
        return Selection(0, m, 0, 0.0, fallback=False)
    if h == 0:
        return Selection(0, m, 0, 0.0, fallback=True)

    P = prefix_sums(T)
    t = P.table
    for k in range(1, h + 1):
        value = t[m][h] - t[m][h - k]
        if _feasible(value, p):
            return Selection(0, m, k, naive_window_sum(T, 0, m, h - k, h), fallback=False)
    return Selection(0, m, h, naive_window_sum(T, 0, m, 0, h), fallback=True)


def static_five_window(m: int, s: int) -> tuple[int, int]:
    """Fixed five-sentence window around 1-based sentence ``s``.

    Returns (window_start, u) 0-based. With five or fewer sentences the
    whole context is returned; near the edges the window clamps to the
    first or last five sentences.
    """
    if not (1 <= s <= m):
        raise IndexError(f"sentence index {s} outside 1..{m}")
    if m <= 5:
        return (0, m)
    if 3 <= s <= m - 2:
        return (s - 3, 5)
    if s <= 2:
        return (0, 5)
    return (m - 5, 5)


def static_select(T: RelevanceMatrix, c_s: int) -> Selection:
    """Five-sentence window around ``c_s`` (0-based) plus the full history."""
    if not (0 <= c_s < T.rows):
        raise IndexError(f"rationale sentence {c_s} outside {T.rows} sentences")
    ws, u = static_five_window(T.rows, c_s + 1)
    k = T.cols
    return Selection(ws, u, k, naive_window_sum(T, ws, ws + u, 0, k), fallback=False)


def select(T: RelevanceMatrix, c_s: Optional[int], params: SelectionParams) -> Selection:
    """Dispatch to the strategy named by ``params.mode``."""
    if params.mode == "cohs":
        assert c_s is not None
        return cohs_select(T, c_s, params.p)
    if params.mode == "dyn_cs":
        assert c_s is not None
        return dyn_cs_select(T, c_s, params.p, params.k_fixed)
    if params.mode == "dyn_hs":
        return dyn_hs_select(T, params.p)
    assert c_s is not None
    return static_select(T, c_s)


def oracle_select(
    T: RelevanceMatrix,
    c_s: Optional[int],
    p: float,
    mode: str = "cohs",
    k_fixed: int = 3,
) -> Selection:
    """Brute-force reference: enumerate every candidate, recompute every
    sum with the naive double loop, apply the identical tie-break.

    Must equal the fast path field-for-field; exists purely for testing.
    """
    if mode == "static":
        assert c_s is not None
        return static_select(T, c_s)
    if mode == "dyn_hs":
        return _oracle_dyn_hs(T, p)

    assert c_s is not None
    _check_instance(T, c_s)
    m, h = T.rows, T.cols

    if mode == "dyn_cs":
        if k_fixed < 1:
            raise ValueError("k_fixed must be >= 1")
        k = min(k_fixed, h)
        if p == 0.0:
            return Selection(c_s, 1, k, _oracle_sum(T, c_s, c_s + 1, h - k, h), fallback=False)
        suffix_choices = [k]
    elif mode == "cohs":
        suffix_choices = list(range(1, h + 1))
    else:
        raise ValueError(f"unknown selection mode {mode!r}")

    best: Optional[tuple] = None  # (u + k or u, -sum, k, ws, we)
    for ws in range(c_s + 1):
        for we in range(c_s + 1, m + 1):
            u = we - ws
            for k in suffix_choices:
                value = _oracle_sum(T, ws, we, h - k, h)
                if value < p - SUM_TOLERANCE:
                    continue
                objective = u + k if mode == "cohs" else u
                key = (objective, -value, k, ws, we)
                if best is None or key < best:
                    best = key
    if best is None:
        if mode == "cohs":
            return Selection(0, m, h, _oracle_sum(T, 0, m, 0, h), fallback=True)
        k = min(k_fixed, h)
        return Selection(0, m, k, _oracle_sum(T, 0, m, h - k, h), fallback=True)
    _, neg_value, k, ws, we = best
    return Selection(ws, we - ws, k, -neg_value, fallback=False)


def _oracle_dyn_hs(T: RelevanceMatrix, p: float) -> Selection:
    m, h = T.rows, T.cols
    if p == 0.0:
        return Selection(0, m, 0, 0.0, fallback=False)
    if h == 0:
        return Selection(0, m, 0, 0.0, fallback=True)
    for k in range(1, h + 1):
        value = _oracle_sum(T, 0, m, h - k, h)
        if value >= p - SUM_TOLERANCE:
            return Selection(0, m, k, value, fallback=False)
    return Selection(0, m, h, _oracle_sum(T, 0, m, 0, h), fallback=True)


def _oracle_sum(T: RelevanceMatrix, i1: int, i2: int, j1: int, j2: int) -> float:
    total = 0.0
    values = T.values
    cols = T.cols
    for i in range(i1, i2):
        base = i * cols
        for j in range(j1, j2):
            total += values[base + j]
    return total


def _pick_winner(T: RelevanceMatrix, candidates: list[tuple[int, int, int]]) -> Selection:
    h = T.cols
    best_key: Optional[tuple] = None
    best: Optional[tuple[int, int, int, float]] = None
    for ws, we, k in candidates:
        value = naive_window_sum(T, ws, we, h - k, h)
        key = (-value, k, ws)
        if best_key is None or key < best_key:
            best_key = key
            best = (ws, we, k, value)
    assert best is not None
    ws, we, k, value = best
    return Selection(ws, we - ws, k, value, fallback=False)
