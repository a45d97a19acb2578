import math
import random

import pytest

from convqg.relevance import RelevanceMatrix
from convqg.selector import (
    EmptyHistoryError,
    Selection,
    SelectionParams,
    cohs_select,
    dyn_cs_select,
    dyn_hs_select,
    naive_window_sum,
    oracle_select,
    prefix_sums,
    select,
    static_five_window,
    static_select,
    window_sum,
)


def matrix(rows):
    values = tuple(float(x) for row in rows for x in row)
    return RelevanceMatrix(rows=len(rows), cols=len(rows[0]) if rows else 0, values=values)


def random_matrix(rng, m, h):
    return RelevanceMatrix(
        rows=m, cols=h, values=tuple(rng.uniform(-1, 1) for _ in range(m * h))
    )


# --- prefix sums -------------------------------------------------------------

def test_prefix_sums_total():
    P = prefix_sums(matrix([[1, 2], [3, 4]]))
    assert P.table[2][2] == 10.0


def test_prefix_sums_empty_columns():
    P = prefix_sums(RelevanceMatrix(rows=3, cols=0, values=()))
    assert all(all(v == 0.0 for v in row) for row in P.table)


def test_prefix_sums_single_negative_cell():
    P = prefix_sums(matrix([[-1]]))
    assert P.table[1][1] == -1.0


def test_window_sum_examples():
    P = prefix_sums(matrix([[1, 2], [3, 4]]))
    assert window_sum(P, (0, 2), (0, 2)) == 10.0
    assert window_sum(P, (1, 1), (0, 2)) == 0.0
    assert window_sum(P, (1, 2), (0, 2)) == 7.0
    with pytest.raises(IndexError):
        window_sum(P, (0, 3), (0, 2))


def test_window_sum_matches_naive_on_random_matrices():
    rng = random.Random(11)
    for _ in range(50):
        m, h = rng.randint(1, 9), rng.randint(1, 7)
        T = random_matrix(rng, m, h)
        P = prefix_sums(T)
        i1 = rng.randint(0, m); i2 = rng.randint(i1, m)
        j1 = rng.randint(0, h); j2 = rng.randint(j1, h)
        fast = window_sum(P, (i1, i2), (j1, j2))
        slow = naive_window_sum(T, i1, i2, j1, j2)
        assert fast == pytest.approx(slow, rel=1e-9, abs=1e-12)


# --- cohs --------------------------------------------------------------------

def test_cohs_zero_threshold_minimal_pair():
    chosen = cohs_select(matrix([[0, 0], [0, 0]]), c_s=0, p=0.0)
    assert chosen == Selection(window_start=0, u=1, k=1, achieved_sum=0.0, fallback=False)


def test_cohs_needs_both_turns():
    # all four (window, suffix) pairs enumerated by hand: only u=1,k=2 and
    # u=2,k=2 reach 0.9, so u+k=3 wins
    chosen = cohs_select(matrix([[0.9, 0.1], [0.1, 0.1]]), c_s=0, p=0.9)
    assert (chosen.window_start, chosen.u, chosen.k) == (0, 1, 2)
    assert chosen.achieved_sum == pytest.approx(1.0)
    assert not chosen.fallback


def test_cohs_infeasible_falls_back():
    chosen = cohs_select(matrix([[0.1]]), c_s=0, p=10.0)
    assert chosen.fallback
    assert (chosen.u, chosen.k) == (1, 1)


def test_cohs_empty_history_raises():
    with pytest.raises(EmptyHistoryError):
        cohs_select(RelevanceMatrix(rows=2, cols=0, values=()), c_s=0, p=1.0)


def test_cohs_bad_rationale_index():
    with pytest.raises(IndexError):
        cohs_select(matrix([[0.5]]), c_s=3, p=0.0)


def test_cohs_window_always_contains_rationale():
    rng = random.Random(3)
    for _ in range(200):
        m, h = rng.randint(1, 8), rng.randint(1, 6)
        T = random_matrix(rng, m, h)
        c_s = rng.randrange(m)
        chosen = cohs_select(T, c_s, rng.choice([0.0, 0.5, 1.0, 2.0]))
        assert chosen.window_start <= c_s < chosen.window_start + chosen.u
        assert 1 <= chosen.k <= h


def test_cohs_deterministic():
    rng = random.Random(5)
    T = random_matrix(rng, 7, 5)
    first = cohs_select(T, 3, 1.0)
    for _ in range(5):
        assert cohs_select(T, 3, 1.0) == first


# --- dyn_cs ------------------------------------------------------------------

def test_dyn_cs_single_sentence_reaches_threshold():
    chosen = dyn_cs_select(matrix([[1, 1], [0, 0]]), c_s=0, p=1.0, k_fixed=2)
    assert (chosen.window_start, chosen.u, chosen.k) == (0, 1, 2)
    assert chosen.achieved_sum == pytest.approx(2.0)


def test_dyn_cs_p_zero_is_exactly_the_rationale_sentence():
    rng = random.Random(9)
    for _ in range(50):
        T = random_matrix(rng, 5, 4)
        c_s = rng.randrange(5)
        chosen = dyn_cs_select(T, c_s, p=0.0, k_fixed=3)
        assert (chosen.window_start, chosen.u) == (c_s, 1)
        assert not chosen.fallback


def test_dyn_cs_infeasible_takes_full_context():
    chosen = dyn_cs_select(matrix([[-1, -1]]), c_s=0, p=1.0, k_fixed=2)
    assert chosen.fallback
    assert (chosen.window_start, chosen.u) == (0, 1)

    chosen = dyn_cs_select(matrix([[-1, -1], [-1, -1], [-1, -1]]), c_s=1, p=1.0, k_fixed=2)
    assert chosen.fallback
    assert (chosen.window_start, chosen.u, chosen.k) == (0, 3, 2)


def test_dyn_cs_k_capped_by_history():
    chosen = dyn_cs_select(matrix([[0.5, 0.5]]), c_s=0, p=0.5, k_fixed=5)
    assert chosen.k == 2


# --- dyn_hs ------------------------------------------------------------------

def test_dyn_hs_p_zero_keeps_no_history():
    rng = random.Random(13)
    for _ in range(20):
        T = random_matrix(rng, 4, 5)
        chosen = dyn_hs_select(T, p=0.0)
        assert chosen == Selection(0, 4, 0, 0.0, fallback=False)


def test_dyn_hs_small_threshold():
    chosen = dyn_hs_select(matrix([[0.3], [0.3]]), p=0.5)
    assert (chosen.u, chosen.k) == (2, 1)
    assert chosen.achieved_sum == pytest.approx(0.6)


def test_dyn_hs_infeasible_takes_full_history():
    chosen = dyn_hs_select(matrix([[0.1, 0.1, 0.1]]), p=10.0)
    assert chosen.fallback
    assert chosen.k == 3


def test_dyn_hs_empty_history_is_not_an_error():
    T = RelevanceMatrix(rows=4, cols=0, values=())
    assert dyn_hs_select(T, p=0.0).k == 0
    assert dyn_hs_select(T, p=2.0).k == 0


# --- static ------------------------------------------------------------------

def test_static_middle_case():
    assert static_five_window(10, 5) == (2, 5)  # 1-based sentences {3..7}


def test_static_left_edge():
    assert static_five_window(10, 1) == (0, 5)
    assert static_five_window(10, 2) == (0, 5)


def test_static_right_edge():
    assert static_five_window(10, 9) == (5, 5)
    assert static_five_window(10, 10) == (5, 5)


def test_static_short_context_takes_everything():
    assert static_five_window(4, 2) == (0, 4)
    assert static_five_window(5, 5) == (0, 5)


def test_static_out_of_range():
    with pytest.raises(IndexError):
        static_five_window(10, 0)
    with pytest.raises(IndexError):
        static_five_window(10, 11)


def test_static_select_uses_full_history():
    rng = random.Random(17)
    T = random_matrix(rng, 8, 3)
    chosen = static_select(T, c_s=4)
    assert (chosen.window_start, chosen.u, chosen.k) == (2, 5, 3)
    assert chosen.achieved_sum == naive_window_sum(T, 2, 7, 0, 3)


# --- oracle equivalence ------------------------------------------------------

@pytest.mark.parametrize("mode", ["cohs", "dyn_cs", "dyn_hs"])
def test_fast_path_equals_oracle(mode):
    rng = random.Random(101)
    for _ in range(300):
        m, h = rng.randint(1, 10), rng.randint(1, 6)
        T = random_matrix(rng, m, h)
        c_s = rng.randrange(m)
        p = rng.choice([0.0, 0.25, 0.5, 1.0, 2.0, 5.0])
        if mode == "cohs":
            fast = cohs_select(T, c_s, p)
        elif mode == "dyn_cs":
            fast = dyn_cs_select(T, c_s, p, k_fixed=3)
        else:
            fast = dyn_hs_select(T, p)
        slow = oracle_select(T, c_s, p, mode=mode, k_fixed=3)
        assert fast == slow


def test_oracle_zero_matrix_minimal_pair():
    assert oracle_select(matrix([[0, 0], [0, 0]]), 0, 0.0) == Selection(0, 1, 1, 0.0, False)


def test_oracle_infeasible_matches_fast_fallback():
    T = matrix([[-0.5, -0.5], [-0.5, -0.5]])
    assert oracle_select(T, 1, 5.0) == cohs_select(T, 1, 5.0)


# --- dispatch and params -----------------------------------------------------

def test_select_dispatch_matches_direct_calls():
    rng = random.Random(23)
    T = random_matrix(rng, 6, 4)
    assert select(T, 2, SelectionParams(p=1.0, mode="cohs")) == cohs_select(T, 2, 1.0)
    assert select(T, 2, SelectionParams(p=1.0, mode="dyn_cs", k_fixed=2)) == dyn_cs_select(T, 2, 1.0, 2)
    assert select(T, None, SelectionParams(p=1.0, mode="dyn_hs")) == dyn_hs_select(T, 1.0)
    assert select(T, 2, SelectionParams(p=1.0, mode="static")) == static_select(T, 2)


def test_params_validation():
    with pytest.raises(ValueError):
        SelectionParams(p=-1.0)
    with pytest.raises(ValueError):
        SelectionParams(p=1.0, mode="bogus")
    with pytest.raises(ValueError):
        SelectionParams(p=1.0, mode="dyn_cs", k_fixed=0)
    SelectionParams(p=math.inf)  # the "inf" sentinel is allowed


def test_infinite_threshold_forces_fallback():
    rng = random.Random(29)
    T = random_matrix(rng, 5, 3)
    chosen = cohs_select(T, 2, math.inf)
    assert chosen.fallback and (chosen.u, chosen.k) == (5, 3)
    assert dyn_hs_select(T, math.inf).fallback
    assert dyn_cs_select(T, 2, math.inf, 3).fallback
