import json

import pytest
from hypothesis import given, strategies as st

from convqg.corpus import (
    ContextDoc,
    Conversation,
    EmptyContext,
    ParseError,
    QATurn,
    SchemaError,
    LocateError,
    history_prefix,
    load_fixture,
    locate_rationale,
    parse_coqa,
    split_sentences,
)


def test_split_two_sentences_with_offsets():
    sents = split_sentences("A cat sat. It slept.")
    assert [(s.char_start, s.char_end) for s in sents] == [(0, 10), (11, 20)]
    assert [s.text for s in sents] == ["A cat sat.", "It slept."]


def test_split_no_terminator_is_one_sentence():
    sents = split_sentences("Hello")
    assert len(sents) == 1
    assert (sents[0].char_start, sents[0].char_end) == (0, 5)


def test_split_abbreviation_is_not_a_boundary():
    sents = split_sentences("He met Dr. Lee. She smiled.")
    assert [s.text for s in sents] == ["He met Dr. Lee.", "She smiled."]


@pytest.mark.parametrize("raw", ["", "   ", "\n\t "])
def test_split_empty_input_raises(raw):
    with pytest.raises(EmptyContext):
        split_sentences(raw)


def test_split_question_and_exclamation():
    sents = split_sentences("Really?! Yes. e.g. not here. End")
    assert sents[0].text == "Really?!"
    assert sents[1].text == "Yes."
    # "e.g." must not split even though a '.' is followed by whitespace
    assert sents[2].text == "e.g. not here."
    assert sents[3].text == "End"


@given(st.text(min_size=1, max_size=300))
def test_split_covers_all_non_whitespace(raw):
    if not raw.strip():
        return
    sents = split_sentences(raw)
    covered = [False] * len(raw)
    for s in sents:
        assert s.char_start < s.char_end
        assert raw[s.char_start : s.char_end] == s.text
        for i in range(s.char_start, s.char_end):
            assert not covered[i], "sentence spans overlap"
            covered[i] = True
    for i, ch in enumerate(raw):
        if not ch.isspace():
            assert covered[i]


@given(st.text(min_size=1, max_size=200))
def test_split_is_deterministic(raw):
    if not raw.strip():
        return
    assert split_sentences(raw) == split_sentences(raw)


def test_parse_fixture_counts():
    convs = load_fixture()
    assert len(convs) == 2
    assert [len(c.turns) for c in convs] == [5, 5]


def test_parse_mismatched_turn_ids():
    doc = json.dumps({"data": [{
        "id": "broken",
        "story": "A cat sat.",
        "questions": [{"input_text": "q1", "turn_id": 1},
                      {"input_text": "q2", "turn_id": 2}],
        "answers": [{"input_text": "a1", "span_text": "A cat",
                     "span_start": 0, "span_end": 5, "turn_id": 1}],
    }]})
    with pytest.raises(SchemaError, match="broken"):
        parse_coqa(doc)


def test_parse_malformed_json():
    with pytest.raises(ParseError):
        parse_coqa("{not json")


def test_parse_unanswerable_span_marker():
    convs = load_fixture()
    turn = convs[1].turns[3]
    assert turn.rationale_span is None
    assert turn.rationale_text == "unknown"


def test_parse_non_consecutive_turn_ids():
    doc = json.dumps({"data": [{
        "id": "gap",
        "story": "A cat sat.",
        "questions": [{"input_text": "q", "turn_id": 2}],
        "answers": [{"input_text": "a", "span_text": "cat",
                     "span_start": 2, "span_end": 5, "turn_id": 2}],
    }]})
    with pytest.raises(SchemaError, match="gap"):
        parse_coqa(doc)


@pytest.fixture()
def two_sentence_doc():
    return ContextDoc.from_text("A cat sat. It slept.")


def test_locate_containment(two_sentence_doc):
    assert locate_rationale(two_sentence_doc, (12, 16)) == 1


def test_locate_straddling_span_prefers_larger_overlap(two_sentence_doc):
    # overlap with sentence 0 is [8,10) = 2 chars, with sentence 1 is [11,14) = 3
    assert locate_rationale(two_sentence_doc, (8, 14)) == 1


def test_locate_exact_sentence(two_sentence_doc):
    assert locate_rationale(two_sentence_doc, (0, 10)) == 0


def test_locate_gap_only_span_raises(two_sentence_doc):
    with pytest.raises(LocateError):
        locate_rationale(two_sentence_doc, (10, 11))


def test_locate_tie_breaks_to_smaller_index():
    doc = ContextDoc.from_text("Aa bb. Cc dd.")
    # spans (0,6) and (7,13); a span covering 2 chars of each ties
    assert locate_rationale(doc, (4, 9)) == 0


def test_history_prefix_bounds():
    convs = load_fixture()
    conv = convs[0]
    assert history_prefix(conv, 1) == ()
    assert [t.turn_id for t in history_prefix(conv, 3)] == [1, 2]
    with pytest.raises(IndexError):
        history_prefix(conv, 7)


def test_fixture_rationales_all_locate():
    for conv in load_fixture():
        for turn in conv.turns:
            if turn.rationale_span is not None:
                idx = locate_rationale(conv.context, turn.rationale_span)
                assert 0 <= idx < conv.context.m


def test_conversation_requires_consecutive_turn_ids():
    context = ContextDoc.from_text("A cat sat.")
    with pytest.raises(SchemaError):
        Conversation(
            id="x",
            context=context,
            turns=(QATurn(turn_id=2, question="q", answer="a"),),
        )
